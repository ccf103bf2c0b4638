//! Null-model normalisation of Gaussian decompositions.
//!
//! Raw information atoms are hard to compare across systems because their
//! scale is set by the total information. The normalisation here replaces
//! each atom by its quantile under a null ensemble: random linear-Gaussian
//! systems (standard normal couplings, Wishart covariances) whose noise gain
//! is solved so that every null system carries exactly the same total
//! information as the observed one. An atom near quantile 1 is large *for
//! that level of total information*; near 0, small.

use std::fmt;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cov::{clamp_mi, CovMatrix};
use crate::error::{Error, Result};
use crate::gaussian::{system_tmi, GaussianPidSystem};
use crate::pid::{pid_gaussian, PidAtoms};
use crate::rng::substream;
use crate::root::expand_and_bisect_increasing;
use crate::sampling::{std_normal_matrix, wishart_with_retries};

/// Ensemble size used when a caller does not pick one.
pub const DEFAULT_ENSEMBLE_SIZE: usize = 1000;
/// Fresh parameter draws allowed per ensemble slot before giving up.
const RETRY_BUDGET: usize = 10;
/// Redraws allowed inside a single parameter draw for SPD failures.
const WISHART_RETRIES: usize = 8;
/// Initial noise-gain bracket; expanded geometrically when the target lies
/// outside, at most 60 doublings per side.
const G_BRACKET: (f64, f64) = (1e-6, 1e6);
const MAX_EXPAND: usize = 60;
/// Solver stops when the achieved total information is this close.
const TMI_TOL: f64 = 1e-9;
const MAX_BISECT: usize = 200;

/// Which null family produced an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NullFamily {
    Gaussian,
    Var,
    Discrete,
}

impl fmt::Display for NullFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NullFamily::Gaussian => "gaussian",
            NullFamily::Var => "var",
            NullFamily::Discrete => "discrete",
        })
    }
}

/// Decompositions of random systems constrained to a common total
/// information. `n_failed` counts parameter draws that were discarded and
/// resampled (solver or SPD failures); `samples` always holds `n_requested`
/// entries on success.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NullEnsemble {
    pub target_tmi: f64,
    pub samples: Vec<PidAtoms>,
    pub family: NullFamily,
    pub seed: u64,
    pub n_requested: usize,
    pub n_failed: usize,
}

impl NullEnsemble {
    pub(crate) fn assemble(
        target_tmi: f64,
        family: NullFamily,
        seed: u64,
        per_sample: Vec<(PidAtoms, usize)>,
    ) -> Self {
        let n_requested = per_sample.len();
        let n_failed = per_sample.iter().map(|(_, f)| f).sum();
        NullEnsemble {
            target_tmi,
            samples: per_sample.into_iter().map(|(a, _)| a).collect(),
            family,
            seed,
            n_requested,
            n_failed,
        }
    }

    /// One atom across the ensemble, in sample order.
    pub fn atom_values(&self, pick: impl Fn(&PidAtoms) -> f64) -> Vec<f64> {
        self.samples.iter().map(pick).collect()
    }

    /// Ensemble means in canonical atom order (red, un_x, un_y, syn).
    pub fn mean_atoms(&self) -> [f64; 4] {
        let n = self.samples.len().max(1) as f64;
        let mut acc = [0.0; 4];
        for s in &self.samples {
            for (a, v) in acc.iter_mut().zip(s.as_array()) {
                *a += v;
            }
        }
        acc.map(|a| a / n)
    }
}

/// Provenance attached to a set of normalised atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleMeta {
    pub family: NullFamily,
    pub n: usize,
    pub seed: u64,
    pub target_tmi: f64,
}

/// Atom quantiles against a matched-information null ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedAtoms {
    pub red_q: f64,
    pub unx_q: f64,
    pub uny_q: f64,
    pub syn_q: f64,
    pub ensemble_meta: EnsembleMeta,
}

impl NormalizedAtoms {
    /// Quantiles in canonical atom order.
    pub fn as_array(&self) -> [f64; 4] {
        [self.red_q, self.unx_q, self.uny_q, self.syn_q]
    }
}

/// Random system parameters: standard normal coupling, Wishart source and
/// noise covariances (identity scale, dof = dimension). SPD rejections are
/// redrawn a bounded number of times.
pub fn sample_null_params<R: rand::Rng + ?Sized>(
    d_x: usize,
    d_y: usize,
    d_t: usize,
    rng: &mut R,
) -> Result<(DMatrix<f64>, CovMatrix, CovMatrix)> {
    if d_x == 0 || d_y == 0 || d_t == 0 {
        return Err(Error::invalid("null dimensions", "must all be positive"));
    }
    let d_s = d_x + d_y;
    let a = std_normal_matrix(rng, d_t, d_s);
    let sigma_s = wishart_with_retries(rng, d_s, WISHART_RETRIES)?;
    let sigma_eps = wishart_with_retries(rng, d_t, WISHART_RETRIES)?;
    Ok((a, sigma_s, sigma_eps))
}

/// Total information of `A Sigma_S A' + g Sigma_eps` against noise
/// `g Sigma_eps`, with the signal gram matrix precomputed.
fn tmi_from_gram(signal_gram: &DMatrix<f64>, sigma_eps: &CovMatrix, g: f64) -> Result<f64> {
    let target = CovMatrix::new(signal_gram + sigma_eps.entries() * g)?;
    let ld_noise = sigma_eps.dim() as f64 * g.ln() + sigma_eps.logdet();
    clamp_mi(0.5 * (target.logdet() - ld_noise))
}

fn check_channel(signal_gram: &DMatrix<f64>) -> Result<()> {
    if signal_gram.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroChannel);
    }
    Ok(())
}

/// Residual whose root places the system at `target_tmi`:
/// `exp(-2 I(g)) - exp(-2 target)`. Strictly increasing in `g` because the
/// total information decreases with noise; zero exactly where they match.
pub fn noise_root_fn(
    a: &DMatrix<f64>,
    sigma_s: &CovMatrix,
    sigma_eps: &CovMatrix,
    target_tmi: f64,
    g: f64,
) -> Result<f64> {
    if !(g.is_finite() && g > 0.0) {
        return Err(Error::invalid("noise gain", "must be finite and positive"));
    }
    let signal_gram = a * sigma_s.entries() * a.transpose();
    check_channel(&signal_gram)?;
    let tmi = tmi_from_gram(&signal_gram, sigma_eps, g)?;
    Ok((-2.0 * tmi).exp() - (-2.0 * target_tmi).exp())
}

/// Noise gain at which the system's total information equals `target_tmi`,
/// to 1e-9 absolute. Bisects on `ln g`.
pub fn solve_g(
    a: &DMatrix<f64>,
    sigma_s: &CovMatrix,
    sigma_eps: &CovMatrix,
    target_tmi: f64,
) -> Result<f64> {
    if !(target_tmi.is_finite() && target_tmi > 0.0) {
        return Err(Error::invalid("target tmi", "must be finite and positive"));
    }
    let signal_gram = a * sigma_s.entries() * a.transpose();
    check_channel(&signal_gram)?;
    // In log-gain coordinates the residual target - I(e^t) is increasing.
    let mut f = |t: f64| Ok(target_tmi - tmi_from_gram(&signal_gram, sigma_eps, t.exp())?);
    let t = expand_and_bisect_increasing(
        &mut f,
        G_BRACKET.0.ln(),
        G_BRACKET.1.ln(),
        TMI_TOL,
        MAX_BISECT,
        MAX_EXPAND,
    )?;
    Ok(t.exp())
}

fn draw_null_system<R: rand::Rng + ?Sized>(
    target_tmi: f64,
    d_x: usize,
    d_y: usize,
    d_t: usize,
    rng: &mut R,
) -> Result<PidAtoms> {
    let (a, sigma_s, sigma_eps) = sample_null_params(d_x, d_y, d_t, rng)?;
    let g = solve_g(&a, &sigma_s, &sigma_eps, target_tmi)?;
    let sys = GaussianPidSystem::new(a, sigma_s, sigma_eps, g, d_x, d_y)?;
    pid_gaussian(&sys)
}

/// `n` decompositions of random systems pinned to `target_tmi`.
///
/// Sample `i` consumes only the substream derived from `(seed, i)`, so the
/// result is bit-identical for a fixed seed no matter how the work is
/// scheduled across threads. Failed draws are retried from the same
/// substream, up to 10 per slot.
pub fn build_null_ensemble(
    target_tmi: f64,
    d_x: usize,
    d_y: usize,
    d_t: usize,
    n: usize,
    seed: u64,
) -> Result<NullEnsemble> {
    if !(target_tmi.is_finite() && target_tmi > 0.0) {
        return Err(Error::invalid("target tmi", "must be finite and positive"));
    }
    if n == 0 {
        return Err(Error::invalid("ensemble size", "must be at least 1"));
    }
    let per_sample: Vec<(PidAtoms, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let mut failures = 0usize;
            loop {
                match draw_null_system(target_tmi, d_x, d_y, d_t, &mut rng) {
                    Ok(atoms) => return Ok((atoms, failures)),
                    Err(_) if failures + 1 < RETRY_BUDGET => failures += 1,
                    Err(_) => {
                        return Err(Error::SamplingExhausted {
                            sample: i,
                            budget: RETRY_BUDGET,
                        })
                    }
                }
            }
        })
        .collect::<Result<_>>()?;
    Ok(NullEnsemble::assemble(
        target_tmi,
        NullFamily::Gaussian,
        seed,
        per_sample,
    ))
}

/// Left-CDF quantile of `value` in `null_values`: the fraction of nulls
/// strictly below it. Ties count as "not below", so a degenerate atom that
/// is exactly zero reads as quantile 0 even when the null distribution puts
/// mass at zero.
pub fn quantile_of(value: f64, null_values: &[f64]) -> Result<f64> {
    if null_values.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let below = null_values.iter().filter(|&&v| v < value).count();
    Ok(below as f64 / null_values.len() as f64)
}

/// Quantiles of each atom against an ensemble's matching atom distribution.
pub fn normalized_against(atoms: &PidAtoms, ens: &NullEnsemble) -> Result<NormalizedAtoms> {
    let q =
        |observed: f64, pick: fn(&PidAtoms) -> f64| quantile_of(observed, &ens.atom_values(pick));
    Ok(NormalizedAtoms {
        red_q: q(atoms.red, |s| s.red)?,
        unx_q: q(atoms.un_x, |s| s.un_x)?,
        uny_q: q(atoms.un_y, |s| s.un_y)?,
        syn_q: q(atoms.syn, |s| s.syn)?,
        ensemble_meta: EnsembleMeta {
            family: ens.family,
            n: ens.n_requested,
            seed: ens.seed,
            target_tmi: ens.target_tmi,
        },
    })
}

/// Full normalisation of a Gaussian system: decompose, build a null
/// ensemble at the same total information and matching dimensions, return
/// atom quantiles.
pub fn numit_normalize(sys: &GaussianPidSystem, n: usize, seed: u64) -> Result<NormalizedAtoms> {
    let tmi = system_tmi(sys)?;
    if tmi < 1e-12 {
        return Err(Error::ZeroTmi);
    }
    let atoms = pid_gaussian(sys)?;
    let ens = build_null_ensemble(tmi, sys.d_x(), sys.d_y(), sys.d_t(), n, seed)?;
    normalized_against(&atoms, &ens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ks_uniform_distance;
    use rand_distr::{Distribution, StandardNormal};

    fn reference_parts() -> (DMatrix<f64>, CovMatrix, CovMatrix) {
        (
            DMatrix::from_row_slice(1, 2, &[0.5, 0.5]),
            CovMatrix::from_rows(&[vec![20.0, 10.0], vec![10.0, 20.0]]).unwrap(),
            CovMatrix::identity(1),
        )
    }

    #[test]
    fn root_fn_vanishes_at_matching_gain() {
        let (a, ss, se) = reference_parts();
        // g=1 gives total information exactly 0.5 ln 16.
        let f = noise_root_fn(&a, &ss, &se, 0.5 * 16.0f64.ln(), 1.0).unwrap();
        assert!(f.abs() < 1e-9, "residual {f}");
        // Far above the matching gain the residual is positive.
        assert!(noise_root_fn(&a, &ss, &se, 0.5 * 16.0f64.ln(), 1e9).unwrap() > 0.0);
        assert!(noise_root_fn(&a, &ss, &se, 0.5 * 16.0f64.ln(), 1e-4).unwrap() < 0.0);
    }

    #[test]
    fn root_fn_rejects_dead_channel() {
        let (_, ss, se) = reference_parts();
        let zero = DMatrix::zeros(1, 2);
        assert!(matches!(
            noise_root_fn(&zero, &ss, &se, 1.0, 1.0),
            Err(Error::ZeroChannel)
        ));
        assert!(matches!(
            solve_g(&zero, &ss, &se, 1.0),
            Err(Error::ZeroChannel)
        ));
    }

    #[test]
    fn root_fn_is_monotone_for_random_draws() {
        for k in 0..100u64 {
            let mut rng = substream(2024, k);
            let (a, ss, se) = sample_null_params(1, 1, 1, &mut rng).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for i in 0..13 {
                let g = 10f64.powf(-3.0 + 0.5 * i as f64);
                let f = noise_root_fn(&a, &ss, &se, 1.0, g).unwrap();
                assert!(f > prev, "draw {k}: f({g}) = {f} <= {prev}");
                prev = f;
            }
        }
    }

    #[test]
    fn solve_g_recovers_reference_gains() {
        let (a, ss, se) = reference_parts();
        let g1 = solve_g(&a, &ss, &se, 0.5 * 16.0f64.ln()).unwrap();
        assert!((g1 - 1.0).abs() < 1e-6, "g = {g1}");
        let g100 = solve_g(&a, &ss, &se, 0.5 * 1.15f64.ln()).unwrap();
        assert!((g100 - 100.0).abs() / 100.0 < 1e-3, "g = {g100}");
    }

    #[test]
    fn solve_g_handles_vanishing_targets() {
        // Target near zero needs an enormous gain; either the solver reaches
        // it through bracket expansion or reports the bracket failure.
        let (a, ss, se) = reference_parts();
        match solve_g(&a, &ss, &se, 1e-12) {
            Ok(g) => {
                assert!(g.is_finite() && g > 1e6);
                let f = noise_root_fn(&a, &ss, &se, 1e-12, g).unwrap();
                assert!(f.abs() < 1e-6);
            }
            Err(Error::BracketFailure(_)) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn ensemble_holds_the_target_information() {
        let ens = build_null_ensemble(1.0, 1, 1, 1, 100, 7).unwrap();
        assert_eq!(ens.samples.len(), 100);
        assert_eq!(ens.n_requested, 100);
        for s in &ens.samples {
            assert!((s.tmi - 1.0).abs() < 1e-6, "tmi {}", s.tmi);
        }
    }

    #[test]
    fn ensemble_is_seed_deterministic() {
        let a = build_null_ensemble(1.0, 1, 1, 1, 60, 11).unwrap();
        let b = build_null_ensemble(1.0, 1, 1, 1, 60, 11).unwrap();
        let c = build_null_ensemble(1.0, 1, 1, 1, 60, 12).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn ensemble_is_thread_count_invariant() {
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| build_null_ensemble(1.5, 1, 1, 1, 64, 99).unwrap())
        };
        let one = run(1);
        let four = run(4);
        assert_eq!(one.samples, four.samples);
        assert_eq!(one.n_failed, four.n_failed);
    }

    #[test]
    fn ensemble_mean_profile_shifts_with_information() {
        // Low total information: unique-dominated nulls. High: synergy takes
        // over. This is the qualitative shape the normalisation relies on.
        let low = build_null_ensemble(1.0, 1, 1, 1, 500, 21)
            .unwrap()
            .mean_atoms();
        let high = build_null_ensemble(3.0, 1, 1, 1, 500, 22)
            .unwrap()
            .mean_atoms();
        let (un_low, un_high) = (low[1] + low[2], high[1] + high[2]);
        assert!(un_low > low[0] && un_low > low[3], "low-tmi means {low:?}");
        assert!(
            high[3] > high[0] && high[3] > un_high,
            "high-tmi means {high:?}"
        );
    }

    #[test]
    fn quantile_rule_examples() {
        let nulls = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_of(5.0, &nulls).unwrap(), 1.0);
        assert_eq!(quantile_of(2.5, &nulls).unwrap(), 0.5);
        assert_eq!(quantile_of(0.0, &nulls).unwrap(), 0.0);
        // Ties read to the left: only strictly smaller nulls count.
        assert_eq!(quantile_of(3.0, &nulls).unwrap(), 0.5);
        assert!(matches!(quantile_of(1.0, &[]), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn quantiles_of_null_draws_are_uniform() {
        // Probability integral transform: values drawn from the same
        // distribution as the nulls land uniformly.
        let mut rng = substream(5150, 0);
        let nulls: Vec<f64> = (0..500).map(|_| StandardNormal.sample(&mut rng)).collect();
        let qs: Vec<f64> = (0..1000)
            .map(|_| {
                let v: f64 = StandardNormal.sample(&mut rng);
                quantile_of(v, &nulls).unwrap()
            })
            .collect();
        let ks = ks_uniform_distance(&qs).unwrap();
        assert!(ks < 0.08, "KS distance {ks}");
    }

    #[test]
    fn normalization_reports_quantiles_and_provenance() {
        let sys = GaussianPidSystem::two_to_one(
            [0.5, 0.5],
            CovMatrix::from_rows(&[vec![20.0, 10.0], vec![10.0, 20.0]]).unwrap(),
            1.0,
            1.0,
        )
        .unwrap();
        let norm = numit_normalize(&sys, 200, 3).unwrap();
        for q in norm.as_array() {
            assert!((0.0..=1.0).contains(&q));
        }
        // Equal couplings onto correlated sources: both unique atoms are
        // exactly zero, and the left-CDF rule pins their quantiles at 0.
        assert_eq!(norm.unx_q, 0.0);
        assert_eq!(norm.uny_q, 0.0);
        assert_eq!(norm.ensemble_meta.family, NullFamily::Gaussian);
        assert_eq!(norm.ensemble_meta.n, 200);
        assert_eq!(norm.ensemble_meta.seed, 3);
        assert!((norm.ensemble_meta.target_tmi - 0.5 * 16.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn normalization_rejects_uninformative_systems() {
        let sys =
            GaussianPidSystem::two_to_one([0.0, 0.0], CovMatrix::identity(2), 1.0, 1.0).unwrap();
        assert!(matches!(numit_normalize(&sys, 50, 1), Err(Error::ZeroTmi)));
    }

    #[test]
    fn bad_arguments_are_rejected() {
        assert!(build_null_ensemble(0.0, 1, 1, 1, 10, 1).is_err());
        assert!(build_null_ensemble(1.0, 1, 1, 1, 0, 1).is_err());
        let mut rng = substream(1, 0);
        assert!(sample_null_params(0, 1, 1, &mut rng).is_err());
    }
}
