//! Vector autoregressive dynamics: simulation, least-squares fitting,
//! autocovariances through the companion-form Lyapunov equation, past/future
//! information decomposition, and the spectral-radius null model.
//!
//! A VAR(p) process `X_t = sum_l A_l X_{t-l} + eta_t` with stable dynamics
//! has stationary autocovariances `G_k = Cov(X_t, X_{t-k})` determined by
//! `G = A G A' + W` on the companion state. Everything downstream (total
//! information between past and future, the source split, the null model)
//! is covariance algebra on those blocks.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::cov::{clamp_mi, gaussian_mi, CovMatrix, IndexSet};
use crate::error::{Error, Result};
use crate::null::{normalized_against, NormalizedAtoms, NullEnsemble, NullFamily};
use crate::pid::{mmi_pid, PidAtoms};
use crate::rng::substream;
use crate::root::bisect_increasing;
use crate::sampling::{std_normal_matrix, wishart_with_retries};

/// Stability is judged against this margin on the companion spectral radius.
const STABILITY_MARGIN: f64 = 1e-9;
/// Null-model spectral radii live in (0, 1 - this).
const G_CAP_MARGIN: f64 = 1e-6;
/// Above this companion dimension the Lyapunov solver switches from the
/// exact Kronecker solve to squared-iteration accumulation.
const KRONECKER_LIMIT: usize = 40;
const TMI_TOL: f64 = 1e-9;
const MAX_BISECT: usize = 200;
const RETRY_BUDGET: usize = 10;
const WISHART_RETRIES: usize = 8;

/// VAR(p) model: `p` coefficient matrices and the residual covariance.
///
/// Construction checks shapes and finiteness only; stability is a property
/// of the dynamics that the covariance operations validate on use, so that
/// fitted models can be inspected even when they come out unstable.
#[derive(Debug, Clone)]
pub struct VarModel {
    n: usize,
    coeffs: Vec<DMatrix<f64>>,
    resid_cov: CovMatrix,
}

impl VarModel {
    pub fn new(coeffs: Vec<DMatrix<f64>>, resid_cov: CovMatrix) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::invalid("var order", "need at least one lag matrix"));
        }
        let n = resid_cov.dim();
        for (l, a) in coeffs.iter().enumerate() {
            if a.nrows() != n || a.ncols() != n {
                return Err(Error::DimensionMismatch(format!(
                    "lag-{} matrix is {}x{}, expected {n}x{n}",
                    l + 1,
                    a.nrows(),
                    a.ncols()
                )));
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
        Ok(VarModel {
            n,
            coeffs,
            resid_cov,
        })
    }

    /// First-order model.
    pub fn var1(a: DMatrix<f64>, v: CovMatrix) -> Result<Self> {
        Self::new(vec![a], v)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn resid_cov(&self) -> &CovMatrix {
        &self.resid_cov
    }

    /// Companion spectral radius; < 1 means stable dynamics.
    pub fn stability_radius(&self) -> f64 {
        spectral_radius(&companion_matrix(self))
    }
}

/// Multi-epoch multivariate series, timepoints as rows.
#[derive(Debug, Clone)]
pub struct TimeSeries {
    n_vars: usize,
    epochs: Vec<DMatrix<f64>>,
    sample_rate: Option<f64>,
}

impl TimeSeries {
    pub fn new(epochs: Vec<DMatrix<f64>>, sample_rate: Option<f64>) -> Result<Self> {
        if epochs.is_empty() {
            return Err(Error::Data("no epochs in time series".to_string()));
        }
        let n_vars = epochs[0].ncols();
        if n_vars == 0 {
            return Err(Error::Data("epochs have no variables".to_string()));
        }
        for (i, e) in epochs.iter().enumerate() {
            if e.ncols() != n_vars {
                return Err(Error::Data(format!(
                    "epoch {i} has {} variables, epoch 0 has {n_vars}",
                    e.ncols()
                )));
            }
            if e.iter().any(|x| !x.is_finite()) {
                return Err(Error::Data(format!("non-finite value in epoch {i}")));
            }
        }
        Ok(TimeSeries {
            n_vars,
            epochs,
            sample_rate,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn epochs(&self) -> &[DMatrix<f64>] {
        &self.epochs
    }

    pub fn sample_rate(&self) -> Option<f64> {
        self.sample_rate
    }
}

/// Bipartition of the process variables; each variable's entire lag history
/// follows its group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    x_vars: IndexSet,
    y_vars: IndexSet,
}

impl Partition {
    /// `x_vars` and `y_vars` must be non-empty, disjoint, and jointly cover
    /// `0..n_vars`.
    pub fn new(x_vars: IndexSet, y_vars: IndexSet, n_vars: usize) -> Result<Self> {
        if x_vars.is_empty() || y_vars.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        if !x_vars.is_disjoint_with(&y_vars) {
            return Err(Error::OverlappingIndexSets);
        }
        let union = x_vars.union(&y_vars);
        if union.len() != n_vars || union.max() != Some(n_vars - 1) {
            return Err(Error::invalid(
                "partition",
                format!("groups must cover all {n_vars} variables exactly once"),
            ));
        }
        Ok(Partition { x_vars, y_vars })
    }

    /// Leading `d_x` variables vs the rest.
    pub fn split_at(d_x: usize, n_vars: usize) -> Result<Self> {
        if d_x == 0 || d_x >= n_vars {
            return Err(Error::invalid(
                "partition",
                "split point must leave both groups non-empty",
            ));
        }
        Self::new(
            IndexSet::range(0..d_x),
            IndexSet::range(d_x..n_vars),
            n_vars,
        )
    }

    pub fn x_vars(&self) -> &IndexSet {
        &self.x_vars
    }

    pub fn y_vars(&self) -> &IndexSet {
        &self.y_vars
    }

    pub fn n_vars(&self) -> usize {
        self.x_vars.len() + self.y_vars.len()
    }
}

/// Companion matrix: lag matrices across the top block row, identity on the
/// block subdiagonal.
pub fn companion_matrix(m: &VarModel) -> DMatrix<f64> {
    let n = m.n;
    let p = m.order();
    let d = n * p;
    let mut c = DMatrix::zeros(d, d);
    for (l, a) in m.coeffs.iter().enumerate() {
        c.view_mut((0, l * n), (n, n)).copy_from(a);
    }
    for b in 1..p {
        c.view_mut((b * n, (b - 1) * n), (n, n))
            .copy_from(&DMatrix::identity(n, n));
    }
    c
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    a.complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

fn check_stable(a: &DMatrix<f64>) -> Result<f64> {
    let rho = spectral_radius(a);
    if rho >= 1.0 - STABILITY_MARGIN {
        return Err(Error::UnstableSystem { rho });
    }
    Ok(rho)
}

/// Stationary covariance `G` with `G = A G A' + W`.
///
/// `w` must be symmetric positive *semi*definite (companion noise has zero
/// blocks); the solution is SPD for stable reachable dynamics and is
/// validated as such on return. Exact Kronecker solve up to companion
/// dimension 40, squared-iteration accumulation beyond.
pub fn solve_lyapunov(a: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<CovMatrix> {
    let d = a.nrows();
    if a.ncols() != d || w.nrows() != d || w.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "need square same-size inputs, got {}x{} and {}x{}",
            a.nrows(),
            a.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    if a.iter().chain(w.iter()).any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let rho = check_stable(a)?;
    let gamma = if d <= KRONECKER_LIMIT {
        // vec(G) = (I - A (x) A)^-1 vec(W), column-major vectorisation.
        let kron = a.kronecker(a);
        let sys = DMatrix::identity(d * d, d * d) - kron;
        let rhs = DVector::from_column_slice(w.as_slice());
        let sol = sys.lu().solve(&rhs).ok_or(Error::UnstableSystem { rho })?;
        DMatrix::from_column_slice(d, d, sol.as_slice())
    } else {
        // G = sum_k A^k W A'^k, accumulated by repeated squaring:
        // G <- G + A_k G A_k', A_k <- A_k^2 doubles the covered horizon.
        let mut g = w.clone();
        let mut ak = a.clone();
        for _ in 0..64 {
            let term = &ak * &g * ak.transpose();
            let increment = term.abs().max();
            g += term;
            if increment <= 1e-16 * g.abs().max() {
                break;
            }
            ak = &ak * &ak;
        }
        g
    };
    // The solve leaves rounding-level asymmetry; restore it exactly.
    CovMatrix::new((&gamma + gamma.transpose()) * 0.5)
}

fn companion_noise(m: &VarModel) -> DMatrix<f64> {
    let n = m.n;
    let d = n * m.order();
    let mut w = DMatrix::zeros(d, d);
    w.view_mut((0, 0), (n, n)).copy_from(m.resid_cov.entries());
    w
}

/// Autocovariances `[G_0, ..., G_kmax]` of a stable model.
///
/// `G_0..G_{p-1}` are blocks of the companion-form stationary covariance;
/// later lags follow the recursion `G_k = sum_l A_l G_{k-l}`.
pub fn autocov_sequence(m: &VarModel, k_max: usize) -> Result<Vec<DMatrix<f64>>> {
    let n = m.n;
    let p = m.order();
    let comp_cov = solve_lyapunov(&companion_matrix(m), &companion_noise(m))?;
    let mut gammas: Vec<DMatrix<f64>> = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max.min(p - 1) {
        gammas.push(comp_cov.entries().view((0, k * n), (n, n)).into_owned());
    }
    for k in gammas.len()..=k_max {
        let mut g = DMatrix::zeros(n, n);
        for (l, a) in m.coeffs.iter().enumerate() {
            let lag = l + 1;
            let prev = &gammas[k - lag];
            g += a * prev;
        }
        gammas.push(g);
    }
    Ok(gammas)
}

/// Simulated trajectory as a single epoch, zero-initialised with `burn_in`
/// discarded steps.
pub fn simulate_var<R: Rng + ?Sized>(
    m: &VarModel,
    steps: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<TimeSeries> {
    if steps == 0 {
        return Err(Error::invalid("steps", "must simulate at least one step"));
    }
    check_stable(&companion_matrix(m))?;
    let n = m.n;
    let p = m.order();
    let chol = m.resid_cov.chol_l();
    let mut hist: VecDeque<DVector<f64>> = (0..p).map(|_| DVector::zeros(n)).collect();
    let mut out = DMatrix::zeros(steps, n);
    for t in 0..burn_in + steps {
        let z = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
        let mut x = chol * z;
        for (l, a) in m.coeffs.iter().enumerate() {
            x += a * &hist[l];
        }
        hist.pop_back();
        hist.push_front(x.clone());
        if t >= burn_in {
            out.row_mut(t - burn_in).copy_from(&x.transpose());
        }
    }
    TimeSeries::new(vec![out], None)
}

/// Pooled least-squares fit of an order-`p` model.
///
/// Epochs are demeaned individually, lagged regressors are stacked, and the
/// normal equations are pooled across epochs. The residual covariance uses
/// the degrees-of-freedom denominator `T_eff - n*p`. The fitted model is
/// returned as-is; stability is checked by whatever consumes it.
pub fn fit_var(ts: &TimeSeries, p: usize) -> Result<VarModel> {
    if p == 0 {
        return Err(Error::invalid("var order", "must be at least 1"));
    }
    let n = ts.n_vars;
    let min_len = p + 2;
    let mut demeaned: Vec<DMatrix<f64>> = Vec::with_capacity(ts.epochs.len());
    for (i, e) in ts.epochs.iter().enumerate() {
        if e.nrows() < min_len {
            return Err(Error::TooShortEpoch {
                epoch: i,
                len: e.nrows(),
                order: p,
                min: min_len,
            });
        }
        let mut d = e.clone();
        for c in 0..n {
            let mean = d.column(c).sum() / d.nrows() as f64;
            d.column_mut(c).add_scalar_mut(-mean);
        }
        demeaned.push(d);
    }

    let np = n * p;
    let mut gram = DMatrix::zeros(np, np);
    let mut cross = DMatrix::zeros(np, n);
    let mut t_eff = 0usize;
    let mut x_row = DVector::zeros(np);
    for d in &demeaned {
        for t in p..d.nrows() {
            for l in 0..p {
                for v in 0..n {
                    x_row[l * n + v] = d[(t - 1 - l, v)];
                }
            }
            gram.syger(1.0, &x_row, &x_row, 1.0);
            for c in 0..n {
                let y = d[(t, c)];
                for r in 0..np {
                    cross[(r, c)] += x_row[r] * y;
                }
            }
            t_eff += 1;
        }
    }
    if t_eff <= np {
        return Err(Error::TooFewSamples {
            got: t_eff,
            min: np + 1,
        });
    }
    // syger fills one triangle; mirror it.
    let gram = {
        let mut g = gram;
        for r in 0..np {
            for c in 0..r {
                g[(c, r)] = g[(r, c)];
            }
        }
        g
    };
    let chol = nalgebra::Cholesky::new(gram).ok_or(Error::RankDeficientRegressors)?;
    let b = chol.solve(&cross);

    // Second pass for the residual covariance: numerically safer than the
    // normal-equation shortcut when the fit is tight.
    let mut resid_acc = DMatrix::zeros(n, n);
    let mut r_vec = DVector::zeros(n);
    for d in &demeaned {
        for t in p..d.nrows() {
            for l in 0..p {
                for v in 0..n {
                    x_row[l * n + v] = d[(t - 1 - l, v)];
                }
            }
            let pred = b.transpose() * &x_row;
            for c in 0..n {
                r_vec[c] = d[(t, c)] - pred[c];
            }
            resid_acc.syger(1.0, &r_vec, &r_vec, 1.0);
        }
    }
    for r in 0..n {
        for c in 0..r {
            resid_acc[(c, r)] = resid_acc[(r, c)];
        }
    }
    let v = CovMatrix::new(resid_acc / (t_eff - np) as f64)?;
    let coeffs = (0..p)
        .map(|l| b.view((l * n, 0), (n, n)).transpose())
        .collect();
    VarModel::new(coeffs, v)
}

/// Total information between the stacked past and the one-step future:
/// `0.5 (log|G_0| - log|V|)`.
pub fn var_tmi(m: &VarModel) -> Result<f64> {
    let gammas = autocov_sequence(m, 0)?;
    let gamma0 = CovMatrix::new(gammas[0].clone())?;
    clamp_mi(0.5 * (gamma0.logdet() - m.resid_cov.logdet()))
}

/// Joint covariance of `(X_t, X_{t-1}, ..., X_{t-p})`: future block first.
fn past_future_joint(m: &VarModel) -> Result<CovMatrix> {
    let n = m.n;
    let p = m.order();
    let gammas = autocov_sequence(m, p)?;
    let d = (p + 1) * n;
    let mut joint = DMatrix::zeros(d, d);
    for bi in 0..=p {
        for bj in 0..=p {
            let block = if bj >= bi {
                gammas[bj - bi].clone()
            } else {
                gammas[bi - bj].transpose()
            };
            joint.view_mut((bi * n, bj * n), (n, n)).copy_from(&block);
        }
    }
    CovMatrix::new(joint)
}

fn past_indices(vars: &IndexSet, n: usize, p: usize) -> IndexSet {
    let mut idx = Vec::with_capacity(vars.len() * p);
    for l in 1..=p {
        for &v in vars.as_slice() {
            idx.push(l * n + v);
        }
    }
    IndexSet::new(idx).expect("disjoint lagged indices")
}

/// Decomposition of the past-to-future information into the two source
/// groups' atoms. Each group's past is its variables across all lags.
pub fn var_pid(m: &VarModel, part: &Partition) -> Result<PidAtoms> {
    if part.n_vars() != m.n {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} variables, model has {}",
            part.n_vars(),
            m.n
        )));
    }
    let tmi = var_tmi(m)?;
    let joint = past_future_joint(m)?;
    let p = m.order();
    let target = IndexSet::range(0..m.n);
    let i_x = gaussian_mi(&joint, &past_indices(&part.x_vars, m.n, p), &target)?;
    let i_y = gaussian_mi(&joint, &past_indices(&part.y_vars, m.n, p), &target)?;
    mmi_pid(i_x, i_y, tmi)
}

/// Random first-order dynamics: standard normal coefficient entries and a
/// Wishart residual covariance (identity scale, dof = dimension).
pub fn sample_null_var<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> Result<(DMatrix<f64>, CovMatrix)> {
    if n == 0 {
        return Err(Error::invalid("null dimension", "must be positive"));
    }
    let a_raw = std_normal_matrix(rng, n, n);
    let v = wishart_with_retries(rng, n, WISHART_RETRIES)?;
    Ok((a_raw, v))
}

fn scaled_model(a_raw: &DMatrix<f64>, rho_raw: f64, v: &CovMatrix, g: f64) -> Result<VarModel> {
    VarModel::var1(a_raw * (g / rho_raw), v.clone())
}

/// Spectral radius `g` at which the rescaled dynamics
/// `(g / rho(a_raw)) a_raw` with residual covariance `v` reach `target_tmi`.
///
/// Total information grows monotonically from 0 as `g` sweeps (0, 1);
/// targets above the value at the stability cap are unreachable for this
/// draw.
pub fn solve_g_var(a_raw: &DMatrix<f64>, v: &CovMatrix, target_tmi: f64) -> Result<f64> {
    if !(target_tmi.is_finite() && target_tmi > 0.0) {
        return Err(Error::invalid("target tmi", "must be finite and positive"));
    }
    let rho_raw = spectral_radius(a_raw);
    if rho_raw < 1e-12 {
        return Err(Error::ZeroDynamics);
    }
    let cap = 1.0 - G_CAP_MARGIN;
    let tmi_at = |g: f64| -> Result<f64> {
        if g == 0.0 {
            return Ok(0.0);
        }
        var_tmi(&scaled_model(a_raw, rho_raw, v, g)?)
    };
    let f_cap = tmi_at(cap)? - target_tmi;
    if f_cap < 0.0 {
        return Err(Error::TargetUnreachable {
            target: target_tmi,
            max: f_cap + target_tmi,
        });
    }
    let mut f = |g: f64| Ok(tmi_at(g)? - target_tmi);
    bisect_increasing(&mut f, 0.0, cap, -target_tmi, f_cap, TMI_TOL, MAX_BISECT)
}

fn draw_null_var_system<R: Rng + ?Sized>(
    target_tmi: f64,
    n_vars: usize,
    part: &Partition,
    rng: &mut R,
) -> Result<PidAtoms> {
    let (a_raw, v) = sample_null_var(n_vars, rng)?;
    let g = solve_g_var(&a_raw, &v, target_tmi)?;
    let model = scaled_model(&a_raw, spectral_radius(&a_raw), &v, g)?;
    var_pid(&model, part)
}

/// `n` first-order null decompositions pinned to `target_tmi`, partitioned
/// like the observed system. Deterministic per seed, independent of thread
/// scheduling; unreachable-target draws are discarded and retried (counted
/// in `n_failed`).
pub fn build_var_null_ensemble(
    target_tmi: f64,
    n_vars: usize,
    part: &Partition,
    n: usize,
    seed: u64,
) -> Result<NullEnsemble> {
    if !(target_tmi.is_finite() && target_tmi > 0.0) {
        return Err(Error::invalid("target tmi", "must be finite and positive"));
    }
    if n == 0 {
        return Err(Error::invalid("ensemble size", "must be at least 1"));
    }
    if part.n_vars() != n_vars {
        return Err(Error::DimensionMismatch(format!(
            "partition covers {} variables, null family has {n_vars}",
            part.n_vars()
        )));
    }
    let per_sample: Vec<(PidAtoms, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = substream(seed, i as u64);
            let mut failures = 0usize;
            loop {
                match draw_null_var_system(target_tmi, n_vars, part, &mut rng) {
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
        NullFamily::Var,
        seed,
        per_sample,
    ))
}

/// Null-model normalisation of a VAR decomposition: quantiles of the
/// observed atoms against matched-information first-order null dynamics.
pub fn numit_normalize_var(
    m: &VarModel,
    part: &Partition,
    n_samples: usize,
    seed: u64,
) -> Result<NormalizedAtoms> {
    let tmi = var_tmi(m)?;
    if tmi < 1e-12 {
        return Err(Error::ZeroTmi);
    }
    let atoms = var_pid(m, part)?;
    let ens = build_var_null_ensemble(tmi, m.dim(), part, n_samples, seed)?;
    normalized_against(&atoms, &ens)
}
