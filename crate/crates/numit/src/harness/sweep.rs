//! Sweep drivers. Noise sweeps vary one parameter of a fixed system and
//! record atoms plus both normalisations per grid point; the TMI sweep
//! characterizes the null ensembles themselves across information levels.
//!
//! Every grid point gets its own seed substream, so results do not depend
//! on grid order or on how many points precede a given one. A failed point
//! aborts the whole sweep; callers write no partial files.

use crate::discrete::DiscreteSystem;
use crate::error::{Error, Result};
use crate::gaussian::GaussianPidSystem;
use crate::null::{build_null_ensemble, normalized_against, NullEnsemble};
use crate::pid::{nmi_normalize, AtomShares, PidAtoms};
use crate::rng::mix_seed;

use super::config::fold_p_eps;
use super::io::SweepRow;
use super::Column;

/// Below this total mutual information a system carries no information to
/// decompose: shares and quantiles are left empty rather than drawn
/// against a meaningless null.
const ZERO_TMI: f64 = 1e-12;

fn finish_row(
    param: f64,
    atoms: PidAtoms,
    ensemble: impl FnOnce() -> Result<NullEnsemble>,
    n_failed: &mut usize,
) -> Result<SweepRow> {
    if atoms.tmi < ZERO_TMI {
        return Ok(SweepRow {
            param,
            atoms,
            shares: None,
            quantiles: None,
        });
    }
    let shares = nmi_normalize(&atoms)?;
    let ens = ensemble()?;
    *n_failed += ens.n_failed;
    let quantiles = normalized_against(&atoms, &ens)?;
    Ok(SweepRow {
        param,
        atoms,
        shares: Some(shares),
        quantiles: Some(quantiles),
    })
}

/// Sweeps the gain `g` of a Gaussian system. Returns the rows plus the
/// total number of resampled null draws across all grid points.
pub fn gaussian_noise_sweep(
    base: &GaussianPidSystem,
    grid: &[f64],
    n_null: usize,
    seed: u64,
) -> Result<(Vec<SweepRow>, usize)> {
    let mut n_failed = 0;
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &g) in grid.iter().enumerate() {
        let sys = base.with_gain(g)?;
        let atoms = crate::pid::pid_gaussian(&sys)?;
        let point_seed = mix_seed(seed, i as u64);
        let row = finish_row(
            g,
            atoms,
            || {
                build_null_ensemble(
                    atoms.tmi,
                    sys.d_x(),
                    sys.d_y(),
                    sys.d_t(),
                    n_null,
                    point_seed,
                )
            },
            &mut n_failed,
        )?;
        rows.push(row);
    }
    Ok((rows, n_failed))
}

/// Sweeps the flip probability of a discrete system. Grid values may run
/// over the whole unit interval; values above one half are folded to their
/// mirror image before evaluation, while the `param` column keeps the
/// requested value.
pub fn discrete_noise_sweep(
    base: &DiscreteSystem,
    grid: &[f64],
    n_null: usize,
    alpha: f64,
    retry_budget: usize,
    seed: u64,
) -> Result<(Vec<SweepRow>, usize)> {
    let mut n_failed = 0;
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &p_raw) in grid.iter().enumerate() {
        let sys = base.with_p_eps(fold_p_eps(p_raw)?)?;
        let atoms = crate::discrete::pid_discrete(&sys)?;
        let point_seed = mix_seed(seed, i as u64);
        let row = finish_row(
            p_raw,
            atoms,
            || {
                crate::discrete::build_discrete_null_ensemble(
                    atoms.tmi,
                    n_null,
                    alpha,
                    point_seed,
                    retry_budget,
                )
            },
            &mut n_failed,
        )?;
        rows.push(row);
    }
    Ok((rows, n_failed))
}

/// Histogram of one atom's null distribution over `counts.len()` equal bins
/// spanning [min, max]. A degenerate (constant) sample collapses into the
/// first bin.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AtomHistogram {
    pub atom: &'static str,
    pub min: f64,
    pub max: f64,
    pub counts: Vec<u64>,
}

fn histogram(atom: &'static str, values: &[f64], bins: usize) -> AtomHistogram {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0u64; bins];
    let width = max - min;
    for &v in values {
        let idx = if width > 0.0 {
            (((v - min) / width) * bins as f64) as usize
        } else {
            0
        };
        counts[idx.min(bins - 1)] += 1;
    }
    AtomHistogram {
        atom,
        min,
        max,
        counts,
    }
}

/// Null atom statistics at one total-information target.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TmiSweepPoint {
    pub target_tmi: f64,
    pub mean_atoms: [f64; 4],
    pub mean_shares: [f64; 4],
    pub histograms: Vec<AtomHistogram>,
}

/// Draws a Gaussian null ensemble at every target in `tmi_grid` and
/// summarizes each atom's distribution. Mean shares are the atom means as
/// fractions of their own sum, which equals the target up to solver
/// tolerance.
pub fn tmi_sweep(
    tmi_grid: &[f64],
    d_x: usize,
    d_y: usize,
    d_t: usize,
    n: usize,
    hist_bins: usize,
    seed: u64,
) -> Result<(Vec<TmiSweepPoint>, usize)> {
    if tmi_grid.is_empty() {
        return Err(Error::Config("tmi_grid is empty".into()));
    }
    if hist_bins == 0 {
        return Err(Error::Config("hist_bins must be at least 1".into()));
    }
    let mut n_failed = 0;
    let mut points = Vec::with_capacity(tmi_grid.len());
    for (i, &target) in tmi_grid.iter().enumerate() {
        let ens = build_null_ensemble(target, d_x, d_y, d_t, n, mix_seed(seed, i as u64))?;
        n_failed += ens.n_failed;
        let mean_atoms = ens.mean_atoms();
        let total: f64 = mean_atoms.iter().sum();
        let mean_shares = mean_atoms.map(|m| m / total);
        let picks: [Column<PidAtoms>; 4] = [
            ("red", |a| a.red),
            ("un_x", |a| a.un_x),
            ("un_y", |a| a.un_y),
            ("syn", |a| a.syn),
        ];
        let histograms = picks
            .iter()
            .map(|(name, pick)| histogram(name, &ens.atom_values(pick), hist_bins))
            .collect();
        points.push(TmiSweepPoint {
            target_tmi: target,
            mean_atoms,
            mean_shares,
            histograms,
        });
    }
    Ok((points, n_failed))
}

/// Renders a TMI sweep point as a sweep CSV row: the param column holds
/// the target, the atom columns its null means.
pub fn tmi_point_to_row(p: &TmiSweepPoint) -> SweepRow {
    let [red, un_x, un_y, syn] = p.mean_atoms;
    let tmi = p.mean_atoms.iter().sum();
    let [rs, xs, ys, ss] = p.mean_shares;
    SweepRow {
        param: p.target_tmi,
        atoms: PidAtoms {
            tmi,
            red,
            un_x,
            un_y,
            syn,
        },
        shares: Some(AtomShares {
            red: rs,
            un_x: xs,
            un_y: ys,
            syn: ss,
            method: "nmi".to_string(),
        }),
        quantiles: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cov::CovMatrix;
    use crate::discrete::{Gate, JointPmf};

    fn fig_system() -> GaussianPidSystem {
        GaussianPidSystem::two_to_one(
            [0.5, 0.5],
            CovMatrix::from_rows(&[vec![20.0, 10.0], vec![10.0, 20.0]]).unwrap(),
            1.0,
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn gaussian_sweep_is_deterministic_and_ordered() {
        let base = fig_system();
        let grid = [0.5, 1.0, 2.0];
        let (rows, _) = gaussian_noise_sweep(&base, &grid, 50, 42).unwrap();
        let (again, _) = gaussian_noise_sweep(&base, &grid, 50, 42).unwrap();
        assert_eq!(rows.len(), 3);
        for (a, b) in rows.iter().zip(&again) {
            assert_eq!(a.atoms, b.atoms);
            assert_eq!(a.quantiles, b.quantiles);
        }
        // The gain scales the noise, so information falls as it grows.
        assert!(rows[0].atoms.tmi > rows[1].atoms.tmi);
        assert!(rows[1].atoms.tmi > rows[2].atoms.tmi);
    }

    #[test]
    fn gaussian_sweep_points_do_not_depend_on_grid_position() {
        let base = fig_system();
        let (full, _) = gaussian_noise_sweep(&base, &[0.5, 1.0], 40, 7).unwrap();
        let (single, _) = gaussian_noise_sweep(&base, &[0.5], 40, 7).unwrap();
        assert_eq!(full[0].atoms, single[0].atoms);
        assert_eq!(full[0].quantiles, single[0].quantiles);
    }

    #[test]
    fn discrete_sweep_folds_but_reports_requested_param() {
        let base = DiscreteSystem::new(
            JointPmf::uniform(),
            Gate::from_bitstring("0110").unwrap(),
            0.0,
        )
        .unwrap();
        let (rows, _) = discrete_noise_sweep(&base, &[0.2, 0.8], 30, 1.0, 100, 9).unwrap();
        assert_eq!(rows[0].param, 0.2);
        assert_eq!(rows[1].param, 0.8);
        // 1 - 0.8 only equals 0.2 up to rounding, so compare with a
        // tolerance rather than bitwise.
        let (a, b) = (rows[0].atoms, rows[1].atoms);
        assert!((a.tmi - b.tmi).abs() < 1e-12);
        assert!((a.syn - b.syn).abs() < 1e-12);
    }

    #[test]
    fn discrete_sweep_handles_the_zero_information_point() {
        let base = DiscreteSystem::new(
            JointPmf::uniform(),
            Gate::from_bitstring("0110").unwrap(),
            0.0,
        )
        .unwrap();
        let (rows, _) = discrete_noise_sweep(&base, &[0.5], 30, 1.0, 100, 9).unwrap();
        assert_eq!(rows[0].atoms.tmi, 0.0);
        assert!(rows[0].shares.is_none());
        assert!(rows[0].quantiles.is_none());
    }

    #[test]
    fn tmi_sweep_shares_sum_to_one_and_histograms_count_everything() {
        let (points, _) = tmi_sweep(&[0.5, 2.0], 1, 1, 1, 200, 10, 5).unwrap();
        for p in &points {
            let s: f64 = p.mean_shares.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            for h in &p.histograms {
                assert_eq!(h.counts.iter().sum::<u64>(), 200);
            }
            let total: f64 = p.mean_atoms.iter().sum();
            assert!((total - p.target_tmi).abs() < 1e-6);
        }
    }
}
