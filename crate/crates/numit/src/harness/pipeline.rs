//! Subset pipeline: the end-to-end recipe for asking "which parts of this
//! recorded system share, hide, or jointly create information?" without
//! committing to one partition. Each repeat draws a random variable
//! subset, splits it in half, fits a VAR, decomposes the past-to-future
//! information, and normalizes the atoms against the matched null.
//!
//! Subsets are independent seed substreams processed in parallel; results
//! are identical for any worker count. Failed fits (rank deficiency,
//! unstable estimates, unreachable null targets) are skipped and counted
//! rather than aborting the run, since with small random subsets a few
//! bad draws are expected.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::null::{normalized_against, NormalizedAtoms};
use crate::pid::{nmi_normalize, AtomShares, PidAtoms};
use crate::rng::{mix_seed, substream};
use crate::var::{build_var_null_ensemble, fit_var, var_pid, Partition, TimeSeries};

use super::io::fmt_float;
use super::regress::{summary_stats, SummaryStats};
use super::Column;

/// Default information floor for subset rows: the same threshold below
/// which a quantile is undefined anywhere else in the crate. Data known to
/// be nearly dynamics-free warrants a higher, caller-chosen floor, since a
/// least-squares fit on finite samples never lands exactly at zero.
pub const DEFAULT_MIN_TMI: f64 = 1e-12;

/// Domain separator so ensemble seeds never collide with subset streams.
const ENSEMBLE_DOMAIN: u64 = 0xA5A5_5A5A_0000_0001;

/// Run recipe for [`pipeline_subsets`]. Start from [`PipelineSpec::new`]
/// and override fields as needed.
#[derive(Debug, Clone)]
pub struct PipelineSpec {
    /// Variables drawn per subset; the X group gets the larger half.
    pub subset_size: usize,
    pub n_subsets: usize,
    /// VAR model order fitted to each subset.
    pub order: usize,
    /// `None` fits every epoch; `Some(m)` subsamples `m` epochs per
    /// subset without replacement.
    pub epochs_per_fit: Option<usize>,
    /// Null systems per subset; 0 skips normalisation entirely.
    pub n_null: usize,
    /// Information floor: rows fitted at or below it are counted as
    /// zero-TMI instead of being normalized.
    pub min_tmi: f64,
    pub seed: u64,
}

impl PipelineSpec {
    pub fn new(subset_size: usize, n_subsets: usize) -> Self {
        Self {
            subset_size,
            n_subsets,
            order: 1,
            epochs_per_fit: None,
            n_null: 1000,
            min_tmi: DEFAULT_MIN_TMI,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubsetRow {
    pub subset: usize,
    /// Chosen variables in X-then-Y order: the first half of the list is
    /// the X group.
    pub vars: Vec<usize>,
    pub atoms: PidAtoms,
    pub shares: Option<AtomShares>,
    pub quantiles: Option<NormalizedAtoms>,
}

#[derive(Debug)]
pub struct PipelineOutput {
    pub rows: Vec<SubsetRow>,
    pub mean_tmi: f64,
    pub mean_atoms: [f64; 4],
    pub mean_shares: Option<[f64; 4]>,
    pub mean_quantiles: Option<[f64; 4]>,
    /// (subset index, error message) for each skipped subset.
    pub failures: Vec<(usize, String)>,
    /// Subsets whose fitted model carried no past-to-future information.
    pub zero_tmi: usize,
    /// Resampled draws across all null ensembles.
    pub null_redraws: usize,
    /// Across-subset location tests per column, in deterministic order.
    pub stats: Vec<(String, SummaryStats)>,
}

enum Outcome {
    Done(Box<SubsetRow>, usize, bool),
    Failed(usize, String),
}

fn run_subset(ts: &TimeSeries, spec: &PipelineSpec, index: usize) -> Outcome {
    let &PipelineSpec {
        subset_size,
        order,
        epochs_per_fit,
        n_null,
        min_tmi,
        seed,
        ..
    } = spec;
    let mut rng = substream(seed, index as u64);
    let n_vars = ts.n_vars();

    let mut chosen = rand::seq::index::sample(&mut rng, n_vars, subset_size).into_vec();
    chosen.shuffle(&mut rng);
    let n_x = subset_size.div_ceil(2);

    // Columns of the sub-series are the chosen variables in ascending
    // order; the partition addresses their positions within that order.
    let mut sorted = chosen.clone();
    sorted.sort_unstable();
    let position = |var: usize| sorted.binary_search(&var).unwrap();
    let x_pos: Vec<usize> = chosen[..n_x].iter().map(|&v| position(v)).collect();
    let y_pos: Vec<usize> = chosen[n_x..].iter().map(|&v| position(v)).collect();

    let epoch_ids: Vec<usize> = match epochs_per_fit {
        None => (0..ts.epochs().len()).collect(),
        Some(m) => {
            let mut ids = rand::seq::index::sample(&mut rng, ts.epochs().len(), m).into_vec();
            ids.sort_unstable();
            ids
        }
    };
    let sub_epochs: Vec<DMatrix<f64>> = epoch_ids
        .iter()
        .map(|&e| ts.epochs()[e].select_columns(sorted.iter()))
        .collect();

    let attempt = || -> Result<(PidAtoms, Option<NormalizedAtoms>, usize, bool)> {
        let sub_ts = TimeSeries::new(sub_epochs.clone(), ts.sample_rate())?;
        let model = fit_var(&sub_ts, order)?;
        let part = Partition::new(
            crate::cov::IndexSet::new(x_pos.clone())?,
            crate::cov::IndexSet::new(y_pos.clone())?,
            subset_size,
        )?;
        let atoms = var_pid(&model, &part)?;
        // At or below the floor the fitted information is estimation noise
        // rather than dynamics, so a quantile would be meaningless.
        let zero = atoms.tmi <= min_tmi;
        if n_null == 0 || zero {
            return Ok((atoms, None, 0, zero));
        }
        let ens = build_var_null_ensemble(
            atoms.tmi,
            subset_size,
            &part,
            n_null,
            mix_seed(mix_seed(seed, ENSEMBLE_DOMAIN), index as u64),
        )?;
        let quantiles = normalized_against(&atoms, &ens)?;
        Ok((atoms, Some(quantiles), ens.n_failed, false))
    };

    match attempt() {
        Ok((atoms, quantiles, redraws, zero)) => Outcome::Done(
            Box::new(SubsetRow {
                subset: index,
                vars: chosen,
                shares: nmi_normalize(&atoms).ok(),
                atoms,
                quantiles,
            }),
            redraws,
            zero,
        ),
        Err(e) => Outcome::Failed(index, e.to_string()),
    }
}

/// Runs `spec.n_subsets` independent subset analyses over `ts`.
pub fn pipeline_subsets(ts: &TimeSeries, spec: &PipelineSpec) -> Result<PipelineOutput> {
    let &PipelineSpec {
        subset_size,
        n_subsets,
        order,
        epochs_per_fit,
        min_tmi,
        ..
    } = spec;
    if subset_size < 2 {
        return Err(Error::invalid(
            "subset size",
            "must be at least 2 so both groups are non-empty",
        ));
    }
    if subset_size > ts.n_vars() {
        return Err(Error::TooFewVariables {
            requested: subset_size,
            available: ts.n_vars(),
        });
    }
    if n_subsets == 0 {
        return Err(Error::invalid("subset count", "must be at least 1"));
    }
    if order == 0 {
        return Err(Error::invalid("model order", "must be at least 1"));
    }
    if let Some(m) = epochs_per_fit {
        if m == 0 || m > ts.epochs().len() {
            return Err(Error::Config(format!(
                "epochs_per_fit is {m}, but the series has {} epochs",
                ts.epochs().len()
            )));
        }
    }
    if !(min_tmi.is_finite() && min_tmi >= 0.0) {
        return Err(Error::invalid(
            "information floor",
            "must be finite and non-negative",
        ));
    }

    let outcomes: Vec<Outcome> = (0..n_subsets)
        .into_par_iter()
        .map(|i| run_subset(ts, spec, i))
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut zero_tmi = 0;
    let mut null_redraws = 0;
    for outcome in outcomes {
        match outcome {
            Outcome::Done(row, redraws, zero) => {
                rows.push(*row);
                null_redraws += redraws;
                zero_tmi += zero as usize;
            }
            Outcome::Failed(i, msg) => failures.push((i, msg)),
        }
    }
    if rows.is_empty() {
        let (i, msg) = &failures[0];
        return Err(Error::Data(format!(
            "all {n_subsets} subsets failed; subset {i}: {msg}"
        )));
    }

    let count = rows.len() as f64;
    let mean_tmi = rows.iter().map(|r| r.atoms.tmi).sum::<f64>() / count;
    let mut mean_atoms = [0.0; 4];
    for r in &rows {
        for (m, v) in mean_atoms.iter_mut().zip(r.atoms.as_array()) {
            *m += v;
        }
    }
    mean_atoms = mean_atoms.map(|m| m / count);

    let mean_of = |values: Vec<[f64; 4]>| -> Option<[f64; 4]> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mut acc = [0.0; 4];
        for v in values {
            for (a, x) in acc.iter_mut().zip(v) {
                *a += x;
            }
        }
        Some(acc.map(|a| a / n))
    };
    let mean_shares = mean_of(
        rows.iter()
            .filter_map(|r| r.shares.as_ref().map(|s| s.as_array()))
            .collect(),
    );
    let mean_quantiles = mean_of(
        rows.iter()
            .filter_map(|r| r.quantiles.as_ref().map(|q| q.as_array()))
            .collect(),
    );

    let mut stats = Vec::new();
    if rows.len() >= 2 {
        let columns: [Column<SubsetRow>; 5] = [
            ("tmi", |r| r.atoms.tmi),
            ("red", |r| r.atoms.red),
            ("un_x", |r| r.atoms.un_x),
            ("un_y", |r| r.atoms.un_y),
            ("syn", |r| r.atoms.syn),
        ];
        for (name, pick) in columns {
            let values: Vec<f64> = rows.iter().map(pick).collect();
            stats.push((name.to_string(), summary_stats(&values)?));
        }
        let q_columns: [Column<NormalizedAtoms>; 4] = [
            ("red_numit", |q| q.red_q),
            ("un_x_numit", |q| q.unx_q),
            ("un_y_numit", |q| q.uny_q),
            ("syn_numit", |q| q.syn_q),
        ];
        for (name, pick) in q_columns {
            let values: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.quantiles.as_ref().map(pick))
                .collect();
            if values.len() >= 2 {
                stats.push((name.to_string(), summary_stats(&values)?));
            }
        }
    }

    Ok(PipelineOutput {
        rows,
        mean_tmi,
        mean_atoms,
        mean_shares,
        mean_quantiles,
        failures,
        zero_tmi,
        null_redraws,
        stats,
    })
}

pub const PIPELINE_HEADER: &str = "subset,vars,tmi,red,un_x,un_y,syn,\
red_nmi,un_x_nmi,un_y_nmi,syn_nmi,\
red_numit,un_x_numit,un_y_numit,syn_numit";

/// Renders the per-subset rows plus a trailing mean row
/// (`subset = "mean"`, empty vars column).
pub fn render_pipeline_csv(out: &PipelineOutput) -> String {
    use std::fmt::Write as _;

    let quad = |text: &mut String, values: Option<[f64; 4]>| match values {
        Some(vs) => {
            for v in vs {
                write!(text, ",{}", fmt_float(v)).unwrap();
            }
        }
        None => text.push_str(",,,,"),
    };

    let mut text = String::from(PIPELINE_HEADER);
    text.push('\n');
    for row in &out.rows {
        let vars: Vec<String> = row.vars.iter().map(|v| v.to_string()).collect();
        write!(
            text,
            "{},{},{}",
            row.subset,
            vars.join("|"),
            fmt_float(row.atoms.tmi)
        )
        .unwrap();
        quad(&mut text, Some(row.atoms.as_array()));
        quad(&mut text, row.shares.as_ref().map(|s| s.as_array()));
        quad(&mut text, row.quantiles.as_ref().map(|q| q.as_array()));
        text.push('\n');
    }
    write!(text, "mean,,{}", fmt_float(out.mean_tmi)).unwrap();
    quad(&mut text, Some(out.mean_atoms));
    quad(&mut text, out.mean_shares);
    quad(&mut text, out.mean_quantiles);
    text.push('\n');
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cov::CovMatrix;
    use crate::var::{simulate_var, VarModel};
    use nalgebra::dmatrix;

    fn recorded_series(n_epochs: usize, steps: usize) -> TimeSeries {
        let a = dmatrix![
            0.3, 0.2, 0.0, 0.0;
            0.0, 0.25, 0.2, 0.0;
            0.0, 0.0, 0.3, 0.15;
            0.1, 0.0, 0.0, 0.2;
        ];
        let model = VarModel::var1(a, CovMatrix::identity(4)).unwrap();
        let epochs: Vec<DMatrix<f64>> = (0..n_epochs)
            .map(|e| {
                simulate_var(&model, steps, 200, &mut substream(1234, e as u64))
                    .unwrap()
                    .epochs()[0]
                    .clone()
            })
            .collect();
        TimeSeries::new(epochs, None).unwrap()
    }

    #[test]
    fn pipeline_is_deterministic_for_any_worker_count() {
        let ts = recorded_series(2, 400);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let spec = PipelineSpec {
                n_null: 60,
                seed: 77,
                ..PipelineSpec::new(3, 6)
            };
            pool.install(|| pipeline_subsets(&ts, &spec).unwrap())
        };
        let a = run(1);
        let b = run(4);
        assert_eq!(a.rows.len(), b.rows.len());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.vars, rb.vars);
            assert_eq!(ra.atoms, rb.atoms);
            assert_eq!(ra.quantiles, rb.quantiles);
        }
        assert_eq!(render_pipeline_csv(&a), render_pipeline_csv(&b));
    }

    #[test]
    fn oversized_subsets_are_rejected() {
        let ts = recorded_series(1, 300);
        let spec = PipelineSpec {
            n_null: 10,
            ..PipelineSpec::new(9, 2)
        };
        let err = pipeline_subsets(&ts, &spec).unwrap_err();
        assert!(matches!(
            err,
            Error::TooFewVariables {
                requested: 9,
                available: 4
            }
        ));
    }

    #[test]
    fn epoch_subsampling_validates_against_available_epochs() {
        let ts = recorded_series(2, 300);
        let spec = PipelineSpec {
            epochs_per_fit: Some(5),
            n_null: 10,
            ..PipelineSpec::new(3, 2)
        };
        let err = pipeline_subsets(&ts, &spec).unwrap_err();
        assert!(err.is_config());
    }

    #[test]
    fn skipping_the_null_leaves_quantiles_empty() {
        let ts = recorded_series(1, 400);
        let spec = PipelineSpec {
            n_null: 0,
            seed: 5,
            ..PipelineSpec::new(4, 3)
        };
        let out = pipeline_subsets(&ts, &spec).unwrap();
        assert!(out.rows.iter().all(|r| r.quantiles.is_none()));
        assert!(out.rows.iter().all(|r| r.shares.is_some()));
        assert!(out.mean_quantiles.is_none());
        let csv = render_pipeline_csv(&out);
        assert!(csv.lines().nth(1).unwrap().ends_with(",,,,"));
    }

    #[test]
    fn dynamics_free_data_skips_normalisation_under_a_declared_floor() {
        // I.i.d. draws carry no past-to-future information, but a finite
        // fit always recovers a little by chance (about k*k*p/(2T) nats),
        // so detecting "no dynamics" needs a floor above that scale.
        let model = VarModel::var1(DMatrix::zeros(4, 4), CovMatrix::identity(4)).unwrap();
        let epochs: Vec<DMatrix<f64>> = (0..2)
            .map(|e| {
                simulate_var(&model, 1500, 50, &mut substream(555, e))
                    .unwrap()
                    .epochs()[0]
                    .clone()
            })
            .collect();
        let ts = TimeSeries::new(epochs, None).unwrap();

        let spec = PipelineSpec {
            n_null: 50,
            min_tmi: 0.05,
            seed: 9,
            ..PipelineSpec::new(2, 6)
        };
        let out = pipeline_subsets(&ts, &spec).unwrap();
        assert!(out.failures.is_empty());
        assert_eq!(out.zero_tmi, out.rows.len());
        assert!(out.rows.iter().all(|r| r.quantiles.is_none()));
        assert!(out.mean_quantiles.is_none());
        assert!(
            out.mean_tmi < 0.05,
            "white noise fits should sit under the floor, got {}",
            out.mean_tmi
        );
        assert!(out.stats.iter().all(|(name, _)| !name.ends_with("_numit")));

        // The same data normalises everywhere at the degenerate floor.
        let spec = PipelineSpec {
            min_tmi: DEFAULT_MIN_TMI,
            ..spec
        };
        let out = pipeline_subsets(&ts, &spec).unwrap();
        assert_eq!(out.zero_tmi, 0);
        assert!(out.rows.iter().all(|r| r.quantiles.is_some()));
    }

    #[test]
    fn non_finite_floor_is_rejected() {
        let ts = recorded_series(1, 300);
        for bad in [f64::NAN, f64::INFINITY, -1.0] {
            let spec = PipelineSpec {
                min_tmi: bad,
                ..PipelineSpec::new(3, 2)
            };
            assert!(pipeline_subsets(&ts, &spec).is_err());
        }
    }

    #[test]
    fn subset_vars_stay_within_range_and_have_the_right_size() {
        let ts = recorded_series(2, 350);
        let spec = PipelineSpec {
            epochs_per_fit: Some(1),
            n_null: 0,
            seed: 3,
            ..PipelineSpec::new(3, 8)
        };
        let out = pipeline_subsets(&ts, &spec).unwrap();
        for row in &out.rows {
            assert_eq!(row.vars.len(), 3);
            let mut dedup = row.vars.clone();
            dedup.sort_unstable();
            dedup.dedup();
            assert_eq!(dedup.len(), 3);
            assert!(row.vars.iter().all(|&v| v < 4));
        }
        // Different subsets should not all pick the same variables.
        let distinct: std::collections::HashSet<Vec<usize>> =
            out.rows.iter().map(|r| r.vars.clone()).collect();
        assert!(distinct.len() > 1);
    }
}
