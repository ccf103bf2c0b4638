//! Partial information decomposition with null-model normalisation.

pub mod cov;
pub mod discrete;
pub mod error;
pub mod gaussian;
pub mod harness;
pub mod null;
pub mod pid;
pub mod rng;
pub mod root;
pub mod sampling;
pub mod stats;
pub mod var;

pub use cov::{gaussian_mi, spd_logdet, CovMatrix, IndexSet};
pub use discrete::{
    build_discrete_null_ensemble, discrete_entropy, discrete_tmi, marginal_mi_discrete,
    numit_normalize_discrete, pid_discrete, sample_source_pmf, solve_p_eps, target_distribution,
    DiscreteSystem, Gate, JointPmf, SourceVar, DEFAULT_DISCRETE_RETRY_BUDGET,
};
pub use error::{Error, Result};
pub use gaussian::{joint_covariance, system_tmi, target_covariance, GaussianPidSystem};
pub use harness::pipeline::{pipeline_subsets, PipelineOutput, SubsetRow, DEFAULT_MIN_TMI};
pub use harness::regress::{interaction_regression, summary_stats, RegressionFit, SummaryStats};
pub use harness::sweep::{discrete_noise_sweep, gaussian_noise_sweep, tmi_sweep};
pub use null::{
    build_null_ensemble, noise_root_fn, normalized_against, numit_normalize, quantile_of,
    sample_null_params, solve_g, EnsembleMeta, NormalizedAtoms, NullEnsemble, NullFamily,
};
pub use pid::{mmi_pid, nmi_normalize, pid_gaussian, AtomShares, PidAtoms};
pub use var::{
    autocov_sequence, build_var_null_ensemble, companion_matrix, fit_var, numit_normalize_var,
    sample_null_var, simulate_var, solve_g_var, solve_lyapunov, spectral_radius, var_pid, var_tmi,
    Partition, TimeSeries, VarModel,
};
