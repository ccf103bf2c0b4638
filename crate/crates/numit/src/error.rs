use thiserror::Error;

/// Crate-wide error type. Variants map one-to-one onto the failure modes of
/// the numerical contracts; none of them wrap panics.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix entries must be finite")]
    NonFinite,

    #[error("matrix is not symmetric: relative asymmetry {max_dev:.3e} exceeds 1e-12")]
    NotSymmetric { max_dev: f64 },

    #[error("Cholesky factorisation failed after jitter retry; matrix is not positive definite")]
    CholeskyFailure,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index set is empty")]
    EmptyIndexSet,

    #[error("index sets overlap")]
    OverlappingIndexSets,

    #[error("index {index} out of range for joint dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("mutual information {value:.3e} is below the -1e-9 rounding floor")]
    NegativeMi { value: f64 },

    #[error(
        "total MI {tmi:.6e} is below the larger marginal MI {max_marginal:.6e}; \
         upstream values are inconsistent"
    )]
    InconsistentInformation { tmi: f64, max_marginal: f64 },

    #[error("total mutual information is below 1e-12; normalisation is undefined")]
    ZeroTmi,

    #[error("source-to-target channel a*sigma_s*a' is zero; no gain reaches a positive TMI")]
    ZeroChannel,

    #[error("root bracketing failed: {0}")]
    BracketFailure(String),

    #[error("null sampling exhausted its retry budget ({budget}) at sample {sample}")]
    SamplingExhausted { sample: usize, budget: usize },

    #[error("spectral radius {rho:.6} violates the stability bound (must be < 1 - 1e-9)")]
    UnstableSystem { rho: f64 },

    #[error("lagged regressor matrix is rank deficient; cannot fit")]
    RankDeficientRegressors,

    #[error("epoch {epoch} has {len} timepoints; order-{order} fitting needs at least {min}")]
    TooShortEpoch {
        epoch: usize,
        len: usize,
        order: usize,
        min: usize,
    },

    #[error("target TMI {target:.6e} exceeds the maximum {max:.6e} reachable for this draw")]
    TargetUnreachable { target: f64, max: f64 },

    #[error("coefficient matrix has zero spectral radius; cannot rescale to a target radius")]
    ZeroDynamics,

    #[error("null ensemble is empty")]
    EmptyEnsemble,

    #[error("time series has {available} variables but the subset needs {requested}")]
    TooFewVariables { requested: usize, available: usize },

    #[error("regression design is degenerate: {0}")]
    DegenerateDesign(String),

    #[error("paired series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },

    #[error("invalid {what}: {reason}")]
    InvalidParameter { what: &'static str, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            what,
            reason: reason.into(),
        }
    }

    /// Errors that indicate a bad configuration or unusable input file rather
    /// than a runtime/numerical failure. The CLI maps these to exit code 2.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
