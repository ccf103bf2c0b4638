//! JSON config schemas for the CLI. Every config carries a `schema_version`
//! (currently 1) and rejects unknown fields, so typos fail loudly instead of
//! silently running defaults. Config and schema problems map to exit code 2;
//! anything that goes wrong after a config validated is a runtime error.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::cov::{CovMatrix, IndexSet};
use crate::discrete::{DiscreteSystem, Gate, JointPmf, DEFAULT_DISCRETE_RETRY_BUDGET};
use crate::error::{Error, Result};
use crate::gaussian::GaussianPidSystem;
use crate::var::{fit_var, Partition, VarModel};

use super::io::read_time_series;

pub const SCHEMA_VERSION: u64 = 1;

/// Reads a config file, checks `schema_version`, and deserializes it.
/// Returns the typed config together with the raw JSON value so runs can
/// echo the exact input into their metadata sidecar.
pub fn load_config<T: DeserializeOwned>(path: &Path) -> Result<(T, serde_json::Value)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config {} is not valid JSON: {e}", path.display())))?;
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(SCHEMA_VERSION) => {}
        Some(v) => {
            return Err(Error::Config(format!(
                "config {} has schema_version {v}, this build supports {SCHEMA_VERSION}",
                path.display()
            )))
        }
        None => {
            return Err(Error::Config(format!(
                "config {} is missing the required integer field schema_version",
                path.display()
            )))
        }
    }
    let cfg: T = serde_json::from_value(value.clone()).map_err(|e| {
        Error::Config(format!(
            "config {} does not match the schema: {e}",
            path.display()
        ))
    })?;
    Ok((cfg, value))
}

/// Wraps library-level validation errors from config-supplied values into
/// config errors, so a bad matrix in a JSON file exits with code 2 rather
/// than looking like a runtime failure.
fn as_config<T>(res: Result<T>, what: &str) -> Result<T> {
    res.map_err(|e| Error::Config(format!("{what}: {e}")))
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    if rows.is_empty() {
        return Err(Error::Config(format!("{what}: matrix has no rows")));
    }
    let ncols = rows[0].len();
    if ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Config(format!(
            "{what}: rows must be non-empty and equal length"
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gaussian,
    Var,
    Discrete,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Var => "var",
            Family::Discrete => "discrete",
        }
    }
}

fn default_gain() -> f64 {
    1.0
}

fn default_n_samples() -> usize {
    1000
}

fn default_alpha() -> f64 {
    1.0
}

fn default_retry_budget() -> usize {
    DEFAULT_DISCRETE_RETRY_BUDGET
}

/// Linear-Gaussian system: target = sqrt(g) A S + noise, with the first
/// `d_x` source coordinates forming X and the remaining `d_y` forming Y.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBlock {
    pub a: Vec<Vec<f64>>,
    pub sigma_s: Vec<Vec<f64>>,
    pub sigma_eps: Vec<Vec<f64>>,
    #[serde(default = "default_gain")]
    pub g: f64,
    pub d_x: usize,
    pub d_y: usize,
}

impl GaussianBlock {
    pub fn build(&self) -> Result<GaussianPidSystem> {
        let a = matrix_from_rows(&self.a, "gaussian.a")?;
        let sigma_s = as_config(CovMatrix::from_rows(&self.sigma_s), "gaussian.sigma_s")?;
        let sigma_eps = as_config(CovMatrix::from_rows(&self.sigma_eps), "gaussian.sigma_eps")?;
        as_config(
            GaussianPidSystem::new(a, sigma_s, sigma_eps, self.g, self.d_x, self.d_y),
            "gaussian system",
        )
    }
}

/// Explicit VAR(p) model: one n-by-n coefficient matrix per lag plus the
/// residual covariance.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarModelBlock {
    pub coeffs: Vec<Vec<Vec<f64>>>,
    pub resid_cov: Vec<Vec<f64>>,
}

impl VarModelBlock {
    pub fn build(&self) -> Result<VarModel> {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(l, m)| matrix_from_rows(m, &format!("var coeffs lag {}", l + 1)))
            .collect::<Result<Vec<_>>>()?;
        let v = as_config(CovMatrix::from_rows(&self.resid_cov), "var resid_cov")?;
        as_config(VarModel::new(coeffs, v), "var model")
    }
}

/// Fit a VAR(p) from a time-series CSV instead of specifying it directly.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarFitBlock {
    pub csv: PathBuf,
    pub order: usize,
}

/// VAR source: either an explicit model or a fit instruction, plus the
/// variable partition. `x_vars`/`y_vars` index the model's variables and
/// must together cover all of them exactly once.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarBlock {
    #[serde(default)]
    pub model: Option<VarModelBlock>,
    #[serde(default)]
    pub fit: Option<VarFitBlock>,
    pub x_vars: Vec<usize>,
    pub y_vars: Vec<usize>,
}

impl VarBlock {
    /// Builds the model (fitting from data if requested) and the partition.
    /// Fit failures are runtime errors; everything else is config-level.
    pub fn build(&self) -> Result<(VarModel, Partition)> {
        let model = match (&self.model, &self.fit) {
            (Some(m), None) => m.build()?,
            (None, Some(f)) => {
                let ts = read_time_series(&f.csv)?;
                fit_var(&ts, f.order)?
            }
            _ => {
                return Err(Error::Config(
                    "var block needs exactly one of `model` or `fit`".into(),
                ))
            }
        };
        let part = self.partition(model.dim())?;
        Ok((model, part))
    }

    pub fn partition(&self, n_vars: usize) -> Result<Partition> {
        let x = as_config(IndexSet::new(self.x_vars.clone()), "var x_vars")?;
        let y = as_config(IndexSet::new(self.y_vars.clone()), "var y_vars")?;
        as_config(Partition::new(x, y, n_vars), "var partition")
    }
}

/// Two binary sources through a noisy logic gate. `p_eps` outside [0, 1/2]
/// is folded to `1 - p_eps`: flipping the output with probability p or
/// 1 - p yields the same information quantities.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteBlock {
    pub pmf: [f64; 4],
    pub gate: String,
    #[serde(default)]
    pub p_eps: f64,
}

pub fn fold_p_eps(p: f64) -> Result<f64> {
    if !p.is_finite() || !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("p_eps must lie in [0, 1], got {p}")));
    }
    Ok(p.min(1.0 - p))
}

impl DiscreteBlock {
    pub fn build(&self) -> Result<DiscreteSystem> {
        let pmf = as_config(JointPmf::new(self.pmf), "discrete pmf")?;
        let gate = as_config(Gate::from_bitstring(&self.gate), "discrete gate")?;
        let p = fold_p_eps(self.p_eps)?;
        as_config(DiscreteSystem::new(pmf, gate, p), "discrete system")
    }
}

/// A concrete system of one family, shared by `pid`, `normalize`,
/// `var-pid`, and `discrete`. The sampling knobs only matter for commands
/// that draw a null ensemble; `pid` and `var-pid` ignore them.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemCfg {
    pub schema_version: u64,
    pub family: Family,
    #[serde(default)]
    pub gaussian: Option<GaussianBlock>,
    #[serde(default)]
    pub var: Option<VarBlock>,
    #[serde(default)]
    pub discrete: Option<DiscreteBlock>,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_retry_budget")]
    pub retry_budget: usize,
}

impl SystemCfg {
    /// Checks that exactly the block for the declared family is present.
    pub fn check_blocks(&self) -> Result<()> {
        let present = [
            ("gaussian", self.gaussian.is_some()),
            ("var", self.var.is_some()),
            ("discrete", self.discrete.is_some()),
        ];
        for (name, here) in present {
            let wanted = name == self.family.name();
            if wanted && !here {
                return Err(Error::Config(format!(
                    "family \"{name}\" requires a `{name}` block"
                )));
            }
            if !wanted && here {
                return Err(Error::Config(format!(
                    "`{name}` block conflicts with family \"{}\"",
                    self.family.name()
                )));
            }
        }
        Ok(())
    }

    pub fn gaussian(&self) -> Result<&GaussianBlock> {
        self.gaussian
            .as_ref()
            .ok_or_else(|| Error::Config("missing `gaussian` block".into()))
    }

    pub fn var(&self) -> Result<&VarBlock> {
        self.var
            .as_ref()
            .ok_or_else(|| Error::Config("missing `var` block".into()))
    }

    pub fn discrete(&self) -> Result<&DiscreteBlock> {
        self.discrete
            .as_ref()
            .ok_or_else(|| Error::Config("missing `discrete` block".into()))
    }
}

/// Sweep one noise parameter over a fixed base system: the gain `g` for
/// Gaussian systems, the flip probability `p_eps` for discrete ones. The
/// base block's own `g`/`p_eps` value is ignored; the grid supplies it.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepNoiseCfg {
    pub schema_version: u64,
    pub family: Family,
    #[serde(default)]
    pub gaussian: Option<GaussianBlock>,
    #[serde(default)]
    pub discrete: Option<DiscreteBlock>,
    pub grid: Vec<f64>,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_retry_budget")]
    pub retry_budget: usize,
}

impl SweepNoiseCfg {
    pub fn check(&self) -> Result<()> {
        match self.family {
            Family::Gaussian => {
                if self.gaussian.is_none() || self.discrete.is_some() {
                    return Err(Error::Config(
                        "gaussian noise sweep needs a `gaussian` block and no `discrete` block"
                            .into(),
                    ));
                }
            }
            Family::Discrete => {
                if self.discrete.is_none() || self.gaussian.is_some() {
                    return Err(Error::Config(
                        "discrete noise sweep needs a `discrete` block and no `gaussian` block"
                            .into(),
                    ));
                }
            }
            Family::Var => {
                return Err(Error::Config(
                    "noise sweeps support the gaussian and discrete families only".into(),
                ))
            }
        }
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        Ok(())
    }
}

fn default_tmi_n_samples() -> usize {
    10_000
}

fn default_hist_bins() -> usize {
    50
}

/// Characterize the null distribution itself: draw ensembles at each target
/// total mutual information and record atom means and histograms.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepTmiCfg {
    pub schema_version: u64,
    pub tmi_grid: Vec<f64>,
    pub d_x: usize,
    pub d_y: usize,
    pub d_t: usize,
    #[serde(default = "default_tmi_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_hist_bins")]
    pub hist_bins: usize,
}

fn default_burn_in() -> usize {
    1000
}

fn default_epochs() -> usize {
    1
}

/// Simulate a VAR model to a time-series CSV, one independent epoch per
/// seed substream.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarSimulateCfg {
    pub schema_version: u64,
    pub model: VarModelBlock,
    pub steps: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub sample_rate: Option<f64>,
}

fn default_order() -> usize {
    1
}

fn default_n_null() -> usize {
    1000
}

fn default_min_tmi() -> f64 {
    crate::harness::pipeline::DEFAULT_MIN_TMI
}

/// End-to-end subset analysis over a recorded time series: repeatedly pick
/// a random variable subset, split it into two halves, fit a VAR, and
/// normalize its atoms against the matched null.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineCfg {
    pub schema_version: u64,
    pub csv: PathBuf,
    pub subset_size: usize,
    pub n_subsets: usize,
    #[serde(default = "default_order")]
    pub order: usize,
    #[serde(default)]
    pub epochs_per_fit: Option<usize>,
    #[serde(default = "default_n_null")]
    pub n_null: usize,
    /// Fitted-information floor: subsets at or below it are reported as
    /// zero-TMI instead of being normalized.
    #[serde(default = "default_min_tmi")]
    pub min_tmi: f64,
}

/// Paired atom measures for the two normalisations, either inline or as
/// columns `a_nmi,b_nmi,a_numit,b_numit` in a CSV file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegressCfg {
    pub schema_version: u64,
    #[serde(default)]
    pub a_nmi: Option<Vec<f64>>,
    #[serde(default)]
    pub b_nmi: Option<Vec<f64>>,
    #[serde(default)]
    pub a_numit: Option<Vec<f64>>,
    #[serde(default)]
    pub b_numit: Option<Vec<f64>>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug)]
pub struct RegressData {
    pub a_nmi: Vec<f64>,
    pub b_nmi: Vec<f64>,
    pub a_numit: Vec<f64>,
    pub b_numit: Vec<f64>,
}

impl RegressCfg {
    pub fn resolve(&self) -> Result<RegressData> {
        let inline = [&self.a_nmi, &self.b_nmi, &self.a_numit, &self.b_numit];
        let n_inline = inline.iter().filter(|v| v.is_some()).count();
        match (n_inline, &self.csv) {
            (4, None) => Ok(RegressData {
                a_nmi: self.a_nmi.clone().unwrap(),
                b_nmi: self.b_nmi.clone().unwrap(),
                a_numit: self.a_numit.clone().unwrap(),
                b_numit: self.b_numit.clone().unwrap(),
            }),
            (0, Some(path)) => read_regress_csv(path),
            _ => Err(Error::Config(
                "regress config needs either all four inline arrays \
                 (a_nmi, b_nmi, a_numit, b_numit) or a `csv` path, not a mix"
                    .into(),
            )),
        }
    }
}

fn read_regress_csv(path: &Path) -> Result<RegressData> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("bad CSV header in {}: {e}", path.display())))?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("{} is missing column {name}", path.display())))
    };
    let cols = [
        col("a_nmi")?,
        col("b_nmi")?,
        col("a_numit")?,
        col("b_numit")?,
    ];
    let mut out: [Vec<f64>; 4] = Default::default();
    for (i, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::Data(format!("{} row {}: {e}", path.display(), i + 2)))?;
        for (slot, &c) in out.iter_mut().zip(&cols) {
            let raw = record.get(c).ok_or_else(|| {
                Error::Data(format!("{} row {} is too short", path.display(), i + 2))
            })?;
            let v: f64 = raw.trim().parse().map_err(|_| {
                Error::Data(format!(
                    "{} row {}: cannot parse {raw:?} as a number",
                    path.display(),
                    i + 2
                ))
            })?;
            slot.push(v);
        }
    }
    let [a_nmi, b_nmi, a_numit, b_numit] = out;
    Ok(RegressData {
        a_nmi,
        b_nmi,
        a_numit,
        b_numit,
    })
}
