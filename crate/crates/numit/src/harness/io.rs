//! On-disk formats: sweep CSVs, time-series CSVs, and the JSON metadata
//! sidecar written next to every `--out` file. All floats are serialized
//! with nine significant digits in scientific notation so identical runs
//! produce byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::null::NormalizedAtoms;
use crate::pid::{AtomShares, PidAtoms};
use crate::var::TimeSeries;

pub fn fmt_float(v: f64) -> String {
    format!("{v:.8e}")
}

/// One row of a parameter sweep. `shares` or `quantiles` may be absent
/// (for example at zero total mutual information, when fractions of the
/// total are undefined); absent values serialize as empty CSV fields.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param: f64,
    pub atoms: PidAtoms,
    pub shares: Option<AtomShares>,
    pub quantiles: Option<NormalizedAtoms>,
}

pub const SWEEP_HEADER: &str = "param,tmi,red,un_x,un_y,syn,\
red_nmi,un_x_nmi,un_y_nmi,syn_nmi,\
red_numit,un_x_numit,un_y_numit,syn_numit";

const SUM_TOL: f64 = 1e-9;

/// Re-checks the atom identities before anything reaches disk. These can
/// only fail on an internal bug, but a sweep file feeds downstream analyses
/// and silently inconsistent rows would be worse than an aborted run.
fn check_row(row: &SweepRow) -> Result<()> {
    let sum: f64 = row.atoms.as_array().iter().sum();
    if (sum - row.atoms.tmi).abs() > SUM_TOL * row.atoms.tmi.abs().max(1.0) {
        return Err(Error::Data(format!(
            "sweep row param={}: atoms sum to {sum}, tmi is {}",
            row.param, row.atoms.tmi
        )));
    }
    if let Some(s) = &row.shares {
        let total: f64 = s.as_array().iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Data(format!(
                "sweep row param={}: shares sum to {total}",
                row.param
            )));
        }
    }
    if let Some(q) = &row.quantiles {
        if q.as_array().iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::Data(format!(
                "sweep row param={}: quantile outside [0, 1]",
                row.param
            )));
        }
    }
    Ok(())
}

pub fn render_sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for row in rows {
        check_row(row)?;
        write!(out, "{},{}", fmt_float(row.param), fmt_float(row.atoms.tmi)).unwrap();
        for v in row.atoms.as_array() {
            write!(out, ",{}", fmt_float(v)).unwrap();
        }
        match &row.shares {
            Some(s) => {
                for v in s.as_array() {
                    write!(out, ",{}", fmt_float(v)).unwrap();
                }
            }
            None => out.push_str(",,,,"),
        }
        match &row.quantiles {
            Some(q) => {
                for v in q.as_array() {
                    write!(out, ",{}", fmt_float(v)).unwrap();
                }
            }
            None => out.push_str(",,,,"),
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let text = render_sweep_csv(rows)?;
    fs::write(path, text)?;
    Ok(())
}

/// Long-format time-series CSV: `epoch,t,v0,v1,...` with `t` counting
/// samples within each epoch.
pub fn write_time_series(path: &Path, ts: &TimeSeries) -> Result<()> {
    let mut out = String::from("epoch,t");
    for v in 0..ts.n_vars() {
        write!(out, ",v{v}").unwrap();
    }
    out.push('\n');
    for (e, epoch) in ts.epochs().iter().enumerate() {
        for t in 0..epoch.nrows() {
            write!(out, "{e},{t}").unwrap();
            for v in 0..ts.n_vars() {
                write!(out, ",{}", fmt_float(epoch[(t, v)])).unwrap();
            }
            out.push('\n');
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_time_series(path: &Path) -> Result<TimeSeries> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("bad CSV header in {}: {e}", path.display())))?;
    if headers.len() < 3 || headers.get(0) != Some("epoch") || headers.get(1) != Some("t") {
        return Err(Error::Data(format!(
            "{} must start with columns epoch,t followed by at least one variable",
            path.display()
        )));
    }
    let n_vars = headers.len() - 2;

    let mut epochs: Vec<Vec<f64>> = Vec::new();
    let mut epoch_ids: Vec<u64> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record =
            record.map_err(|e| Error::Data(format!("{} line {line}: {e}", path.display())))?;
        if record.len() != n_vars + 2 {
            return Err(Error::Data(format!(
                "{} line {line}: expected {} fields, got {}",
                path.display(),
                n_vars + 2,
                record.len()
            )));
        }
        let parse = |field: usize| -> Result<f64> {
            record[field].trim().parse::<f64>().map_err(|_| {
                Error::Data(format!(
                    "{} line {line}: cannot parse {:?} as a number",
                    path.display(),
                    &record[field]
                ))
            })
        };
        let id = record[0].trim().parse::<u64>().map_err(|_| {
            Error::Data(format!(
                "{} line {line}: bad epoch id {:?}",
                path.display(),
                &record[0]
            ))
        })?;
        if epoch_ids.last() != Some(&id) {
            if epoch_ids.contains(&id) {
                return Err(Error::Data(format!(
                    "{} line {line}: epoch {id} rows are not contiguous",
                    path.display()
                )));
            }
            epoch_ids.push(id);
            epochs.push(Vec::new());
        }
        let values = epochs.last_mut().unwrap();
        for v in 0..n_vars {
            values.push(parse(v + 2)?);
        }
    }
    if epochs.is_empty() {
        return Err(Error::Data(format!("{} has no data rows", path.display())));
    }
    let matrices = epochs
        .into_iter()
        .map(|flat| {
            let rows = flat.len() / n_vars;
            DMatrix::from_fn(rows, n_vars, |r, c| flat[r * n_vars + c])
        })
        .collect();
    TimeSeries::new(matrices, None)
}

/// Run metadata written as `<out>.run.json` beside every `--out` file.
/// Contains everything needed to reproduce the run; excluded from
/// byte-level determinism comparisons because of `wall_time_s`.
#[derive(Debug, Serialize)]
pub struct RunMeta<'a> {
    pub schema_version: u64,
    pub command: &'a str,
    pub seed: u64,
    pub workers: usize,
    pub config: &'a serde_json::Value,
    pub n_failed: serde_json::Value,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".run.json");
    PathBuf::from(name)
}

pub fn write_sidecar(out: &Path, meta: &RunMeta) -> Result<PathBuf> {
    let path = sidecar_path(out);
    let mut text = serde_json::to_string_pretty(meta)
        .map_err(|e| Error::Data(format!("cannot serialize run metadata: {e}")))?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}
