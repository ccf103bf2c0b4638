//! Argument parsing and command execution. Exit codes: 0 on success, 1 on
//! runtime failures (data, numerics, sampling), 2 on config and usage
//! errors. The master seed comes from `--seed`, then the `NUMIT_SEED`
//! environment variable, then 0.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::discrete::{build_discrete_null_ensemble, pid_discrete};
use crate::error::{Error, Result};
use crate::gaussian::GaussianPidSystem;
use crate::null::{build_null_ensemble, normalized_against, NormalizedAtoms, NullEnsemble};
use crate::pid::{nmi_normalize, pid_gaussian, AtomShares, PidAtoms};
use crate::rng::substream;
use crate::var::{build_var_null_ensemble, simulate_var, var_pid, Partition, TimeSeries, VarModel};

use super::config::{
    load_config, Family, PipelineCfg, RegressCfg, SweepNoiseCfg, SweepTmiCfg, SystemCfg,
    VarSimulateCfg, SCHEMA_VERSION,
};
use super::io::{write_sidecar, write_sweep_csv, write_time_series, RunMeta, SweepRow};
use super::pipeline::{pipeline_subsets, render_pipeline_csv, PipelineSpec, DEFAULT_MIN_TMI};
use super::regress::interaction_regression;
use super::sweep::{discrete_noise_sweep, gaussian_noise_sweep, tmi_point_to_row, tmi_sweep};

#[derive(Parser)]
#[command(
    name = "numit",
    version,
    about = "Partial information decomposition with null-model normalisation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config describing the run
    #[arg(long)]
    config: PathBuf,
    /// Output file; JSON results print to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master RNG seed (default: NUMIT_SEED env var, then 0)
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decompose one system into its information atoms
    Pid(Common),
    /// Atoms plus their quantiles in the matched null ensemble
    Normalize(Common),
    /// Sweep a system's noise parameter, normalising at every point
    SweepNoise(Common),
    /// Null atom distributions across total-information targets
    SweepTmi(Common),
    /// Decompose the past-to-future information of a VAR model
    VarPid(Common),
    /// Simulate a VAR model to a time-series CSV
    VarSimulate(Common),
    /// Analyse one noisy-gate system end to end
    Discrete(Common),
    /// Random-subset VAR analysis over a recorded time series
    Pipeline(Common),
    /// Test whether two normalisations disagree, by interaction regression
    Regress(Common),
}

impl Cmd {
    fn common(&self) -> &Common {
        match self {
            Cmd::Pid(c)
            | Cmd::Normalize(c)
            | Cmd::SweepNoise(c)
            | Cmd::SweepTmi(c)
            | Cmd::VarPid(c)
            | Cmd::VarSimulate(c)
            | Cmd::Discrete(c)
            | Cmd::Pipeline(c)
            | Cmd::Regress(c) => c,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Cmd::Pid(_) => "pid",
            Cmd::Normalize(_) => "normalize",
            Cmd::SweepNoise(_) => "sweep-noise",
            Cmd::SweepTmi(_) => "sweep-tmi",
            Cmd::VarPid(_) => "var-pid",
            Cmd::VarSimulate(_) => "var-simulate",
            Cmd::Discrete(_) => "discrete",
            Cmd::Pipeline(_) => "pipeline",
            Cmd::Regress(_) => "regress",
        }
    }
}

/// Parses `argv` and runs the requested command, returning the process
/// exit code instead of exiting, so tests can call it in-process.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // clap prints help/version to stdout with code 0 and usage
            // errors to stderr with code 2.
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("NUMIT_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map_err(|_| Error::Config(format!("NUMIT_SEED={text:?} is not an unsigned integer"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(std::env::VarError::NotUnicode(_)) => {
            Err(Error::Config("NUMIT_SEED is not valid unicode".into()))
        }
    }
}

fn resolve_workers(flag: Option<usize>) -> Result<usize> {
    match flag {
        Some(0) => Err(Error::Config("--workers must be at least 1".into())),
        Some(n) => Ok(n),
        None => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
    }
}

fn run(cli: Cli) -> Result<()> {
    let common = cli.cmd.common().clone();
    let seed = resolve_seed(common.seed)?;
    let workers = resolve_workers(common.workers)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Data(format!("cannot build worker pool: {e}")))?;
    let ctx = Ctx {
        command: cli.cmd.name(),
        out: common.out,
        seed,
        workers,
        start: Instant::now(),
    };
    pool.install(|| match &cli.cmd {
        Cmd::Pid(c) => cmd_pid(&ctx, c),
        Cmd::Normalize(c) => cmd_normalize(&ctx, c),
        Cmd::SweepNoise(c) => cmd_sweep_noise(&ctx, c),
        Cmd::SweepTmi(c) => cmd_sweep_tmi(&ctx, c),
        Cmd::VarPid(c) => cmd_var_pid(&ctx, c),
        Cmd::VarSimulate(c) => cmd_var_simulate(&ctx, c),
        Cmd::Discrete(c) => cmd_discrete(&ctx, c),
        Cmd::Pipeline(c) => cmd_pipeline(&ctx, c),
        Cmd::Regress(c) => cmd_regress(&ctx, c),
    })
}

struct Ctx {
    command: &'static str,
    out: Option<PathBuf>,
    seed: u64,
    workers: usize,
    start: Instant,
}

impl Ctx {
    fn meta<'a>(&self, config: &'a Value, n_failed: Value, outputs: Vec<String>) -> RunMeta<'a> {
        RunMeta {
            schema_version: SCHEMA_VERSION,
            command: self.command,
            seed: self.seed,
            workers: self.workers,
            config,
            n_failed,
            wall_time_s: self.start.elapsed().as_secs_f64(),
            outputs,
            summary: None,
        }
    }

    /// Writes a JSON result to `--out` (with sidecar) or stdout.
    fn emit_json(&self, config: &Value, n_failed: Value, result: &Value) -> Result<()> {
        let mut text = serde_json::to_string_pretty(result)
            .map_err(|e| Error::Data(format!("cannot serialize result: {e}")))?;
        text.push('\n');
        match &self.out {
            Some(out) => {
                fs::write(out, &text)?;
                let meta = self.meta(config, n_failed, vec![out.display().to_string()]);
                write_sidecar(out, &meta)?;
            }
            None => print!("{text}"),
        }
        Ok(())
    }

    fn require_out(&self) -> Result<&PathBuf> {
        self.out.as_ref().ok_or_else(|| {
            Error::Config(format!(
                "the {} command writes files and requires --out",
                self.command
            ))
        })
    }
}

fn shares_or_none(atoms: &PidAtoms) -> Result<Option<AtomShares>> {
    match nmi_normalize(atoms) {
        Ok(s) => Ok(Some(s)),
        Err(Error::ZeroTmi) => Ok(None),
        Err(e) => Err(e),
    }
}

/// The observed system of whichever family the config declares, reduced to
/// what the generic commands need.
enum BuiltSystem {
    Gaussian(GaussianPidSystem),
    Var(VarModel, Partition),
    Discrete(crate::discrete::DiscreteSystem),
}

impl BuiltSystem {
    fn from_cfg(cfg: &SystemCfg) -> Result<Self> {
        cfg.check_blocks()?;
        Ok(match cfg.family {
            Family::Gaussian => BuiltSystem::Gaussian(cfg.gaussian()?.build()?),
            Family::Var => {
                let (model, part) = cfg.var()?.build()?;
                BuiltSystem::Var(model, part)
            }
            Family::Discrete => BuiltSystem::Discrete(cfg.discrete()?.build()?),
        })
    }

    fn atoms(&self) -> Result<PidAtoms> {
        match self {
            BuiltSystem::Gaussian(sys) => pid_gaussian(sys),
            BuiltSystem::Var(model, part) => var_pid(model, part),
            BuiltSystem::Discrete(sys) => pid_discrete(sys),
        }
    }

    fn null_ensemble(&self, target: f64, cfg: &SystemCfg, seed: u64) -> Result<NullEnsemble> {
        match self {
            BuiltSystem::Gaussian(sys) => {
                build_null_ensemble(target, sys.d_x(), sys.d_y(), sys.d_t(), cfg.n_samples, seed)
            }
            BuiltSystem::Var(model, part) => {
                build_var_null_ensemble(target, model.dim(), part, cfg.n_samples, seed)
            }
            BuiltSystem::Discrete(_) => build_discrete_null_ensemble(
                target,
                cfg.n_samples,
                cfg.alpha,
                seed,
                cfg.retry_budget,
            ),
        }
    }
}

fn cmd_pid(ctx: &Ctx, c: &Common) -> Result<()> {
    let (cfg, raw): (SystemCfg, Value) = load_config(&c.config)?;
    let system = BuiltSystem::from_cfg(&cfg)?;
    let atoms = system.atoms()?;
    let result = json!({
        "family": cfg.family.name(),
        "atoms": atoms,
        "shares": shares_or_none(&atoms)?,
    });
    ctx.emit_json(&raw, json!({}), &result)
}

fn cmd_normalize(ctx: &Ctx, c: &Common) -> Result<()> {
    let (cfg, raw): (SystemCfg, Value) = load_config(&c.config)?;
    let system = BuiltSystem::from_cfg(&cfg)?;
    let atoms = system.atoms()?;
    if atoms.tmi < DEFAULT_MIN_TMI {
        return Err(Error::ZeroTmi);
    }
    let ens = system.null_ensemble(atoms.tmi, &cfg, ctx.seed)?;
    let normalized = normalized_against(&atoms, &ens)?;
    let result = json!({
        "family": cfg.family.name(),
        "atoms": atoms,
        "shares": shares_or_none(&atoms)?,
        "normalized": normalized,
    });
    ctx.emit_json(
        &raw,
        json!({ "resampled_null_draws": ens.n_failed }),
        &result,
    )
}

fn cmd_var_pid(ctx: &Ctx, c: &Common) -> Result<()> {
    let (cfg, raw): (SystemCfg, Value) = load_config(&c.config)?;
    if cfg.family != Family::Var {
        return Err(Error::Config(
            "the var-pid command requires family \"var\"".into(),
        ));
    }
    cfg.check_blocks()?;
    let (model, part) = cfg.var()?.build()?;
    let atoms = var_pid(&model, &part)?;
    let result = json!({
        "family": "var",
        "n_vars": model.dim(),
        "order": model.order(),
        "stability_radius": model.stability_radius(),
        "atoms": atoms,
        "shares": shares_or_none(&atoms)?,
    });
    ctx.emit_json(&raw, json!({}), &result)
}

fn cmd_discrete(ctx: &Ctx, c: &Common) -> Result<()> {
    let (cfg, raw): (SystemCfg, Value) = load_config(&c.config)?;
    if cfg.family != Family::Discrete {
        return Err(Error::Config(
            "the discrete command requires family \"discrete\"".into(),
        ));
    }
    cfg.check_blocks()?;
    let sys = cfg.discrete()?.build()?;
    let atoms = pid_discrete(&sys)?;
    let (normalized, n_failed): (Option<NormalizedAtoms>, usize) = if atoms.tmi < DEFAULT_MIN_TMI {
        (None, 0)
    } else {
        let ens = build_discrete_null_ensemble(
            atoms.tmi,
            cfg.n_samples,
            cfg.alpha,
            ctx.seed,
            cfg.retry_budget,
        )?;
        (Some(normalized_against(&atoms, &ens)?), ens.n_failed)
    };
    let result = json!({
        "family": "discrete",
        "gate": sys.gate().bitstring(),
        "p_eps": sys.p_eps(),
        "atoms": atoms,
        "shares": shares_or_none(&atoms)?,
        "normalized": normalized,
    });
    ctx.emit_json(&raw, json!({ "resampled_null_draws": n_failed }), &result)
}

fn cmd_sweep_noise(ctx: &Ctx, c: &Common) -> Result<()> {
    let (cfg, raw): (SweepNoiseCfg, Value) = load_config(&c.config)?;
    cfg.check()?;
    let (rows, n_failed): (Vec<SweepRow>, usize) = match cfg.family {
        Family::Gaussian => {
            let base = cfg.gaussian.as_ref().unwrap().build()?;
            gaussian_noise_sweep(&base, &cfg.grid, cfg.n_samples, ctx.seed)?
        }
        Family::Discrete => {
            let base = cfg.discrete.as_ref().unwrap().build()?;
            discrete_noise_sweep(
                &base,
                &cfg.grid,
                cfg.n_samples,
                cfg.alpha,
                cfg.retry_budget,
                ctx.seed,
            )?
        }
        Family::Var => unreachable!("rejected by SweepNoiseCfg::check"),
    };
    let out = ctx.require_out()?;
    write_sweep_csv(out, &rows)?;
    let meta = ctx.meta(
        &raw,
        json!({ "resampled_null_draws": n_failed }),
        vec![out.display().to_string()],
    );
    write_sidecar(out, &meta)?;
    Ok(())
}

fn cmd_sweep_tmi(ctx: &Ctx, c: &Common) -> Result<()> {
    let (cfg, raw): (SweepTmiCfg, Value) = load_config(&c.config)?;
    let (points, n_failed) = tmi_sweep(
        &cfg.tmi_grid,
        cfg.d_x,
        cfg.d_y,
        cfg.d_t,
        cfg.n_samples,
        cfg.hist_bins,
        ctx.seed,
    )?;
    let out = ctx.require_out()?;
    let rows: Vec<SweepRow> = points.iter().map(tmi_point_to_row).collect();
    write_sweep_csv(out, &rows)?;

    let hist: Vec<Value> = points
        .iter()
        .map(|p| json!({ "target_tmi": p.target_tmi, "histograms": p.histograms }))
        .collect();
    let hist_path = {
        let mut name = out.as_os_str().to_os_string();
        name.push(".hist.json");
        PathBuf::from(name)
    };
    let mut text = serde_json::to_string_pretty(&hist)
        .map_err(|e| Error::Data(format!("cannot serialize histograms: {e}")))?;
    text.push('\n');
    fs::write(&hist_path, text)?;

    let meta = ctx.meta(
        &raw,
        json!({ "resampled_null_draws": n_failed }),
        vec![out.display().to_string(), hist_path.display().to_string()],
    );
    write_sidecar(out, &meta)?;
    Ok(())
}

fn cmd_var_simulate(ctx: &Ctx, c: &Common) -> Result<()> {
    let (cfg, raw): (VarSimulateCfg, Value) = load_config(&c.config)?;
    if cfg.epochs == 0 {
        return Err(Error::Config("epochs must be at least 1".into()));
    }
    let model = cfg.model.build()?;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for e in 0..cfg.epochs {
        let one = simulate_var(
            &model,
            cfg.steps,
            cfg.burn_in,
            &mut substream(ctx.seed, e as u64),
        )?;
        epochs.push(one.epochs()[0].clone());
    }
    let ts = TimeSeries::new(epochs, cfg.sample_rate)?;
    let out = ctx.require_out()?;
    write_time_series(out, &ts)?;
    let meta = ctx.meta(&raw, json!({}), vec![out.display().to_string()]);
    write_sidecar(out, &meta)?;
    Ok(())
}

fn cmd_pipeline(ctx: &Ctx, c: &Common) -> Result<()> {
    let (cfg, raw): (PipelineCfg, Value) = load_config(&c.config)?;
    let ts = super::io::read_time_series(&cfg.csv)?;
    let output = pipeline_subsets(
        &ts,
        cfg.subset_size,
        cfg.n_subsets,
        cfg.order,
        cfg.epochs_per_fit,
        cfg.n_null,
        cfg.min_tmi,
        ctx.seed,
    )?;
    for (i, msg) in &output.failures {
        eprintln!("subset {i} skipped: {msg}");
    }
    let out = ctx.require_out()?;
    fs::write(out, render_pipeline_csv(&output))?;
    let stats: serde_json::Map<String, Value> = output
        .stats
        .iter()
        .map(|(name, s)| (name.clone(), serde_json::to_value(s).unwrap()))
        .collect();
    let mut meta = ctx.meta(
        &raw,
        json!({
            "failed_fits": output.failures.len(),
            "zero_tmi": output.zero_tmi,
            "resampled_null_draws": output.null_redraws,
        }),
        vec![out.display().to_string()],
    );
    meta.summary = Some(Value::Object(stats));
    write_sidecar(out, &meta)?;
    Ok(())
}

fn cmd_regress(ctx: &Ctx, c: &Common) -> Result<()> {
    let (cfg, raw): (RegressCfg, Value) = load_config(&c.config)?;
    let data = cfg.resolve()?;
    let fit = interaction_regression(&data.a_nmi, &data.b_nmi, &data.a_numit, &data.b_numit)?;
    let result = serde_json::to_value(&fit)
        .map_err(|e| Error::Data(format!("cannot serialize fit: {e}")))?;
    ctx.emit_json(&raw, json!({}), &result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_resolution_prefers_the_flag() {
        // Process env is shared across threads; only exercise the pure
        // flag path here, the env fallback is covered end to end by the
        // binary tests.
        assert_eq!(resolve_seed(Some(17)).unwrap(), 17);
    }

    #[test]
    fn zero_workers_is_a_config_error() {
        assert!(resolve_workers(Some(0)).unwrap_err().is_config());
        assert!(resolve_workers(Some(3)).unwrap() == 3);
        assert!(resolve_workers(None).unwrap() >= 1);
    }

    #[test]
    fn help_and_bad_usage_exit_codes() {
        assert_eq!(dispatch(["numit", "--help"]), 0);
        assert_eq!(dispatch(["numit", "no-such-command"]), 2);
        assert_eq!(dispatch(["numit"]), 2);
    }

    #[test]
    fn missing_config_file_is_a_config_error() {
        let code = dispatch(["numit", "pid", "--config", "/nonexistent/cfg.json"]);
        assert_eq!(code, 2);
    }
}
