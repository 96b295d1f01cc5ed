//! Benchmark harness for the tt-heat solver.
//!
//! Subcommands mirror the three study families: `consistency` (Laplacian
//! residuals under refinement), `converge` (time-stepped manufactured
//! solutions) and `eigen` (power-method spectra of the heat operator with
//! and without the preconditioner).
//!
//! Exit codes: 0 success, 2 divergence, 3 PCG non-convergence in any level,
//! 64 usage error.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use tt_heat::report::{
    emit_eigen_report, emit_report, render_eigen_report, render_run_report, ReportFormat,
};
use tt_heat::study::{consistency_study, convergence_study, eigen_study, StudyConfig};
use tt_heat::{Backend, BcTimeConvention, CaseId, Error, InterpWeighting, Scenario, Scheme};

#[derive(Parser)]
#[command(name = "tt-heat", version, about = "Heat-equation benchmark harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Laplacian consistency residuals over a list of grid sizes.
    Consistency(ConsistencyArgs),
    /// Manufactured-solution convergence under grid/time refinement.
    Converge(ConvergeArgs),
    /// Power-method eigenvalue table of the (preconditioned) heat operator.
    Eigen(EigenArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Grid family: regular | variable | remapped
    #[arg(long)]
    scenario: Option<String>,
    /// Output path; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    /// Table format: csv | markdown
    #[arg(long)]
    format: Option<String>,
    /// key=value defaults file; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ghost cell frames per side
    #[arg(long = "n-ghost")]
    n_ghost: Option<usize>,
    /// Cell-to-vertex weighting: printed | opposite
    #[arg(long)]
    interp: Option<String>,
}

#[derive(Args)]
struct ConsistencyArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated grid sizes
    #[arg(long)]
    nc: Option<String>,
    /// fg | tt | both
    #[arg(long)]
    backend: Option<String>,
    /// Rounding threshold for the tensor-train path
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args)]
struct ConvergeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Manufactured case: u1 | u2 | u3
    #[arg(long)]
    case: Option<String>,
    /// Time scheme: explicit | implicit | cn
    #[arg(long)]
    scheme: Option<String>,
    /// fg | tt | both
    #[arg(long)]
    backend: Option<String>,
    /// Coarsest grid size
    #[arg(long)]
    nc: Option<usize>,
    /// Number of refinement levels
    #[arg(long)]
    levels: Option<usize>,
    /// Coarsest-level time step
    #[arg(long)]
    dt0: Option<f64>,
    /// Step cap per level (truncated horizon)
    #[arg(long)]
    steps: Option<usize>,
    /// Run each level to the full horizon instead of the step cap
    #[arg(long, default_value_t = false)]
    full: bool,
    /// Full horizon
    #[arg(long = "t-final")]
    t_final: Option<f64>,
    /// Rounding threshold (defaults: 1e-4, or 1e-7 for u3)
    #[arg(long)]
    eps: Option<f64>,
    /// Hard rank cap for the TT construction of inputs
    #[arg(long = "rank-cap")]
    rank_cap: Option<usize>,
    #[arg(long = "pcg-tol")]
    pcg_tol: Option<f64>,
    #[arg(long = "pcg-maxiter")]
    pcg_maxiter: Option<usize>,
    /// as-printed | target-time
    #[arg(long = "bc-time-convention")]
    bc_time: Option<String>,
    /// Scale measured times to the full horizon when the step cap is active
    #[arg(long, default_value_t = false)]
    extrapolate: bool,
    /// Random seed (reserved for randomized probes)
    #[arg(long)]
    seed: Option<u64>,
    /// Concurrent refinement levels
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct EigenArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Comma-separated grid sizes
    #[arg(long)]
    nc: Option<String>,
    /// Comma-separated time steps
    #[arg(long)]
    dt: Option<String>,
    #[arg(long = "power-iters")]
    power_iters: Option<usize>,
    #[arg(long = "power-tol")]
    power_tol: Option<f64>,
    /// Seed of the power-method start vector
    #[arg(long)]
    seed: Option<u64>,
}

const EXIT_DIVERGENCE: u8 = 2;
const EXIT_PCG: u8 = 3;
const EXIT_USAGE: u8 = 64;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    return ExitCode::SUCCESS;
                }
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(CliError::Lib(Error::Divergence { step, time, detail })) => {
            eprintln!("error: diverged at step {step} (t = {time}): {detail}");
            ExitCode::from(EXIT_DIVERGENCE)
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

enum CliError {
    Usage(String),
    Lib(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(msg) => CliError::Usage(msg),
            other => CliError::Lib(other),
        }
    }
}

/// `key=value` lines, `#` comments, blank lines ignored.
fn load_config(path: Option<&PathBuf>) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    let Some(path) = path else {
        return Ok(map);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {} is not key=value: '{line}'",
                lineno + 1
            )));
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

/// Explicit flag, then config-file value, then the default.
fn pick<T: FromStr>(
    flag: Option<T>,
    cfg: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match cfg.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|_| CliError::Usage(format!("bad value '{raw}' for {key}"))),
        None => Ok(default),
    }
}

fn pick_parsed<T: FromStr<Err = Error>>(
    flag: Option<String>,
    cfg: &BTreeMap<String, String>,
    key: &str,
    default: T,
) -> Result<T, CliError> {
    match flag.or_else(|| cfg.get(key).cloned()) {
        Some(raw) => raw.parse().map_err(CliError::from),
        None => Ok(default),
    }
}

fn parse_list<T: FromStr>(raw: &str, what: &str) -> Result<Vec<T>, CliError> {
    let items: Result<Vec<T>, _> = raw.split(',').map(|s| s.trim().parse::<T>()).collect();
    items.map_err(|_| CliError::Usage(format!("bad {what} list '{raw}'")))
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.cmd {
        Cmd::Consistency(args) => run_consistency(args),
        Cmd::Converge(args) => run_converge(args),
        Cmd::Eigen(args) => run_eigen(args),
    }
}

fn run_consistency(args: ConsistencyArgs) -> Result<ExitCode, CliError> {
    let cfg = load_config(args.common.config.as_ref())?;
    let scenario: Scenario =
        pick_parsed(args.common.scenario, &cfg, "scenario", Scenario::Regular)?;
    let backend: Backend = pick_parsed(args.backend, &cfg, "backend", Backend::Both)?;
    let interp: InterpWeighting =
        pick_parsed(args.common.interp, &cfg, "interp", InterpWeighting::AsPrinted)?;
    let format: ReportFormat = pick_parsed(args.common.format, &cfg, "format", ReportFormat::Csv)?;
    let eps = pick(args.eps, &cfg, "eps", 1e-10)?;
    let n_ghost = pick(args.common.n_ghost, &cfg, "n-ghost", 2)?;
    let nc_raw = args
        .nc
        .or_else(|| cfg.get("nc").cloned())
        .unwrap_or_else(|| "20,40,80".into());
    let nc_list: Vec<usize> = parse_list(&nc_raw, "nc")?;

    let report = consistency_study(scenario, &nc_list, backend, eps, interp, n_ghost)?;
    emit_or_print(
        || render_run_report(&report, format),
        args.common.out.as_deref(),
        |p| emit_report(&report, format, Some(p)),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn run_converge(args: ConvergeArgs) -> Result<ExitCode, CliError> {
    let cfg = load_config(args.common.config.as_ref())?;
    let case: CaseId = pick_parsed(args.case, &cfg, "case", CaseId::U2)?;
    let scenario: Scenario =
        pick_parsed(args.common.scenario, &cfg, "scenario", Scenario::Regular)?;
    let scheme: Scheme = pick_parsed(args.scheme, &cfg, "scheme", Scheme::Explicit)?;
    let backend: Backend = pick_parsed(args.backend, &cfg, "backend", Backend::Both)?;
    let interp: InterpWeighting =
        pick_parsed(args.common.interp, &cfg, "interp", InterpWeighting::AsPrinted)?;
    let format: ReportFormat = pick_parsed(args.common.format, &cfg, "format", ReportFormat::Csv)?;
    let bc_time: BcTimeConvention = pick_parsed(
        args.bc_time,
        &cfg,
        "bc-time-convention",
        BcTimeConvention::AsPrinted,
    )?;

    let default_eps = match case {
        CaseId::U3 => 1e-7,
        _ => 1e-4,
    };
    let mut study = StudyConfig::new(case, scenario, scheme);
    study.backend = backend;
    study.interp = interp;
    study.bc_time = bc_time;
    study.nc0 = pick(args.nc, &cfg, "nc", 20)?;
    study.levels = pick(args.levels, &cfg, "levels", 2)?;
    study.dt0 = pick(args.dt0, &cfg, "dt0", 1e-4)?;
    study.t_final = pick(args.t_final, &cfg, "t-final", 1.0)?;
    study.eps = pick(args.eps, &cfg, "eps", default_eps)?;
    study.pcg_tol = pick(args.pcg_tol, &cfg, "pcg-tol", 1e-8)?;
    study.pcg_maxiter = pick(args.pcg_maxiter, &cfg, "pcg-maxiter", 500)?;
    study.n_ghost = pick(args.common.n_ghost, &cfg, "n-ghost", 2)?;
    study.jobs = pick(args.jobs, &cfg, "jobs", 1)?;
    study.rank_cap = match args.rank_cap {
        Some(v) => Some(v),
        None => cfg
            .get("rank-cap")
            .map(|raw| {
                raw.parse()
                    .map_err(|_| CliError::Usage(format!("bad rank-cap '{raw}'")))
            })
            .transpose()?,
    };
    let full = args.full || cfg.get("full").map(|v| v == "true").unwrap_or(false);
    let steps = pick(args.steps, &cfg, "steps", 100)?;
    study.steps = if full { None } else { Some(steps) };
    study.extrapolate =
        args.extrapolate || cfg.get("extrapolate").map(|v| v == "true").unwrap_or(false);
    let _seed = pick(args.seed, &cfg, "seed", 0u64)?;

    let report = convergence_study(&study)?;
    let pcg_failed = report.rows.iter().any(|r| r.pcg_nonconverged);
    emit_or_print(
        || render_run_report(&report, format),
        args.common.out.as_deref(),
        |p| emit_report(&report, format, Some(p)),
    )?;
    if pcg_failed {
        eprintln!("warning: PCG hit the iteration cap in at least one level");
        return Ok(ExitCode::from(EXIT_PCG));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_eigen(args: EigenArgs) -> Result<ExitCode, CliError> {
    let cfg = load_config(args.common.config.as_ref())?;
    let scenario: Scenario =
        pick_parsed(args.common.scenario, &cfg, "scenario", Scenario::Regular)?;
    let interp: InterpWeighting =
        pick_parsed(args.common.interp, &cfg, "interp", InterpWeighting::AsPrinted)?;
    let format: ReportFormat = pick_parsed(args.common.format, &cfg, "format", ReportFormat::Csv)?;
    let n_ghost = pick(args.common.n_ghost, &cfg, "n-ghost", 2)?;
    let iters = pick(args.power_iters, &cfg, "power-iters", 300)?;
    let tol = pick(args.power_tol, &cfg, "power-tol", 1e-8)?;
    let seed = pick(args.seed, &cfg, "seed", 0u64)?;
    let nc_raw = args
        .nc
        .or_else(|| cfg.get("nc").cloned())
        .unwrap_or_else(|| "20,40".into());
    let dt_raw = args
        .dt
        .or_else(|| cfg.get("dt").cloned())
        .unwrap_or_else(|| "1,0.1,0.01".into());
    let nc_list: Vec<usize> = parse_list(&nc_raw, "nc")?;
    let dt_list: Vec<f64> = parse_list(&dt_raw, "dt")?;

    let report = eigen_study(scenario, &nc_list, &dt_list, iters, tol, seed, interp, n_ghost)?;
    emit_or_print(
        || render_eigen_report(&report, format),
        args.common.out.as_deref(),
        |p| emit_eigen_report(&report, format, Some(p)),
    )?;
    Ok(ExitCode::SUCCESS)
}

fn emit_or_print(
    render: impl Fn() -> String,
    out: Option<&std::path::Path>,
    write: impl Fn(&std::path::Path) -> tt_heat::Result<()>,
) -> Result<(), CliError> {
    match out {
        Some(path) => write(path).map_err(CliError::Lib),
        None => {
            print!("{}", render());
            Ok(())
        }
    }
}
