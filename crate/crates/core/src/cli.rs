//! Command-line front end.
//!
//! Every command writes its outputs into `--out-dir` through a temporary file and a
//! rename, then records a `manifest-<command>.json` next to them. `replay` re-executes
//! a manifest; outputs are byte-identical as long as `--timing` was not requested.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::bench::{compare, CompareConfig};
use crate::datagen::{default_constraint_menu, generate_instance, GenConfig, SegmentHierarchy};
use crate::error::Error;
use crate::lp::StandardLp;
use crate::model::{
    compile_interdependent, compile_ipwc, compile_spwc, counts_of, extract_policy, validate_policy, ConstraintMenu,
    TargetingInstance,
};
use crate::mps::write_mps;
use crate::oracle::{densify, simplex_solve, vertex_enumerate, OracleStatus};
use crate::pdhg::{solve, SolveStatus, SolverConfig, LOG_HEADER};
use crate::toy::{run_toy, ToyMode};

pub const THREADS_ENV: &str = "MARCHETYPE_THREADS";

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NONOPTIMAL: u8 = 3;
pub const EXIT_GUARD: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "marchetype", version, about = "Targeting-policy LPs and a restarted PDHG solver")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Generate a synthetic instance, its default constraint menu and segment tree.
    Gen(GenArgs),
    /// Compile an instance and menu into an LP.
    Compile(CompileArgs),
    /// Solve an LP with restarted PDHG.
    Solve(SolveArgs),
    /// Solve an LP exactly with the dense simplex oracle.
    Oracle(OracleArgs),
    /// Compare individual and segment personalization.
    Compare(CompareArgs),
    /// Trace one-loop and two-loop PDHG on min_x max_y xy.
    Toy(ToyArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gen(_) => "gen",
            Command::Compile(_) => "compile",
            Command::Solve(_) => "solve",
            Command::Oracle(_) => "oracle",
            Command::Compare(_) => "compare",
            Command::Toy(_) => "toy",
            Command::Replay(_) => "replay",
        }
    }

    fn out_dir_mut(&mut self) -> &mut PathBuf {
        match self {
            Command::Gen(a) => &mut a.out_dir,
            Command::Compile(a) => &mut a.out_dir,
            Command::Solve(a) => &mut a.out_dir,
            Command::Oracle(a) => &mut a.out_dir,
            Command::Compare(a) => &mut a.out_dir,
            Command::Toy(a) => &mut a.out_dir,
            Command::Replay(a) => a.out_dir.get_or_insert_with(PathBuf::new),
        }
    }

    /// Makes every path absolute so a manifest can be replayed from anywhere.
    fn absolutize(&mut self) -> std::io::Result<()> {
        fn abs(p: &mut PathBuf) -> std::io::Result<()> {
            *p = std::path::absolute(&*p)?;
            Ok(())
        }
        fn abs_opt(p: &mut Option<PathBuf>) -> std::io::Result<()> {
            p.as_mut().map_or(Ok(()), abs)
        }
        match self {
            Command::Gen(a) => abs(&mut a.out_dir),
            Command::Compile(a) => {
                abs(&mut a.instance)?;
                abs(&mut a.menu)?;
                abs_opt(&mut a.pair_profits)?;
                abs(&mut a.out_dir)
            }
            Command::Solve(a) => {
                abs(&mut a.lp)?;
                abs_opt(&mut a.config)?;
                abs_opt(&mut a.instance)?;
                abs_opt(&mut a.menu)?;
                abs(&mut a.out_dir)
            }
            Command::Oracle(a) => {
                abs(&mut a.lp)?;
                abs(&mut a.out_dir)
            }
            Command::Compare(a) => {
                abs(&mut a.instance)?;
                abs(&mut a.menu)?;
                abs(&mut a.out_dir)
            }
            Command::Toy(a) => abs(&mut a.out_dir),
            Command::Replay(a) => {
                abs(&mut a.manifest)?;
                abs_opt(&mut a.out_dir)
            }
        }
    }
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenArgs {
    #[arg(long, default_value_t = 1000, value_parser = positive)]
    pub customers: usize,
    #[arg(long, default_value_t = 5, value_parser = positive)]
    pub actions: usize,
    /// Zip-code digits: 3, 4 or 5.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(3..=5))]
    pub depth: u8,
    /// Children per level, deepest last; padded with 1 at the top.
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 5])]
    pub branching: Vec<usize>,
    #[arg(long, default_value_t = 0.03)]
    pub response_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub max_actions: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompileMode {
    Ipwc,
    Spwc,
    Interdep,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompileArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub menu: PathBuf,
    #[arg(long, value_enum, default_value_t = CompileMode::Ipwc)]
    pub mode: CompileMode,
    /// JSON array `[i][j1][j2]` of pair profits; required by `interdep`.
    #[arg(long)]
    pub pair_profits: Option<PathBuf>,
    /// Also write `lp.mps`.
    #[arg(long)]
    pub export_mps: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    #[arg(long)]
    pub lp: PathBuf,
    /// Solver configuration JSON; flags below override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub no_restart: bool,
    #[arg(long)]
    pub no_rescale: bool,
    /// Fixed steps, unit primal weight, restarts from the average.
    #[arg(long)]
    pub algorithm1: bool,
    /// Write `convergence.csv`.
    #[arg(long)]
    pub log: bool,
    /// Fill the `elapsed_s` column (breaks byte-identical replay).
    #[arg(long)]
    pub timing: bool,
    /// With `--menu`, also write the policy and its validation.
    #[arg(long, requires = "menu")]
    pub instance: Option<PathBuf>,
    #[arg(long, requires = "instance")]
    pub menu: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OracleArgs {
    #[arg(long)]
    pub lp: PathBuf,
    /// Cross-check by vertex enumeration (tiny LPs only).
    #[arg(long)]
    pub enumerate: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CompareArgs {
    #[arg(long)]
    pub instance: PathBuf,
    #[arg(long)]
    pub menu: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Collapse fractions for the sweep, e.g. `0,0.25,0.5,1`.
    #[arg(long, value_delimiter = ',')]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 5, value_parser = positive)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ToyArgs {
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub start_x: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    pub start_y: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long, default_value_t = 20_000)]
    pub max_iters: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Defaults to the directory recorded in the manifest.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// The fully resolved command; `replay` runs exactly this.
    pub config: Command,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub version: String,
    pub threads: usize,
    /// Seconds since the Unix epoch.
    pub started_at: f64,
    pub finished_at: f64,
    pub exit_code: u8,
}

impl PartialEq for Command {
    fn eq(&self, other: &Self) -> bool {
        serde_json::to_value(self).ok() == serde_json::to_value(other).ok()
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_) => EXIT_USAGE,
            Error::SizeGuard(_) => EXIT_GUARD,
            _ => EXIT_FAILURE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Error::from(e).into()
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a finished command produced.
struct Outcome {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    seed: Option<u64>,
    code: u8,
}

/// Threads allowed by `MARCHETYPE_THREADS`, default 1.
pub fn threads_from_env() -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(1),
    }
}

fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

/// Writes `contents` to `dir/name` via a temporary sibling and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

fn to_json<T: Serialize>(value: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError {
        code: EXIT_FAILURE,
        message: format!("{}: {e}", path.display()),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError {
        code: EXIT_FAILURE,
        message: format!("{}: {e}", path.display()),
    })
}

fn read_lp(path: &Path) -> CliResult<StandardLp> {
    let text = fs::read_to_string(path).map_err(|e| CliError {
        code: EXIT_FAILURE,
        message: format!("{}: {e}", path.display()),
    })?;
    Ok(StandardLp::from_json(&text)?)
}

fn cmd_gen(a: &GenArgs) -> CliResult<Outcome> {
    let config = GenConfig {
        n_customers: a.customers,
        n_actions: a.actions,
        zip_depth: a.depth,
        branching: a.branching.clone(),
        response_rate: a.response_rate,
        max_actions: a.max_actions,
        seed: a.seed,
        ..GenConfig::default()
    };
    config.validate()?;
    let hierarchy = SegmentHierarchy::from_config(&config)?;
    let instance = generate_instance(&config)?;
    let menu = default_constraint_menu(&instance, &hierarchy)?;
    let outputs = vec![
        write_atomic(&a.out_dir, "instance.json", &to_json(&instance)?)?,
        write_atomic(&a.out_dir, "menu.json", &to_json(&menu)?)?,
        write_atomic(&a.out_dir, "hierarchy.json", &to_json(&hierarchy)?)?,
    ];
    println!(
        "generated {} customers, {} actions, {} segments",
        instance.n_customers,
        instance.n_actions,
        instance.n_constraint_segments()
    );
    Ok(Outcome {
        inputs: Vec::new(),
        outputs,
        seed: Some(a.seed),
        code: EXIT_OK,
    })
}

fn cmd_compile(a: &CompileArgs) -> CliResult<Outcome> {
    let instance: TargetingInstance = read_json(&a.instance)?;
    let menu: ConstraintMenu = read_json(&a.menu)?;
    let mut inputs = vec![a.instance.clone(), a.menu.clone()];
    let lp = match a.mode {
        CompileMode::Ipwc => compile_ipwc(&instance, &menu)?,
        CompileMode::Spwc => compile_spwc(&instance, &menu)?,
        CompileMode::Interdep => {
            let path = a
                .pair_profits
                .as_ref()
                .ok_or_else(|| CliError::usage("--mode interdep needs --pair-profits"))?;
            inputs.push(path.clone());
            let pairs: Vec<Vec<Vec<f64>>> = read_json(path)?;
            compile_interdependent(&instance, &menu, &pairs)?
        }
    };
    let mut outputs = vec![write_atomic(&a.out_dir, "lp.json", lp.to_json()?.as_bytes())?];
    if a.export_mps {
        outputs.push(write_atomic(&a.out_dir, "lp.mps", write_mps(&lp, "TARGETING").as_bytes())?);
    }
    println!("{}", counts_of(&lp));
    println!("columns {}  nonzeros {}", lp.n_cols(), lp.constraints.nnz());
    Ok(Outcome {
        inputs,
        outputs,
        seed: None,
        code: EXIT_OK,
    })
}

fn cmd_solve(a: &SolveArgs) -> CliResult<Outcome> {
    let lp = read_lp(&a.lp)?;
    let mut inputs = vec![a.lp.clone()];
    let mut config = match &a.config {
        Some(path) => {
            inputs.push(path.clone());
            read_json(path)?
        }
        None if a.algorithm1 => SolverConfig::algorithm1(),
        None => SolverConfig::default(),
    };
    if let Some(t) = a.tol {
        config.tolerance = t;
    }
    if let Some(m) = a.max_iters {
        config.max_total_iterations = m;
    }
    config.restart &= !a.no_restart;
    config.rescale &= !a.no_rescale;
    config.validate()?;

    let report = solve(&lp, &config)?;
    let mut outputs = vec![write_atomic(&a.out_dir, "solution.json", &to_json(&report)?)?];
    if a.log {
        let mut csv = String::from(LOG_HEADER);
        csv.push('\n');
        for row in &report.log {
            csv.push_str(&row.csv(a.timing));
            csv.push('\n');
        }
        outputs.push(write_atomic(&a.out_dir, "convergence.csv", csv.as_bytes())?);
    }
    if let (Some(ip), Some(mp)) = (&a.instance, &a.menu) {
        let instance: TargetingInstance = read_json(ip)?;
        let menu: ConstraintMenu = read_json(mp)?;
        inputs.extend([ip.clone(), mp.clone()]);
        let policy = extract_policy(&lp, &report.primal, &instance)?;
        let validation = validate_policy(&policy, &instance, &menu, 10.0 * config.tolerance);
        println!(
            "policy profit {:.6}, {} violated constraints",
            policy.objective_value,
            validation.violations.len()
        );
        let body = serde_json::json!({ "policy": policy, "validation": validation });
        outputs.push(write_atomic(&a.out_dir, "policy.json", &to_json(&body)?)?);
    }
    println!(
        "{:?}: objective {:e}, iterations {}, restarts {}, kkt {:e}",
        report.status,
        report.objective,
        report.iterations,
        report.restarts,
        report.primal_residual.max(report.dual_residual).max(report.relative_gap)
    );
    Ok(Outcome {
        inputs,
        outputs,
        seed: Some(config.seed),
        code: if report.status == SolveStatus::Optimal { EXIT_OK } else { EXIT_NONOPTIMAL },
    })
}

fn cmd_oracle(a: &OracleArgs) -> CliResult<Outcome> {
    let lp = read_lp(&a.lp)?;
    let dense = densify(&lp)?;
    let solution = simplex_solve(&dense)?;
    let enumerated = if a.enumerate {
        vertex_enumerate(&dense)?.map(|(x, objective)| serde_json::json!({ "x": x, "objective": objective }))
    } else {
        None
    };
    let mut body = serde_json::to_value(&solution)?;
    if a.enumerate {
        body["enumeration"] = enumerated.unwrap_or(serde_json::Value::Null);
    }
    let outputs = vec![write_atomic(&a.out_dir, "oracle.json", &to_json(&body)?)?];
    println!("{:?}: objective {:e}, pivots {}", solution.status, solution.objective, solution.pivots);
    Ok(Outcome {
        inputs: vec![a.lp.clone()],
        outputs,
        seed: None,
        code: if solution.status == OracleStatus::Optimal { EXIT_OK } else { EXIT_NONOPTIMAL },
    })
}

fn cmd_compare(a: &CompareArgs, threads: usize) -> CliResult<Outcome> {
    let instance: TargetingInstance = read_json(&a.instance)?;
    let menu: ConstraintMenu = read_json(&a.menu)?;
    let mut config = CompareConfig {
        fractions: a.fractions.clone(),
        draws: a.draws,
        seed: a.seed,
        threads,
        ..CompareConfig::default()
    };
    config.solver.tolerance = a.tol;
    if let Some(m) = a.max_iters {
        config.solver.max_total_iterations = m;
    }
    config.solver.validate()?;
    let result = compare(&instance, &menu, &config)?;
    let outputs = vec![
        write_atomic(&a.out_dir, "compare.json", &to_json(&result)?)?,
        write_atomic(&a.out_dir, "sweep.csv", result.sweep_csv().as_bytes())?,
    ];
    println!(
        "IPwC profit {:.6} ({:?}), SPwC profit {:.6} ({:?}), difference {:.6}",
        result.ipwc.profit, result.ipwc.status, result.spwc.profit, result.spwc.status, result.difference
    );
    Ok(Outcome {
        inputs: vec![a.instance.clone(), a.menu.clone()],
        outputs,
        seed: Some(a.seed),
        code: if result.all_optimal() { EXIT_OK } else { EXIT_NONOPTIMAL },
    })
}

fn cmd_toy(a: &ToyArgs) -> CliResult<Outcome> {
    let start = (a.start_x, a.start_y);
    let runs = [ToyMode::OneLoop, ToyMode::TwoLoop]
        .into_iter()
        .map(|mode| run_toy(start, mode, a.tol, a.max_iters))
        .collect::<crate::Result<Vec<_>>>()?;
    let mut csv = String::new();
    for (k, run) in runs.iter().enumerate() {
        let body = run.csv();
        // Keep a single header.
        csv.push_str(if k == 0 { &body } else { body.split_once('\n').map_or("", |(_, rest)| rest) });
    }
    let summary: Vec<_> = runs
        .iter()
        .map(|run| {
            let last = run.points.last().copied();
            serde_json::json!({
                "mode": run.mode,
                "status": run.status,
                "iterations": last.map_or(0, |p| p.iteration),
                "restarts": run.restarts,
                "first_within_1e-4": run.first_within(1e-4),
                "first_within_1e-6": run.first_within(1e-6),
                "final_distance": last.map_or(0.0, |p| p.distance()),
            })
        })
        .collect();
    for s in &summary {
        println!("{s}");
    }
    let outputs = vec![
        write_atomic(&a.out_dir, "toy.csv", csv.as_bytes())?,
        write_atomic(&a.out_dir, "toy-summary.json", &to_json(&summary)?)?,
    ];
    Ok(Outcome {
        inputs: Vec::new(),
        outputs,
        seed: None,
        code: EXIT_OK,
    })
}

fn execute(command: &Command, threads: usize) -> CliResult<Outcome> {
    match command {
        Command::Gen(a) => cmd_gen(a),
        Command::Compile(a) => cmd_compile(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Compare(a) => cmd_compare(a, threads),
        Command::Toy(a) => cmd_toy(a),
        Command::Replay(a) => {
            let manifest: RunManifest = read_json(&a.manifest)?;
            let mut inner = manifest.config;
            if matches!(inner, Command::Replay(_)) {
                return Err(CliError::usage("a replay manifest cannot be replayed"));
            }
            if let Some(dir) = &a.out_dir {
                *inner.out_dir_mut() = dir.clone();
            }
            let code = run_recorded(inner, manifest.argv, threads)?;
            Ok(Outcome {
                inputs: vec![a.manifest.clone()],
                outputs: Vec::new(),
                seed: manifest.seed,
                code,
            })
        }
    }
}

/// Runs a command and writes its manifest; returns the exit code.
fn run_recorded(mut command: Command, argv: Vec<String>, threads: usize) -> CliResult<u8> {
    command.absolutize()?;
    let started_at = now();
    let outcome = execute(&command, threads)?;
    let out_dir = match &command {
        Command::Replay(a) => a
            .out_dir
            .clone()
            .or_else(|| a.manifest.parent().map(Path::to_path_buf))
            .unwrap_or_default(),
        _ => command.clone().out_dir_mut().clone(),
    };
    let manifest = RunManifest {
        command: command.name().to_string(),
        argv,
        config: command.clone(),
        inputs: outcome.inputs,
        outputs: outcome.outputs,
        seed: outcome.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        threads,
        started_at,
        finished_at: now(),
        exit_code: outcome.code,
    };
    write_atomic(&out_dir, &format!("manifest-{}.json", command.name()), &to_json(&manifest)?)?;
    Ok(outcome.code)
}

/// Parses `argv` (program name first) and runs it, returning the process exit code.
pub fn run_from<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let recorded: Vec<String> = argv.iter().skip(1).map(|s| s.to_string_lossy().into_owned()).collect();
    let result = threads_from_env().and_then(|threads| run_recorded(cli.command, recorded, threads));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

pub fn main() -> ExitCode {
    ExitCode::from(run_from(std::env::args_os()))
}
