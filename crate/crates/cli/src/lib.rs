//! Experiment driver behind the `moapg` binary.
//!
//! Each command reads an [`ExperimentConfig`], writes its artifacts into the
//! configured output directory and maps the outcome to an exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | converged / artifacts written |
//! | 1 | invalid config (message names the violated constraint) |
//! | 2 | iteration budget exhausted (`solve`) |
//! | 3 | subproblem or reference-front failure |
//! | 4 | rate certificate has violations (`rate`) |

pub mod config;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use moapg_core::bench::{self, FrontResult};
use moapg_core::io::{self, CompareRow, CompareTable, FrontTable, RateTable, TraceTable};
use moapg_core::merit::{self, ReferenceFront};
use moapg_core::{solver, Method, RunTrace, SolverError, StoppingReason};
use serde::Serialize;

pub use config::{Experiment, ExperimentConfig, Overrides};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 1,
            Self::Failure(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "config error: {m}"),
            Self::Failure(m) => write!(f, "failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Config(v) => Self::Config(v.to_string()),
            SolverError::Problem(e) => Self::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Front,
    Rate,
    Compare,
}

/// Test hooks that are not part of the config file.
#[derive(Debug, Clone, Copy)]
pub struct Hooks {
    /// Multiplies `R̂` before certification; values below 1 must produce
    /// violations.
    pub r_scale: f64,
}

impl Default for Hooks {
    fn default() -> Self {
        Self { r_scale: 1.0 }
    }
}

/// Outcome of a command that got as far as writing artifacts.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub exit_code: i32,
    pub message: String,
}

pub fn load_config(path: &Path, overrides: &Overrides) -> Result<Experiment, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    cfg.apply(overrides);
    cfg.resolve()
}

pub fn execute(cmd: Command, mut exp: Experiment, hooks: Hooks) -> Result<Report, CliError> {
    fs::create_dir_all(&exp.config.outputs).map_err(|e| {
        CliError::Config(format!(
            "output directory {}: {e}",
            exp.config.outputs.display()
        ))
    })?;
    match cmd {
        Command::Solve => cmd_solve(&mut exp),
        Command::Front => cmd_front(&exp),
        Command::Rate => cmd_rate(&mut exp, hooks),
        Command::Compare => cmd_compare(&mut exp),
    }
}

fn out_path(exp: &Experiment, name: &str) -> PathBuf {
    exp.config.outputs.join(name)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents)
        .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("serializable output");
    write(path, &(text + "\n"))
}

fn run_method(exp: &Experiment, method: Method, x0: &[f64]) -> Result<RunTrace, SolverError> {
    let cfg = &exp.solver;
    match method {
        Method::Accelerated => solver::run(&exp.problem, cfg, x0),
        baseline => solver::run_baseline(
            &exp.problem,
            baseline,
            x0,
            exp.baseline_step,
            cfg.epsilon,
            cfg.max_iters,
        ),
    }
}

fn exit_code_for(reason: StoppingReason) -> i32 {
    match reason {
        StoppingReason::ToleranceMet => 0,
        StoppingReason::MaxIters => 2,
        StoppingReason::SubproblemFailure => 3,
    }
}

#[derive(Serialize)]
struct RunSummary<'a> {
    command: &'static str,
    config: &'a ExperimentConfig,
    lipschitz: f64,
    method: Method,
    stopping_reason: StoppingReason,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<&'a str>,
    iterations: usize,
    final_point: &'a [f64],
    final_values: &'a [f64],
}

fn summary<'a>(command: &'static str, exp: &'a Experiment, trace: &'a RunTrace) -> RunSummary<'a> {
    RunSummary {
        command,
        config: &exp.config,
        lipschitz: exp.problem.lipschitz(),
        method: trace.method,
        stopping_reason: trace.stopping_reason,
        failure: trace.failure.as_deref(),
        iterations: trace.iterations(),
        final_point: trace.final_point(),
        final_values: trace.final_values(),
    }
}

fn cmd_solve(exp: &mut Experiment) -> Result<Report, CliError> {
    exp.materialize_x0()?;
    let trace = run_method(exp, exp.config.method, exp.x0())?;
    write(
        &out_path(exp, "trace.csv"),
        &TraceTable::from_trace(&trace).to_csv(),
    )?;
    write_json(
        &out_path(exp, "summary.json"),
        &summary("solve", exp, &trace),
    )?;
    Ok(Report {
        exit_code: exit_code_for(trace.stopping_reason),
        message: format!(
            "{} after {} iterations",
            trace.stopping_reason,
            trace.iterations()
        ),
    })
}

#[derive(Serialize)]
struct FrontSummary<'a> {
    command: &'static str,
    config: &'a ExperimentConfig,
    lipschitz: f64,
    num_starts: usize,
    front_size: usize,
    failed_starts: usize,
}

fn cmd_front(exp: &Experiment) -> Result<Report, CliError> {
    let starts = exp
        .require_start_box()?
        .sample(exp.num_starts(), exp.seed());
    let result: FrontResult =
        bench::front_from_starts_with(starts, |x0| run_method(exp, exp.config.method, x0))?;
    let table = FrontTable::from_result(&result, exp.problem.dim(), exp.problem.num_objectives());
    write(&out_path(exp, "front.csv"), &table.to_csv())?;
    if exp.config.emit_svg {
        write(
            &out_path(exp, "front.svg"),
            &svg::front_scatter(&table, &exp.label),
        )?;
    }
    let failed = result
        .solutions
        .iter()
        .filter(|s| s.stopping_reason == StoppingReason::SubproblemFailure)
        .count();
    write_json(
        &out_path(exp, "summary.json"),
        &FrontSummary {
            command: "front",
            config: &exp.config,
            lipschitz: exp.problem.lipschitz(),
            num_starts: result.solutions.len(),
            front_size: table.rows.len(),
            failed_starts: failed,
        },
    )?;
    if table.rows.is_empty() {
        return Err(CliError::Failure(
            "every start failed; front is empty".into(),
        ));
    }
    Ok(Report {
        exit_code: 0,
        message: format!(
            "{} nondominated points from {} starts",
            table.rows.len(),
            result.solutions.len()
        ),
    })
}

/// Load the configured reference front, or build one and persist it as
/// `reference_front.csv` + `reference_front.json`.
fn reference_front(exp: &Experiment) -> Result<ReferenceFront, CliError> {
    if let Some(path) = &exp.config.reference.path {
        return io::load_reference_front(path)
            .map_err(|e| CliError::Failure(format!("reference front {}: {e}", path.display())));
    }
    let start_box = exp.require_start_box()?;
    let front = merit::build_reference_front(
        &exp.problem,
        start_box,
        &exp.config.reference.settings(),
        &exp.label,
    )
    .map_err(|e| CliError::Failure(format!("reference front generation failed: {e}")))?;
    io::save_reference_front(&front, &out_path(exp, "reference_front.csv"))
        .map_err(|e| CliError::Config(format!("cannot write reference front: {e}")))?;
    Ok(front)
}

#[derive(Serialize)]
struct CertificateSummary<'a> {
    config: &'a ExperimentConfig,
    r_hat: f64,
    r_scale: f64,
    lipschitz: f64,
    alpha: f64,
    violations: usize,
    violations_statement: usize,
    min_u0_lower: f64,
    iterations: usize,
    stopping_reason: StoppingReason,
    reference_points: usize,
}

fn cmd_rate(exp: &mut Experiment, hooks: Hooks) -> Result<Report, CliError> {
    exp.materialize_x0()?;
    let reference = reference_front(exp)?;
    let mut trace = solver::run(&exp.problem, &exp.solver, exp.x0())?;
    merit::attach_merit(&mut trace, &reference);
    let l = exp.problem.lipschitz();
    let cert = merit::certify_rate_scaled(&trace, &reference, l, exp.solver.alpha, hooks.r_scale);
    write(
        &out_path(exp, "trace.csv"),
        &TraceTable::from_trace(&trace).to_csv(),
    )?;
    write(
        &out_path(exp, "rate.csv"),
        &RateTable::from_certificate(&cert).to_csv(),
    )?;
    write_json(
        &out_path(exp, "certificate.json"),
        &CertificateSummary {
            config: &exp.config,
            r_hat: cert.r_hat,
            r_scale: hooks.r_scale,
            lipschitz: cert.lipschitz,
            alpha: cert.alpha,
            violations: cert.violations,
            violations_statement: cert.violations_statement,
            min_u0_lower: cert.min_u0_lower,
            iterations: trace.iterations(),
            stopping_reason: trace.stopping_reason,
            reference_points: reference.len(),
        },
    )?;
    let exit_code = if trace.stopping_reason == StoppingReason::SubproblemFailure {
        3
    } else if cert.violations > 0 {
        4
    } else {
        0
    };
    Ok(Report {
        exit_code,
        message: format!(
            "{} violations over {} iterations (R = {:e})",
            cert.violations,
            trace.iterations(),
            cert.r_hat
        ),
    })
}

fn cmd_compare(exp: &mut Experiment) -> Result<Report, CliError> {
    exp.materialize_x0()?;
    let reference = reference_front(exp)?;
    let threshold = exp.config.compare.threshold;
    let mut table = CompareTable::default();
    let mut failed = false;
    for &method in &exp.config.compare.methods {
        let started = Instant::now();
        let trace = run_method(exp, method, exp.x0())?;
        let wall = started.elapsed().as_secs_f64();
        failed |= trace.stopping_reason == StoppingReason::SubproblemFailure;
        let hit = trace
            .records
            .iter()
            .position(|r| merit::u0_lower_from_values(&r.f_values, &reference) < threshold);
        table.rows.push(CompareRow {
            method,
            iterations: hit.map_or(trace.iterations(), |i| i + 1) as u64,
            reached: hit.is_some(),
            final_step_norm: trace.records.last().map_or(0.0, |r| r.step_norm),
            wall_time_s: wall,
        });
    }
    write(&out_path(exp, "compare.csv"), &table.to_csv())?;
    Ok(Report {
        exit_code: if failed { 3 } else { 0 },
        message: table
            .rows
            .iter()
            .map(|r| {
                format!(
                    "{}: {}{}",
                    r.method,
                    r.iterations,
                    if r.reached { "" } else { " (not reached)" }
                )
            })
            .collect::<Vec<_>>()
            .join(", "),
    })
}
