//! Accelerated proximal gradient iteration with a precomputed step schedule.
//!
//! Each iteration extrapolates `y_k = x_k + γ_k (x_k − x_{k−1})` with
//! `γ_k = (k+α−4)/(k+α−1)`, then takes `x_{k+1} = p_{s_k}(x_k, y_k)`. The
//! steps grow as `s_{k+1} = η_k s_k` and stay strictly below `1/L` when `s0`
//! is admissible, so no line search is needed.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{validate_config, ConfigViolation, Problem, SolverConfig, StopRule};
use crate::subproblem::{self, SubproblemFailure, SubproblemInput, SubproblemOptions};

/// Step growth factor `η_k = (k+α−2)² / ((k+α−1)(k+α−3))`.
pub fn eta(k: u64, alpha: f64) -> Result<f64> {
    let kf = k as f64;
    let denom = (kf + alpha - 1.0) * (kf + alpha - 3.0);
    if !(kf + alpha - 3.0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "eta is undefined at k = {k}, alpha = {alpha} (k + alpha - 3 must be positive)"
        )));
    }
    Ok((kf + alpha - 2.0).powi(2) / denom)
}

/// Closed form of `s_k`, the product of the `η` factors applied to `s0`.
///
/// For `α = 3` this is `s0` at `k = 0` and `k/(k+1)·s0` afterwards.
pub fn step_size(k: u64, alpha: f64, s0: f64) -> f64 {
    if k == 0 {
        return s0;
    }
    let kf = k as f64;
    if alpha > 3.0 {
        (alpha - 2.0) * (kf + alpha - 3.0) / ((alpha - 3.0) * (kf + alpha - 2.0)) * s0
    } else {
        kf / (kf + 1.0) * s0
    }
}

/// Limit of `s_k` as `k → ∞`.
pub fn step_size_limit(alpha: f64, s0: f64) -> f64 {
    if alpha > 3.0 {
        (alpha - 2.0) / (alpha - 3.0) * s0
    } else {
        s0
    }
}

/// `γ_k = (k+α−4)/(k+α−1)`
pub fn extrapolation_coefficient(k: u64, alpha: f64) -> f64 {
    let kf = k as f64;
    (kf + alpha - 4.0) / (kf + alpha - 1.0)
}

pub fn extrapolate(x_curr: &[f64], x_prev: &[f64], k: u64, alpha: f64) -> Vec<f64> {
    let gamma = extrapolation_coefficient(k, alpha);
    momentum_point(x_curr, x_prev, gamma)
}

fn momentum_point(x_curr: &[f64], x_prev: &[f64], gamma: f64) -> Vec<f64> {
    x_curr
        .iter()
        .zip(x_prev)
        .map(|(c, p)| c + gamma * (c - p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoppingReason {
    ToleranceMet,
    MaxIters,
    SubproblemFailure,
}

impl fmt::Display for StoppingReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ToleranceMet => "tolerance-met",
            Self::MaxIters => "max-iters",
            Self::SubproblemFailure => "subproblem-failure",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Accelerated,
    Pg,
    Fista,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Accelerated => "accelerated",
            Self::Pg => "pg",
            Self::Fista => "fista",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "accelerated" => Ok(Self::Accelerated),
            "pg" => Ok(Self::Pg),
            "fista" => Ok(Self::Fista),
            other => Err(Error::Parse(format!("unknown method `{other}`"))),
        }
    }
}

/// One iteration `k`: the step `s_k` and coefficient `γ_k` used, the
/// extrapolated point `y_k`, and the new iterate `x_{k+1}` with its values.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: u64,
    pub s: f64,
    pub gamma: f64,
    /// `F(x_{k+1})`
    pub f_values: Vec<f64>,
    /// `‖x_{k+1} − x_k‖`
    pub step_norm: f64,
    pub merit: Option<f64>,
    /// `y_k`
    pub y: Vec<f64>,
    /// `x_{k+1}`
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub method: Method,
    pub x0: Vec<f64>,
    pub f0: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub stopping_reason: StoppingReason,
    /// Message of the failing subproblem, if any.
    pub failure: Option<String>,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn final_point(&self) -> &[f64] {
        self.records.last().map_or(&self.x0, |r| &r.x)
    }

    pub fn final_values(&self) -> &[f64] {
        self.records.last().map_or(&self.f0, |r| &r.f_values)
    }

    /// `x_j` for `j = 0..=iterations()`.
    pub fn iterate(&self, j: usize) -> &[f64] {
        if j == 0 {
            &self.x0
        } else {
            &self.records[j - 1].x
        }
    }

    /// `max_{i,k} F_i(x_k) − F_i(x_0)`; nonpositive for a monotone run.
    pub fn max_increase_over_start(&self) -> f64 {
        self.records
            .iter()
            .flat_map(|r| r.f_values.iter().zip(&self.f0).map(|(a, b)| a - b))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn num_objectives(&self) -> usize {
        self.f0.len()
    }
}

#[derive(Debug)]
pub enum SolverError {
    Config(ConfigViolation),
    Problem(Error),
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Config(v) => write!(f, "invalid solver configuration: {v}"),
            Self::Problem(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for SolverError {}

impl From<Error> for SolverError {
    fn from(e: Error) -> Self {
        Self::Problem(e)
    }
}

/// Run the accelerated method with default subproblem options.
pub fn run(
    problem: &Problem,
    config: &SolverConfig,
    x0: &[f64],
) -> std::result::Result<RunTrace, SolverError> {
    run_with(problem, config, x0, &SubproblemOptions::default())
}

pub fn run_with(
    problem: &Problem,
    config: &SolverConfig,
    x0: &[f64],
    opts: &SubproblemOptions,
) -> std::result::Result<RunTrace, SolverError> {
    validate_config(config, problem.lipschitz()).map_err(SolverError::Config)?;
    let alpha = config.alpha;
    let schedule = Schedule {
        step: &|k| step_size(k, alpha, config.s0),
        gamma: &mut |k| extrapolation_coefficient(k, alpha),
    };
    iterate(
        problem,
        Method::Accelerated,
        x0,
        schedule,
        config.epsilon,
        config.max_iters,
        config.stop_rule,
        opts,
    )
}

/// Non-accelerated (`pg`) or FISTA-style baselines with a constant step.
pub fn run_baseline(
    problem: &Problem,
    variant: Method,
    x0: &[f64],
    step: f64,
    epsilon: f64,
    max_iters: usize,
) -> std::result::Result<RunTrace, SolverError> {
    let l = problem.lipschitz();
    if !(step > 0.0 && step.is_finite()) || step * l > 1.0 {
        return Err(SolverError::Config(ConfigViolation {
            constraint: "0 < step <= 1/L",
            detail: format!("step = {step}, 1/L = {}", 1.0 / l),
        }));
    }
    if !(epsilon > 0.0) {
        return Err(SolverError::Config(ConfigViolation {
            constraint: "epsilon > 0",
            detail: format!("epsilon = {epsilon}"),
        }));
    }
    let opts = SubproblemOptions::default();
    let constant = move |_k: u64| step;
    match variant {
        Method::Pg => iterate(
            problem,
            Method::Pg,
            x0,
            Schedule {
                step: &constant,
                gamma: &mut |_| 0.0,
            },
            epsilon,
            max_iters,
            StopRule::StepNorm,
            &opts,
        ),
        Method::Fista => {
            let mut t = 1.0_f64;
            let mut fista_gamma = |_k: u64| {
                let t_next = fista_next(t);
                let g = (t - 1.0) / t_next;
                t = t_next;
                g
            };
            iterate(
                problem,
                Method::Fista,
                x0,
                Schedule {
                    step: &constant,
                    gamma: &mut fista_gamma,
                },
                epsilon,
                max_iters,
                StopRule::StepNorm,
                &opts,
            )
        }
        Method::Accelerated => Err(SolverError::Problem(Error::InvalidArgument(
            "the accelerated method is run through `run`".into(),
        ))),
    }
}

/// `t_{k+1} = (1 + √(1 + 4 t_k²)) / 2`
pub fn fista_next(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

struct Schedule<'a> {
    step: &'a dyn Fn(u64) -> f64,
    gamma: &'a mut dyn FnMut(u64) -> f64,
}

#[allow(clippy::too_many_arguments)]
fn iterate(
    problem: &Problem,
    method: Method,
    x0: &[f64],
    schedule: Schedule<'_>,
    epsilon: f64,
    max_iters: usize,
    stop_rule: StopRule,
    opts: &SubproblemOptions,
) -> std::result::Result<RunTrace, SolverError> {
    problem.check_dim(x0)?;
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("starting point".into()).into());
    }
    let f0 = problem.objective_values(x0)?;
    let mut trace = RunTrace {
        method,
        x0: x0.to_vec(),
        f0,
        records: Vec::new(),
        stopping_reason: StoppingReason::MaxIters,
        failure: None,
    };
    let mut x_prev = x0.to_vec();
    let mut x = x0.to_vec();
    for k in 0..max_iters as u64 {
        let s = (schedule.step)(k);
        if stop_rule == StopRule::SubproblemResidual {
            let input = SubproblemInput { x: &x, y: &x, s };
            match subproblem::solve(problem, &input, opts) {
                Ok(sol) if linalg::dist_inf(&sol.z, &x) < epsilon => {
                    trace.stopping_reason = StoppingReason::ToleranceMet;
                    return Ok(trace);
                }
                Ok(_) => {}
                Err(e) => return Ok(fail(trace, e)),
            }
        }
        let gamma = (schedule.gamma)(k);
        let y = momentum_point(&x, &x_prev, gamma);
        let input = SubproblemInput { x: &x, y: &y, s };
        let sol = match subproblem::solve(problem, &input, opts) {
            Ok(sol) => sol,
            Err(e) => return Ok(fail(trace, e)),
        };
        let x_next = sol.z;
        let f_values = problem.objective_values(&x_next)?;
        let step_norm = linalg::dist2_sq(&x_next, &x).sqrt();
        trace.records.push(IterationRecord {
            k,
            s,
            gamma,
            f_values,
            step_norm,
            merit: None,
            y,
            x: x_next.clone(),
        });
        x_prev = std::mem::replace(&mut x, x_next);
        if stop_rule == StopRule::StepNorm && step_norm < epsilon {
            trace.stopping_reason = StoppingReason::ToleranceMet;
            return Ok(trace);
        }
    }
    Ok(trace)
}

fn fail(mut trace: RunTrace, e: SubproblemFailure) -> RunTrace {
    trace.stopping_reason = StoppingReason::SubproblemFailure;
    trace.failure = Some(e.to_string());
    trace
}
