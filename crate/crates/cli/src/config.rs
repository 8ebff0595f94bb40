//! Experiment configuration: one JSON document per run.
//!
//! Optional fields are filled in by [`ExperimentConfig::resolve`], and the
//! resolved document is what `summary.json` echoes, so feeding it back in
//! reproduces the run exactly.

use std::path::PathBuf;

use moapg_core::bench::{self, BenchmarkSpec, StartBox};
use moapg_core::io::ProblemDescription;
use moapg_core::merit::ReferenceSettings;
use moapg_core::problem::{DEFAULT_EPSILON, DEFAULT_MAX_ITERS};
use moapg_core::{admissible_s0_bound, validate_config, Method, Problem, SolverConfig, StopRule};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemSource,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default)]
    pub emit_svg: bool,
    /// Start point for `solve`, `rate` and `compare`; sampled from the
    /// start box with the problem seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub reference: ReferenceSection,
    #[serde(default)]
    pub compare: CompareSection,
}

/// Exactly one of `benchmark` or `inline`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSource {
    Benchmark(BenchmarkSpec),
    Inline(InlineProblem),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineProblem {
    pub problem: ProblemDescription,
    /// Needed by `front`, `rate`, `compare`, and by `solve` without `x0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_box: Option<StartBox>,
    #[serde(default = "default_num_starts")]
    pub num_starts: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Defaults to `s0_fraction` times the admissible supremum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s0: Option<f64>,
    #[serde(default = "default_fraction")]
    pub s0_fraction: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub stop_rule: StopRule,
    /// Constant step of the `pg` and `fista` baselines; defaults to `s0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_step: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            alpha: default_alpha(),
            s0: None,
            s0_fraction: default_fraction(),
            epsilon: DEFAULT_EPSILON,
            max_iters: DEFAULT_MAX_ITERS,
            stop_rule: StopRule::default(),
            baseline_step: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    /// Load this reference front instead of building one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default = "default_ref_starts")]
    pub num_starts: usize,
    #[serde(default = "default_ref_seed")]
    pub seed: u64,
    #[serde(default = "default_ref_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_ref_iters")]
    pub max_iters: usize,
}

impl Default for ReferenceSection {
    fn default() -> Self {
        let d = ReferenceSettings::default();
        Self {
            path: None,
            num_starts: d.num_starts,
            seed: d.seed,
            epsilon: d.epsilon,
            max_iters: d.max_iters,
        }
    }
}

impl ReferenceSection {
    pub fn settings(&self) -> ReferenceSettings {
        ReferenceSettings {
            num_starts: self.num_starts,
            seed: self.seed,
            epsilon: self.epsilon,
            max_iters: self.max_iters,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareSection {
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            methods: default_methods(),
            threshold: default_threshold(),
        }
    }
}

fn default_method() -> Method {
    Method::Accelerated
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

fn default_num_starts() -> usize {
    bench::DEFAULT_NUM_STARTS
}

fn default_alpha() -> f64 {
    4.0
}

fn default_fraction() -> f64 {
    0.99
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

fn default_ref_starts() -> usize {
    ReferenceSettings::default().num_starts
}

fn default_ref_seed() -> u64 {
    ReferenceSettings::default().seed
}

fn default_ref_epsilon() -> f64 {
    ReferenceSettings::default().epsilon
}

fn default_ref_iters() -> usize {
    ReferenceSettings::default().max_iters
}

fn default_methods() -> Vec<Method> {
    vec![Method::Accelerated, Method::Pg, Method::Fista]
}

fn default_threshold() -> f64 {
    1e-6
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub emit_svg: bool,
}

/// A validated experiment with its problem built.
#[derive(Debug, Clone)]
pub struct Experiment {
    /// Echoed verbatim into `summary.json`.
    pub config: ExperimentConfig,
    pub problem: Problem,
    pub solver: SolverConfig,
    pub baseline_step: f64,
    pub label: String,
}

impl Experiment {
    pub fn start_box(&self) -> Option<&StartBox> {
        match &self.config.problem {
            ProblemSource::Benchmark(spec) => Some(&spec.start_box),
            ProblemSource::Inline(p) => p.start_box.as_ref(),
        }
    }

    pub fn require_start_box(&self) -> Result<&StartBox, CliError> {
        self.start_box().ok_or_else(|| {
            CliError::Config("inline problem needs `start_box` for this command".into())
        })
    }

    pub fn num_starts(&self) -> usize {
        match &self.config.problem {
            ProblemSource::Benchmark(spec) => spec.num_starts,
            ProblemSource::Inline(p) => p.num_starts,
        }
    }

    pub fn seed(&self) -> u64 {
        match &self.config.problem {
            ProblemSource::Benchmark(spec) => spec.seed,
            ProblemSource::Inline(p) => p.seed,
        }
    }

    /// `x0` from the config; panics if called before [`Self::materialize_x0`].
    pub fn x0(&self) -> &[f64] {
        self.config.x0.as_deref().expect("x0 materialized")
    }

    pub fn materialize_x0(&mut self) -> Result<(), CliError> {
        if let Some(x0) = &self.config.x0 {
            self.problem
                .check_dim(x0)
                .map_err(|e| CliError::Config(format!("x0: {e}")))?;
            return Ok(());
        }
        let x0 = self.require_start_box()?.sample(1, self.seed()).remove(0);
        self.config.x0 = Some(x0);
        Ok(())
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("invalid config: {e}")))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.outputs = out.clone();
        }
        if let Some(seed) = o.seed {
            match &mut self.problem {
                ProblemSource::Benchmark(spec) => spec.seed = seed,
                ProblemSource::Inline(p) => p.seed = seed,
            }
        }
        self.emit_svg |= o.emit_svg;
    }

    /// Build the problem, fill in defaults and check every constraint.
    pub fn resolve(mut self) -> Result<Experiment, CliError> {
        let (problem, label) = match &self.problem {
            ProblemSource::Benchmark(spec) => {
                let p = bench::make_problem(spec).map_err(|e| CliError::Config(e.to_string()))?;
                (p, spec.name.to_string())
            }
            ProblemSource::Inline(inline) => {
                let p = inline
                    .problem
                    .build()
                    .map_err(|e| CliError::Config(e.to_string()))?;
                if let Some(b) = &inline.start_box {
                    b.validate(p.dim())
                        .map_err(|e| CliError::Config(e.to_string()))?;
                }
                if inline.num_starts == 0 {
                    return Err(CliError::Config("num_starts must be positive".into()));
                }
                (p, "inline".to_string())
            }
        };
        let l = problem.lipschitz();
        let sec = &mut self.solver;
        if !(sec.s0_fraction > 0.0 && sec.s0_fraction < 1.0) {
            return Err(CliError::Config(format!(
                "s0_fraction must lie strictly between 0 and 1, got {}",
                sec.s0_fraction
            )));
        }
        let s0 = match sec.s0 {
            Some(s0) => s0,
            None => {
                let bound = admissible_s0_bound(sec.alpha, l);
                if bound.is_finite() {
                    sec.s0_fraction * bound
                } else {
                    1.0
                }
            }
        };
        sec.s0 = Some(s0);
        let solver = SolverConfig {
            alpha: sec.alpha,
            s0,
            epsilon: sec.epsilon,
            max_iters: sec.max_iters,
            stop_rule: sec.stop_rule,
        };
        validate_config(&solver, l).map_err(|v| CliError::Config(v.to_string()))?;
        let baseline_step = *sec.baseline_step.get_or_insert(s0);
        if !(baseline_step > 0.0 && baseline_step.is_finite()) || baseline_step * l > 1.0 {
            return Err(CliError::Config(format!(
                "violated `0 < baseline_step <= 1/L`: baseline_step = {baseline_step}, L = {l}"
            )));
        }
        if !(self.compare.threshold.is_finite() && self.compare.threshold > 0.0) {
            return Err(CliError::Config(
                "compare.threshold must be positive".into(),
            ));
        }
        if self.compare.methods.is_empty() {
            return Err(CliError::Config("compare.methods must not be empty".into()));
        }
        Ok(Experiment {
            config: self,
            problem,
            solver,
            baseline_step,
            label,
        })
    }
}
