//! Benchmark problems and multi-start Pareto front generation.
//!
//! All three benchmarks are bi-objective convex quadratics with an optional
//! `w·‖x‖₁` term on both objectives:
//!
//! - BK1: `f₁ = x₁² + x₂²`, `f₂ = (x₁−5)² + (x₂−5)²`
//! - JOS1: `f₁ = (1/n) Σ x_i²`, `f₂ = (1/n) Σ (x_i − 2)²`
//! - SP1: `f₁ = (x₁−1)² + (x₁−x₂)²`, `f₂ = (x₂−3)² + (x₁−x₂)²`

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{
    validate_config, NonsmoothTerm, Problem, Quadratic, SmoothObjective, SolverConfig,
};
use crate::prox::soft_threshold;
use crate::solver::{self, RunTrace, SolverError, StoppingReason};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BenchmarkName {
    #[serde(rename = "BK1")]
    Bk1,
    #[serde(rename = "JOS1")]
    Jos1,
    #[serde(rename = "SP1")]
    Sp1,
}

impl fmt::Display for BenchmarkName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bk1 => "BK1",
            Self::Jos1 => "JOS1",
            Self::Sp1 => "SP1",
        })
    }
}

impl FromStr for BenchmarkName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "BK1" => Ok(Self::Bk1),
            "JOS1" => Ok(Self::Jos1),
            "SP1" => Ok(Self::Sp1),
            _ => Err(Error::UnknownBenchmark(s.to_string())),
        }
    }
}

impl BenchmarkName {
    pub fn default_dim(self) -> usize {
        match self {
            Self::Jos1 => 50,
            _ => 2,
        }
    }

    pub fn default_box(self, n: usize) -> StartBox {
        let (lo, hi) = match self {
            Self::Bk1 => (-5.0, 10.0),
            Self::Jos1 => (-10.0, 10.0),
            Self::Sp1 => (-5.0, 5.0),
        };
        StartBox {
            lower: vec![lo; n],
            upper: vec![hi; n],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl StartBox {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::InvalidArgument(format!(
                "start box must have dimension {n}"
            )));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if !(l.is_finite() && u.is_finite() && l < u) {
                return Err(Error::InvalidArgument(format!(
                    "start box needs finite lower < upper at coordinate {j}"
                )));
            }
        }
        Ok(())
    }

    /// `count` points drawn uniformly from the box; deterministic in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                self.lower
                    .iter()
                    .zip(&self.upper)
                    .map(|(l, u)| rng.random_range(*l..*u))
                    .collect()
            })
            .collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (l, u))| v >= l && v <= u)
    }
}

pub const DEFAULT_L1_WEIGHT: f64 = 0.1;
pub const DEFAULT_NUM_STARTS: usize = 500;

/// A fully resolved benchmark instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBenchmarkSpec")]
pub struct BenchmarkSpec {
    pub name: BenchmarkName,
    pub n: usize,
    pub l1_weight: f64,
    pub start_box: StartBox,
    pub num_starts: usize,
    pub seed: u64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBenchmarkSpec {
    name: BenchmarkName,
    n: Option<usize>,
    l1_weight: Option<f64>,
    start_box: Option<StartBox>,
    num_starts: Option<usize>,
    seed: Option<u64>,
}

impl TryFrom<RawBenchmarkSpec> for BenchmarkSpec {
    type Error = Error;

    fn try_from(raw: RawBenchmarkSpec) -> Result<Self> {
        let n = raw.n.unwrap_or(raw.name.default_dim());
        let spec = Self {
            name: raw.name,
            n,
            l1_weight: raw.l1_weight.unwrap_or(DEFAULT_L1_WEIGHT),
            start_box: raw.start_box.unwrap_or_else(|| raw.name.default_box(n)),
            num_starts: raw.num_starts.unwrap_or(DEFAULT_NUM_STARTS),
            seed: raw.seed.unwrap_or(0),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl BenchmarkSpec {
    /// Defaults for `name`: ℓ1 weight 0.1, 500 starts, seed 0.
    pub fn new(name: BenchmarkName) -> Self {
        let n = name.default_dim();
        Self {
            name,
            n,
            l1_weight: DEFAULT_L1_WEIGHT,
            start_box: name.default_box(n),
            num_starts: DEFAULT_NUM_STARTS,
            seed: 0,
        }
    }

    pub fn smooth(name: BenchmarkName) -> Self {
        Self {
            l1_weight: 0.0,
            ..Self::new(name)
        }
    }

    /// JOS1 in dimension `n`, resizing the default start box.
    pub fn with_dim(mut self, n: usize) -> Self {
        self.n = n;
        self.start_box = self.name.default_box(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        if self.name != BenchmarkName::Jos1 && self.n != 2 {
            return Err(Error::InvalidArgument(format!(
                "{} is defined in dimension 2 only",
                self.name
            )));
        }
        if !(self.l1_weight.is_finite() && self.l1_weight >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "l1_weight must be finite and nonnegative, got {}",
                self.l1_weight
            )));
        }
        if self.num_starts == 0 {
            return Err(Error::InvalidArgument("num_starts must be positive".into()));
        }
        self.start_box.validate(self.n)
    }
}

/// Build the benchmark problem with analytic gradients and Lipschitz bounds.
pub fn make_problem(spec: &BenchmarkSpec) -> Result<Problem> {
    spec.validate()?;
    let n = spec.n;
    let smooth = match spec.name {
        BenchmarkName::Bk1 => vec![
            Quadratic::isotropic(1.0, &[0.0, 0.0], 0.0)?,
            Quadratic::isotropic(1.0, &[5.0, 5.0], 0.0)?,
        ],
        BenchmarkName::Jos1 => {
            let scale = 1.0 / n as f64;
            vec![
                Quadratic::isotropic(scale, &vec![0.0; n], 0.0)?,
                Quadratic::isotropic(scale, &vec![2.0; n], 0.0)?,
            ]
        }
        BenchmarkName::Sp1 => vec![
            Quadratic::new(vec![vec![4.0, -2.0], vec![-2.0, 2.0]], vec![-2.0, 0.0], 1.0)?,
            Quadratic::new(vec![vec![2.0, -2.0], vec![-2.0, 4.0]], vec![0.0, -6.0], 9.0)?,
        ],
    };
    let g = if spec.l1_weight > 0.0 {
        NonsmoothTerm::WeightedL1 {
            weight: spec.l1_weight,
        }
    } else {
        NonsmoothTerm::Zero
    };
    Problem::new(
        smooth.into_iter().map(SmoothObjective::Quadratic).collect(),
        vec![g.clone(), g],
    )
}

/// Minimizers of `Σ λ_i F_i` for `λ = (t, 1−t)`, `t` on a uniform grid of
/// `samples` points in `[0, 1]`. For these convex problems this traces the
/// weakly Pareto set.
pub fn analytic_pareto_set(spec: &BenchmarkSpec, samples: usize) -> Result<Vec<Vec<f64>>> {
    let problem = make_problem(spec)?;
    let quads: Vec<&Quadratic> = problem
        .smooth()
        .iter()
        .map(|f| match f {
            SmoothObjective::Quadratic(q) => q,
            SmoothObjective::Custom(_) => unreachable!("benchmarks are quadratic"),
        })
        .collect();
    let n = spec.n;
    let diagonal = quads
        .iter()
        .all(|q| (0..n).all(|i| (0..n).all(|j| i == j || q.hessian_row(i)[j] == 0.0)));
    if spec.l1_weight > 0.0 && !diagonal {
        return Err(Error::InvalidArgument(format!(
            "no closed-form Pareto set for {} with an l1 term",
            spec.name
        )));
    }
    let samples = samples.max(2);
    let mut out = Vec::with_capacity(samples);
    for s in 0..samples {
        let t = s as f64 / (samples - 1) as f64;
        let w = [t, 1.0 - t];
        let mut h = DMatrix::<f64>::zeros(n, n);
        let mut c = DVector::<f64>::zeros(n);
        for (wi, q) in w.iter().zip(&quads) {
            h += q.hessian_matrix() * *wi;
            c += DVector::from_column_slice(q.linear()) * *wi;
        }
        let x = if spec.l1_weight > 0.0 {
            // separable: minimize ½ h_jj x² + c_j x + w|x|
            (0..n)
                .map(|j| -soft_threshold(c[j], spec.l1_weight) / h[(j, j)])
                .collect()
        } else {
            let sol = h
                .lu()
                .solve(&(-c))
                .ok_or_else(|| Error::InvalidArgument("singular weighted Hessian".into()))?;
            sol.iter().cloned().collect()
        };
        out.push(x);
    }
    Ok(out)
}

/// Objective vectors of [`analytic_pareto_set`].
pub fn analytic_front(spec: &BenchmarkSpec, samples: usize) -> Result<Vec<Vec<f64>>> {
    let problem = make_problem(spec)?;
    analytic_pareto_set(spec, samples)?
        .iter()
        .map(|x| problem.objective_values(x))
        .collect()
}

/// `mask[j]` is false iff some other point is strictly smaller than point `j`
/// in every objective.
pub fn nondominated_filter(points: &[Vec<f64>]) -> Result<Vec<bool>> {
    let Some(first) = points.first() else {
        return Ok(Vec::new());
    };
    let m = first.len();
    if points.iter().any(|p| p.len() != m) {
        return Err(Error::InvalidArgument(
            "all objective vectors must have the same length".into(),
        ));
    }
    if m == 2 {
        return Ok(sweep_bi_objective(points));
    }
    Ok((0..points.len())
        .map(|j| {
            !points
                .iter()
                .enumerate()
                .any(|(i, p)| i != j && strictly_dominates(p, &points[j]))
        })
        .collect())
}

pub fn strictly_dominates(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x < y)
}

// Sort by the first objective; a point is dominated iff some point with a
// strictly smaller first objective also has a strictly smaller second one.
fn sweep_bi_objective(points: &[Vec<f64>]) -> Vec<bool> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]));
    let mut mask = vec![true; points.len()];
    let mut best_second = f64::INFINITY;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && points[order[j]][0] == points[order[i]][0] {
            j += 1;
        }
        for &idx in &order[i..j] {
            if best_second < points[idx][1] {
                mask[idx] = false;
            }
        }
        for &idx in &order[i..j] {
            best_second = best_second.min(points[idx][1]);
        }
        i = j;
    }
    // NaN never compares below anything, so NaN points survive; drop them
    for (k, p) in points.iter().enumerate() {
        if p.iter().any(|v| v.is_nan()) {
            mask[k] = false;
        }
    }
    mask
}

/// Clear `mask` entries whose objective vector lies within `tol` (max norm)
/// of an earlier kept entry.
pub fn dedup_mask(points: &[Vec<f64>], mask: &mut [bool], tol: f64) {
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..points.len() {
        if !mask[j] {
            continue;
        }
        if kept
            .iter()
            .any(|&i| linalg::dist_inf(&points[i], &points[j]) <= tol)
        {
            mask[j] = false;
        } else {
            kept.push(j);
        }
    }
}

/// Symmetric Hausdorff distance between two finite point sets.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

/// `max_{p ∈ a} min_{q ∈ b} ‖p − q‖`
pub fn directed_hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .map(|p| {
            b.iter()
                .map(|q| linalg::dist2_sq(p, q))
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontSolution {
    pub x0: Vec<f64>,
    pub x_final: Vec<f64>,
    pub f_final: Vec<f64>,
    pub iterations: usize,
    pub stopping_reason: StoppingReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontResult {
    pub solutions: Vec<FrontSolution>,
    pub nondominated_mask: Vec<bool>,
}

impl FrontResult {
    pub fn front(&self) -> impl Iterator<Item = &FrontSolution> {
        self.solutions
            .iter()
            .zip(&self.nondominated_mask)
            .filter(|(_, k)| **k)
            .map(|(s, _)| s)
    }

    pub fn front_values(&self) -> Vec<Vec<f64>> {
        self.front().map(|s| s.f_final.clone()).collect()
    }
}

/// Duplicate tolerance used when collapsing identical front points.
pub const DEDUP_TOL: f64 = 1e-9;

/// Run the accelerated method from `spec.num_starts` uniform starts and
/// keep the weakly nondominated, deduplicated final points.
pub fn generate_front(
    spec: &BenchmarkSpec,
    config: &SolverConfig,
) -> std::result::Result<FrontResult, SolverError> {
    let problem = make_problem(spec)?;
    validate_config(config, problem.lipschitz()).map_err(SolverError::Config)?;
    let starts = spec.start_box.sample(spec.num_starts, spec.seed);
    front_from_starts(&problem, config, starts)
}

pub fn front_from_starts(
    problem: &Problem,
    config: &SolverConfig,
    starts: Vec<Vec<f64>>,
) -> std::result::Result<FrontResult, SolverError> {
    front_from_starts_with(starts, |x0| solver::run(problem, config, x0))
}

/// Multi-start front with an arbitrary per-start solver.
pub fn front_from_starts_with<F>(
    starts: Vec<Vec<f64>>,
    solve: F,
) -> std::result::Result<FrontResult, SolverError>
where
    F: Fn(&[f64]) -> std::result::Result<RunTrace, SolverError> + Sync,
{
    let solutions = starts
        .into_par_iter()
        .map(|x0| {
            let trace = solve(&x0)?;
            Ok(FrontSolution {
                x_final: trace.final_point().to_vec(),
                f_final: trace.final_values().to_vec(),
                iterations: trace.iterations(),
                stopping_reason: trace.stopping_reason,
                x0,
            })
        })
        .collect::<std::result::Result<Vec<_>, SolverError>>()?;
    let values: Vec<Vec<f64>> = solutions.iter().map(|s| s.f_final.clone()).collect();
    let mut mask = nondominated_filter(&values)?;
    for (m, s) in mask.iter_mut().zip(&solutions) {
        if s.stopping_reason == StoppingReason::SubproblemFailure {
            *m = false;
        }
    }
    dedup_mask(&values, &mut mask, DEDUP_TOL);
    Ok(FrontResult {
        solutions,
        nondominated_mask: mask,
    })
}
