//! Composite multiobjective problems `min (f_1 + g_1, ..., f_m + g_m)`.
//!
//! Every `f_i` is convex and smooth with a Lipschitz gradient; every `g_i` is
//! one of the prox-friendly terms in [`NonsmoothTerm`]. A problem holds all
//! objectives immutably, so it can be shared across threads.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// A user-supplied smooth convex function.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64], out: &mut [f64]);
    /// Lipschitz constant of the gradient, if known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }
}

/// `f(x) = ½ xᵀQx + cᵀx + d` with symmetric positive semidefinite `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    n: usize,
    // row-major n×n
    hessian: Vec<f64>,
    linear: Vec<f64>,
    constant: f64,
}

impl Quadratic {
    pub fn new(hessian: Vec<Vec<f64>>, linear: Vec<f64>, constant: f64) -> Result<Self> {
        let n = linear.len();
        if n == 0 {
            return Err(Error::InvalidQuadratic("dimension must be positive".into()));
        }
        if hessian.len() != n || hessian.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidQuadratic(format!(
                "hessian must be {n}x{n} to match the linear term"
            )));
        }
        let flat: Vec<f64> = hessian.into_iter().flatten().collect();
        if flat.iter().chain(&linear).any(|v| !v.is_finite()) || !constant.is_finite() {
            return Err(Error::InvalidQuadratic(
                "coefficients must be finite".into(),
            ));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (flat[i * n + j], flat[j * n + i]);
                if (a - b).abs() > 1e-12 * (1.0 + a.abs().max(b.abs())) {
                    return Err(Error::InvalidQuadratic(format!(
                        "hessian is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let q = Self {
            n,
            hessian: flat,
            linear,
            constant,
        };
        if q.min_eigenvalue() < -1e-10 * (1.0 + q.spectral_norm()) {
            return Err(Error::InvalidQuadratic(
                "hessian is not positive semidefinite".into(),
            ));
        }
        Ok(q)
    }

    /// `f(x) = scale·‖x − center‖² + constant`.
    pub fn isotropic(scale: f64, center: &[f64], constant: f64) -> Result<Self> {
        let n = center.len();
        let mut h = vec![vec![0.0; n]; n];
        for (i, row) in h.iter_mut().enumerate() {
            row[i] = 2.0 * scale;
        }
        let linear = center.iter().map(|c| -2.0 * scale * c).collect();
        let k = scale * linalg::norm2_sq(center) + constant;
        Self::new(h, linear, k)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn hessian_row(&self, i: usize) -> &[f64] {
        &self.hessian[i * self.n..(i + 1) * self.n]
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn hessian_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.hessian)
    }

    pub fn hessian_vec(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = linalg::dot(self.hessian_row(i), v);
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let mut quad = 0.0;
        for i in 0..self.n {
            quad += x[i] * linalg::dot(self.hessian_row(i), x);
        }
        0.5 * quad + linalg::dot(&self.linear, x) + self.constant
    }

    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        self.hessian_vec(x, out);
        for (o, c) in out.iter_mut().zip(&self.linear) {
            *o += c;
        }
    }

    /// Largest absolute eigenvalue of the Hessian.
    pub fn spectral_norm(&self) -> f64 {
        let (lo, hi) = self.eigen_range();
        lo.abs().max(hi.abs())
    }

    fn min_eigenvalue(&self) -> f64 {
        self.eigen_range().0
    }

    fn eigen_range(&self) -> (f64, f64) {
        match self.n {
            1 => (self.hessian[0], self.hessian[0]),
            2 => {
                let (a, b, c) = (self.hessian[0], self.hessian[1], self.hessian[3]);
                let mid = 0.5 * (a + c);
                let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                (mid - rad, mid + rad)
            }
            _ => {
                let eig = self.hessian_matrix().symmetric_eigen();
                eig.eigenvalues
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| {
                        (lo.min(e), hi.max(e))
                    })
            }
        }
    }
}

#[derive(Clone)]
pub enum SmoothObjective {
    Quadratic(Quadratic),
    Custom(Arc<dyn SmoothFunction>),
}

impl fmt::Debug for SmoothObjective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Quadratic(q) => f.debug_tuple("Quadratic").field(q).finish(),
            Self::Custom(c) => write!(f, "Custom(dim = {})", c.dim()),
        }
    }
}

impl SmoothObjective {
    pub fn dim(&self) -> usize {
        match self {
            Self::Quadratic(q) => q.dim(),
            Self::Custom(c) => c.dim(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::Quadratic(q) => q.value(x),
            Self::Custom(c) => c.value(x),
        }
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Self::Quadratic(q) => q.gradient(x, out),
            Self::Custom(c) => c.gradient(x, out),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }

    /// Known Lipschitz bound of the gradient: the Hessian spectral norm for
    /// quadratics, whatever the custom function reports otherwise.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            Self::Quadratic(q) => Some(q.spectral_norm()),
            Self::Custom(c) => c.lipschitz(),
        }
    }
}

/// Nonsmooth convex term `g_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NonsmoothTerm {
    Zero,
    #[serde(rename = "l1")]
    WeightedL1 {
        weight: f64,
    },
    #[serde(rename = "box")]
    BoxIndicator {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonsmoothFamily {
    Zero,
    L1,
    Box,
}

impl NonsmoothTerm {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Self::Zero => Ok(()),
            Self::WeightedL1 { weight } => {
                if weight.is_finite() && *weight >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidNonsmooth(format!(
                        "l1 weight must be finite and nonnegative, got {weight}"
                    )))
                }
            }
            Self::BoxIndicator { lower, upper } => {
                if lower.len() != n || upper.len() != n {
                    return Err(Error::InvalidNonsmooth(format!(
                        "box bounds must have dimension {n}"
                    )));
                }
                if lower.iter().chain(upper).any(|v| v.is_nan()) {
                    return Err(Error::InvalidNonsmooth("box bound is NaN".into()));
                }
                if let Some(i) = (0..n).find(|&i| lower[i] > upper[i]) {
                    return Err(Error::InvalidNonsmooth(format!(
                        "box lower bound exceeds upper bound at coordinate {i}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn family(&self) -> NonsmoothFamily {
        match self {
            Self::Zero => NonsmoothFamily::Zero,
            Self::WeightedL1 { .. } => NonsmoothFamily::L1,
            Self::BoxIndicator { .. } => NonsmoothFamily::Box,
        }
    }

    /// `g(x)`, or `None` outside the box of an indicator.
    pub fn value(&self, x: &[f64]) -> Option<f64> {
        match self {
            Self::Zero => Some(0.0),
            Self::WeightedL1 { weight } => Some(weight * linalg::norm1(x)),
            Self::BoxIndicator { lower, upper } => {
                let inside = x
                    .iter()
                    .zip(lower.iter().zip(upper))
                    .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi);
                inside.then_some(0.0)
            }
        }
    }
}

/// Combine two families, rejecting the ℓ1/box mix.
pub fn merge_families(a: NonsmoothFamily, b: NonsmoothFamily) -> Result<NonsmoothFamily> {
    use NonsmoothFamily::*;
    match (a, b) {
        (Zero, f) | (f, Zero) => Ok(f),
        (L1, L1) => Ok(L1),
        (Box, Box) => Ok(Box),
        _ => Err(Error::UnsupportedCombination(
            "weighted-l1 and box-indicator terms cannot be mixed".into(),
        )),
    }
}

/// `F(x)`. `values` holds the finite parts; `infeasible` marks a point
/// outside some box indicator, where the true value is `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveVector {
    pub values: Vec<f64>,
    pub infeasible: bool,
}

impl ObjectiveVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_feasible(&self) -> bool {
        !self.infeasible
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    n: usize,
    smooth: Vec<SmoothObjective>,
    nonsmooth: Vec<NonsmoothTerm>,
    family: NonsmoothFamily,
    lipschitz_per: Vec<f64>,
    lipschitz_global: f64,
}

impl Problem {
    /// Build a problem; every smooth part must carry a Lipschitz bound
    /// (quadratics always do).
    pub fn new(smooth: Vec<SmoothObjective>, nonsmooth: Vec<NonsmoothTerm>) -> Result<Self> {
        let per = smooth
            .iter()
            .enumerate()
            .map(|(i, f)| f.lipschitz().ok_or(Error::UnknownLipschitz { index: i }))
            .collect::<Result<Vec<_>>>()?;
        Self::with_bounds(smooth, nonsmooth, per)
    }

    /// Build a problem with explicit per-objective Lipschitz bounds.
    pub fn with_bounds(
        smooth: Vec<SmoothObjective>,
        nonsmooth: Vec<NonsmoothTerm>,
        lipschitz_per: Vec<f64>,
    ) -> Result<Self> {
        if smooth.is_empty() {
            return Err(Error::NoObjectives);
        }
        if smooth.len() != nonsmooth.len() {
            return Err(Error::ObjectiveCountMismatch {
                smooth: smooth.len(),
                nonsmooth: nonsmooth.len(),
            });
        }
        if lipschitz_per.len() != smooth.len() {
            return Err(Error::InvalidArgument(
                "one Lipschitz bound per objective is required".into(),
            ));
        }
        let n = smooth[0].dim();
        if n == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        for f in &smooth {
            if f.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: f.dim(),
                });
            }
        }
        let mut family = NonsmoothFamily::Zero;
        for g in &nonsmooth {
            g.validate(n)?;
            family = merge_families(family, g.family())?;
        }
        if family == NonsmoothFamily::Box {
            // the domain of F is the intersection of all boxes
            let mut lo = vec![f64::NEG_INFINITY; n];
            let mut hi = vec![f64::INFINITY; n];
            for g in &nonsmooth {
                if let NonsmoothTerm::BoxIndicator { lower, upper } = g {
                    for j in 0..n {
                        lo[j] = lo[j].max(lower[j]);
                        hi[j] = hi[j].min(upper[j]);
                    }
                }
            }
            if (0..n).any(|j| lo[j] > hi[j]) {
                return Err(Error::InvalidNonsmooth(
                    "box indicators have an empty intersection".into(),
                ));
            }
        }
        for &l in &lipschitz_per {
            if !l.is_finite() || l < 0.0 {
                return Err(Error::InvalidLipschitz(l));
            }
        }
        let lipschitz_global = lipschitz_per.iter().cloned().fold(0.0, f64::max);
        Ok(Self {
            n,
            smooth,
            nonsmooth,
            family,
            lipschitz_per,
            lipschitz_global,
        })
    }

    /// Replace `L(f)` by a larger user-supplied bound.
    pub fn with_lipschitz(mut self, l: f64) -> Result<Self> {
        if !l.is_finite() || l < self.lipschitz_global {
            return Err(Error::InvalidLipschitz(l));
        }
        self.lipschitz_global = l;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn num_objectives(&self) -> usize {
        self.smooth.len()
    }

    pub fn smooth(&self) -> &[SmoothObjective] {
        &self.smooth
    }

    pub fn nonsmooth(&self) -> &[NonsmoothTerm] {
        &self.nonsmooth
    }

    pub fn family(&self) -> NonsmoothFamily {
        self.family
    }

    pub fn lipschitz_per_objective(&self) -> &[f64] {
        &self.lipschitz_per
    }

    /// `L(f)`: the largest per-objective gradient Lipschitz bound.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz_global
    }

    pub fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Evaluate `F(x) = (f_i(x) + g_i(x))_i`.
    pub fn evaluate(&self, x: &[f64]) -> Result<ObjectiveVector> {
        self.check_dim(x)?;
        let mut infeasible = false;
        let values = self
            .smooth
            .iter()
            .zip(&self.nonsmooth)
            .map(|(f, g)| {
                let gv = g.value(x).unwrap_or_else(|| {
                    infeasible = true;
                    0.0
                });
                f.value(x) + gv
            })
            .collect();
        Ok(ObjectiveVector { values, infeasible })
    }

    /// `F(x)` as plain values, failing on infeasible points.
    pub fn objective_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = self.evaluate(x)?;
        if v.infeasible {
            return Err(Error::Infeasible);
        }
        Ok(v.values)
    }

    pub fn smooth_values(&self, x: &[f64]) -> Vec<f64> {
        self.smooth.iter().map(|f| f.value(x)).collect()
    }

    pub fn gradients(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.smooth.iter().map(|f| f.gradient(x)).collect()
    }
}

/// How [`lipschitz_bound`] obtains its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LipschitzMode {
    /// Exact Hessian spectral norm; quadratics only.
    Analytic,
    /// Power iteration on Hessian-vector products at random points.
    PowerIteration {
        trials: usize,
        iters: usize,
        seed: u64,
    },
}

/// Inflation applied to power-iteration estimates, which approach the
/// spectral norm from below.
pub const POWER_ITERATION_SAFETY: f64 = 1.05;

/// Upper bound on `max_i L_i` for the smooth parts of `problem`.
pub fn lipschitz_bound(problem: &Problem, mode: LipschitzMode) -> Result<f64> {
    match mode {
        LipschitzMode::Analytic => {
            let mut l: f64 = 0.0;
            for (i, f) in problem.smooth().iter().enumerate() {
                match f {
                    SmoothObjective::Quadratic(q) => l = l.max(q.spectral_norm()),
                    SmoothObjective::Custom(_) => return Err(Error::NotQuadratic { index: i }),
                }
            }
            Ok(l)
        }
        LipschitzMode::PowerIteration {
            trials,
            iters,
            seed,
        } => {
            if trials == 0 || iters == 0 {
                return Err(Error::InvalidArgument(
                    "power iteration needs at least one trial and one iteration".into(),
                ));
            }
            let n = problem.dim();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut best: f64 = 0.0;
            for f in problem.smooth() {
                for _ in 0..trials {
                    let at: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    let mut est = 0.0;
                    let mut hv = vec![0.0; n];
                    for _ in 0..iters {
                        let nv = linalg::norm2(&v);
                        if nv == 0.0 {
                            break;
                        }
                        v.iter_mut().for_each(|c| *c /= nv);
                        hessian_vec(f, &at, &v, &mut hv);
                        est = linalg::norm2(&hv);
                        std::mem::swap(&mut v, &mut hv);
                    }
                    best = best.max(est);
                }
            }
            Ok(best * POWER_ITERATION_SAFETY)
        }
    }
}

fn hessian_vec(f: &SmoothObjective, at: &[f64], v: &[f64], out: &mut [f64]) {
    match f {
        SmoothObjective::Quadratic(q) => q.hessian_vec(v, out),
        SmoothObjective::Custom(c) => {
            let n = at.len();
            let h = 1e-5 * (1.0 + linalg::norm2(at));
            let plus: Vec<f64> = (0..n).map(|j| at[j] + h * v[j]).collect();
            let minus: Vec<f64> = (0..n).map(|j| at[j] - h * v[j]).collect();
            let mut gp = vec![0.0; n];
            let mut gm = vec![0.0; n];
            c.gradient(&plus, &mut gp);
            c.gradient(&minus, &mut gm);
            for j in 0..n {
                out[j] = (gp[j] - gm[j]) / (2.0 * h);
            }
        }
    }
}

/// Which test ends the main loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// `‖x_{k+1} − x_k‖ < ε`
    #[default]
    StepNorm,
    /// `‖p_{s_k}(x_k, x_k) − x_k‖∞ < ε`
    SubproblemResidual,
}

pub const DEFAULT_EPSILON: f64 = 1e-7;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub alpha: f64,
    pub s0: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub stop_rule: StopRule,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_max_iters() -> usize {
    DEFAULT_MAX_ITERS
}

impl SolverConfig {
    pub fn new(alpha: f64, s0: f64) -> Self {
        Self {
            alpha,
            s0,
            epsilon: DEFAULT_EPSILON,
            max_iters: DEFAULT_MAX_ITERS,
            stop_rule: StopRule::StepNorm,
        }
    }

    /// Config with `s0` at `fraction` of its admissible supremum.
    pub fn with_fraction(alpha: f64, lipschitz: f64, fraction: f64) -> Self {
        Self::new(alpha, fraction * admissible_s0_bound(alpha, lipschitz))
    }
}

/// Supremum of admissible initial steps: `(α−3)/((α−2)L)` for `α > 3`,
/// `1/L` for `α = 3`. Infinite when `L = 0`.
pub fn admissible_s0_bound(alpha: f64, lipschitz: f64) -> f64 {
    if lipschitz <= 0.0 {
        return f64::INFINITY;
    }
    if alpha > 3.0 {
        (alpha - 3.0) / ((alpha - 2.0) * lipschitz)
    } else {
        1.0 / lipschitz
    }
}

/// A violated constraint on a [`SolverConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigViolation {
    pub constraint: &'static str,
    pub detail: String,
}

impl fmt::Display for ConfigViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "violated `{}`: {}", self.constraint, self.detail)
    }
}

impl std::error::Error for ConfigViolation {}

pub fn validate_config(
    config: &SolverConfig,
    lipschitz: f64,
) -> std::result::Result<(), ConfigViolation> {
    let SolverConfig {
        alpha, s0, epsilon, ..
    } = *config;
    if !alpha.is_finite() || alpha < 3.0 {
        return Err(ConfigViolation {
            constraint: "alpha >= 3",
            detail: format!("alpha = {alpha}"),
        });
    }
    if !s0.is_finite() || s0 <= 0.0 {
        return Err(ConfigViolation {
            constraint: "s0 > 0",
            detail: format!("s0 = {s0}"),
        });
    }
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(ConfigViolation {
            constraint: "epsilon > 0",
            detail: format!("epsilon = {epsilon}"),
        });
    }
    if !lipschitz.is_finite() || lipschitz < 0.0 {
        return Err(ConfigViolation {
            constraint: "L > 0",
            detail: format!("L = {lipschitz}"),
        });
    }
    if lipschitz == 0.0 {
        return Ok(());
    }
    let inv_l = 1.0 / lipschitz;
    if alpha > 3.0 {
        let lhs = (alpha - 2.0) / (alpha - 3.0) * s0;
        if lhs >= inv_l {
            return Err(ConfigViolation {
                constraint: "(alpha-2)/(alpha-3) * s0 < 1/L",
                detail: format!(
                    "(alpha-2)/(alpha-3) * s0 = {lhs} is not strictly below 1/L = {inv_l}"
                ),
            });
        }
    } else if s0 >= inv_l {
        return Err(ConfigViolation {
            constraint: "s0 < 1/L (alpha = 3)",
            detail: format!("s0 = {s0} is not strictly below 1/L = {inv_l}"),
        });
    }
    Ok(())
}
