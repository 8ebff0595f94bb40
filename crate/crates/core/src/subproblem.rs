//! The proximal min-max subproblem
//!
//! ```text
//! min_z  max_i [ ⟨∇f_i(y), z − y⟩ + g_i(z) + f_i(y) − F_i(x) ] + ‖z − y‖² / (2s)
//! ```
//!
//! solved through its dual over the simplex. For fixed weights `λ ∈ Δ^m`
//! the inner minimization is a single closed-form prox step, so the dual
//! function `d(λ)` is cheap to evaluate and concave. Its gradient is the
//! vector of linearized objective gaps at `z(λ)`, and the duality gap
//! `max_i a_i − λ·a` certifies the returned solution.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::{NonsmoothTerm, Problem};
use crate::prox::{CombinedTerm, WeightedNonsmooth};

/// Indices whose linearized term is within this (relative) distance of the
/// maximum are treated as active.
pub const ACTIVE_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct SubproblemInput<'a> {
    /// Anchor point; supplies the offsets `F_i(x)`.
    pub x: &'a [f64],
    /// Linearization point.
    pub y: &'a [f64],
    /// Step; the proximal coefficient is `1/(2s)`.
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DualMethod {
    /// Accelerated projected gradient ascent with backtracking.
    Accelerated,
    /// Projected supergradient ascent, step `c/√t`, with iterate averaging.
    Supergradient { c: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubproblemOptions {
    pub tol: f64,
    pub max_inner: usize,
    /// Used when `m ≥ 3`; `m = 2` always bisects.
    pub method: DualMethod,
}

impl Default for SubproblemOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_inner: 5000,
            method: DualMethod::Accelerated,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    /// `p_s(x, y)`
    pub z: Vec<f64>,
    /// `θ_s(x, y)`, the primal value at `z`.
    pub theta: f64,
    pub lambda: Vec<f64>,
    pub gap: f64,
    pub active_set: Vec<usize>,
    pub inner_iterations: usize,
}

impl SubproblemSolution {
    /// Largest dual weight outside the active set.
    pub fn support_violation(&self) -> f64 {
        self.lambda
            .iter()
            .enumerate()
            .filter(|(i, _)| !self.active_set.contains(i))
            .fold(0.0, |m, (_, &l)| m.max(l))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SubproblemFailure {
    Invalid(Error),
    /// The inner budget ran out; carries the best iterate and its gap.
    NotConverged(Box<SubproblemSolution>),
}

impl fmt::Display for SubproblemFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Invalid(e) => write!(f, "{e}"),
            Self::NotConverged(best) => write!(
                f,
                "subproblem did not converge: duality gap {:e} after {} inner iterations",
                best.gap, best.inner_iterations
            ),
        }
    }
}

impl std::error::Error for SubproblemFailure {}

impl From<Error> for SubproblemFailure {
    fn from(e: Error) -> Self {
        Self::Invalid(e)
    }
}

/// Data of one subproblem instance, with everything that does not depend on
/// `z` precomputed.
#[derive(Debug, Clone)]
pub struct Linearization {
    y: Vec<f64>,
    s: f64,
    grads: Vec<Vec<f64>>,
    /// `f_i(y) − F_i(x)`
    offsets: Vec<f64>,
    terms: Vec<NonsmoothTerm>,
    kind: TermKind,
}

#[derive(Debug, Clone)]
enum TermKind {
    Zero,
    L1(Vec<f64>),
    Box(CombinedTerm),
}

impl Linearization {
    pub fn new(problem: &Problem, input: &SubproblemInput<'_>) -> Result<Self> {
        problem.check_dim(input.x)?;
        problem.check_dim(input.y)?;
        if !(input.s > 0.0 && input.s.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "subproblem step must be positive and finite, got {}",
                input.s
            )));
        }
        if input.y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("subproblem base point".into()));
        }
        let fx = problem.objective_values(input.x)?;
        let fy = problem.smooth_values(input.y);
        let offsets: Vec<f64> = fy.iter().zip(&fx).map(|(a, b)| a - b).collect();
        if offsets.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("objective values".into()));
        }
        let terms = problem.nonsmooth().to_vec();
        let kind =
            match WeightedNonsmooth::from_weights(&vec![1.0; terms.len()], &terms).combine()? {
                CombinedTerm::Zero => TermKind::Zero,
                CombinedTerm::L1 { .. } => TermKind::L1(
                    terms
                        .iter()
                        .map(|t| match t {
                            NonsmoothTerm::WeightedL1 { weight } => *weight,
                            _ => 0.0,
                        })
                        .collect(),
                ),
                b @ CombinedTerm::Box { .. } => TermKind::Box(b),
            };
        Ok(Self {
            y: input.y.to_vec(),
            s: input.s,
            grads: problem.gradients(input.y),
            offsets,
            terms,
            kind,
        })
    }

    pub fn num_objectives(&self) -> usize {
        self.grads.len()
    }

    pub fn step(&self) -> f64 {
        self.s
    }

    /// `Σ λ_i g_i` in closed form.
    pub fn combined_term(&self, lambda: &[f64]) -> CombinedTerm {
        match &self.kind {
            TermKind::Zero => CombinedTerm::Zero,
            TermKind::L1(w) => CombinedTerm::L1 {
                level: linalg::dot(lambda, w),
            },
            TermKind::Box(b) => b.clone(),
        }
    }

    /// `Σ λ_i ∇f_i(y)`
    pub fn weighted_gradient(&self, lambda: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.y.len()];
        for (l, gi) in lambda.iter().zip(&self.grads) {
            if *l != 0.0 {
                linalg::axpy(*l, gi, &mut g);
            }
        }
        g
    }

    /// Minimizer of the Lagrangian for fixed weights.
    pub fn z_of_lambda(&self, lambda: &[f64]) -> Vec<f64> {
        let g = self.weighted_gradient(lambda);
        let v: Vec<f64> = self.y.iter().zip(&g).map(|(y, g)| y - self.s * g).collect();
        self.combined_term(lambda).prox(self.s, &v)
    }

    /// Per-objective linearized terms `a_i(z)`; `+∞` outside a box.
    pub fn linearized_terms(&self, z: &[f64]) -> Vec<f64> {
        let d = linalg::sub(z, &self.y);
        self.grads
            .iter()
            .zip(&self.offsets)
            .zip(&self.terms)
            .map(|((g, off), t)| {
                let gz = t.value(z).unwrap_or(f64::INFINITY);
                linalg::dot(g, &d) + gz + off
            })
            .collect()
    }

    fn proximal_term(&self, z: &[f64]) -> f64 {
        linalg::dist2_sq(z, &self.y) / (2.0 * self.s)
    }

    /// Primal objective `φ_s(z; x, y)`.
    pub fn primal_value(&self, z: &[f64]) -> f64 {
        let a = self.linearized_terms(z);
        max_of(&a) + self.proximal_term(z)
    }

    /// `(z(λ), d(λ))`
    pub fn dual_value(&self, lambda: &[f64]) -> (Vec<f64>, f64) {
        let z = self.z_of_lambda(lambda);
        let a = self.linearized_terms(&z);
        let d = linalg::dot(lambda, &a) + self.proximal_term(&z);
        (z, d)
    }

    fn evaluate(&self, lambda: &[f64]) -> DualPoint {
        let z = self.z_of_lambda(lambda);
        let a = self.linearized_terms(&z);
        let q = self.proximal_term(&z);
        let la = linalg::dot(lambda, &a);
        let amax = max_of(&a);
        DualPoint {
            lambda: lambda.to_vec(),
            dual: la + q,
            primal: amax + q,
            gap: (amax - la).max(0.0),
            z,
            a,
        }
    }

    fn finish(&self, p: DualPoint, inner_iterations: usize) -> SubproblemSolution {
        SubproblemSolution {
            active_set: active_set(&p.a),
            theta: p.primal,
            gap: p.gap,
            lambda: p.lambda,
            z: p.z,
            inner_iterations,
        }
    }

    /// Maximize the dual over the simplex.
    pub fn solve(
        &self,
        opts: &SubproblemOptions,
    ) -> std::result::Result<SubproblemSolution, SubproblemFailure> {
        if !(opts.tol > 0.0) {
            return Err(
                Error::InvalidArgument("subproblem tolerance must be positive".into()).into(),
            );
        }
        let (best, iters) = match self.num_objectives() {
            1 => (self.evaluate(&[1.0]), 0),
            2 => self.bisect(),
            _ => match opts.method {
                DualMethod::Accelerated => self.accelerated(opts),
                DualMethod::Supergradient { c } => self.supergradient(opts, c),
            },
        };
        if !best.gap.is_finite() || best.gap > opts.tol {
            return Err(SubproblemFailure::NotConverged(Box::new(
                self.finish(best, iters),
            )));
        }
        Ok(self.finish(best, iters))
    }

    /// `m = 2`: bisection on the sign of `∂d/∂λ₁ = a_1 − a_2`, which is
    /// nonincreasing because `d` is concave.
    fn bisect(&self) -> (DualPoint, usize) {
        let at = |t: f64| self.evaluate(&[t, 1.0 - t]);
        let left = at(0.0);
        if left.a[0] - left.a[1] <= 0.0 {
            return (left, 1);
        }
        let right = at(1.0);
        if right.a[0] - right.a[1] >= 0.0 {
            return (right, 2);
        }
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        let mut best = if left.gap <= right.gap { left } else { right };
        let mut iters = 2;
        while iters < 200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let p = at(mid);
            iters += 1;
            let slope = p.a[0] - p.a[1];
            let done = p.gap == 0.0;
            if p.gap < best.gap {
                best = p;
            }
            if done {
                break;
            }
            if slope > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (best, iters)
    }

    fn accelerated(&self, opts: &SubproblemOptions) -> (DualPoint, usize) {
        let m = self.num_objectives();
        let mut lambda = vec![1.0 / m as f64; m];
        let mut cur = self.evaluate(&lambda);
        let mut best = cur.clone();
        let mut mu = lambda.clone();
        let mut mu_pt = cur.clone();
        let mut t = 1.0_f64;
        let grad_sq: f64 = self.grads.iter().map(|g| linalg::norm2_sq(g)).sum();
        let mut lip = (self.s * grad_sq).max(1e-12);
        let mut iters = 1;
        while iters < opts.max_inner && best.gap > opts.tol {
            // backtracking step from mu along the dual gradient mu_pt.a
            let next = loop {
                let step: Vec<f64> = mu.iter().zip(&mu_pt.a).map(|(l, g)| l + g / lip).collect();
                let cand_l = simplex_project(&step);
                let cand = self.evaluate(&cand_l);
                iters += 1;
                let diff = linalg::sub(&cand_l, &mu);
                let model =
                    mu_pt.dual + linalg::dot(&mu_pt.a, &diff) - 0.5 * lip * linalg::norm2_sq(&diff);
                if cand.dual >= model - 1e-15 * (1.0 + mu_pt.dual.abs()) || lip > 1e15 {
                    break cand;
                }
                lip *= 2.0;
            };
            if next.gap < best.gap {
                best = next.clone();
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            if next.dual < cur.dual {
                // restart momentum
                t = 1.0;
                mu = next.lambda.clone();
                mu_pt = next.clone();
            } else {
                let beta = (t - 1.0) / t_next;
                let extrap: Vec<f64> = next
                    .lambda
                    .iter()
                    .zip(&lambda)
                    .map(|(n, o)| n + beta * (n - o))
                    .collect();
                mu = simplex_project(&extrap);
                mu_pt = self.evaluate(&mu);
                iters += 1;
                t = t_next;
            }
            lambda = next.lambda.clone();
            cur = next;
            lip *= 0.9;
        }
        (best, iters)
    }

    fn supergradient(&self, opts: &SubproblemOptions, c: f64) -> (DualPoint, usize) {
        let m = self.num_objectives();
        let mut lambda = vec![1.0 / m as f64; m];
        let mut avg = lambda.clone();
        let mut best = self.evaluate(&lambda);
        let mut iters = 1;
        let mut t = 1usize;
        while iters < opts.max_inner && best.gap > opts.tol {
            let p = self.evaluate(&lambda);
            iters += 1;
            if p.gap < best.gap {
                best = p.clone();
            }
            let norm = linalg::norm2(&p.a).max(1e-300);
            let eta = c / (t as f64).sqrt();
            let step: Vec<f64> = lambda
                .iter()
                .zip(&p.a)
                .map(|(l, g)| l + eta * g / norm)
                .collect();
            lambda = simplex_project(&step);
            let w = 1.0 / (t as f64 + 1.0);
            for (a, l) in avg.iter_mut().zip(&lambda) {
                *a += w * (l - *a);
            }
            let pa = self.evaluate(&avg);
            iters += 1;
            if pa.gap < best.gap {
                best = pa;
            }
            t += 1;
        }
        (best, iters)
    }
}

#[derive(Debug, Clone)]
struct DualPoint {
    lambda: Vec<f64>,
    z: Vec<f64>,
    a: Vec<f64>,
    dual: f64,
    primal: f64,
    gap: f64,
}

fn max_of(a: &[f64]) -> f64 {
    a.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn active_set(a: &[f64]) -> Vec<usize> {
    let top = max_of(a);
    let tol = ACTIVE_TIE_TOL * (1.0 + top.abs());
    (0..a.len()).filter(|&i| a[i] >= top - tol).collect()
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - 1.0) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|&vi| (vi - tau).max(0.0)).collect()
}

/// `(z(λ), d(λ))` for the subproblem at `input`.
pub fn dual_value(
    problem: &Problem,
    input: &SubproblemInput<'_>,
    lambda: &[f64],
) -> Result<(Vec<f64>, f64)> {
    check_simplex(lambda, problem.num_objectives())?;
    Ok(Linearization::new(problem, input)?.dual_value(lambda))
}

fn check_simplex(lambda: &[f64], m: usize) -> Result<()> {
    if lambda.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: lambda.len(),
        });
    }
    let sum: f64 = lambda.iter().sum();
    if lambda.iter().any(|l| !(*l >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(
            "weights must lie on the simplex".into(),
        ));
    }
    Ok(())
}

/// Solve the subproblem at `input`.
pub fn solve(
    problem: &Problem,
    input: &SubproblemInput<'_>,
    opts: &SubproblemOptions,
) -> std::result::Result<SubproblemSolution, SubproblemFailure> {
    Linearization::new(problem, input)?.solve(opts)
}

/// Outcome of checking `max_i[F_i(z) − F_i(x)] ≤ θ ≤ max_i[F_i(y) − F_i(x)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaBoundsReport {
    pub theta: f64,
    /// `max_i[F_i(y) − F_i(x)]`; `+∞` if `y` is outside the domain.
    pub upper: f64,
    pub upper_holds: bool,
    /// `max_i[F_i(z) − F_i(x)]`, checked only when `s ≤ 1/L`.
    pub lower: Option<f64>,
    pub lower_holds: Option<bool>,
}

impl ThetaBoundsReport {
    pub fn holds(&self) -> bool {
        self.upper_holds && self.lower_holds.unwrap_or(true)
    }
}

pub fn theta_bounds_check(
    problem: &Problem,
    input: &SubproblemInput<'_>,
    solution: &SubproblemSolution,
    tol: f64,
) -> Result<ThetaBoundsReport> {
    let fx = problem.objective_values(input.x)?;
    let gap_max = |fv: &[f64]| -> f64 {
        fv.iter()
            .zip(&fx)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let fy = problem.evaluate(input.y)?;
    let upper = if fy.infeasible {
        f64::INFINITY
    } else {
        gap_max(&fy.values)
    };
    let theta = solution.theta;
    let upper_holds = theta <= upper + tol;
    let (lower, lower_holds) = if input.s * problem.lipschitz() <= 1.0 {
        let fz = problem.objective_values(&solution.z)?;
        let lo = gap_max(&fz);
        (Some(lo), Some(theta >= lo - tol))
    } else {
        (None, None)
    };
    Ok(ThetaBoundsReport {
        theta,
        upper,
        upper_holds,
        lower,
        lower_holds,
    })
}

/// Stationarity residual `min_{u ∈ ∂(Σλ_i g_i)(z)} ‖Σλ_i ∇f_i(y) + u + (z − y)/s‖∞`.
pub fn kkt_residual(
    problem: &Problem,
    input: &SubproblemInput<'_>,
    solution: &SubproblemSolution,
) -> Result<f64> {
    let lin = Linearization::new(problem, input)?;
    let lambda = &solution.lambda;
    let mut r = lin.weighted_gradient(lambda);
    for ((rj, zj), yj) in r.iter_mut().zip(&solution.z).zip(input.y) {
        *rj += (zj - yj) / input.s;
    }
    let term = lin.combined_term(lambda);
    if term.value(&solution.z).is_none() {
        return Ok(f64::INFINITY);
    }
    Ok(term.subdifferential_residual(&solution.z, &r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{Quadratic, SmoothObjective};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn quad(h: Vec<Vec<f64>>, c: Vec<f64>) -> SmoothObjective {
        SmoothObjective::Quadratic(Quadratic::new(h, c, 0.0).unwrap())
    }

    fn random_problem(rng: &mut ChaCha8Rng, m: usize, n: usize, l1: bool) -> Problem {
        let smooth = (0..m)
            .map(|_| {
                let a: Vec<Vec<f64>> = (0..n)
                    .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect();
                let mut h = vec![vec![0.0; n]; n];
                for i in 0..n {
                    for j in 0..n {
                        h[i][j] = (0..n).map(|k| a[k][i] * a[k][j]).sum::<f64>();
                    }
                    h[i][i] += 0.1;
                }
                let c = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
                quad(h, c)
            })
            .collect();
        let nonsmooth = (0..m)
            .map(|_| {
                if l1 {
                    NonsmoothTerm::WeightedL1 {
                        weight: rng.random_range(0.0..0.5),
                    }
                } else {
                    NonsmoothTerm::Zero
                }
            })
            .collect();
        Problem::new(smooth, nonsmooth).unwrap()
    }

    #[test]
    fn simplex_projection_examples() {
        assert_eq!(simplex_project(&[0.5, 0.5]), vec![0.5, 0.5]);
        assert_eq!(simplex_project(&[2.0, 0.0]), vec![1.0, 0.0]);
        let p = simplex_project(&[0.8, 0.4]);
        assert!((p[0] - 0.7).abs() < 1e-15 && (p[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn simplex_projection_matches_grid() {
        // brute force over Δ² at resolution 1e-4
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let v = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let p = simplex_project(&v);
            let mut best = (f64::INFINITY, 0.0);
            for i in 0..=10_000 {
                let t = i as f64 / 10_000.0;
                let d = (v[0] - t).powi(2) + (v[1] - (1.0 - t)).powi(2);
                if d < best.0 {
                    best = (d, t);
                }
            }
            assert!((p[0] - best.1).abs() <= 1e-4);
        }
    }

    #[test]
    fn single_objective_is_prox_gradient_step() {
        let p = Problem::new(
            vec![quad(vec![vec![2.0, 0.0], vec![0.0, 1.0]], vec![1.0, -1.0])],
            vec![NonsmoothTerm::Zero],
        )
        .unwrap();
        let x = [0.5, 0.5];
        let y = [1.0, -2.0];
        let s = 0.3;
        let input = SubproblemInput { x: &x, y: &y, s };
        let (z, d) = dual_value(&p, &input, &[1.0]).unwrap();
        let g = p.smooth()[0].gradient(&y);
        for j in 0..2 {
            assert!((z[j] - (y[j] - s * g[j])).abs() < 1e-15);
        }
        let fy = p.smooth()[0].value(&y);
        let fx = p.smooth()[0].value(&x);
        let expect = -0.5 * s * linalg::norm2_sq(&g) + fy - fx;
        assert!((d - expect).abs() < 1e-12);

        let l1 = Problem::new(
            vec![quad(vec![vec![2.0, 0.0], vec![0.0, 1.0]], vec![1.0, -1.0])],
            vec![NonsmoothTerm::WeightedL1 { weight: 0.4 }],
        )
        .unwrap();
        let sol = solve(&l1, &input, &SubproblemOptions::default()).unwrap();
        for j in 0..2 {
            let want = crate::prox::soft_threshold(y[j] - s * g[j], s * 0.4);
            assert!((sol.z[j] - want).abs() < 1e-15);
        }
        assert_eq!(sol.lambda, vec![1.0]);
        assert_eq!(sol.gap, 0.0);
    }

    #[test]
    fn identical_objectives_give_constant_dual() {
        let f = quad(vec![vec![1.0, 0.0], vec![0.0, 3.0]], vec![0.5, 0.5]);
        let p = Problem::new(vec![f.clone(), f], vec![NonsmoothTerm::Zero; 2]).unwrap();
        let x = [1.0, 1.0];
        let y = [0.0, 2.0];
        let input = SubproblemInput {
            x: &x,
            y: &y,
            s: 0.2,
        };
        let (_, d0) = dual_value(&p, &input, &[1.0, 0.0]).unwrap();
        for t in [0.1, 0.5, 0.9] {
            let (_, d) = dual_value(&p, &input, &[t, 1.0 - t]).unwrap();
            assert!((d - d0).abs() < 1e-13);
        }
    }

    #[test]
    fn dual_value_rejects_off_simplex() {
        let p = Problem::new(
            vec![quad(vec![vec![1.0]], vec![0.0]); 2],
            vec![NonsmoothTerm::Zero; 2],
        )
        .unwrap();
        let input = SubproblemInput {
            x: &[0.0],
            y: &[0.0],
            s: 0.5,
        };
        assert!(dual_value(&p, &input, &[0.7, 0.7]).is_err());
        assert!(dual_value(&p, &input, &[1.0]).is_err());
    }

    #[test]
    fn solves_reach_gap_and_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &m in &[2usize, 3, 4] {
            for trial in 0..10 {
                let p = random_problem(&mut rng, m, 3, trial % 2 == 0);
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let y: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let s = 0.9 / p.lipschitz();
                let input = SubproblemInput { x: &x, y: &y, s };
                let sol = solve(&p, &input, &SubproblemOptions::default())
                    .unwrap_or_else(|e| panic!("m={m} trial={trial}: {e}"));
                assert!(sol.gap <= 1e-8);
                let kkt = kkt_residual(&p, &input, &sol).unwrap();
                assert!(kkt < 1e-9, "kkt {kkt}");
                let bounds = theta_bounds_check(&p, &input, &sol, 1e-9).unwrap();
                assert!(bounds.holds(), "{bounds:?}");
                let lsum: f64 = sol.lambda.iter().sum();
                assert!((lsum - 1.0).abs() < 1e-12);
                assert!(!sol.active_set.is_empty());
            }
        }
    }

    #[test]
    fn supergradient_variant_improves_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = random_problem(&mut rng, 3, 2, false);
        let input = SubproblemInput {
            x: &[0.3, -0.2],
            y: &[0.1, 0.4],
            s: 0.5 / p.lipschitz(),
        };
        let lin = Linearization::new(&p, &input).unwrap();
        let start = lin.evaluate(&[1.0 / 3.0; 3]).gap;
        let opts = SubproblemOptions {
            tol: 1e-4,
            max_inner: 20_000,
            method: DualMethod::Supergradient { c: 1.0 },
        };
        match lin.solve(&opts) {
            Ok(sol) => assert!(sol.gap <= 1e-4),
            Err(SubproblemFailure::NotConverged(best)) => assert!(best.gap < start),
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn budget_exhaustion_is_certified_failure() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_problem(&mut rng, 4, 3, true);
        let input = SubproblemInput {
            x: &[0.3, -0.2, 0.0],
            y: &[0.1, 0.4, -0.3],
            s: 0.5 / p.lipschitz(),
        };
        let opts = SubproblemOptions {
            tol: 1e-300,
            max_inner: 3,
            method: DualMethod::Accelerated,
        };
        match solve(&p, &input, &opts) {
            Err(SubproblemFailure::NotConverged(best)) => {
                assert!(best.gap > 0.0);
                assert_eq!(best.lambda.len(), 4);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn perturbed_lambda_breaks_kkt() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = random_problem(&mut rng, 2, 2, true);
        let x = [0.9, -0.7];
        let y = [-0.4, 0.8];
        let input = SubproblemInput {
            x: &x,
            y: &y,
            s: 0.8 / p.lipschitz(),
        };
        let sol = solve(&p, &input, &SubproblemOptions::default()).unwrap();
        assert!(kkt_residual(&p, &input, &sol).unwrap() < 1e-9);
        let mut bad = sol.clone();
        bad.lambda = if sol.lambda[0] > 0.5 {
            vec![0.0, 1.0]
        } else {
            vec![1.0, 0.0]
        };
        assert!(kkt_residual(&p, &input, &bad).unwrap() > 1e-6);
    }

    #[test]
    fn theta_upper_bound_is_zero_when_x_equals_y() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_problem(&mut rng, 2, 2, true);
        let x = [1.5, -1.0];
        let input = SubproblemInput {
            x: &x,
            y: &x,
            s: 0.5 / p.lipschitz(),
        };
        let sol = solve(&p, &input, &SubproblemOptions::default()).unwrap();
        let r = theta_bounds_check(&p, &input, &sol, 1e-12).unwrap();
        assert_eq!(r.upper, 0.0);
        assert!(r.holds());
    }

    #[test]
    fn one_dimensional_quadratic_theta_closed_form() {
        // f = ½ a t², g = 0, x = y: θ = −(s/2)(a y)²
        let a = 3.0;
        let p = Problem::new(
            vec![quad(vec![vec![a]], vec![0.0])],
            vec![NonsmoothTerm::Zero],
        )
        .unwrap();
        let y = [0.7];
        let s = 0.25;
        let input = SubproblemInput { x: &y, y: &y, s };
        let sol = solve(&p, &input, &SubproblemOptions::default()).unwrap();
        let theta = -0.5 * s * (a * y[0]).powi(2);
        assert!((sol.theta - theta).abs() < 1e-15);
        let r = theta_bounds_check(&p, &input, &sol, 1e-15).unwrap();
        // lower bound: F(z) − F(y) with z = (1 − s a) y
        let z = (1.0 - s * a) * y[0];
        let lo = 0.5 * a * (z * z - y[0] * y[0]);
        assert!((r.lower.unwrap() - lo).abs() < 1e-15);
        assert!(r.holds());
    }

    #[test]
    fn permuted_objectives_give_same_minimizer() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for m in [2usize, 3] {
            let p = random_problem(&mut rng, m, 3, true);
            let mut smooth = p.smooth().to_vec();
            let mut ns = p.nonsmooth().to_vec();
            smooth.reverse();
            ns.reverse();
            let q = Problem::new(smooth, ns).unwrap();
            let x = [0.2, 0.1, -0.5];
            let y = [-0.3, 0.6, 0.2];
            let input = SubproblemInput {
                x: &x,
                y: &y,
                s: 0.9 / p.lipschitz(),
            };
            let a = solve(&p, &input, &SubproblemOptions::default()).unwrap();
            let b = solve(&q, &input, &SubproblemOptions::default()).unwrap();
            assert!(linalg::dist_inf(&a.z, &b.z) <= 1e-8);
        }
    }

    proptest! {
        #[test]
        fn weak_duality_and_concavity(seed in 0u64..1000,
                                      l1 in prop::collection::vec(0.0..1.0f64, 3),
                                      l2 in prop::collection::vec(0.0..1.0f64, 3),
                                      zs in prop::collection::vec(prop::collection::vec(-3.0..3.0f64, 2), 20)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_problem(&mut rng, 3, 2, seed % 2 == 0);
            let x = [0.5, -0.5];
            let y = [-0.2, 0.3];
            let input = SubproblemInput { x: &x, y: &y, s: 0.7 / p.lipschitz() };
            let lin = Linearization::new(&p, &input).unwrap();
            let la = simplex_project(&l1);
            let lb = simplex_project(&l2);
            let (_, da) = lin.dual_value(&la);
            let (_, db) = lin.dual_value(&lb);
            let mid: Vec<f64> = la.iter().zip(&lb).map(|(a, b)| 0.5 * (a + b)).collect();
            let (_, dm) = lin.dual_value(&mid);
            prop_assert!(dm >= 0.5 * da + 0.5 * db - 1e-10);
            for z in &zs {
                let pv = lin.primal_value(z);
                prop_assert!(da <= pv + 1e-10);
                prop_assert!(db <= pv + 1e-10);
            }
        }
    }
}
