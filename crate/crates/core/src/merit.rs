//! Merit-function diagnostics.
//!
//! `u₀(x) = sup_z min_i [F_i(x) − F_i(z)]` is zero exactly at weakly Pareto
//! points. The sup runs over all of ℝⁿ, so it is replaced here by a maximum
//! over a finite [`ReferenceFront`], which gives a lower bound `û₀ ≤ u₀`.
//! That lower bound is what [`certify_rate`] checks against the `O(1/k²)`
//! envelope.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{dedup_mask, nondominated_filter, StartBox, DEDUP_TOL};
use crate::error::{Error, Result};
use crate::linalg;
use crate::problem::Problem;
use crate::solver::{self, Method, RunTrace, SolverError, StoppingReason};

#[derive(Debug, Clone, PartialEq)]
pub struct FrontPoint {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_starts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
}

/// A finite, mutually nondominated sample of (approximately) Pareto points.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceFront {
    points: Vec<FrontPoint>,
    pub provenance: Provenance,
}

impl ReferenceFront {
    /// Filter `candidates` to the weakly nondominated, deduplicated subset.
    pub fn from_candidates(candidates: Vec<FrontPoint>, provenance: Provenance) -> Result<Self> {
        let values: Vec<Vec<f64>> = candidates.iter().map(|p| p.f.clone()).collect();
        let mut mask = nondominated_filter(&values)?;
        for (k, p) in mask.iter_mut().zip(&candidates) {
            if p.f.iter().chain(&p.x).any(|v| !v.is_finite()) {
                *k = false;
            }
        }
        dedup_mask(&values, &mut mask, DEDUP_TOL);
        let points: Vec<FrontPoint> = candidates
            .into_iter()
            .zip(mask)
            .filter_map(|(p, k)| k.then_some(p))
            .collect();
        Self::new(points, provenance)
    }

    /// Wrap points that are already mutually nondominated.
    pub fn new(points: Vec<FrontPoint>, provenance: Provenance) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("reference front is empty".into()));
        }
        let (n, m) = (points[0].x.len(), points[0].f.len());
        if points.iter().any(|p| p.x.len() != n || p.f.len() != m) {
            return Err(Error::InvalidArgument(
                "reference points have inconsistent dimensions".into(),
            ));
        }
        let values: Vec<Vec<f64>> = points.iter().map(|p| p.f.clone()).collect();
        if nondominated_filter(&values)?.iter().any(|k| !k) {
            return Err(Error::InvalidArgument(
                "reference front contains a dominated point".into(),
            ));
        }
        Ok(Self { points, provenance })
    }

    /// Evaluate `xs` on `problem` and keep the nondominated ones.
    pub fn from_points(problem: &Problem, xs: &[Vec<f64>], provenance: Provenance) -> Result<Self> {
        let candidates = xs
            .iter()
            .map(|x| {
                Ok(FrontPoint {
                    f: problem.objective_values(x)?,
                    x: x.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_candidates(candidates, provenance)
    }

    pub fn points(&self) -> &[FrontPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].x.len()
    }

    pub fn num_objectives(&self) -> usize {
        self.points[0].f.len()
    }
}

/// Build a reference front from long `pg` runs started uniformly in `start_box`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSettings {
    pub num_starts: usize,
    pub seed: u64,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Default for ReferenceSettings {
    fn default() -> Self {
        Self {
            num_starts: 1000,
            seed: 0x5eed,
            epsilon: 1e-10,
            max_iters: 20_000,
        }
    }
}

pub fn build_reference_front(
    problem: &Problem,
    start_box: &StartBox,
    settings: &ReferenceSettings,
    label: &str,
) -> std::result::Result<ReferenceFront, SolverError> {
    start_box.validate(problem.dim())?;
    if settings.num_starts == 0 {
        return Err(
            Error::InvalidArgument("reference front needs at least one start".into()).into(),
        );
    }
    let l = problem.lipschitz();
    let step = if l > 0.0 { 1.0 / l } else { 1.0 };
    let starts = start_box.sample(settings.num_starts, settings.seed);
    let traces = starts
        .par_iter()
        .map(|x0| {
            solver::run_baseline(
                problem,
                Method::Pg,
                x0,
                step,
                settings.epsilon,
                settings.max_iters,
            )
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let candidates: Vec<FrontPoint> = traces
        .iter()
        .filter(|t| t.stopping_reason != StoppingReason::SubproblemFailure)
        .map(|t| FrontPoint {
            x: t.final_point().to_vec(),
            f: t.final_values().to_vec(),
        })
        .collect();
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("every reference run failed".into()).into());
    }
    let provenance = Provenance {
        description: format!(
            "pg multi-start: {} uniform starts, constant step 1/L, filtered to weakly nondominated points",
            settings.num_starts
        ),
        problem: Some(label.to_string()),
        method: Some("pg".into()),
        num_starts: Some(settings.num_starts),
        seed: Some(settings.seed),
        step: Some(step),
        epsilon: Some(settings.epsilon),
        max_iters: Some(settings.max_iters),
    };
    Ok(ReferenceFront::from_candidates(candidates, provenance)?)
}

/// `σ(z) = min_i [F_i(x) − F_i(z)]`.
pub fn sigma(problem: &Problem, x: &[f64], z: &[f64]) -> Result<f64> {
    let fx = problem.objective_values(x)?;
    let fz = problem.objective_values(z)?;
    Ok(min_gap(&fx, &fz))
}

fn min_gap(fx: &[f64], fz: &[f64]) -> f64 {
    fx.iter()
        .zip(fz)
        .map(|(a, b)| a - b)
        .fold(f64::INFINITY, f64::min)
}

/// `ρ_p(z) = ‖(p+α−2) x_p − (p+α−4) x_{p−1} − z‖²`.
pub fn rho(x_p: &[f64], x_prev: &[f64], z: &[f64], p: u64, alpha: f64) -> f64 {
    let a = p as f64 + alpha - 2.0;
    let b = p as f64 + alpha - 4.0;
    x_p.iter()
        .zip(x_prev)
        .zip(z)
        .map(|((xp, xq), zj)| {
            let v = a * xp - b * xq - zj;
            v * v
        })
        .sum()
}

/// `max_{z ∈ ref ∪ {x}} min_i [F_i(x) − F_i(z)]`, a lower bound on `u₀(x)`.
/// The candidate `z = x` contributes 0, so the bound is never negative.
pub fn u0_lower_bound(problem: &Problem, x: &[f64], reference: &ReferenceFront) -> Result<f64> {
    let fx = problem.objective_values(x)?;
    Ok(u0_lower_from_values(&fx, reference))
}

pub fn u0_lower_from_values(fx: &[f64], reference: &ReferenceFront) -> f64 {
    reference
        .points()
        .iter()
        .map(|p| min_gap(fx, &p.f))
        .fold(0.0, f64::max)
}

/// `R̂ = max_{z ∈ ref} (4‖2x₀ − z‖² + ‖x₁ − z‖²)`.
pub fn empirical_r(x0: &[f64], x1: &[f64], reference: &ReferenceFront) -> f64 {
    reference
        .points()
        .iter()
        .map(|p| {
            let a: f64 = x0
                .iter()
                .zip(&p.x)
                .map(|(x, z)| (2.0 * x - z).powi(2))
                .sum();
            4.0 * a + linalg::dist2_sq(x1, &p.x)
        })
        .fold(0.0, f64::max)
}

/// Fill `merit` on every record of `trace` with `û₀(x_{k+1})`.
pub fn attach_merit(trace: &mut RunTrace, reference: &ReferenceFront) {
    for r in &mut trace.records {
        r.merit = Some(u0_lower_from_values(&r.f_values, reference));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub k: u64,
    pub u0_lower: f64,
    /// `L·R̂/(k+α−1)²`
    pub bound: f64,
    /// `L(α−1)²R̂ / (2(k+α−1)²)`
    pub bound_statement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub series: Vec<RatePoint>,
    pub r_hat: f64,
    pub lipschitz: f64,
    pub alpha: f64,
    /// Violations of `û₀(x_k) ≤ L·R̂/(k+α−1)²`.
    pub violations: usize,
    /// Violations of the looser `(α−1)²/2`-scaled envelope.
    pub violations_statement: usize,
    /// Smallest `û₀` seen; negative values beyond rounding would contradict
    /// nonnegativity.
    pub min_u0_lower: f64,
}

impl RateCertificate {
    pub fn is_valid(&self) -> bool {
        self.violations == 0
    }
}

/// Check `û₀(x_k) ≤ L·R̂/(k+α−1)²` for every iterate `x_k`, `k ≥ 1`.
pub fn certify_rate(
    trace: &RunTrace,
    reference: &ReferenceFront,
    lipschitz: f64,
    alpha: f64,
) -> RateCertificate {
    certify_rate_scaled(trace, reference, lipschitz, alpha, 1.0)
}

/// [`certify_rate`] with `R̂` multiplied by `r_scale`; `r_scale < 1` is a
/// negative control for the checker.
pub fn certify_rate_scaled(
    trace: &RunTrace,
    reference: &ReferenceFront,
    lipschitz: f64,
    alpha: f64,
    r_scale: f64,
) -> RateCertificate {
    let x1 = trace.iterate(trace.iterations().min(1));
    let r_hat = empirical_r(&trace.x0, x1, reference) * r_scale;
    let mut series = Vec::with_capacity(trace.iterations());
    let (mut violations, mut violations_statement) = (0, 0);
    let mut min_u0 = f64::INFINITY;
    for (idx, rec) in trace.records.iter().enumerate() {
        let k = idx as u64 + 1;
        let u0 = u0_lower_from_values(&rec.f_values, reference);
        let denom = (k as f64 + alpha - 1.0).powi(2);
        let bound = lipschitz * r_hat / denom;
        let bound_statement = lipschitz * (alpha - 1.0).powi(2) * r_hat / (2.0 * denom);
        if u0 > bound {
            violations += 1;
        }
        if u0 > bound_statement {
            violations_statement += 1;
        }
        min_u0 = min_u0.min(u0);
        series.push(RatePoint {
            k,
            u0_lower: u0,
            bound,
            bound_statement,
        });
    }
    RateCertificate {
        series,
        r_hat,
        lipschitz,
        alpha,
        violations,
        violations_statement,
        min_u0_lower: min_u0,
    }
}

/// Worst margins of the two per-step `σ` inequalities along a trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop2Report {
    pub checked: usize,
    /// `min_k` of `(σ_k − σ_{k+1}) − rhs`; should be ≥ `−tol`.
    pub worst_decrease_margin: f64,
    /// `min_k` of `rhs − σ_{k+1}`; should be ≥ `−tol`.
    pub worst_upper_margin: f64,
    pub violations: usize,
}

impl Prop2Report {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Relative tolerance of [`check_prop2`].
pub const PROP2_REL_TOL: f64 = 1e-9;

/// Along the trace, check for the fixed `z`
///
/// ```text
/// σ_k − σ_{k+1} ≥ −(1/2s_k)[2⟨y_k − x_{k+1}, y_k − x_k⟩ + ‖x_{k+1} − y_k‖²]
/// σ_{k+1}       ≤  (1/2s_k)[2⟨y_k − x_{k+1}, y_k − z⟩   − ‖x_{k+1} − y_k‖²]
/// ```
pub fn check_prop2(trace: &RunTrace, problem: &Problem, z: &[f64]) -> Result<Prop2Report> {
    let fz = problem.objective_values(z)?;
    let fz_mag = linalg::norm_inf(&fz);
    let mut report = Prop2Report {
        checked: 0,
        worst_decrease_margin: f64::INFINITY,
        worst_upper_margin: f64::INFINITY,
        violations: 0,
    };
    let mut f_prev: &[f64] = &trace.f0;
    for (idx, rec) in trace.records.iter().enumerate() {
        let x_k = trace.iterate(idx);
        let x_next = &rec.x;
        let y = &rec.y;
        let inv = 1.0 / (2.0 * rec.s);
        let d_next = linalg::sub(y, x_next);
        let sq = linalg::norm2_sq(&d_next);
        let sigma_k = min_gap(f_prev, &fz);
        let sigma_next = min_gap(&rec.f_values, &fz);
        let mag = 1.0 + fz_mag + linalg::norm_inf(f_prev).max(linalg::norm_inf(&rec.f_values));

        let rhs13 = -inv * (2.0 * linalg::dot(&d_next, &linalg::sub(y, x_k)) + sq);
        let lhs13 = sigma_k - sigma_next;
        let m13 = lhs13 - rhs13;
        let tol13 = PROP2_REL_TOL * (mag + lhs13.abs() + rhs13.abs());

        let rhs14 = inv * (2.0 * linalg::dot(&d_next, &linalg::sub(y, z)) - sq);
        let m14 = rhs14 - sigma_next;
        let tol14 = PROP2_REL_TOL * (mag + sigma_next.abs() + rhs14.abs());

        if m13 < -tol13 || m14 < -tol14 {
            report.violations += 1;
        }
        report.worst_decrease_margin = report.worst_decrease_margin.min(m13);
        report.worst_upper_margin = report.worst_upper_margin.min(m14);
        report.checked += 1;
        f_prev = &rec.f_values;
    }
    Ok(report)
}
