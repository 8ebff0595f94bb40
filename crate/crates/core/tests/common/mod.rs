//! Oracles written without the library's solver code.

#![allow(dead_code)]

use moapg_core::{NonsmoothTerm, Problem, Quadratic, SmoothObjective};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `A Aᵀ` with `A` uniform in `[−1, 1]`.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let a: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).map(|k| a[i][k] * a[j][k]).sum())
                .collect()
        })
        .collect()
}

/// `m` random convex quadratics in `R^n`, each with its own ℓ1 weight.
pub fn random_l1_problem(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Problem {
    let smooth = (0..m)
        .map(|_| {
            let h = random_psd(rng, n);
            let c = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            SmoothObjective::Quadratic(Quadratic::new(h, c, rng.random_range(-1.0..1.0)).unwrap())
        })
        .collect();
    let g = (0..m)
        .map(|_| NonsmoothTerm::WeightedL1 {
            weight: rng.random_range(0.0..0.5),
        })
        .collect();
    Problem::new(smooth, g).unwrap()
}

pub fn uniform(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn l1_weight(term: &NonsmoothTerm) -> f64 {
    match term {
        NonsmoothTerm::Zero => 0.0,
        NonsmoothTerm::WeightedL1 { weight } => *weight,
        NonsmoothTerm::BoxIndicator { .. } => panic!("oracle handles l1 and zero terms only"),
    }
}

/// `max_i [⟨∇f_i(y), z−y⟩ + g_i(z) + f_i(y) − F_i(x)] + ‖z−y‖²/(2s)`, written
/// out directly from the quadratic coefficients.
pub fn phi(problem: &Problem, x: &[f64], y: &[f64], s: f64, z: &[f64]) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (f, g) in problem.smooth().iter().zip(problem.nonsmooth()) {
        let SmoothObjective::Quadratic(q) = f else {
            panic!("quadratic objectives only")
        };
        let w = l1_weight(g);
        let quad = |p: &[f64]| -> f64 {
            let mut v = q.constant();
            for i in 0..p.len() {
                v += q.linear()[i] * p[i];
                for j in 0..p.len() {
                    v += 0.5 * p[i] * q.hessian_row(i)[j] * p[j];
                }
            }
            v
        };
        let l1 = |p: &[f64]| -> f64 { w * p.iter().map(|v| v.abs()).sum::<f64>() };
        let mut lin = quad(y) - quad(x) - l1(x) + l1(z);
        for i in 0..y.len() {
            let grad_i: f64 = q.linear()[i]
                + (0..y.len())
                    .map(|j| q.hessian_row(i)[j] * y[j])
                    .sum::<f64>();
            lin += grad_i * (z[i] - y[i]);
        }
        worst = worst.max(lin);
    }
    let d2: f64 = z.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
    worst + d2 / (2.0 * s)
}

pub struct GridMin {
    pub theta: f64,
    pub z: [f64; 2],
    /// Spacing of the coarse grid.
    pub spacing: f64,
    pub coarse_z: [f64; 2],
}

/// Minimize `phi` over a `points × points` grid on `[lo, hi]²`, then zoom
/// in around the best point with successively finer 81×81 grids.
pub fn grid_minimize(
    problem: &Problem,
    x: &[f64],
    y: &[f64],
    s: f64,
    lo: f64,
    hi: f64,
    points: usize,
) -> GridMin {
    let spacing = (hi - lo) / (points - 1) as f64;
    let search = |cx: f64, cy: f64, half: f64, count: usize| -> (f64, [f64; 2]) {
        let h = 2.0 * half / (count - 1) as f64;
        let mut best = (f64::INFINITY, [cx, cy]);
        for i in 0..count {
            for j in 0..count {
                let z = [cx - half + i as f64 * h, cy - half + j as f64 * h];
                let v = phi(problem, x, y, s, &z);
                if v < best.0 {
                    best = (v, z);
                }
            }
        }
        best
    };
    let mid = 0.5 * (lo + hi);
    let (_, coarse_z) = search(mid, mid, 0.5 * (hi - lo), points);
    // φ is (1/s)-strongly convex but a coarse winner can sit well along a
    // flat valley, so windows start wide and shrink slowly.
    let (mut theta, mut z) = (f64::INFINITY, coarse_z);
    let mut half = 10.0 * spacing;
    for _ in 0..28 {
        (theta, z) = search(z[0], z[1], half, 81);
        half /= 2.0;
    }
    GridMin {
        theta,
        z,
        spacing,
        coarse_z,
    }
}

/// Scalar accelerated proximal gradient on `½xᵀQx + cᵀx + w‖x‖₁`: the
/// iterates `x_1, x_2, …` for `iters` steps, with steps grown by the `η`
/// factors one at a time.
pub fn scalar_apg(
    q: &[Vec<f64>],
    c: &[f64],
    w: f64,
    x0: &[f64],
    alpha: f64,
    s0: f64,
    iters: usize,
) -> Vec<(f64, f64, Vec<f64>)> {
    let n = x0.len();
    let mut prev = x0.to_vec();
    let mut cur = x0.to_vec();
    let mut s = s0;
    let mut out = Vec::with_capacity(iters);
    for k in 0..iters {
        let kf = k as f64;
        if k > 0 {
            // s_k = η_{k−1} s_{k−1}; with α = 3 the first step halves s0.
            let j = kf - 1.0;
            s *= if alpha == 3.0 && k == 1 {
                0.5
            } else {
                (j + alpha - 2.0).powi(2) / ((j + alpha - 1.0) * (j + alpha - 3.0))
            };
        }
        let gamma = (kf + alpha - 4.0) / (kf + alpha - 1.0);
        let y: Vec<f64> = (0..n)
            .map(|i| cur[i] + gamma * (cur[i] - prev[i]))
            .collect();
        let next: Vec<f64> = (0..n)
            .map(|i| {
                let g = c[i] + (0..n).map(|j| q[i][j] * y[j]).sum::<f64>();
                let v = y[i] - s * g;
                v.signum() * (v.abs() - s * w).max(0.0)
            })
            .collect();
        prev = std::mem::replace(&mut cur, next);
        out.push((s, gamma, cur.clone()));
    }
    out
}

/// Euclidean distance from `p` to the BK1 front `{(2t², 2(t−5)²) : t ∈ [0, 5]}`.
pub fn distance_to_bk1_front(p: &[f64]) -> f64 {
    let d =
        |t: f64| ((2.0 * t * t - p[0]).powi(2) + (2.0 * (t - 5.0).powi(2) - p[1]).powi(2)).sqrt();
    let samples = 2000;
    let h = 5.0 / samples as f64;
    let mut best_t = 0.0;
    for i in 0..=samples {
        let t = i as f64 * h;
        if d(t) < d(best_t) {
            best_t = t;
        }
    }
    // golden-section refinement on the bracketing interval
    let (mut a, mut b) = ((best_t - h).max(0.0), (best_t + h).min(5.0));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (c1, c2) = (b - r * (b - a), a + r * (b - a));
        if d(c1) < d(c2) {
            b = c2;
        } else {
            a = c1;
        }
    }
    d(0.5 * (a + b)).min(d(best_t))
}

/// Dense sample of the BK1 front.
pub fn bk1_front_samples(count: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let t = 5.0 * i as f64 / (count - 1) as f64;
            vec![2.0 * t * t, 2.0 * (t - 5.0) * (t - 5.0)]
        })
        .collect()
}
