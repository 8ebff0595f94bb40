//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion, then fails
//! if any criterion failed.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use moapg_core::bench::{make_problem, BenchmarkName, BenchmarkSpec, StartBox};
use moapg_core::merit::{
    build_reference_front, certify_rate, certify_rate_scaled, check_prop2, ReferenceSettings,
};
use moapg_core::prox::{moreau_envelope, prox, WeightedNonsmooth};
use moapg_core::solver::{eta, step_size};
use moapg_core::subproblem::{self, SubproblemInput, SubproblemOptions};
use moapg_core::{
    admissible_s0_bound, run, NonsmoothTerm, Problem, Quadratic, RunTrace, SmoothObjective,
    SolverConfig,
};
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

/// A benchmark run kept for the monotonicity and σ-inequality checks.
struct AcceptanceRun {
    label: String,
    problem: Problem,
    start_box: StartBox,
    trace: RunTrace,
}

fn step_schedule() -> Outcome {
    let started = Instant::now();
    let mut worst_ratio = 0.0f64;
    let mut worst_rel = 0.0f64;
    for l in [0.04, 1.0, 2.0, 3.0 + 5f64.sqrt()] {
        for alpha in [3.0, 3.5, 4.0, 5.0, 10.0] {
            let s0 = 0.999 * admissible_s0_bound(alpha, l);
            for k in 0..=100_000u64 {
                worst_ratio = worst_ratio.max(step_size(k, alpha, s0) * l);
            }
            // running product of η, starting where it is defined
            let (mut k, mut s) = if alpha == 3.0 { (1, 0.5 * s0) } else { (0, s0) };
            while k <= 1000 {
                let closed = step_size(k, alpha, s0);
                worst_rel = worst_rel.max((closed - s).abs() / closed);
                s *= eta(k, alpha).unwrap();
                k += 1;
            }
        }
    }
    let elapsed = started.elapsed();
    Outcome {
        pass: worst_ratio < 1.0 && worst_rel <= 1e-12 && within(elapsed, 1.0),
        detail: format!(
            "max L*s_k = {worst_ratio:.9} (< 1), closed form vs product rel err {worst_rel:.1e} (<= 1e-12), {elapsed:.2?} (< 1 s)"
        ),
    }
}

fn rate_certificate(runs: &mut Vec<AcceptanceRun>) -> Outcome {
    let started = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, label) in [
        (BenchmarkName::Jos1, "JOS1+l1"),
        (BenchmarkName::Bk1, "BK1+l1"),
    ] {
        let spec = BenchmarkSpec::new(name);
        let problem = make_problem(&spec).unwrap();
        let l = problem.lipschitz();
        let reference = build_reference_front(
            &problem,
            &spec.start_box,
            &ReferenceSettings::default(),
            label,
        )
        .unwrap();
        let mut config = SolverConfig::with_fraction(4.0, l, 0.99);
        config.max_iters = 5000;
        config.epsilon = 1e-14;
        let (mut violations, mut deflated, mut statement, mut iterations) = (0, 0, 0, 0);
        let mut min_u0 = f64::INFINITY;
        for x0 in spec.start_box.sample(5, 2024) {
            let trace = run(&problem, &config, &x0).unwrap();
            let cert = certify_rate(&trace, &reference, l, config.alpha);
            let neg = certify_rate_scaled(&trace, &reference, l, config.alpha, 1e-3);
            violations += cert.violations;
            statement += cert.violations_statement;
            deflated += (neg.violations > 0) as usize;
            min_u0 = min_u0.min(cert.min_u0_lower);
            iterations += trace.iterations();
            runs.push(AcceptanceRun {
                label: label.into(),
                problem: problem.clone(),
                start_box: spec.start_box.clone(),
                trace,
            });
        }
        pass &= violations == 0 && deflated == 5 && min_u0 >= -1e-12;
        parts.push(format!(
            "{label}: {violations} violations ({statement} vs statement form), deflated runs violating {deflated}/5, min u0 {min_u0:.1e}, {iterations} iterations"
        ));
    }
    let elapsed = started.elapsed();
    pass &= within(elapsed, 60.0);
    Outcome {
        pass,
        detail: format!("{}; {elapsed:.2?} (< 60 s)", parts.join("; ")),
    }
}

fn subproblem_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = common::rng(3);
    let (mut worst_theta, mut worst_z, mut worst_gap) = (0.0f64, 0.0f64, 0.0f64);
    let mut spacing = 0.0;
    let mut accepted = 0;
    while accepted < 20 {
        let problem = common::random_l1_problem(&mut rng, 2, 2);
        let x = common::uniform(&mut rng, 2, -1.0, 1.0);
        let y = common::uniform(&mut rng, 2, -1.0, 1.0);
        let l = problem.lipschitz();
        let s = rng.random_range(0.2..1.0) * (1.0 / l).min(0.5);
        let input = SubproblemInput { x: &x, y: &y, s };
        let sol = subproblem::solve(&problem, &input, &SubproblemOptions::default()).unwrap();
        if sol.z.iter().any(|v| v.abs() > 2.9) {
            continue;
        }
        accepted += 1;
        let grid = common::grid_minimize(&problem, &x, &y, s, -3.0, 3.0, 201);
        spacing = grid.spacing;
        worst_theta = worst_theta.max((sol.theta - grid.theta).abs());
        worst_z = worst_z.max(
            (sol.z[0] - grid.z[0])
                .abs()
                .max((sol.z[1] - grid.z[1]).abs()),
        );
        worst_gap = worst_gap.max(sol.gap);
    }
    let elapsed = started.elapsed();
    Outcome {
        pass: worst_theta <= 1e-3 && worst_z <= spacing && worst_gap <= 1e-8 && within(elapsed, 30.0),
        detail: format!(
            "20 instances: max |theta - grid| {worst_theta:.1e} (<= 1e-3), max |z - grid|inf {worst_z:.1e} (<= {spacing}), max gap {worst_gap:.1e} (<= 1e-8), {elapsed:.2?} (< 30 s)"
        ),
    }
}

fn single_objective() -> Outcome {
    let started = Instant::now();
    let q = vec![
        vec![3.0, 0.5, 0.0],
        vec![0.5, 1.0, 0.2],
        vec![0.0, 0.2, 0.05],
    ];
    let c = vec![-1.0, 0.5, 0.3];
    let w = 0.05;
    let x0 = vec![4.0, -3.0, 2.5];
    let problem = Problem::new(
        vec![SmoothObjective::Quadratic(
            Quadratic::new(q.clone(), c.clone(), 0.0).unwrap(),
        )],
        vec![NonsmoothTerm::WeightedL1 { weight: w }],
    )
    .unwrap();
    let mut worst = 0.0f64;
    let mut rows = 0;
    for alpha in [3.0, 4.0] {
        let mut config = SolverConfig::with_fraction(alpha, problem.lipschitz(), 0.9);
        config.max_iters = 100;
        config.epsilon = 1e-300;
        let trace = run(&problem, &config, &x0).unwrap();
        let oracle = common::scalar_apg(&q, &c, w, &x0, alpha, config.s0, 100);
        rows += trace.records.len().min(oracle.len());
        if trace.records.len() != 100 {
            worst = f64::INFINITY;
        }
        for (rec, (s, gamma, x)) in trace.records.iter().zip(&oracle) {
            worst = worst.max((rec.s - s).abs()).max((rec.gamma - gamma).abs());
            for (a, b) in rec.x.iter().zip(x) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let elapsed = started.elapsed();
    Outcome {
        pass: worst <= 1e-10 && within(elapsed, 1.0),
        detail: format!("{rows} iterations over alpha in {{3, 4}}: max deviation {worst:.1e} (<= 1e-10), {elapsed:.2?} (< 1 s)"),
    }
}

fn stopping_characterization() -> Outcome {
    let started = Instant::now();
    let problem = make_problem(&BenchmarkSpec::smooth(BenchmarkName::Bk1)).unwrap();
    let s = 0.9 / problem.lipschitz();
    let opts = SubproblemOptions::default();
    let residual = |x: &[f64]| {
        let sol = subproblem::solve(&problem, &SubproblemInput { x, y: x, s }, &opts).unwrap();
        sol.z
            .iter()
            .zip(x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let pareto_worst = (0..10)
        .map(|i| {
            let t = 5.0 * i as f64 / 9.0;
            residual(&[t, t])
        })
        .fold(0.0, f64::max);
    // off the segment {(t, t) : t ∈ [0, 5]}, inside the start box
    let mut rng = common::rng(5);
    let mut non_pareto = Vec::new();
    while non_pareto.len() < 10 {
        let x = common::uniform(&mut rng, 2, -4.0, 9.0);
        let t = (0.5 * (x[0] + x[1])).clamp(0.0, 5.0);
        if ((x[0] - t).powi(2) + (x[1] - t).powi(2)).sqrt() > 0.5 {
            non_pareto.push(x);
        }
    }
    let other_best = non_pareto
        .iter()
        .map(|x| residual(x))
        .fold(f64::INFINITY, f64::min);
    let elapsed = started.elapsed();
    Outcome {
        pass: pareto_worst <= 1e-6 && other_best >= 1e-3 && within(elapsed, 5.0),
        detail: format!(
            "Pareto max |p(x,x) - x|inf {pareto_worst:.1e} (<= 1e-6), non-Pareto min {other_best:.2e} (>= 1e-3), {elapsed:.2?} (< 5 s)"
        ),
    }
}

fn monotonicity(runs: &[AcceptanceRun]) -> Outcome {
    let worst = runs
        .iter()
        .map(|r| r.trace.max_increase_over_start())
        .fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        pass: worst <= 1e-9,
        detail: format!(
            "{} runs: max F_i(x_k) - F_i(x_0) = {worst:.2e} (<= 1e-9)",
            runs.len()
        ),
    }
}

fn sigma_inequalities(runs: &[AcceptanceRun]) -> Outcome {
    let started = Instant::now();
    let (mut checked, mut violations) = (0, 0);
    let (mut m13, mut m14) = (f64::INFINITY, f64::INFINITY);
    for (i, r) in runs.iter().enumerate() {
        for z in r.start_box.sample(100, 900 + i as u64) {
            let rep = check_prop2(&r.trace, &r.problem, &z).unwrap();
            checked += rep.checked;
            violations += rep.violations;
            m13 = m13.min(rep.worst_decrease_margin);
            m14 = m14.min(rep.worst_upper_margin);
        }
    }
    let labels: Vec<&str> = runs.iter().map(|r| r.label.as_str()).collect();
    Outcome {
        pass: violations == 0,
        detail: format!(
            "{checked} (k, z) pairs over {} runs ({}): {violations} violations, worst margins {m13:.2e} / {m14:.2e}, {:.2?}",
            runs.len(),
            dedup(&labels).join(", "),
            started.elapsed()
        ),
    }
}

fn dedup<'a>(labels: &[&'a str]) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for l in labels {
        if !out.contains(l) {
            out.push(l);
        }
    }
    out
}

fn moreau_identity() -> Outcome {
    let mut rng = common::rng(8);
    let n = 3;
    let families = [
        ("zero", NonsmoothTerm::Zero),
        ("l1", NonsmoothTerm::WeightedL1 { weight: 0.7 }),
        (
            "box",
            NonsmoothTerm::BoxIndicator {
                lower: vec![-1.0, 0.0, -2.0],
                upper: vec![1.0, 0.5, 3.0],
            },
        ),
    ];
    let h = 1e-6;
    let mut worst = 0.0f64;
    for (_, term) in &families {
        let g = WeightedNonsmooth::single(term.clone());
        for _ in 0..100 {
            let x = common::uniform(&mut rng, n, -4.0, 4.0);
            let p = prox(&g, 1.0, &x).unwrap();
            for j in 0..n {
                let (mut a, mut b) = (x.clone(), x.clone());
                a[j] += h;
                b[j] -= h;
                let fd = (moreau_envelope(&g, &a).unwrap() - moreau_envelope(&g, &b).unwrap())
                    / (2.0 * h);
                worst = worst.max((fd - (x[j] - p[j])).abs());
            }
        }
    }
    Outcome {
        pass: worst <= 1e-5,
        detail: format!(
            "zero, l1, box x 100 points: max |FD - (x - prox x)| {worst:.1e} (<= 1e-5)"
        ),
    }
}

fn front_quality(runs: &mut Vec<AcceptanceRun>) -> Outcome {
    let started = Instant::now();
    let spec = BenchmarkSpec::smooth(BenchmarkName::Bk1);
    let problem = make_problem(&spec).unwrap();
    let mut config = SolverConfig::with_fraction(4.0, problem.lipschitz(), 0.99);
    config.epsilon = 1e-8;
    let result = moapg_core::bench::generate_front(&spec, &config).unwrap();
    let front = result.front_values();
    let to_curve = front
        .iter()
        .map(|p| common::distance_to_bk1_front(p))
        .fold(0.0, f64::max);
    let elapsed = started.elapsed();
    let curve = common::bk1_front_samples(20_001);
    let from_curve = moapg_core::bench::directed_hausdorff(&curve, &front);
    // a few of the starts also feed the trace-level checks
    for x0 in spec.start_box.sample(3, 77) {
        runs.push(AcceptanceRun {
            label: "BK1".into(),
            problem: problem.clone(),
            start_box: spec.start_box.clone(),
            trace: run(&problem, &config, &x0).unwrap(),
        });
    }
    Outcome {
        pass: !front.is_empty() && to_curve <= 1e-2 && within(elapsed, 30.0),
        detail: format!(
            "{} front points from 500 starts: max distance to analytic front {to_curve:.1e} (<= 1e-2); largest gap along the front {from_curve:.2} (informational); {elapsed:.2?} (< 30 s)",
            front.len()
        ),
    }
}

fn sp1_runs(runs: &mut Vec<AcceptanceRun>) {
    let spec = BenchmarkSpec::new(BenchmarkName::Sp1);
    let problem = make_problem(&spec).unwrap();
    for alpha in [3.0, 5.0] {
        let config = SolverConfig::with_fraction(alpha, problem.lipschitz(), 0.99);
        for x0 in spec.start_box.sample(3, alpha as u64) {
            runs.push(AcceptanceRun {
                label: format!("SP1+l1 alpha={alpha}"),
                problem: problem.clone(),
                start_box: spec.start_box.clone(),
                trace: run(&problem, &config, &x0).unwrap(),
            });
        }
    }
}

#[test]
fn acceptance_criteria() {
    let mut runs = Vec::new();
    let mut results = vec![
        ("1 step-size bound", step_schedule()),
        ("2 rate certificate", rate_certificate(&mut runs)),
        ("3 subproblem oracle", subproblem_oracle()),
        ("4 single-objective reduction", single_objective()),
        ("5 stopping characterization", stopping_characterization()),
    ];
    let front = front_quality(&mut runs);
    sp1_runs(&mut runs);
    results.push(("6 monotonicity", monotonicity(&runs)));
    results.push(("7 sigma inequalities", sigma_inequalities(&runs)));
    results.push(("8 Moreau gradient identity", moreau_identity()));
    results.push(("9 front quality", front));

    // bypass libtest's capture so the lines always show up
    let mut out = std::io::stdout().lock();
    let mut failed = Vec::new();
    for (name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        writeln!(out, "acceptance {tag} [{name}] {}", o.detail).unwrap();
        if !o.pass {
            failed.push(*name);
        }
    }
    out.flush().unwrap();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
