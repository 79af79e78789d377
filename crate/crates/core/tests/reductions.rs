//! The solver against a direct, slice-based transcription of the iteration.

use inertial_tseng::linalg::{Matrix, RngStream, Vector};
use inertial_tseng::problems::{gen_affine_vi, gen_oracle_strong, oracle_orthant_vi, QMode};
use inertial_tseng::schedules::{preset, ScheduleSet};
use inertial_tseng::solver::{solve, Problem, SolverConfig, StopRule};
use inertial_tseng::trace::{rows_from_csv, rows_to_csv};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Iterates the method on `A(x) = Mx + q` over the nonnegative orthant and
/// returns `(λ_n, x_{n+1})` for each of `iters` steps.
fn reference(m: &Matrix, q: &[f64], s: &ScheduleSet, x0: &[f64], x1: &[f64], iters: u64) -> Vec<(f64, Vec<f64>)> {
    let dim = q.len();
    let a = |x: &[f64]| -> Vec<f64> {
        (0..dim)
            .map(|i| (0..dim).map(|j| m.get(i, j) * x[j]).sum::<f64>() + q[i])
            .collect()
    };
    let (mut prev, mut cur) = (x0.to_vec(), x1.to_vec());
    let mut lambda = s.lambda1;
    let mut out = Vec::new();
    for n in 1..=iters {
        let (al, be, th) = (s.alpha.eval(n), s.beta.eval(n), s.theta.eval(n));
        let w: Vec<f64> = (0..dim).map(|i| cur[i] + al * (cur[i] - prev[i])).collect();
        let z: Vec<f64> = (0..dim).map(|i| cur[i] + be * (cur[i] - prev[i])).collect();
        let aw = a(&w);
        let y: Vec<f64> = (0..dim).map(|i| (w[i] - lambda * aw[i]).max(0.0)).collect();
        let ay = a(&y);
        let next: Vec<f64> = (0..dim)
            .map(|i| (1.0 - th) * z[i] + th * (y[i] - lambda * (ay[i] - aw[i])))
            .collect();
        let dwy: Vec<f64> = (0..dim).map(|i| w[i] - y[i]).collect();
        let da: Vec<f64> = (0..dim).map(|i| aw[i] - ay[i]).collect();
        let grow = lambda + s.p_seq.eval(n);
        let new_lambda = if norm(&da) > 0.0 {
            ((s.mu + s.mu_seq.eval(n)) * norm(&dwy) / norm(&da)).min(grow)
        } else {
            grow
        };
        out.push((lambda, next.clone()));
        prev = std::mem::replace(&mut cur, next);
        lambda = new_lambda;
    }
    out
}

fn compare(problem: &Problem, m: &Matrix, q: &[f64], s: ScheduleSet, iters: u64) {
    let (x0, x1) = problem.initial_points();
    let expected = reference(m, q, &s, x0.as_slice(), x1.as_slice(), iters);
    let cfg = SolverConfig::new(s).with_max_iters(iters).with_tol(1e-300);
    let (x, trace) = solve(problem, &cfg).unwrap();
    assert_eq!(trace.rows.len() as u64, iters);
    for (row, (lambda, next)) in trace.rows.iter().zip(&expected) {
        assert!((row.lambda - lambda).abs() <= 1e-12 * lambda, "n = {}: {} vs {lambda}", row.n, row.lambda);
        if let (Some(d), Some(star)) = (row.dist, problem.known_solution()) {
            let e: Vec<f64> = next.iter().zip(star.as_slice()).map(|(a, b)| a - b).collect();
            assert!((d - norm(&e)).abs() <= 1e-9 * (1.0 + d), "n = {}: dist {d} vs {}", row.n, norm(&e));
        }
    }
    let last = &expected.last().unwrap().1;
    let diff: Vec<f64> = x.as_slice().iter().zip(last).map(|(a, b)| a - b).collect();
    assert!(norm(&diff) <= 1e-9 * (1.0 + norm(last)), "final iterates differ by {}", norm(&diff));
}

#[test]
fn plain_preset_matches_reference_on_orthant_oracle() {
    let q = [-1.0, 1.0];
    let p = oracle_orthant_vi(Vector::new(q.to_vec()).unwrap())
        .unwrap()
        .with_initial_points(Vector::new(vec![3.0, 2.0]).unwrap(), Vector::new(vec![2.0, 1.0]).unwrap())
        .unwrap();
    compare(&p, &Matrix::identity(2), &q, preset("tseng_plain").unwrap(), 40);
}

#[test]
fn every_preset_matches_reference_on_affine_vi() {
    let (inst, p) = gen_affine_vi(&mut RngStream::new(17), 12, QMode::Zero).unwrap();
    for name in ["tseng_plain", "chc_relaxed", "akh", "paper_default"] {
        compare(&p, &inst.matrix, inst.offset.as_slice(), preset(name).unwrap(), 150);
    }
}

#[test]
fn plain_and_inertial_presets_agree_on_solutions() {
    let problems = [
        oracle_orthant_vi(Vector::new(vec![-1.0, 1.0]).unwrap()).unwrap(),
        gen_oracle_strong(&mut RngStream::new(2), 10, 1.0).unwrap(),
    ];
    for p in &problems {
        let star = p.known_solution().unwrap();
        let mut finals = Vec::new();
        for name in ["paper_default", "tseng_plain"] {
            let cfg = SolverConfig::new(preset(name).unwrap()).with_tol(1e-12).with_max_iters(10_000);
            let (x, trace) = solve(p, &cfg).unwrap();
            assert!(trace.status.converged(), "{name} on {}", p.label());
            assert!(x.distance(star).unwrap() <= 1e-6);
            finals.push(x);
        }
        assert!(finals[0].distance(&finals[1]).unwrap() <= 2e-6);
    }
}

#[test]
fn step_sizes_stay_in_the_admissible_interval() {
    let (inst, p) = gen_affine_vi(&mut RngStream::new(4), 20, QMode::Zero).unwrap();
    let s = preset("paper_default").unwrap();
    // Lower bound uses any upper bound on the Lipschitz constant, here the
    // Frobenius norm.
    let frob = inst.matrix.as_row_major().iter().map(|v| v * v).sum::<f64>().sqrt();
    let lo = (s.mu / frob).min(s.lambda1);
    let hi = s.lambda1 + s.p_total();
    let cfg = SolverConfig::new(s).with_max_iters(3000).with_tol(1e-9);
    let (_, trace) = solve(&p, &cfg).unwrap();
    assert!(trace.rows.iter().all(|r| r.lambda >= lo - 1e-12 && r.lambda <= hi + 1e-12));
}

#[test]
fn traces_are_deterministic_and_round_trip() {
    let run = || {
        let (_, p) = gen_affine_vi(&mut RngStream::new(99), 15, QMode::Zero).unwrap();
        let cfg = SolverConfig::new(preset("paper_default").unwrap())
            .with_tol(1e-3)
            .with_stop_rule(StopRule::IterateNorm);
        rows_to_csv(&solve(&p, &cfg).unwrap().1.rows)
    };
    let a = run();
    assert_eq!(a, run());
    assert_eq!(rows_to_csv(&rows_from_csv(&a).unwrap()), a);
}
