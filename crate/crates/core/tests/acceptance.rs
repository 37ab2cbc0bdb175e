//! Acceptance criteria, one line each. Runs as a plain binary so the report
//! is always printed; exits non-zero if any criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::f64::consts::{FRAC_PI_2, TAU};
use std::sync::Arc;
use std::time::{Duration, Instant};

use ismtrack::angle::wrap;
use ismtrack::controller::{feasible, min_p, min_path_radius, q_window, ControlLaw, ControllerParams, ParamOverrides};
use ismtrack::frenet::{pose_from_transverse, to_transverse, transverse_rates, TransverseState};
use ismtrack::invariant::{attractiveness_certificate, nagumo_certificate, InvariantSet};
use ismtrack::plant::{integrate_step, Disturbance, DisturbanceBounds, DisturbanceKind, DisturbanceSignal, Integrator};
use ismtrack::refpath::{Point, ReferencePath, SegmentGeometry, ValidationOptions};
use ismtrack::sim::{benchmark_suite, build_benchmark_path, run_all, Scenario, SimLog, Start};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

// values reported for the benchmark
const BENCH_P: f64 = 0.182;
const BENCH_Q: f64 = 0.59;
const BENCH_R: f64 = 0.8;
const BENCH_V: f64 = 0.8;
const BENCH_D: f64 = 0.1;
const BENCH_R_LOWER: f64 = 1.156;

struct Outcome {
    id: u8,
    name: &'static str,
    passed: Option<bool>,
    detail: String,
    elapsed: Duration,
}

fn timed(id: u8, name: &'static str, f: impl FnOnce() -> (Option<bool>, String)) -> Outcome {
    let t0 = Instant::now();
    let (passed, detail) = f();
    Outcome {
        id,
        name,
        passed,
        detail,
        elapsed: t0.elapsed(),
    }
}

fn bounds() -> DisturbanceBounds {
    DisturbanceBounds::new(BENCH_D, BENCH_D).unwrap()
}

fn bench_params(law: ControlLaw) -> ControllerParams {
    ControllerParams::synthesize(
        &bounds(),
        BENCH_R,
        BENCH_V,
        &ParamOverrides {
            p: Some(BENCH_P),
            q: Some(BENCH_Q),
            law: Some(law),
            ..Default::default()
        },
    )
    .unwrap()
}

fn random_signal(seed: u64) -> DisturbanceSignal {
    DisturbanceSignal::new(DisturbanceKind::UniformRandom { seed, hold: 0.05 }, bounds()).unwrap()
}

fn criterion1() -> (Option<bool>, String) {
    let b = bounds();
    let p = min_p(&b).unwrap();
    let (lo, hi) = q_window(&b).unwrap();
    let ok = (p - 0.18181818).abs() < 1e-8
        && (p - BENCH_P).abs() <= 5e-4
        && (lo - 0.18182).abs() < 1e-5
        && (hi - 0.81818).abs() < 1e-5
        && lo <= BENCH_Q
        && BENCH_Q <= hi
        && feasible(&b)
        && !feasible(&DisturbanceBounds::new(0.2, 0.5).unwrap());
    (
        Some(ok),
        format!(
            "min_p = {p:.8} (|Δ| to 0.182 = {:.1e}), q window = [{lo:.5}, {hi:.5}] ∋ 0.59, feasible(0.1,0.1) = {}, feasible(0.2,0.5) = {}",
            (p - BENCH_P).abs(),
            feasible(&b),
            feasible(&DisturbanceBounds::new(0.2, 0.5).unwrap())
        ),
    )
}

fn criterion2() -> (Option<bool>, String) {
    let r_lower = min_path_radius(BENCH_R, 0.18182, 1.0);
    let opts = ValidationOptions::default();
    let bench = build_benchmark_path().validate_assumptions(r_lower, &opts);
    let circle = ReferencePath::from_geometries(vec![SegmentGeometry::Arc {
        center: Point::default(),
        radius: 1.0,
        start_angle: 0.0,
        sweep: TAU * 0.75,
    }])
    .unwrap()
    .validate_assumptions(r_lower, &opts);
    let ok = (r_lower - 1.15556).abs() <= 1e-4 && bench.passed() && !circle.passed() && !circle.curvature.passed;
    (
        Some(ok),
        format!(
            "R_lower = {r_lower:.5}; benchmark (min radius {:.3}) passes = {}; radius-1.0 circle passes = {}",
            bench.curvature.min_radius.unwrap_or(f64::INFINITY),
            bench.passed(),
            circle.passed()
        ),
    )
}

fn criterion3() -> (Option<bool>, String) {
    let params = bench_params(ControlLaw::Sign);
    let set = InvariantSet::from_params(&params);
    let kmax = 1.0 / BENCH_R_LOWER;
    let good = nagumo_certificate(&set, &params, &bounds(), kmax, 1000).unwrap();
    let min_good = good.checks.iter().map(|c| c.worst).fold(f64::INFINITY, f64::min);
    let mutated = ControllerParams { p: 0.05, ..params };
    let bad = nagumo_certificate(&InvariantSet::from_params(&mutated), &mutated, &bounds(), kmax, 1000).unwrap();
    let failed: Vec<String> = bad.failures().map(|c| format!("{} min {:.4}", c.name, c.worst)).collect();
    let ok = good.passed && min_good >= -1e-9 && !bad.passed;
    (
        Some(ok),
        format!(
            "p = 0.182: pass = {}, min boundary derivative = {min_good:.3e}; p = 0.05: pass = {} ({})",
            good.passed,
            bad.passed,
            failed.join(", ")
        ),
    )
}

fn criterion4() -> (Option<bool>, String) {
    let b = bounds();
    let k = 1.0 / BENCH_R;
    let with_q = |q: f64| ControllerParams { q, ..bench_params(ControlLaw::Sign) };
    let cert = |q: f64, k: f64| attractiveness_certificate(&with_q(q), &b, k, 64).unwrap();
    let good = cert(BENCH_Q, k);
    let hi = cert(0.9, k);
    let lo = cert(0.1, k);
    let r = |rep: &ismtrack::CertificateReport, name: &str| rep.check(name).unwrap().passed;
    let ok = good.passed
        && !r(&hi, "region1")
        && r(&hi, "region3")
        && r(&lo, "region1")
        && !r(&lo, "region3");
    let hi_narrow = cert(0.9, 1.0 / BENCH_R_LOWER);
    (
        Some(ok),
        format!(
            "q = 0.59 pass = {}; q = 0.9 fails in {} (max σσ̇ {:.3e}); q = 0.1 fails in {} (max σσ̇ {:.3e}); |κ| ≤ 1/R. \
             Note: with |κ| ≤ 1/1.156 the q = 0.9 certificate passes = {}",
            good.passed,
            hi.failures().map(|c| c.name.as_str()).collect::<Vec<_>>().join("+"),
            hi.check("region1").unwrap().worst,
            lo.failures().map(|c| c.name.as_str()).collect::<Vec<_>>().join("+"),
            lo.check("region3").unwrap().worst,
            hi_narrow.passed
        ),
    )
}

fn criterion5() -> (Option<bool>, String) {
    let params = bench_params(ControlLaw::Sign);
    let set = InvariantSet::from_params(&params);
    let b = bounds();
    let path = Arc::new(build_benchmark_path());
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_505);
    let mut scenarios = Vec::with_capacity(200);
    while scenarios.len() < 200 {
        let y = rng.gen_range(-BENCH_R..BENCH_R);
        let th = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
        if !set.contains(y, th, 0.0) {
            continue;
        }
        let kind = if scenarios.len() % 2 == 0 {
            DisturbanceKind::UniformRandom {
                seed: rng.gen(),
                hold: 0.05,
            }
        } else {
            let v = b.vertices()[rng.gen_range(0..4)];
            DisturbanceKind::Constant { d1: v.d1, d2: v.d2 }
        };
        let mut sc = Scenario::new(
            path.clone(),
            Start::Transverse { y_err: y, theta_err: th },
            params,
            DisturbanceSignal::new(kind, b).unwrap(),
        );
        sc.require_start_in_set = true;
        scenarios.push(sc);
    }
    let logs = run_all(&scenarios);
    let mut errors = 0;
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let mut steps = 0;
    for l in &logs {
        match l {
            Ok(l) => {
                violations += l.metrics.invariance_violations;
                worst = worst.min(l.metrics.min_margin);
                steps += l.metrics.steps;
            }
            Err(_) => errors += 1,
        }
    }
    (
        Some(errors == 0 && violations == 0),
        format!("200 runs, {steps} steps: {violations} steps below -1e-3, {errors} aborted, smallest boundary margin {worst:.4}"),
    )
}

fn describe(l: &SimLog) -> String {
    let m = &l.metrics;
    format!(
        "first {:.2}s settled {}",
        m.converged_at.unwrap_or(f64::NAN),
        m.settled_at.map_or("never".into(), |t| format!("{t:.2}s")),
    )
}

fn criterion6() -> (Option<bool>, String) {
    let logs: Vec<SimLog> = benchmark_suite(&bench_params(ControlLaw::Sign), &random_signal(7))
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let ok = logs.iter().all(|l| {
        let m = &l.metrics;
        m.reached_end && m.settled_s_hat.is_some_and(|s| s < 1.0 - 1e-6) && m.invariance_violations == 0
    });
    let exits: usize = logs.iter().map(|l| l.metrics.exits_after_convergence).sum();
    let max_y = logs
        .iter()
        .filter_map(|l| {
            let t = l.metrics.settled_at?;
            l.records.iter().filter(|r| r.t >= t).map(|r| r.y_err.abs()).reduce(f64::max)
        })
        .fold(0.0, f64::max);
    (
        Some(ok),
        format!(
            "sign law, random d: [{}]; max |ỹ| after settling {max_y:.4} < 0.016; {exits} single-step threshold re-crossings before settling",
            logs.iter().map(describe).collect::<Vec<_>>().join("; ")
        ),
    )
}

/// Golden-section refinement of the distance on `[a, b]`.
fn golden(path: &ReferencePath, p: Point, mut a: f64, mut b: f64) -> f64 {
    let d = |s: f64| (path.eval(s).unwrap() - p).norm();
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - g * (b - a);
        let e = a + g * (b - a);
        if d(c) < d(e) {
            b = e;
        } else {
            a = c;
        }
    }
    d(0.5 * (a + b))
}

fn criterion7() -> (Option<bool>, String) {
    let path = build_benchmark_path();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let points: Vec<Point> = (0..1000)
        .map(|_| {
            let c = path.eval(rng.gen_range(0.0..=1.0)).unwrap();
            let r = BENCH_R * rng.gen_range(0.0f64..1.0).sqrt() * (1.0 - 1e-9);
            let a = rng.gen_range(0.0..TAU);
            Point::new(c.x + r * a.cos(), c.y + r * a.sin())
        })
        .collect();
    const N: usize = 100_000;
    let rows: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|&p| {
            let (mut best, mut arg) = (f64::INFINITY, 0);
            for i in 0..=N {
                let d = (path.eval(i as f64 / N as f64).unwrap() - p).norm();
                if d < best {
                    best = d;
                    arg = i;
                }
            }
            let lo = arg.saturating_sub(1) as f64 / N as f64;
            let hi = (arg + 1).min(N) as f64 / N as f64;
            let polished = golden(&path, p, lo, hi).min(best);
            let proj = path.project(p, None, BENCH_R).map(|r| r.distance).unwrap_or(f64::NAN);
            (proj, polished, best)
        })
        .collect();
    let worst = rows.iter().map(|(a, b, _)| (a - b).abs()).fold(0.0, f64::max);
    let failures = rows.iter().filter(|(a, b, _)| !((a - b).abs() < 1e-6)).count();
    let raw_far = rows.iter().filter(|(_, b, _)| *b >= 0.01).count();
    let raw_far_ok = rows
        .iter()
        .filter(|(a, b, raw)| *b >= 0.01 && (a - raw).abs() < 1e-6)
        .count();
    (
        Some(failures == 0),
        format!(
            "1000 points: max |d_proj - d_scan| = {worst:.2e} (scan polished in its bracket); raw 1e5 scan within 1e-6 for {raw_far_ok}/{raw_far} points at distance ≥ 0.01"
        ),
    )
}

fn criterion8() -> (Option<bool>, String) {
    let path = build_benchmark_path();
    let b = bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let dt = 1e-5;
    let (v, r) = (BENCH_V, BENCH_R);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    let mut rejected = 0;
    while n < 100 {
        let s: f64 = rng.gen_range(0.001..0.999);
        if (s - 0.25).abs() < 1e-3 || (s - 0.75).abs() < 1e-3 {
            rejected += 1;
            continue;
        }
        let y = rng.gen_range(-0.9 * r..0.9 * r);
        let th = rng.gen_range(-FRAC_PI_2..FRAC_PI_2);
        let omega = rng.gen_range(-v / r..v / r);
        let d = Disturbance::new(rng.gen_range(-b.d1_bar..=b.d1_bar), rng.gen_range(-b.d2_bar..=b.d2_bar));
        let pose = pose_from_transverse(&path, s, y, th).unwrap();
        let ts: TransverseState = to_transverse(&pose, &path, Some(s), r).unwrap();
        let rates = transverse_rates(&ts, v, omega, d.d1, d.d2).unwrap();
        let norm = rates.dy.hypot(rates.dtheta);
        if norm < 1e-2 {
            rejected += 1;
            continue;
        }
        // backward step: integrate the reversed field
        let fwd = integrate_step(&pose, v, omega, |_| d, 0.0, dt, Integrator::Rk4).unwrap();
        let bwd = integrate_step(&pose, -v, -omega, |_| d, 0.0, dt, Integrator::Rk4).unwrap();
        let a = to_transverse(&fwd, &path, Some(ts.s_hat), r).unwrap();
        let z = to_transverse(&bwd, &path, Some(ts.s_hat), r).unwrap();
        let dy = (a.y_err - z.y_err) / (2.0 * dt);
        let dth = wrap(a.theta_err - z.theta_err) / (2.0 * dt);
        let rel = (dy - rates.dy).hypot(dth - rates.dtheta) / norm;
        worst = worst.max(rel);
        n += 1;
    }
    (
        Some(worst < 1e-3),
        format!("100 states (dt = 1e-5, central difference): max relative error {worst:.2e}; {rejected} draws rejected (near joins or |rates| < 1e-2)"),
    )
}

fn criterion9() -> (Option<bool>, String) {
    let seed = 7;
    let sign: Vec<SimLog> = benchmark_suite(&bench_params(ControlLaw::Sign), &random_signal(seed))
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let sat_params = bench_params(ControlLaw::Saturated);
    let sat: Vec<SimLog> = benchmark_suite(&sat_params, &random_signal(seed))
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let sw = |ls: &[SimLog]| ls.iter().map(|l| l.metrics.sign_switches).collect::<Vec<_>>();
    let ratio_ok = sign
        .iter()
        .zip(&sat)
        .all(|(a, b)| a.metrics.sign_switches >= 10 * b.metrics.sign_switches.max(1));
    let sat_ok = sat.iter().all(|l| {
        let m = &l.metrics;
        m.reached_end
            && m.converged_at.is_some_and(|t| t < m.final_t)
            && m.max_abs_sigma_after <= sat_params.phi
            && m.invariance_violations == 0
    });
    let max_y = sat.iter().map(|l| l.metrics.max_abs_y_after).fold(0.0, f64::max);
    let max_sigma = sat.iter().map(|l| l.metrics.max_abs_sigma_after).fold(0.0, f64::max);
    (
        Some(ratio_ok && sat_ok),
        format!(
            "ω sign switches sign law {:?} vs saturated {:?}; saturated reaches the thresholds in every run and then stays in the boundary layer (max |σ| {max_sigma:.4} ≤ φ = 0.05); max |ỹ| after first reaching the thresholds {max_y:.4} (steady arc offset, not inside 0.016)",
            sw(&sign),
            sw(&sat)
        ),
    )
}

fn main() {
    let outcomes = vec![
        timed(1, "parameter reproduction", criterion1),
        timed(2, "minimum-radius gate", criterion2),
        timed(3, "invariance certificate", criterion3),
        timed(4, "attractiveness certificate", criterion4),
        timed(5, "closed-loop invariance", criterion5),
        timed(6, "convergence from the four benchmark starts", criterion6),
        timed(7, "projection oracle", criterion7),
        timed(8, "transverse-dynamics consistency", criterion8),
        timed(9, "chattering reduction", criterion9),
        timed(10, "baseline controller comparison", || {
            (None, "not reproducible: the baseline control laws are not part of this work".into())
        }),
    ];
    let limits: [(u8, f64); 4] = [(3, 10.0), (4, 10.0), (5, 120.0), (7, 30.0)];
    let mut failed = 0;
    println!();
    for o in &outcomes {
        let over = limits
            .iter()
            .any(|&(id, secs)| id == o.id && o.elapsed.as_secs_f64() > secs);
        let tag = match o.passed {
            Some(true) if !over => "PASS",
            Some(_) => {
                failed += 1;
                "FAIL"
            }
            None => "N/A ",
        };
        let budget = if over { " [over time budget]" } else { "" };
        println!(
            "criterion {:>2} {tag} {} ({:.2?}){budget}: {}",
            o.id, o.name, o.elapsed, o.detail
        );
    }
    println!();
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
