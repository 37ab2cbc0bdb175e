use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context};
use ismtrack::controller::{self, ControllerParams};
use ismtrack::export::write_csv;
use ismtrack::invariant::{attractiveness_certificate, nagumo_certificate, AdversaryTarget, CertificateReport};
use ismtrack::plant::{DisturbanceBounds, DisturbanceKind, DisturbanceSignal, DEFAULT_RANDOM_HOLD};
use ismtrack::refpath::{load_path, ReferencePath, ValidationOptions, ValidationReport, BENCHMARK_NAME};
use ismtrack::sim::{self, Scenario, SimError, SimLog, Start, BENCHMARK_STARTS};
use ismtrack::InvariantSet;
use serde_json::{json, Value};

use crate::config::{resolve_model, FileConfig, Model, DEFAULT_OUT_DIR};
use crate::{CertifyArgs, DisturbanceArg, ModelArgs, ParamsArgs, SimulateArgs, ValidateArgs};

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_CERTIFICATION: u8 = 3;
pub const EXIT_ABORT: u8 = 4;

const DEFAULT_SEED: u64 = 1;
const SINUSOID_FREQUENCY: [f64; 2] = [0.25, 0.4];

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error: e.into(),
    }
}

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_VALIDATION,
        error: e.into(),
    }
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: EXIT_ABORT,
        error: e.into(),
    }
}

type CmdResult = Result<u8, Failure>;

fn load(model: &ModelArgs) -> Result<(FileConfig, Model), Failure> {
    let file = match &model.config {
        Some(p) => FileConfig::load(p).map_err(usage)?,
        None => FileConfig::default(),
    };
    let m = resolve_model(&model.flags(), &file).map_err(usage)?;
    Ok((file, m))
}

fn out_dir(flag: &Option<PathBuf>, file: &FileConfig) -> PathBuf {
    flag.clone()
        .or_else(|| file.sim.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}

fn write_json(path: &Path, value: &Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    fs::write(path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))
        .map_err(runtime)
}

pub fn params(a: &ParamsArgs) -> CmdResult {
    let (_, m) = load(&a.model)?;
    let b = m.bounds;
    let lhs = 1.0 - b.d2_bar;
    let rhs = 0.5 * (1.0 + b.d1_bar);
    if !controller::feasible(&b) {
        if a.json {
            println!(
                "{}",
                json!({"feasible": false, "bounds": b, "lhs": lhs, "rhs": rhs})
            );
        }
        return Err(invalid(anyhow!(
            "infeasible disturbance bounds: the feasibility check 1 - d2_bar >= 0.5 (1 + d1_bar) fails ({lhs} < {rhs})"
        )));
    }
    let min_p = controller::min_p(&b).map_err(invalid)?;
    let (lo, hi) = controller::q_window(&b).map_err(invalid)?;
    let p = ControllerParams::with_defaults(&b, m.r, m.v, &m.overrides).map_err(invalid)?;
    let audit = p.audit(&b);
    let r_lower = p.min_path_radius();
    if a.json {
        let v = json!({
            "feasible": true,
            "bounds": b,
            "lhs": lhs,
            "rhs": rhs,
            "min_p": min_p,
            "q_window": [lo, hi],
            "params": p,
            "r_lower": r_lower,
            "audit": audit_json(&audit),
        });
        println!("{}", serde_json::to_string_pretty(&v).map_err(runtime)?);
    } else {
        println!("bounds     d1_bar = {}, d2_bar = {}", b.d1_bar, b.d2_bar);
        println!("feasible   yes (1 - d2_bar = {lhs:.6} >= 0.5 (1 + d1_bar) = {rhs:.6})");
        println!("min p      {min_p:.6}");
        println!("q window   [{lo:.6}, {hi:.6}]");
        println!(
            "chosen     p = {:.6}, q = {:.6}, y_intercept = {}, phi = {}, law = {:?}",
            p.p, p.q, p.y_intercept, p.phi, p.law
        );
        println!("R, v       {}, {}", p.r, p.v);
        println!("R_lower    {r_lower:.6}");
    }
    match audit {
        Ok(()) => Ok(EXIT_OK),
        Err(e) => Err(invalid(e)),
    }
}

fn audit_json(audit: &Result<(), controller::ControllerError>) -> Value {
    match audit {
        Ok(()) => json!({"passed": true}),
        Err(e) => json!({"passed": false, "reason": e.to_string()}),
    }
}

fn path_spec(flag: Option<&str>, benchmark: bool, file: &FileConfig) -> String {
    if benchmark {
        return BENCHMARK_NAME.to_string();
    }
    flag.map(str::to_string)
        .or_else(|| file.path.spec.clone())
        .unwrap_or_else(|| BENCHMARK_NAME.to_string())
}

fn signal(a: &SimulateArgs, file: &FileConfig, bounds: DisturbanceBounds) -> Result<DisturbanceSignal, Failure> {
    let from_file = file.disturbance.signal.clone();
    let kind = match a.disturbance {
        None => match from_file {
            Some(DisturbanceKind::UniformRandom { seed, hold }) => DisturbanceKind::UniformRandom {
                seed: a.seed.unwrap_or(seed),
                hold,
            },
            Some(k) => k,
            None => DisturbanceKind::UniformRandom {
                seed: a.seed.unwrap_or(DEFAULT_SEED),
                hold: DEFAULT_RANDOM_HOLD,
            },
        },
        Some(DisturbanceArg::Zero) => DisturbanceKind::Zero,
        Some(DisturbanceArg::Constant) => match (a.constant, from_file) {
            (Some((d1, d2)), _) => DisturbanceKind::Constant { d1, d2 },
            (None, Some(k @ DisturbanceKind::Constant { .. })) => k,
            _ => return Err(usage(anyhow!("--disturbance constant needs --constant d1,d2"))),
        },
        Some(DisturbanceArg::Sinusoid) => match from_file {
            Some(k @ DisturbanceKind::Sinusoid { .. }) => k,
            _ => DisturbanceKind::Sinusoid {
                amplitude: [bounds.d1_bar, bounds.d2_bar],
                frequency: SINUSOID_FREQUENCY,
                phase: [0.0, 0.0],
            },
        },
        Some(DisturbanceArg::Random) => {
            let hold = match from_file {
                Some(DisturbanceKind::UniformRandom { hold, .. }) => hold,
                _ => DEFAULT_RANDOM_HOLD,
            };
            DisturbanceKind::UniformRandom {
                seed: a.seed.unwrap_or(DEFAULT_SEED),
                hold,
            }
        }
        Some(DisturbanceArg::Adversarial) => DisturbanceKind::Adversarial {
            target: AdversaryTarget::Invariance,
        },
        Some(DisturbanceArg::AdversarialAttraction) => DisturbanceKind::Adversarial {
            target: AdversaryTarget::Attraction,
        },
    };
    DisturbanceSignal::new(kind, bounds).map_err(usage)
}

fn starts(a: &SimulateArgs, file: &FileConfig, spec: &str) -> Vec<Start> {
    let mut out: Vec<Start> = a.start.iter().map(|&(y, deg)| Start::transverse_deg(y, deg)).collect();
    out.extend(a.pose.iter().map(|&(x, y, deg)| Start::Pose {
        x,
        y,
        theta: deg.to_radians(),
    }));
    if !out.is_empty() {
        return out;
    }
    let benchmark = || BENCHMARK_STARTS.iter().map(|&(y, d)| Start::transverse_deg(y, d)).collect();
    if a.all_starts {
        return benchmark();
    }
    if let Some(s) = &file.sim.starts {
        return s.iter().map(|&[y, d]| Start::transverse_deg(y, d)).collect();
    }
    if spec == BENCHMARK_NAME {
        benchmark()
    } else {
        vec![Start::transverse_deg(0.0, 0.0)]
    }
}

fn load_reference(spec: &str) -> Result<ReferencePath, Failure> {
    load_path(spec).map_err(|e| usage(anyhow!("cannot load path {spec:?}: {e}")))
}

fn validate(path: &ReferencePath, r_lower: f64, neighborhood: f64) -> ValidationReport {
    let opts = ValidationOptions {
        neighborhood: Some(neighborhood),
        ..ValidationOptions::default()
    };
    path.validate_assumptions(r_lower, &opts)
}

fn certificate_json(r: &Result<CertificateReport, ismtrack::InvariantError>) -> Value {
    match r {
        Ok(rep) => json!(rep),
        Err(e) => json!({"passed": false, "error": e.to_string()}),
    }
}

fn certificate_passed(r: &Result<CertificateReport, ismtrack::InvariantError>) -> bool {
    matches!(r, Ok(rep) if rep.passed)
}

pub fn simulate(a: &SimulateArgs) -> CmdResult {
    let (file, m) = load(&a.model)?;
    let params = ControllerParams::synthesize(&m.bounds, m.r, m.v, &m.overrides).map_err(invalid)?;
    let spec = path_spec(a.path.as_deref(), a.benchmark, &file);
    let path = load_reference(&spec)?;
    let r_lower = params.min_path_radius();
    let report = validate(&path, r_lower, params.r);
    if !report.passed() {
        return Err(invalid(anyhow!(
            "path {spec:?} rejected for R_lower = {r_lower:.6}: {}",
            report.failures().join("; ")
        )));
    }
    let signal = signal(a, &file, m.bounds)?;
    let dt = a.dt.or(file.sim.dt).unwrap_or(sim::DEFAULT_DT);
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(usage(anyhow!("dt must be positive, got {dt}")));
    }
    let t_max = a.t_max.or(file.sim.t_max);
    let integrator = a.integrator.map(Into::into).or(file.sim.integrator);

    let kappa = report.curvature.max_abs_kappa.min(1.0 / r_lower);
    let set = InvariantSet::from_params(&params);
    let nagumo = nagumo_certificate(
        &set,
        &params,
        &m.bounds,
        kappa,
        ismtrack::invariant::DEFAULT_BOUNDARY_SAMPLES,
    );
    let attract = attractiveness_certificate(
        &params,
        &m.bounds,
        1.0 / params.r,
        ismtrack::invariant::DEFAULT_REGION_GRID,
    );

    let path = Arc::new(path);
    let scenarios: Vec<Scenario> = starts(a, &file, &spec)
        .into_iter()
        .map(|st| {
            let mut sc = Scenario::new(path.clone(), st, params, signal.clone());
            sc.dt = dt;
            sc.t_max = t_max;
            sc.integrator = integrator;
            sc.validate_path = false;
            sc
        })
        .collect();
    let results = sim::run_all(&scenarios);

    let dir = out_dir(&a.out, &file);
    fs::create_dir_all(&dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(runtime)?;

    let mut code = EXIT_OK;
    let mut runs = Vec::new();
    for (i, (sc, res)) in scenarios.iter().zip(&results).enumerate() {
        let name = format!("run_{}.csv", i + 1);
        let (log, error): (Option<&SimLog>, Option<String>) = match res {
            Ok(log) => (Some(log), None),
            Err(e @ SimError::Aborted { log, .. }) => {
                code = code.max(EXIT_ABORT);
                (Some(log.as_ref()), Some(e.to_string()))
            }
            Err(e) => {
                code = code.max(EXIT_VALIDATION);
                (None, Some(e.to_string()))
            }
        };
        let mut entry = json!({"start": sc.start, "error": error});
        if let Some(log) = log {
            let csv_path = dir.join(&name);
            let f = File::create(&csv_path)
                .with_context(|| format!("creating {}", csv_path.display()))
                .map_err(runtime)?;
            write_csv(&log.records, BufWriter::new(f)).map_err(runtime)?;
            let mt = &log.metrics;
            if mt.invariance_violations > 0 {
                code = code.max(EXIT_CERTIFICATION);
            }
            entry["csv"] = json!(name);
            entry["converged"] = json!(mt.converged_at.is_some());
            entry["metrics"] = json!(mt);
            println!(
                "{name}: converged_at = {}, settled_at = {}, violations = {}, min_margin = {:.4}, steps = {}",
                fmt_opt(mt.converged_at),
                fmt_opt(mt.settled_at),
                mt.invariance_violations,
                mt.min_margin,
                mt.steps
            );
        }
        if let Some(e) = &error {
            eprintln!("run {}: {e}", i + 1);
        }
        runs.push(entry);
    }
    let summary = json!({
        "path": spec,
        "params": params,
        "bounds": m.bounds,
        "r_lower": r_lower,
        "disturbance": signal.kind(),
        "dt": dt,
        "integrator": scenarios.first().map(|s| s.integrator()),
        "certificates": {
            "invariance": certificate_json(&nagumo),
            "attractiveness": certificate_json(&attract),
            "passed": certificate_passed(&nagumo) && certificate_passed(&attract),
        },
        "runs": runs,
    });
    write_json(&dir.join("summary.json"), &summary)?;
    println!("wrote {} run(s) to {}", scenarios.len(), dir.display());
    Ok(code)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "never".to_string(), |t| format!("{t:.3}"))
}

pub fn certify(a: &CertifyArgs) -> CmdResult {
    let (file, m) = load(&a.model)?;
    let params = ControllerParams::with_defaults(&m.bounds, m.r, m.v, &m.overrides).map_err(invalid)?;
    let audit = params.audit(&m.bounds);
    let r_lower = params.min_path_radius();
    let kappa = match (a.kappa_max, &a.path) {
        (Some(k), _) => k,
        (None, Some(spec)) => {
            let path = load_reference(spec)?;
            validate(&path, r_lower, params.r).curvature.max_abs_kappa
        }
        (None, None) => 1.0 / r_lower,
    };
    let set = InvariantSet::from_params(&params);
    let nagumo = nagumo_certificate(&set, &params, &m.bounds, kappa, a.boundary_samples).map_err(invalid)?;
    let attract = attractiveness_certificate(
        &params,
        &m.bounds,
        a.attraction_kappa_max.unwrap_or(1.0 / params.r),
        a.grid,
    )
    .map_err(invalid)?;

    let report = json!({
        "params": params,
        "bounds": m.bounds,
        "r_lower": r_lower,
        "audit": audit_json(&audit),
        "invariance": nagumo,
        "attractiveness": attract,
        "passed": nagumo.passed && attract.passed,
    });
    let dir = out_dir(&a.out, &file);
    fs::create_dir_all(&dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(runtime)?;
    write_json(&dir.join("certificate.json"), &report)?;

    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(runtime)?);
    } else {
        for rep in [&nagumo, &attract] {
            for c in &rep.checks {
                println!(
                    "{:<15} {:<17} {}  worst = {:+.6e} over {} samples",
                    rep.certificate,
                    c.name,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.worst,
                    c.samples
                );
            }
        }
    }
    for rep in [&nagumo, &attract] {
        for c in rep.failures() {
            eprintln!("{} failed at {}: worst = {:+.6e}, at {:?}", rep.certificate, c.name, c.worst, c.at);
        }
    }
    if let Err(e) = &audit {
        eprintln!("parameter audit failed: {e}");
    }
    Ok(if !(nagumo.passed && attract.passed) {
        EXIT_CERTIFICATION
    } else if audit.is_err() {
        EXIT_VALIDATION
    } else {
        EXIT_OK
    })
}

pub fn validate_path(a: &ValidateArgs) -> CmdResult {
    let (_, m) = load(&a.model)?;
    let path = load_reference(&a.spec)?;
    let r_lower = match a.r_lower {
        Some(r) => r,
        None => ControllerParams::with_defaults(&m.bounds, m.r, m.v, &m.overrides)
            .map_err(invalid)?
            .min_path_radius(),
    };
    let rep = validate(&path, r_lower, a.neighborhood.unwrap_or(m.r));
    if a.json {
        println!("{}", serde_json::to_string_pretty(&json!(rep)).map_err(runtime)?);
    } else {
        let ok = |b: bool| if b { "PASS" } else { "FAIL" };
        println!(
            "joins       {}  position gap {:.3e}, heading gap {:.3e}",
            ok(rep.joins.passed),
            rep.joins.worst_position_gap,
            rep.joins.worst_heading_gap
        );
        println!(
            "curvature   {}  max |kappa| {:.6}, min radius {}, R_lower {:.6}",
            ok(rep.curvature.passed),
            rep.curvature.max_abs_kappa,
            rep.curvature
                .min_radius
                .map_or_else(|| "inf".to_string(), |r| format!("{r:.6}")),
            r_lower
        );
        println!(
            "uniqueness  {}  {} violation(s) in {} points, neighborhood {}",
            ok(rep.uniqueness.passed),
            rep.uniqueness.violations,
            rep.uniqueness.points,
            rep.uniqueness.neighborhood
        );
        println!("curvature sign changes: {}", rep.curvature_sign_changes);
    }
    if rep.passed() {
        Ok(EXIT_OK)
    } else {
        for f in rep.failures() {
            eprintln!("{f}");
        }
        Ok(EXIT_VALIDATION)
    }
}
