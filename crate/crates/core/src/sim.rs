//! Closed-loop scenarios, the four-start benchmark and tracking metrics.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::sign0;
use crate::controller::ControllerParams;
use crate::frenet::{pose_from_transverse, to_transverse, FrenetError, TransverseState};
use crate::invariant::InvariantSet;
use crate::plant::{integrate_step, AdversaryContext, DisturbanceSignal, Integrator, PlantError, Pose};
use crate::refpath::{builtin, ReferencePath, ValidationOptions, BENCHMARK_NAME};

pub const DEFAULT_DT: f64 = 1e-3;
/// Lateral convergence threshold as a fraction of `R`.
pub const EPS_Y_FRACTION: f64 = 0.02;
pub const EPS_THETA_DEG: f64 = 5.0;
/// Slack on boundary values for the per-step membership flag.
pub const IN_SET_TOLERANCE: f64 = 1e-3;
const END_TOLERANCE: f64 = 1e-6;

/// `(ỹ₀, θ̃₀ in degrees)` for the four benchmark runs.
pub const BENCHMARK_STARTS: [(f64, f64); 4] = [(-0.5, 30.0), (0.5, -30.0), (0.5, 30.0), (-0.5, -30.0)];

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error("path rejected for R_lower = {r_lower:.6}: {}", reasons.join("; "))]
    PathRejected { r_lower: f64, reasons: Vec<String> },
    #[error("start (ỹ = {y_err}, θ̃ = {theta_err}) lies outside the invariant set")]
    StartOutsideSet { y_err: f64, theta_err: f64 },
    #[error("cannot place start: {0}")]
    Start(FrenetError),
    #[error("run aborted at t = {t}: {reason}")]
    Aborted { t: f64, reason: String, log: Box<SimLog> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Start {
    /// Errors at `ŝ = 0`; `theta_err` in radians.
    Transverse { y_err: f64, theta_err: f64 },
    Pose { x: f64, y: f64, theta: f64 },
}

impl Start {
    pub fn transverse_deg(y_err: f64, theta_deg: f64) -> Self {
        Start::Transverse {
            y_err,
            theta_err: theta_deg.to_radians(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub path: Arc<ReferencePath>,
    pub start: Start,
    pub params: ControllerParams,
    pub signal: DisturbanceSignal,
    pub dt: f64,
    /// Defaults to the law's preferred method.
    pub integrator: Option<Integrator>,
    /// Defaults to three times the nominal traversal time.
    pub t_max: Option<f64>,
    /// Check the path against `R̲` before running.
    pub validate_path: bool,
    pub validation: ValidationOptions,
    /// Refuse starts outside `S`.
    pub require_start_in_set: bool,
}

impl Scenario {
    pub fn new(path: Arc<ReferencePath>, start: Start, params: ControllerParams, signal: DisturbanceSignal) -> Self {
        Self {
            path,
            start,
            params,
            signal,
            dt: DEFAULT_DT,
            integrator: None,
            t_max: None,
            validate_path: true,
            validation: ValidationOptions::default(),
            require_start_in_set: false,
        }
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator.unwrap_or(self.params.law.default_integrator())
    }

    pub fn t_max(&self) -> f64 {
        self.t_max.unwrap_or(3.0 * self.path.length() / self.params.v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub theta: f64,
    pub s_hat: f64,
    pub y_err: f64,
    pub theta_err: f64,
    pub sigma: f64,
    pub omega: f64,
    pub d1: f64,
    pub d2: f64,
    pub in_s: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub steps: usize,
    pub final_t: f64,
    pub final_s_hat: f64,
    pub reached_end: bool,
    pub eps_y: f64,
    pub eps_theta: f64,
    /// First time with `|ỹ| < ε_y` and `|θ̃| < ε_θ`.
    pub converged_at: Option<f64>,
    /// Start of the final stretch inside both thresholds, if the run ends
    /// inside them.
    pub settled_at: Option<f64>,
    pub settled_s_hat: Option<f64>,
    /// Times the state left the thresholds after `converged_at`.
    pub exits_after_convergence: usize,
    /// Converged and never left again.
    pub held: bool,
    pub max_abs_y_after: f64,
    pub max_abs_theta_after: f64,
    pub max_abs_sigma_after: f64,
    pub invariance_violations: usize,
    /// Smallest boundary margin of `S` seen.
    pub min_margin: f64,
    /// Sign changes of `ω` (zeros skipped).
    pub sign_switches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimLog {
    pub start: Start,
    pub records: Vec<SimRecord>,
    pub metrics: Metrics,
}

/// Accumulates metrics as records arrive.
struct MetricsBuilder {
    m: Metrics,
    last_sign: f64,
    stretch: Option<(f64, f64)>,
}

impl MetricsBuilder {
    fn new(params: &ControllerParams) -> Self {
        Self {
            m: Metrics {
                steps: 0,
                final_t: 0.0,
                final_s_hat: 0.0,
                reached_end: false,
                eps_y: EPS_Y_FRACTION * params.r,
                eps_theta: EPS_THETA_DEG.to_radians(),
                converged_at: None,
                settled_at: None,
                settled_s_hat: None,
                exits_after_convergence: 0,
                held: false,
                max_abs_y_after: 0.0,
                max_abs_theta_after: 0.0,
                max_abs_sigma_after: 0.0,
                invariance_violations: 0,
                min_margin: f64::INFINITY,
                sign_switches: 0,
            },
            last_sign: 0.0,
            stretch: None,
        }
    }

    fn push(&mut self, r: &SimRecord, margin: f64) {
        let m = &mut self.m;
        m.steps += 1;
        m.final_t = r.t;
        m.final_s_hat = r.s_hat;
        m.min_margin = m.min_margin.min(margin);
        if !r.in_s {
            m.invariance_violations += 1;
        }
        let sg = sign0(r.omega);
        if sg != 0.0 {
            if self.last_sign != 0.0 && sg != self.last_sign {
                m.sign_switches += 1;
            }
            self.last_sign = sg;
        }
        let inside = r.y_err.abs() < m.eps_y && r.theta_err.abs() < m.eps_theta;
        if inside {
            self.stretch.get_or_insert((r.t, r.s_hat));
        } else if self.stretch.take().is_some() && m.converged_at.is_some() {
            m.exits_after_convergence += 1;
        }
        if m.converged_at.is_none() {
            if !inside {
                return;
            }
            m.converged_at = Some(r.t);
        }
        m.max_abs_y_after = m.max_abs_y_after.max(r.y_err.abs());
        m.max_abs_theta_after = m.max_abs_theta_after.max(r.theta_err.abs());
        m.max_abs_sigma_after = m.max_abs_sigma_after.max(r.sigma.abs());
    }

    fn finish(mut self) -> Metrics {
        if let Some((t, s)) = self.stretch {
            self.m.settled_at = Some(t);
            self.m.settled_s_hat = Some(s);
        }
        self.m.held = self.m.converged_at.is_some() && self.m.exits_after_convergence == 0;
        self.m
    }
}

/// Initial pose and transverse state for a scenario.
fn initial_state(sc: &Scenario) -> Result<(Pose, TransverseState), SimError> {
    let path = &sc.path;
    match sc.start {
        Start::Transverse { y_err, theta_err } => {
            let pose = pose_from_transverse(path, 0.0, y_err, theta_err).map_err(SimError::Start)?;
            let ts = to_transverse(&pose, path, Some(0.0), sc.params.r).map_err(SimError::Start)?;
            Ok((pose, ts))
        }
        Start::Pose { x, y, theta } => {
            let pose = Pose::new(x, y, theta);
            let ts = to_transverse(&pose, path, None, sc.params.r).map_err(SimError::Start)?;
            Ok((pose, ts))
        }
    }
}

/// Runs one closed-loop scenario to the end of the path or `t_max`.
pub fn run(sc: &Scenario) -> Result<SimLog, SimError> {
    if !(sc.dt > 0.0 && sc.dt.is_finite()) {
        return Err(PlantError::Step(sc.dt).into());
    }
    let params = &sc.params;
    if sc.validate_path {
        let r_lower = params.min_path_radius();
        let opts = ValidationOptions {
            neighborhood: sc.validation.neighborhood.or(Some(params.r)),
            ..sc.validation.clone()
        };
        let rep = sc.path.validate_assumptions(r_lower, &opts);
        if !rep.passed() {
            return Err(SimError::PathRejected {
                r_lower,
                reasons: rep.failures(),
            });
        }
    }
    let set = InvariantSet::from_params(params);
    let (mut pose, mut ts) = initial_state(sc)?;
    if sc.require_start_in_set && !set.contains(ts.y_err, ts.theta_err, 0.0) {
        return Err(SimError::StartOutsideSet {
            y_err: ts.y_err,
            theta_err: ts.theta_err,
        });
    }

    let method = sc.integrator();
    let t_max = sc.t_max();
    let mut metrics = MetricsBuilder::new(params);
    let mut records = Vec::with_capacity((t_max / sc.dt).min(1e7) as usize + 1);
    let mut step: u64 = 0;
    loop {
        let t = step as f64 * sc.dt;
        let sigma = params.sigma(ts.y_err, ts.theta_err);
        let omega = params.control(&ts);
        let ctx = AdversaryContext {
            state: &ts,
            params,
        };
        let d = sc.signal.sample(t, Some(ctx));
        let margin = set.margin(ts.y_err, ts.theta_err);
        let rec = SimRecord {
            t,
            x: pose.x,
            y: pose.y,
            theta: pose.theta,
            s_hat: ts.s_hat,
            y_err: ts.y_err,
            theta_err: ts.theta_err,
            sigma,
            omega,
            d1: d.d1,
            d2: d.d2,
            in_s: margin >= -IN_SET_TOLERANCE,
        };
        metrics.push(&rec, margin);
        records.push(rec);

        if ts.s_hat >= 1.0 - END_TOLERANCE {
            metrics.m.reached_end = true;
            break;
        }
        if t >= t_max {
            break;
        }

        let advance = integrate_step(
            &pose,
            params.v,
            omega,
            |tau| sc.signal.sample(tau, Some(ctx)),
            t,
            sc.dt,
            method,
        )
        .map_err(SimError::from)
        .and_then(|next| {
            to_transverse(&next, &sc.path, Some(ts.s_hat), params.r)
                .map(|nts| (next, nts))
                .map_err(|e| SimError::Aborted {
                    t: t + sc.dt,
                    reason: e.to_string(),
                    log: Box::default(),
                })
        });
        match advance {
            Ok((next, nts)) => {
                pose = next;
                ts = nts;
            }
            Err(SimError::Aborted { t, reason, .. }) => {
                let log = SimLog {
                    start: sc.start,
                    records,
                    metrics: metrics.finish(),
                };
                return Err(SimError::Aborted {
                    t,
                    reason,
                    log: Box::new(log),
                });
            }
            Err(e) => return Err(e),
        }
        step += 1;
    }
    Ok(SimLog {
        start: sc.start,
        records,
        metrics: metrics.finish(),
    })
}

impl Default for SimLog {
    fn default() -> Self {
        Self {
            start: Start::Transverse {
                y_err: 0.0,
                theta_err: 0.0,
            },
            records: Vec::new(),
            metrics: MetricsBuilder::new(&ControllerParams {
                r: 1.0,
                v: 1.0,
                p: 0.0,
                q: 0.0,
                y_intercept: 1.0,
                phi: 0.0,
                law: Default::default(),
            })
            .finish(),
        }
    }
}

/// Runs scenarios in parallel, preserving order.
pub fn run_all(scenarios: &[Scenario]) -> Vec<Result<SimLog, SimError>> {
    scenarios.par_iter().map(run).collect()
}

pub fn build_benchmark_path() -> ReferencePath {
    builtin(BENCHMARK_NAME).expect("built-in benchmark path")
}

/// The four benchmark scenarios over the built-in path.
pub fn benchmark_scenarios(params: &ControllerParams, signal: &DisturbanceSignal) -> Vec<Scenario> {
    let path = Arc::new(build_benchmark_path());
    BENCHMARK_STARTS
        .iter()
        .map(|&(y, deg)| Scenario::new(path.clone(), Start::transverse_deg(y, deg), *params, signal.clone()))
        .collect()
}

pub fn benchmark_suite(params: &ControllerParams, signal: &DisturbanceSignal) -> Vec<Result<SimLog, SimError>> {
    run_all(&benchmark_scenarios(params, signal))
}
