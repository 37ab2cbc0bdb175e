//! The robust invariant set, region labels and grid certificates.
//!
//! With `u = ỹ/R` and `y_d = (ỹ/R)_d`:
//!
//! ```text
//! L₁ = u + y_d            L₂ = y_d − u
//! Γ₁ = −2 + y_d(1−p) − u(1−p) + 2 cos θ̃
//! Γ₂ = −2 + y_d(1−p) + u(1−p) + 2 cos θ̃
//! ```
//!
//! `S` is the region bounded by `L₁ = 0`, `L₂ = 0`, `Γ₁ = 0` on the `θ̃ ≥ 0`
//! side and `Γ₂ = 0` on the `θ̃ ≤ 0` side.

use std::f64::consts::FRAC_PI_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::sign0;
use crate::controller::ControllerParams;
use crate::frenet::{transverse_rates, TransverseState};
use crate::plant::{Disturbance, DisturbanceBounds};

/// Boundary-derivative slack for the invariance certificate.
pub const NAGUMO_TOLERANCE: f64 = 1e-9;
/// Samples per boundary curve.
pub const DEFAULT_BOUNDARY_SAMPLES: usize = 1000;
/// Grid points per axis for region interiors.
pub const DEFAULT_REGION_GRID: usize = 64;
/// `|σ|` below this counts as on the manifold.
pub const MANIFOLD_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum InvariantError {
    #[error("invalid set parameter {name} = {value}: {reason}")]
    Invalid {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("state (ỹ = {y_err}, θ̃ = {theta_err}) lies outside the invariant set")]
    OutsideSet { y_err: f64, theta_err: f64 },
    #[error("curvature bound {kappa_abs_max} exceeds 1/R_lower = {limit} (minimum path radius violated)")]
    RadiusViolated { kappa_abs_max: f64, limit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvariantSet {
    pub p: f64,
    pub y_intercept: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryValues {
    pub l1: f64,
    pub l2: f64,
    pub g1: f64,
    pub g2: f64,
}

/// `Γ̃₂` for a given curvature; straight pieces leave it unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gamma2Tilde {
    Bounded(f64),
    Unbounded,
}

impl Gamma2Tilde {
    pub fn is_nonnegative(self) -> bool {
        match self {
            Gamma2Tilde::Bounded(v) => v >= 0.0,
            Gamma2Tilde::Unbounded => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    /// `θ̃ ≥ 0, σ ≥ 0`
    R1,
    /// `θ̃ ≤ 0, σ ≤ 0`
    R2,
    /// `θ̃ ≥ 0, σ ≤ 0`
    R3,
    /// `θ̃ ≤ 0, σ ≥ 0`
    R4,
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = match self {
            Region::R1 => 1,
            Region::R2 => 2,
            Region::R3 => 3,
            Region::R4 => 4,
        };
        write!(f, "Region {n}")
    }
}

impl InvariantSet {
    pub fn new(p: f64, y_intercept: f64, r: f64) -> Result<Self, InvariantError> {
        let bad = |name, value, reason| Err(InvariantError::Invalid { name, value, reason });
        if !(0.0..1.0).contains(&p) {
            return bad("p", p, "must lie in [0, 1)");
        }
        if !(y_intercept > 0.0 && y_intercept <= 1.0) {
            return bad("y_intercept", y_intercept, "must lie in (0, 1]");
        }
        if !(r > 0.0 && r.is_finite()) {
            return bad("R", r, "must be positive");
        }
        Ok(Self { p, y_intercept, r })
    }

    pub fn from_params(params: &ControllerParams) -> Self {
        Self {
            p: params.p,
            y_intercept: params.y_intercept,
            r: params.r,
        }
    }

    pub fn boundary_values(&self, y_err: f64, theta_err: f64) -> BoundaryValues {
        let u = y_err / self.r;
        let yd = self.y_intercept;
        let k = 1.0 - self.p;
        let c = 2.0 * theta_err.cos() - 2.0;
        BoundaryValues {
            l1: u + yd,
            l2: yd - u,
            g1: c + yd * k - u * k,
            g2: c + yd * k + u * k,
        }
    }

    /// Smallest boundary value among those that bound `S` at this heading
    /// error, including the `|ỹ| ≤ R`, `|θ̃| ≤ π/2` box (scaled to match).
    pub fn margin(&self, y_err: f64, theta_err: f64) -> f64 {
        let b = self.boundary_values(y_err, theta_err);
        let mut m = b.l1.min(b.l2);
        if theta_err >= 0.0 {
            m = m.min(b.g1);
        }
        if theta_err <= 0.0 {
            m = m.min(b.g2);
        }
        m.min(1.0 - (y_err / self.r).abs())
            .min(FRAC_PI_2 - theta_err.abs())
    }

    pub fn contains(&self, y_err: f64, theta_err: f64, tol: f64) -> bool {
        self.margin(y_err, theta_err) >= -tol
    }

    /// Largest `|θ̃|` in `S`, reached at the corners `ỹ = ∓R (ỹ/R)_d`.
    pub fn theta_max(&self) -> f64 {
        (1.0 - (1.0 - self.p) * self.y_intercept).clamp(-1.0, 1.0).acos()
    }

    pub fn gamma2_tilde(&self, kappa_abs: f64) -> Gamma2Tilde {
        if kappa_abs > 0.0 {
            let k = 1.0 - self.p;
            Gamma2Tilde::Bounded(-2.0 + self.y_intercept * k + k / (kappa_abs * self.r))
        } else {
            Gamma2Tilde::Unbounded
        }
    }

    /// `R̲` for this set.
    pub fn min_path_radius(&self) -> f64 {
        crate::controller::min_path_radius(self.r, self.p, self.y_intercept)
    }

    /// Region label by the signs of `θ̃` and `σ`; ties go to the lower number.
    pub fn classify_region(
        &self,
        y_err: f64,
        theta_err: f64,
        params: &ControllerParams,
    ) -> Result<Region, InvariantError> {
        if !self.contains(y_err, theta_err, 0.0) {
            return Err(InvariantError::OutsideSet { y_err, theta_err });
        }
        Ok(region_of(theta_err, params.sigma(y_err, theta_err)))
    }
}

pub fn region_of(theta_err: f64, sigma: f64) -> Region {
    if sigma >= 0.0 {
        if theta_err >= 0.0 {
            Region::R1
        } else if sigma == 0.0 {
            Region::R2
        } else {
            Region::R4
        }
    } else if theta_err > 0.0 {
        Region::R3
    } else {
        Region::R2
    }
}

/// Closed-loop transverse rates with `sign(R̂) = +1`; the closed loop does
/// not depend on the sign.
fn closed_loop(
    y_err: f64,
    theta_err: f64,
    kappa_abs: f64,
    params: &ControllerParams,
    d: Disturbance,
) -> Option<(f64, f64)> {
    let ts = TransverseState {
        y_err,
        theta_err,
        s_hat: 0.0,
        curv_sign: 1.0,
        kappa_abs,
    };
    let omega = params.control(&ts);
    transverse_rates(&ts, params.v, omega, d.d1, d.d2)
        .ok()
        .map(|r| (r.dy, r.dtheta))
}

/// `X = R |κ̂| cos θ̃ / (1 − |κ̂| ỹ)`; `None` at or beyond the frame singularity.
fn curvature_term(y_err: f64, theta_err: f64, kappa_abs: f64, r: f64) -> Option<f64> {
    let den = 1.0 - kappa_abs * y_err;
    if den <= 0.0 {
        return None;
    }
    Some(r * kappa_abs * theta_err.cos() / den)
}

pub fn l1_dot(theta_err: f64, params: &ControllerParams, d: Disturbance) -> f64 {
    theta_err.sin() * (1.0 + d.d1) * params.v / params.r
}

pub fn l2_dot(theta_err: f64, params: &ControllerParams, d: Disturbance) -> f64 {
    -l1_dot(theta_err, params, d)
}

/// `Γ̇₁ = sin θ̃ [(p−1)(1+d₁)v/R + 2X(1+d₁)v/R − 2 w(σ)(1+d₂)v/R]`.
pub fn gamma1_dot(
    y_err: f64,
    theta_err: f64,
    kappa_abs: f64,
    params: &ControllerParams,
    d: Disturbance,
) -> Option<f64> {
    gamma_dot(-1.0, y_err, theta_err, kappa_abs, params, d)
}

/// `Γ̇₂ = sin θ̃ [(1−p)(1+d₁)v/R + 2X(1+d₁)v/R − 2 w(σ)(1+d₂)v/R]`.
pub fn gamma2_dot(
    y_err: f64,
    theta_err: f64,
    kappa_abs: f64,
    params: &ControllerParams,
    d: Disturbance,
) -> Option<f64> {
    gamma_dot(1.0, y_err, theta_err, kappa_abs, params, d)
}

fn gamma_dot(
    side: f64,
    y_err: f64,
    theta_err: f64,
    kappa_abs: f64,
    params: &ControllerParams,
    d: Disturbance,
) -> Option<f64> {
    let s = theta_err.sin();
    if s == 0.0 {
        return Some(0.0);
    }
    let x = curvature_term(y_err, theta_err, kappa_abs, params.r)?;
    let w = params.switching(params.sigma(y_err, theta_err));
    let a = 1.0 + d.d1;
    let b = 1.0 + d.d2;
    Some(s * (side * (1.0 - params.p) * a + 2.0 * x * a - 2.0 * w * b) * params.v / params.r)
}

/// `σ σ̇ = −σ sin θ̃ (v/R) [(1 − q − X)(1 + d₁) + w(σ)(1 + d₂)]` for `θ̃ ≥ 0`.
pub fn sigma_sigma_dot(
    y_err: f64,
    theta_err: f64,
    kappa_abs: f64,
    params: &ControllerParams,
    d: Disturbance,
) -> Option<f64> {
    let sigma = params.sigma(y_err, theta_err);
    let x = curvature_term(y_err, theta_err, kappa_abs, params.r)?;
    let w = params.switching(sigma);
    let sg = sign0(theta_err);
    Some(
        -sigma * sg * theta_err.sin() * params.v / params.r
            * ((1.0 - params.q - sg * x) * (1.0 + d.d1) + sg * w * (1.0 + d.d2)),
    )
}

/// What an adversarial disturbance tries to achieve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryTarget {
    /// Push the state out through the nearest active boundary of `S`.
    Invariance,
    /// Slow down (or reverse) attraction to the sliding manifold.
    Attraction,
}

/// Disturbance-box vertex that is worst for `target` at the given state.
pub fn worst_case_disturbance(
    y_err: f64,
    theta_err: f64,
    kappa_abs: f64,
    params: &ControllerParams,
    bounds: &DisturbanceBounds,
    target: AdversaryTarget,
) -> Disturbance {
    let set = InvariantSet::from_params(params);
    let score = |d: Disturbance| -> f64 {
        let Some((dy, dth)) = closed_loop(y_err, theta_err, kappa_abs, params, d) else {
            return f64::NEG_INFINITY;
        };
        let r = params.r;
        match target {
            AdversaryTarget::Invariance => {
                let b = set.boundary_values(y_err, theta_err);
                let k = 1.0 - params.p;
                let dc = -2.0 * theta_err.sin() * dth;
                let mut active = [(b.l1, dy / r), (b.l2, -dy / r), (f64::INFINITY, 0.0)];
                if theta_err >= 0.0 {
                    active[2] = (b.g1, dc - k * dy / r);
                }
                if theta_err <= 0.0 && b.g2 < active[2].0 {
                    active[2] = (b.g2, dc + k * dy / r);
                }
                let (_, rate) = active
                    .into_iter()
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .unwrap_or((0.0, 0.0));
                // lower rate of the closest constraint is worse
                -rate
            }
            AdversaryTarget::Attraction => {
                let sigma = params.sigma(y_err, theta_err);
                let sdot = -(1.0 - params.q) * dy / r - sign0(theta_err) * theta_err.sin() * dth;
                sigma * sdot
            }
        }
    };
    bounds
        .vertices()
        .into_iter()
        .max_by(|a, b| score(*a).total_cmp(&score(*b)))
        .unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePoint {
    pub y_err: f64,
    pub theta_err: f64,
    pub kappa_abs: f64,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Minimum boundary derivative, or maximum `σσ̇` for region checks.
    pub worst: f64,
    pub at: Option<SamplePoint>,
    pub samples: usize,
    /// Samples dropped at the frame singularity `|κ̂| ỹ = 1`.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub certificate: String,
    pub passed: bool,
    pub tolerance: f64,
    pub kappa_abs_max: f64,
    pub checks: Vec<CheckResult>,
}

impl CertificateReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Running extremum over samples.
struct Tracker {
    name: &'static str,
    minimize: bool,
    worst: f64,
    at: Option<SamplePoint>,
    samples: usize,
    skipped: usize,
}

impl Tracker {
    fn new(name: &'static str, minimize: bool) -> Self {
        Self {
            name,
            minimize,
            worst: if minimize { f64::INFINITY } else { f64::NEG_INFINITY },
            at: None,
            samples: 0,
            skipped: 0,
        }
    }

    fn push(&mut self, value: Option<f64>, at: SamplePoint) {
        let Some(v) = value else {
            self.skipped += 1;
            return;
        };
        self.samples += 1;
        let worse = if self.minimize { v < self.worst } else { v > self.worst };
        if worse {
            self.worst = v;
            self.at = Some(at);
        }
    }

    fn finish(self, passed: impl Fn(f64) -> bool) -> CheckResult {
        CheckResult {
            name: self.name.to_string(),
            passed: self.samples == 0 || passed(self.worst),
            worst: if self.samples == 0 { 0.0 } else { self.worst },
            at: self.at,
            samples: self.samples,
            skipped: self.skipped,
        }
    }
}

fn check_kappa(set: &InvariantSet, kappa_abs_max: f64) -> Result<(), InvariantError> {
    if !(kappa_abs_max >= 0.0 && kappa_abs_max.is_finite()) {
        return Err(InvariantError::Invalid {
            name: "kappa_abs_max",
            value: kappa_abs_max,
            reason: "must be finite and non-negative",
        });
    }
    let limit = 1.0 / set.min_path_radius();
    if kappa_abs_max > limit * (1.0 + 1e-9) {
        return Err(InvariantError::RadiusViolated { kappa_abs_max, limit });
    }
    Ok(())
}

/// Nagumo check of the four boundaries of `S` under the closed loop.
///
/// Each boundary is sampled at `n_samples` points; at each point the
/// boundary-function derivative is minimised over the disturbance vertices
/// and `|κ̂| ∈ {0, kappa_abs_max}`. Boundary 4 is only checked where
/// `Γ̃₂ ≥ 0`.
pub fn nagumo_certificate(
    set: &InvariantSet,
    params: &ControllerParams,
    bounds: &DisturbanceBounds,
    kappa_abs_max: f64,
    n_samples: usize,
) -> Result<CertificateReport, InvariantError> {
    check_kappa(set, kappa_abs_max)?;
    let n = n_samples.max(2);
    let th_max = set.theta_max();
    let (yd, k, r) = (set.y_intercept, 1.0 - set.p, set.r);
    let kappas = [0.0, kappa_abs_max];
    let verts = bounds.vertices();

    let mut l1 = Tracker::new("boundary1_L1", true);
    let mut l2 = Tracker::new("boundary2_L2", true);
    let mut g1 = Tracker::new("boundary3_Gamma1", true);
    let mut g2 = Tracker::new("boundary4_Gamma2", true);

    for i in 0..n {
        let th = th_max * i as f64 / (n - 1) as f64;
        let lift = 2.0 * (1.0 - th.cos()) / k;
        for &kappa in &kappas {
            for &d in &verts {
                let at = |y: f64, t: f64| SamplePoint {
                    y_err: y,
                    theta_err: t,
                    kappa_abs: kappa,
                    d1: d.d1,
                    d2: d.d2,
                };
                // Boundary 1: ỹ = −R y_d, θ̃ ∈ [0, θmax]
                l1.push(Some(l1_dot(th, params, d)), at(-yd * r, th));
                // Boundary 2: ỹ = R y_d, θ̃ ∈ [−θmax, 0]
                l2.push(Some(l2_dot(-th, params, d)), at(yd * r, -th));
                // Boundary 3: Γ₁ = 0, θ̃ ≥ 0
                let y3 = (yd - lift) * r;
                g1.push(gamma1_dot(y3, th, kappa, params, d), at(y3, th));
                // Boundary 4: Γ₂ = 0, θ̃ ≤ 0
                if set.gamma2_tilde(kappa).is_nonnegative() {
                    let y4 = (lift - yd) * r;
                    g2.push(gamma2_dot(y4, -th, kappa, params, d), at(y4, -th));
                }
            }
        }
    }

    let ok = |v: f64| v >= -NAGUMO_TOLERANCE;
    let checks = vec![l1.finish(ok), l2.finish(ok), g1.finish(ok), g2.finish(ok)];
    Ok(CertificateReport {
        certificate: "invariance".into(),
        passed: checks.iter().all(|c| c.passed),
        tolerance: NAGUMO_TOLERANCE,
        kappa_abs_max,
        checks,
    })
}

/// Lyapunov check `σσ̇ < 0` on an `n × n` grid over Regions 1 and 3.
///
/// Grid points are cell centres of `[−R y_d, R y_d] × [0, π/2]`, kept when
/// inside `S` and off the manifold. `σσ̇` is maximised over the disturbance
/// vertices and `|κ̂| ∈ {0, kappa_abs_max}`.
pub fn attractiveness_certificate(
    params: &ControllerParams,
    bounds: &DisturbanceBounds,
    kappa_abs_max: f64,
    n_samples: usize,
) -> Result<CertificateReport, InvariantError> {
    if !(kappa_abs_max >= 0.0 && kappa_abs_max.is_finite()) {
        return Err(InvariantError::Invalid {
            name: "kappa_abs_max",
            value: kappa_abs_max,
            reason: "must be finite and non-negative",
        });
    }
    let set = InvariantSet::from_params(params);
    let n = n_samples.max(1);
    let yd = set.y_intercept;
    let mut r1 = Tracker::new("region1", false);
    let mut r3 = Tracker::new("region3", false);
    for i in 0..n {
        let y = params.r * yd * (-1.0 + 2.0 * (i as f64 + 0.5) / n as f64);
        for j in 0..n {
            let th = FRAC_PI_2 * (j as f64 + 0.5) / n as f64;
            if !set.contains(y, th, 0.0) {
                continue;
            }
            let sigma = params.sigma(y, th);
            if sigma.abs() <= MANIFOLD_TOLERANCE {
                continue;
            }
            let tracker = if sigma > 0.0 { &mut r1 } else { &mut r3 };
            for kappa in [0.0, kappa_abs_max] {
                for d in bounds.vertices() {
                    let at = SamplePoint {
                        y_err: y,
                        theta_err: th,
                        kappa_abs: kappa,
                        d1: d.d1,
                        d2: d.d2,
                    };
                    tracker.push(sigma_sigma_dot(y, th, kappa, params, d), at);
                }
            }
        }
    }
    let ok = |v: f64| v < 0.0;
    let checks = vec![r1.finish(ok), r3.finish(ok)];
    Ok(CertificateReport {
        certificate: "attractiveness".into(),
        passed: checks.iter().all(|c| c.passed),
        tolerance: 0.0,
        kappa_abs_max,
        checks,
    })
}
