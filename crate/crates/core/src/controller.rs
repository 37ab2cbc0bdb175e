//! Invariant sliding-mode steering law and parameter synthesis.
//!
//! ```text
//! σ = −ỹ (1 − q) / R − sign(θ̃) (1 − cos θ̃)
//! ω = sign(R̂) · sign(σ) · v / R              (sign law)
//! ω = sign(R̂) · sat(σ / φ) · v / R           (boundary-layer law)
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::sign0;
use crate::frenet::TransverseState;
use crate::plant::{DisturbanceBounds, Integrator};

/// Default boundary-layer width for the saturated law.
pub const DEFAULT_PHI: f64 = 0.05;
/// Relative slack on the parameter audit.
const AUDIT_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum ControllerError {
    #[error(
        "disturbance bounds (d1_bar = {d1_bar}, d2_bar = {d2_bar}) are infeasible: \
         need 1 - d2_bar >= 0.5 (1 + d1_bar), got {lhs} < {rhs}"
    )]
    Infeasible {
        d1_bar: f64,
        d2_bar: f64,
        lhs: f64,
        rhs: f64,
    },
    #[error("invalid parameter {name} = {value}: {reason}")]
    Invalid {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("p = {p} is below the invariance margin {min} required by the disturbance bounds")]
    MarginTooSmall { p: f64, min: f64 },
    #[error("q = {q} lies outside the admissible window [{lo}, {hi}]")]
    QOutsideWindow { q: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlLaw {
    #[default]
    Sign,
    Saturated,
}

impl ControlLaw {
    /// Integrator used unless the scenario overrides it.
    pub fn default_integrator(self) -> Integrator {
        match self {
            ControlLaw::Sign => Integrator::Euler,
            ControlLaw::Saturated => Integrator::Rk4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerParams {
    /// Minimum turning radius.
    pub r: f64,
    /// Nominal forward speed.
    pub v: f64,
    pub p: f64,
    pub q: f64,
    /// Normalised lateral intercept `(ỹ/R)_d`.
    pub y_intercept: f64,
    /// Boundary-layer width; ignored by the sign law.
    pub phi: f64,
    pub law: ControlLaw,
}

/// User choices that replace synthesized defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub y_intercept: Option<f64>,
    pub phi: Option<f64>,
    pub law: Option<ControlLaw>,
}

/// `(1 − d̄₂) ≥ 0.5 (1 + d̄₁)`.
pub fn feasible(bounds: &DisturbanceBounds) -> bool {
    1.0 - bounds.d2_bar >= 0.5 * (1.0 + bounds.d1_bar)
}

fn ratio(bounds: &DisturbanceBounds) -> f64 {
    (1.0 - bounds.d2_bar) / (1.0 + bounds.d1_bar)
}

fn require_feasible(bounds: &DisturbanceBounds) -> Result<(), ControllerError> {
    if feasible(bounds) {
        Ok(())
    } else {
        Err(ControllerError::Infeasible {
            d1_bar: bounds.d1_bar,
            d2_bar: bounds.d2_bar,
            lhs: 1.0 - bounds.d2_bar,
            rhs: 0.5 * (1.0 + bounds.d1_bar),
        })
    }
}

/// Smallest admissible invariance margin, `1 − (1 − d̄₂)/(1 + d̄₁)`.
pub fn min_p(bounds: &DisturbanceBounds) -> Result<f64, ControllerError> {
    require_feasible(bounds)?;
    Ok(1.0 - ratio(bounds))
}

/// Admissible `q` interval `[1 − ρ, ρ]` with `ρ = (1 − d̄₂)/(1 + d̄₁)`.
pub fn q_window(bounds: &DisturbanceBounds) -> Result<(f64, f64), ControllerError> {
    require_feasible(bounds)?;
    let rho = ratio(bounds);
    Ok((1.0 - rho, rho))
}

/// `sat(x) = x` on `[-1, 1]`, `sign(x)` outside.
pub fn sat(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

impl ControllerParams {
    /// Fills unset values with the defaults (`p = min_p`, `q` at the window
    /// midpoint, `(ỹ/R)_d = 1`, `φ = 0.05`) without auditing the result.
    pub fn with_defaults(
        bounds: &DisturbanceBounds,
        r: f64,
        v: f64,
        o: &ParamOverrides,
    ) -> Result<Self, ControllerError> {
        let p = match o.p {
            Some(p) => p,
            None => min_p(bounds)?,
        };
        let q = match o.q {
            Some(q) => q,
            None => {
                let (lo, hi) = q_window(bounds)?;
                0.5 * (lo + hi)
            }
        };
        let params = Self {
            r,
            v,
            p,
            q,
            y_intercept: o.y_intercept.unwrap_or(1.0),
            phi: o.phi.unwrap_or(DEFAULT_PHI),
            law: o.law.unwrap_or_default(),
        };
        params.check_domain()?;
        Ok(params)
    }

    /// Defaults plus overrides, audited against `bounds`.
    pub fn synthesize(
        bounds: &DisturbanceBounds,
        r: f64,
        v: f64,
        o: &ParamOverrides,
    ) -> Result<Self, ControllerError> {
        let params = Self::with_defaults(bounds, r, v, o)?;
        params.audit(bounds)?;
        Ok(params)
    }

    fn check_domain(&self) -> Result<(), ControllerError> {
        let bad = |name, value, reason| Err(ControllerError::Invalid { name, value, reason });
        if !(self.r > 0.0 && self.r.is_finite()) {
            return bad("R", self.r, "must be positive");
        }
        if !(self.v > 0.0 && self.v.is_finite()) {
            return bad("v", self.v, "must be positive");
        }
        if !(0.0..1.0).contains(&self.p) {
            return bad("p", self.p, "must lie in [0, 1)");
        }
        if !(0.0..1.0).contains(&self.q) {
            return bad("q", self.q, "must lie in [0, 1)");
        }
        if !(self.y_intercept > 0.0 && self.y_intercept <= 1.0) {
            return bad("y_intercept", self.y_intercept, "must lie in (0, 1]");
        }
        if !(self.phi >= 0.0 && self.phi.is_finite()) {
            return bad("phi", self.phi, "must be non-negative");
        }
        if self.law == ControlLaw::Saturated && self.phi == 0.0 {
            return bad("phi", self.phi, "must be positive for the saturated law");
        }
        Ok(())
    }

    /// Checks the margin and the `q` window against `bounds`.
    pub fn audit(&self, bounds: &DisturbanceBounds) -> Result<(), ControllerError> {
        self.check_domain()?;
        let min = min_p(bounds)?;
        if self.p < min - AUDIT_TOL {
            return Err(ControllerError::MarginTooSmall { p: self.p, min });
        }
        let (lo, hi) = q_window(bounds)?;
        if self.q < lo - AUDIT_TOL || self.q > hi + AUDIT_TOL {
            return Err(ControllerError::QOutsideWindow { q: self.q, lo, hi });
        }
        Ok(())
    }

    /// Minimum admissible path radius `R̲ = 2R/(1 − p) − (ỹ/R)_d R`.
    pub fn min_path_radius(&self) -> f64 {
        min_path_radius(self.r, self.p, self.y_intercept)
    }

    pub fn sigma(&self, y_err: f64, theta_err: f64) -> f64 {
        sigma(y_err, theta_err, self)
    }

    /// Normalised switching term in `[-1, 1]`: `sign(σ)` or `sat(σ/φ)`.
    pub fn switching(&self, sigma: f64) -> f64 {
        match self.law {
            ControlLaw::Sign => sign0(sigma),
            ControlLaw::Saturated => sat(sigma / self.phi),
        }
    }

    /// Turn-rate command for the transverse state.
    pub fn control(&self, ts: &TransverseState) -> f64 {
        let s = self.sigma(ts.y_err, ts.theta_err);
        ts.curv_sign * self.switching(s) * self.v / self.r
    }
}

pub fn min_path_radius(r: f64, p: f64, y_intercept: f64) -> f64 {
    2.0 * r / (1.0 - p) - y_intercept * r
}

pub fn sigma(y_err: f64, theta_err: f64, params: &ControllerParams) -> f64 {
    -y_err * (1.0 - params.q) / params.r - sign0(theta_err) * (1.0 - theta_err.cos())
}
