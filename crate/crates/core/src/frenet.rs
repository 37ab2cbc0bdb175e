//! Transverse error coordinates relative to the nearest path point and their
//! perturbed dynamics.
//!
//! With `ŝ` the nearest-point parameter, `θ̂` the path heading and
//! `sgn = sign(R̂(ŝ))` (`+1` on straight pieces):
//!
//! ```text
//! ỹ = sgn · [(y − ŷ) cos θ̂ − (x − x̂) sin θ̂]
//! θ̃ = sgn · (θ − θ̂)
//! ```
//!
//! so `ỹ > 0` means the vehicle sits on the center-of-curvature side.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::wrap;
use crate::plant::Pose;
use crate::refpath::{PathError, Point, ReferencePath};

#[derive(Debug, Error)]
pub enum FrenetError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("frame singularity: |κ|·|ỹ| = {0} ≥ 1")]
    Singular(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransverseState {
    pub y_err: f64,
    /// Wrapped to `(-PI, PI]`.
    pub theta_err: f64,
    pub s_hat: f64,
    /// `sign(R̂(ŝ)) ∈ {-1, +1}`.
    pub curv_sign: f64,
    pub kappa_abs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransverseRates {
    pub dy: f64,
    pub dtheta: f64,
}

fn check_frame(kappa_abs: f64, y_err: f64) -> Result<(), FrenetError> {
    let k = kappa_abs * y_err.abs();
    if k >= 1.0 {
        Err(FrenetError::Singular(k))
    } else {
        Ok(())
    }
}

/// Projects `pose` onto `path` and expresses it in transverse coordinates.
pub fn to_transverse(
    pose: &Pose,
    path: &ReferencePath,
    hint: Option<f64>,
    neighborhood: f64,
) -> Result<TransverseState, FrenetError> {
    let proj = path.project(pose.position(), hint, neighborhood)?;
    transverse_at(pose, path, proj.s_hat)
}

/// Transverse coordinates of `pose` relative to the path point `s`.
pub fn transverse_at(pose: &Pose, path: &ReferencePath, s: f64) -> Result<TransverseState, FrenetError> {
    let g = path.eval(s)?;
    let heading = path.tangent_heading(s)?;
    let kappa = path.signed_curvature(s)?;
    let sgn = kappa.sign();
    let (sn, cs) = heading.sin_cos();
    let y_err = sgn * ((pose.y - g.y) * cs - (pose.x - g.x) * sn);
    let theta_err = wrap(sgn * (pose.theta - heading));
    check_frame(kappa.abs(), y_err)?;
    Ok(TransverseState {
        y_err,
        theta_err,
        s_hat: s,
        curv_sign: sgn,
        kappa_abs: kappa.abs(),
    })
}

/// Inverse map: the pose at path point `s` with the given transverse errors.
pub fn pose_from_transverse(
    path: &ReferencePath,
    s: f64,
    y_err: f64,
    theta_err: f64,
) -> Result<Pose, FrenetError> {
    let g = path.eval(s)?;
    let heading = path.tangent_heading(s)?;
    let kappa = path.signed_curvature(s)?;
    check_frame(kappa.abs(), y_err)?;
    let sgn = kappa.sign();
    let left = Point::new(-heading.sin(), heading.cos());
    let p = g + left.scale(sgn * y_err);
    Ok(Pose::new(p.x, p.y, heading + sgn * theta_err))
}

/// Transverse error dynamics:
///
/// ```text
/// dỹ/dt = sin θ̃ (1 + d1) v
/// dθ̃/dt = −|κ| cos θ̃ / (1 − |κ| ỹ) · (1 + d1) v + sgn · (1 + d2) ω
/// ```
pub fn transverse_rates(
    ts: &TransverseState,
    v: f64,
    omega: f64,
    d1: f64,
    d2: f64,
) -> Result<TransverseRates, FrenetError> {
    check_frame(ts.kappa_abs, ts.y_err)?;
    let (s, c) = ts.theta_err.sin_cos();
    let speed = (1.0 + d1) * v;
    Ok(TransverseRates {
        dy: s * speed,
        dtheta: -ts.kappa_abs * c / (1.0 - ts.kappa_abs * ts.y_err) * speed
            + ts.curv_sign * (1.0 + d2) * omega,
    })
}
