//! Small angle and sign helpers shared across modules.

use std::f64::consts::{PI, TAU};

/// Wraps an angle into `(-PI, PI]`.
pub fn wrap(angle: f64) -> f64 {
    let a = angle.rem_euclid(TAU);
    if a > PI {
        a - TAU
    } else {
        a
    }
}

/// Sign with `sign(0) = 0`, unlike [`f64::signum`].
pub fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
