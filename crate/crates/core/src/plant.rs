//! The uncertain Dubins vehicle, disturbance realisations and fixed-step
//! integration.
//!
//! ```text
//! ẋ = cos θ (1 + d1) v
//! ẏ = sin θ (1 + d1) v
//! θ̇ = (1 + d2) ω
//! ```

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::angle::wrap;
use crate::controller::ControllerParams;
use crate::frenet::TransverseState;
use crate::invariant::{self, AdversaryTarget};
use crate::refpath::Point;

#[derive(Debug, Error, PartialEq)]
pub enum PlantError {
    #[error("disturbance bound {name} = {value} must lie in [0, 1)")]
    Bound { name: &'static str, value: f64 },
    #[error("disturbance signal exceeds its bounds: {0}")]
    Signal(String),
    #[error("time step must be positive and finite, got {0}")]
    Step(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Heading, wrapped to `(-PI, PI]`.
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: wrap(theta),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseRate {
    pub dx: f64,
    pub dy: f64,
    pub dtheta: f64,
}

/// Right-hand side of the uncertain Dubins model.
pub fn dynamics(pose: &Pose, v: f64, omega: f64, d1: f64, d2: f64) -> PoseRate {
    let (s, c) = pose.theta.sin_cos();
    let speed = (1.0 + d1) * v;
    PoseRate {
        dx: c * speed,
        dy: s * speed,
        dtheta: (1.0 + d2) * omega,
    }
}

/// Bounds `|d1| ≤ d1_bar`, `|d2| ≤ d2_bar`, each in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceBounds {
    pub d1_bar: f64,
    pub d2_bar: f64,
}

impl DisturbanceBounds {
    pub fn new(d1_bar: f64, d2_bar: f64) -> Result<Self, PlantError> {
        for (name, value) in [("d1_bar", d1_bar), ("d2_bar", d2_bar)] {
            if !(0.0..1.0).contains(&value) {
                return Err(PlantError::Bound { name, value });
            }
        }
        Ok(Self { d1_bar, d2_bar })
    }

    pub fn zero() -> Self {
        Self {
            d1_bar: 0.0,
            d2_bar: 0.0,
        }
    }

    /// The four corners of the disturbance box.
    pub fn vertices(&self) -> [Disturbance; 4] {
        let (a, b) = (self.d1_bar, self.d2_bar);
        [
            Disturbance::new(-a, -b),
            Disturbance::new(-a, b),
            Disturbance::new(a, -b),
            Disturbance::new(a, b),
        ]
    }

    pub fn contains(&self, d: Disturbance) -> bool {
        d.d1.abs() <= self.d1_bar && d.d2.abs() <= self.d2_bar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Disturbance {
    pub d1: f64,
    pub d2: f64,
}

impl Disturbance {
    pub const fn new(d1: f64, d2: f64) -> Self {
        Self { d1, d2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DisturbanceKind {
    Zero,
    Constant {
        d1: f64,
        d2: f64,
    },
    /// `d_i(t) = a_i sin(2π f_i t + φ_i)`.
    Sinusoid {
        amplitude: [f64; 2],
        frequency: [f64; 2],
        phase: [f64; 2],
    },
    /// Uniform on the bound box, piecewise constant over `hold` time units.
    UniformRandom { seed: u64, hold: f64 },
    /// Worst-case vertex against the current transverse state.
    Adversarial { target: AdversaryTarget },
}

pub const DEFAULT_RANDOM_HOLD: f64 = 0.05;

/// State handed to adversarial signals.
#[derive(Debug, Clone, Copy)]
pub struct AdversaryContext<'a> {
    pub state: &'a TransverseState,
    pub params: &'a ControllerParams,
}

/// A bounded disturbance realisation `t ↦ (d1(t), d2(t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceSignal {
    kind: DisturbanceKind,
    bounds: DisturbanceBounds,
}

impl DisturbanceSignal {
    pub fn new(kind: DisturbanceKind, bounds: DisturbanceBounds) -> Result<Self, PlantError> {
        match &kind {
            DisturbanceKind::Constant { d1, d2 } => {
                if !bounds.contains(Disturbance::new(*d1, *d2)) {
                    return Err(PlantError::Signal(format!(
                        "constant ({d1}, {d2}) outside ±({}, {})",
                        bounds.d1_bar, bounds.d2_bar
                    )));
                }
            }
            DisturbanceKind::Sinusoid { amplitude, .. } => {
                if amplitude[0].abs() > bounds.d1_bar || amplitude[1].abs() > bounds.d2_bar {
                    return Err(PlantError::Signal(format!(
                        "sinusoid amplitudes {amplitude:?} exceed bounds"
                    )));
                }
            }
            DisturbanceKind::UniformRandom { hold, .. } => {
                if !(*hold > 0.0 && hold.is_finite()) {
                    return Err(PlantError::Signal(format!(
                        "random hold interval must be positive, got {hold}"
                    )));
                }
            }
            DisturbanceKind::Zero | DisturbanceKind::Adversarial { .. } => {}
        }
        Ok(Self { kind, bounds })
    }

    pub fn zero() -> Self {
        Self {
            kind: DisturbanceKind::Zero,
            bounds: DisturbanceBounds::zero(),
        }
    }

    pub fn kind(&self) -> &DisturbanceKind {
        &self.kind
    }

    pub fn bounds(&self) -> DisturbanceBounds {
        self.bounds
    }

    pub fn is_adversarial(&self) -> bool {
        matches!(self.kind, DisturbanceKind::Adversarial { .. })
    }

    /// Disturbance at time `t`.
    ///
    /// Adversarial signals need `ctx`; without it they return zero.
    pub fn sample(&self, t: f64, ctx: Option<AdversaryContext<'_>>) -> Disturbance {
        match &self.kind {
            DisturbanceKind::Zero => Disturbance::default(),
            DisturbanceKind::Constant { d1, d2 } => Disturbance::new(*d1, *d2),
            DisturbanceKind::Sinusoid {
                amplitude,
                frequency,
                phase,
            } => {
                let f = |i: usize| amplitude[i] * (TAU * frequency[i] * t + phase[i]).sin();
                // clamp guards the ±1 ulp overshoot of sin
                Disturbance::new(
                    f(0).clamp(-self.bounds.d1_bar, self.bounds.d1_bar),
                    f(1).clamp(-self.bounds.d2_bar, self.bounds.d2_bar),
                )
            }
            DisturbanceKind::UniformRandom { seed, hold } => {
                let k = (t.max(0.0) / hold).floor() as u64;
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(k);
                let (a, b) = (self.bounds.d1_bar, self.bounds.d2_bar);
                Disturbance::new(rng.gen_range(-a..=a), rng.gen_range(-b..=b))
            }
            DisturbanceKind::Adversarial { target } => match ctx {
                Some(c) => invariant::worst_case_disturbance(
                    c.state.y_err,
                    c.state.theta_err,
                    c.state.kappa_abs,
                    c.params,
                    &self.bounds,
                    *target,
                ),
                None => Disturbance::default(),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    Rk4,
}

/// Advances the plant one step with `omega` held constant.
///
/// `disturbance` is queried at the stage times of the chosen method.
pub fn integrate_step<F>(
    pose: &Pose,
    v: f64,
    omega: f64,
    disturbance: F,
    t: f64,
    dt: f64,
    method: Integrator,
) -> Result<Pose, PlantError>
where
    F: Fn(f64) -> Disturbance,
{
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(PlantError::Step(dt));
    }
    let f = |p: &Pose, tau: f64| {
        let d = disturbance(tau);
        dynamics(p, v, omega, d.d1, d.d2)
    };
    let shift = |p: &Pose, r: &PoseRate, h: f64| Pose {
        x: p.x + h * r.dx,
        y: p.y + h * r.dy,
        theta: p.theta + h * r.dtheta,
    };
    let next = match method {
        Integrator::Euler => shift(pose, &f(pose, t), dt),
        Integrator::Rk4 => {
            let k1 = f(pose, t);
            let k2 = f(&shift(pose, &k1, 0.5 * dt), t + 0.5 * dt);
            let k3 = f(&shift(pose, &k2, 0.5 * dt), t + 0.5 * dt);
            let k4 = f(&shift(pose, &k3, dt), t + dt);
            let w = dt / 6.0;
            Pose {
                x: pose.x + w * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx),
                y: pose.y + w * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy),
                theta: pose.theta + w * (k1.dtheta + 2.0 * k2.dtheta + 2.0 * k3.dtheta + k4.dtheta),
            }
        }
    };
    Ok(Pose::new(next.x, next.y, next.theta))
}
