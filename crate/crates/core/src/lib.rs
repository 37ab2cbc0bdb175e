//! Robust sliding-mode path tracking for Dubins vehicles with bounded
//! multiplicative disturbances on speed and turn rate.
//!
//! The crate is organised bottom-up:
//!
//! - [`refpath`]: curvature-constrained reference paths, nearest-point
//!   projection and path validation.
//! - [`frenet`]: transverse (lateral / heading) error coordinates and their
//!   disturbance-perturbed dynamics.
//! - [`plant`]: the uncertain Dubins model, disturbance realisations and
//!   fixed-step integration.
//! - [`controller`]: the invariant sliding-mode law, its boundary-layer variant
//!   and synthesis of tuning parameters from disturbance bounds.
//! - [`invariant`]: the robust invariant set, region labelling and grid
//!   certificates of boundary invariance and manifold attractiveness.
//! - [`sim`]: closed-loop scenarios, the four-start benchmark and metrics.
//! - [`export`]: the CSV log schema.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod angle;
pub mod controller;
pub mod export;
pub mod frenet;
pub mod invariant;
pub mod plant;
pub mod refpath;
pub mod sim;

pub use controller::{ControlLaw, ControllerError, ControllerParams, ParamOverrides};
pub use frenet::{FrenetError, TransverseRates, TransverseState};
pub use invariant::{CertificateReport, InvariantError, InvariantSet, Region};
pub use plant::{
    Disturbance, DisturbanceBounds, DisturbanceKind, DisturbanceSignal, Integrator, PlantError,
    Pose,
};
pub use refpath::{PathError, Point, ProjectionResult, ReferencePath, SignedCurvature};
pub use sim::{Scenario, SimError, SimLog, Start};
