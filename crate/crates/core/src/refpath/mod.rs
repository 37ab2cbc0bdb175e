//! Curvature-constrained reference paths `g(s) = (x(s), y(s))`, `s ∈ [0, 1]`.
//!
//! A path is an ordered list of segments, each owning a sub-interval of
//! `[0, 1]`. Segments are lines, circular arcs, polynomial curves, or
//! arbitrary user-supplied parametric curves. Curvature is stored as signed
//! curvature rather than radius so that straight pieces are `0` instead of an
//! infinite radius.

mod file;
mod projection;
mod validate;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use file::{builtin, load_path, PathFile, BENCHMARK_NAME};
pub use projection::{ProjectionResult, COARSE_SAMPLES, S_TOLERANCE, WARM_WINDOW};
pub use validate::{
    CurvatureCheck, JoinCheck, UniquenessCheck, ValidationOptions, ValidationReport,
};

#[derive(Debug, Error)]
pub enum PathError {
    #[error("path parameter {0} outside [0, 1]")]
    Domain(f64),
    #[error("degenerate curve at s = {0}: zero derivative")]
    Degenerate(f64),
    #[error("invalid segment partition: {0}")]
    Partition(String),
    #[error("invalid segment: {0}")]
    Segment(String),
    #[error("point ({x}, {y}) is {distance} from the path, outside the projection neighborhood {neighborhood}")]
    ProjectionAmbiguous {
        x: f64,
        y: f64,
        distance: f64,
        neighborhood: f64,
    },
    #[error("nearest point to ({x}, {y}) is not unique: s = {s_a} and s = {s_b}")]
    NonUnique { x: f64, y: f64, s_a: f64, s_b: f64 },
    #[error("path file: {0}")]
    File(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn scale(self, k: f64) -> Point {
        Point::new(self.x * k, self.y * k)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

/// Position and first two derivatives of a curve at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveJet {
    pub pos: Point,
    pub d1: Point,
    pub d2: Point,
}

/// A user-defined curve over the local parameter `u ∈ [0, 1]`.
///
/// Implementations must be continuously differentiable on `(0, 1)`.
pub trait ParametricCurve: Send + Sync {
    fn jet(&self, u: f64) -> CurveJet;
}

impl<F> ParametricCurve for F
where
    F: Fn(f64) -> CurveJet + Send + Sync,
{
    fn jet(&self, u: f64) -> CurveJet {
        self(u)
    }
}

#[derive(Clone)]
pub enum SegmentGeometry {
    Line {
        start: Point,
        end: Point,
    },
    /// Circular arc; `sweep > 0` is counter-clockwise.
    Arc {
        center: Point,
        radius: f64,
        start_angle: f64,
        sweep: f64,
    },
    /// Polynomial curve, coefficients in increasing power of `u`.
    Poly {
        x: Vec<f64>,
        y: Vec<f64>,
    },
    Analytic(Arc<dyn ParametricCurve>),
}

impl fmt::Debug for SegmentGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Line { start, end } => f
                .debug_struct("Line")
                .field("start", start)
                .field("end", end)
                .finish(),
            Self::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => f
                .debug_struct("Arc")
                .field("center", center)
                .field("radius", radius)
                .field("start_angle", start_angle)
                .field("sweep", sweep)
                .finish(),
            Self::Poly { x, y } => f.debug_struct("Poly").field("x", x).field("y", y).finish(),
            Self::Analytic(_) => f.write_str("Analytic(..)"),
        }
    }
}

fn poly_jet(c: &[f64], u: f64) -> (f64, f64, f64) {
    // Horner on value, first and second derivative together.
    let (mut p, mut d1, mut d2) = (0.0, 0.0, 0.0);
    for &a in c.iter().rev() {
        d2 = d2 * u + 2.0 * d1;
        d1 = d1 * u + p;
        p = p * u + a;
    }
    (p, d1, d2)
}

impl SegmentGeometry {
    /// Jet with respect to the local parameter `u`.
    pub fn jet(&self, u: f64) -> CurveJet {
        match self {
            Self::Line { start, end } => {
                let d = *end - *start;
                CurveJet {
                    pos: *start + d.scale(u),
                    d1: d,
                    d2: Point::default(),
                }
            }
            Self::Arc {
                center,
                radius,
                start_angle,
                sweep,
            } => {
                let a = start_angle + sweep * u;
                let (s, c) = a.sin_cos();
                CurveJet {
                    pos: Point::new(center.x + radius * c, center.y + radius * s),
                    d1: Point::new(-radius * sweep * s, radius * sweep * c),
                    d2: Point::new(-radius * sweep * sweep * c, -radius * sweep * sweep * s),
                }
            }
            Self::Poly { x, y } => {
                let (px, dx, ddx) = poly_jet(x, u);
                let (py, dy, ddy) = poly_jet(y, u);
                CurveJet {
                    pos: Point::new(px, py),
                    d1: Point::new(dx, dy),
                    d2: Point::new(ddx, ddy),
                }
            }
            Self::Analytic(curve) => curve.jet(u),
        }
    }

    /// Arc length of the segment.
    pub fn length(&self) -> f64 {
        match self {
            Self::Line { start, end } => (*end - *start).norm(),
            Self::Arc { radius, sweep, .. } => radius * sweep.abs(),
            _ => {
                // composite Simpson on |g'(u)|
                let n = 512;
                let h = 1.0 / n as f64;
                let speed = |u: f64| self.jet(u).d1.norm();
                let mut acc = speed(0.0) + speed(1.0);
                for i in 1..n {
                    let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * speed(i as f64 * h);
                }
                acc * h / 3.0
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct PathSegment {
    pub geometry: SegmentGeometry,
    pub s_start: f64,
    pub s_end: f64,
}

/// Signed curvature `κ = 1/R`; zero on straight pieces and at inflections.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SignedCurvature(pub f64);

impl SignedCurvature {
    pub fn kappa(self) -> f64 {
        self.0
    }

    pub fn abs(self) -> f64 {
        self.0.abs()
    }

    /// Sign of the radius of curvature; straight pieces count as `+1`.
    pub fn sign(self) -> f64 {
        if self.0 < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// An immutable reference path built from segments that partition `[0, 1]`.
#[derive(Debug, Clone)]
pub struct ReferencePath {
    segments: Vec<PathSegment>,
    length: f64,
}

const PARTITION_TOL: f64 = 1e-12;

impl ReferencePath {
    /// Builds a path from segments with explicit `s` ranges.
    pub fn new(segments: Vec<PathSegment>) -> Result<Self, PathError> {
        if segments.is_empty() {
            return Err(PathError::Partition("no segments".into()));
        }
        if segments[0].s_start.abs() > PARTITION_TOL {
            return Err(PathError::Partition(format!(
                "first segment starts at s = {}",
                segments[0].s_start
            )));
        }
        let last = segments.last().map(|s| s.s_end).unwrap_or(0.0);
        if (last - 1.0).abs() > PARTITION_TOL {
            return Err(PathError::Partition(format!(
                "last segment ends at s = {last}"
            )));
        }
        for (i, seg) in segments.iter().enumerate() {
            if !(seg.s_end > seg.s_start) {
                return Err(PathError::Partition(format!(
                    "segment {i} has empty range [{}, {}]",
                    seg.s_start, seg.s_end
                )));
            }
            if i > 0 && (seg.s_start - segments[i - 1].s_end).abs() > PARTITION_TOL {
                return Err(PathError::Partition(format!(
                    "gap or overlap between segments {} and {i}",
                    i - 1
                )));
            }
            check_geometry(i, &seg.geometry)?;
        }
        let mut segments = segments;
        // snap shared endpoints so lookups never fall into a sliver
        segments[0].s_start = 0.0;
        let n = segments.len();
        segments[n - 1].s_end = 1.0;
        for i in 1..n {
            segments[i].s_start = segments[i - 1].s_end;
        }
        let length = segments.iter().map(|s| s.geometry.length()).sum();
        Ok(Self { segments, length })
    }

    /// Builds a path whose `s` ranges are proportional to segment arc length.
    pub fn from_geometries(geoms: Vec<SegmentGeometry>) -> Result<Self, PathError> {
        for (i, g) in geoms.iter().enumerate() {
            check_geometry(i, g)?;
        }
        let lengths: Vec<f64> = geoms.iter().map(SegmentGeometry::length).collect();
        let total: f64 = lengths.iter().sum();
        if !(total > 0.0) {
            return Err(PathError::Partition("path has zero length".into()));
        }
        let mut acc = 0.0;
        let n = geoms.len();
        let segments = geoms
            .into_iter()
            .zip(lengths)
            .enumerate()
            .map(|(i, (geometry, len))| {
                let s_start = acc / total;
                acc += len;
                let s_end = if i + 1 == n { 1.0 } else { acc / total };
                PathSegment {
                    geometry,
                    s_start,
                    s_end,
                }
            })
            .collect();
        Self::new(segments)
    }

    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    /// Total arc length.
    pub fn length(&self) -> f64 {
        self.length
    }

    /// Index of the segment owning `s`; joins belong to the upcoming segment.
    pub(crate) fn segment_index(&self, s: f64) -> usize {
        let idx = self.segments.partition_point(|seg| seg.s_end <= s);
        idx.min(self.segments.len() - 1)
    }

    /// Jet with respect to `s` (not the local parameter). No domain check.
    pub(crate) fn jet(&self, s: f64) -> CurveJet {
        let seg = &self.segments[self.segment_index(s)];
        let span = seg.s_end - seg.s_start;
        let u = ((s - seg.s_start) / span).clamp(0.0, 1.0);
        let j = seg.geometry.jet(u);
        let k = 1.0 / span;
        CurveJet {
            pos: j.pos,
            d1: j.d1.scale(k),
            d2: j.d2.scale(k * k),
        }
    }

    fn check_domain(s: f64) -> Result<(), PathError> {
        if (0.0..=1.0).contains(&s) {
            Ok(())
        } else {
            Err(PathError::Domain(s))
        }
    }

    /// The point `g(s)`.
    pub fn eval(&self, s: f64) -> Result<Point, PathError> {
        Self::check_domain(s)?;
        Ok(self.jet(s).pos)
    }

    /// Tangent heading `atan2(y'(s), x'(s))` in `(-PI, PI]`.
    pub fn tangent_heading(&self, s: f64) -> Result<f64, PathError> {
        Self::check_domain(s)?;
        let d = self.jet(s).d1;
        if d.norm() < 1e-12 {
            return Err(PathError::Degenerate(s));
        }
        Ok(crate::angle::wrap(d.y.atan2(d.x)))
    }

    /// Signed curvature `(x'y'' - y'x'') / (x'^2 + y'^2)^{3/2}`.
    ///
    /// At a join the value of the upcoming segment is returned.
    pub fn signed_curvature(&self, s: f64) -> Result<SignedCurvature, PathError> {
        Self::check_domain(s)?;
        let j = self.jet(s);
        let speed = j.d1.norm();
        if speed < 1e-12 {
            return Err(PathError::Degenerate(s));
        }
        Ok(SignedCurvature(j.d1.cross(j.d2) / (speed * speed * speed)))
    }
}

fn check_geometry(i: usize, g: &SegmentGeometry) -> Result<(), PathError> {
    match g {
        SegmentGeometry::Line { start, end } => {
            if (*end - *start).norm() == 0.0 {
                return Err(PathError::Segment(format!("line {i} has zero length")));
            }
        }
        SegmentGeometry::Arc { radius, sweep, .. } => {
            if !(*radius > 0.0) || *sweep == 0.0 || !sweep.is_finite() {
                return Err(PathError::Segment(format!(
                    "arc {i} needs positive radius and nonzero sweep"
                )));
            }
        }
        SegmentGeometry::Poly { x, y } => {
            if x.is_empty() || y.is_empty() {
                return Err(PathError::Segment(format!(
                    "polynomial {i} needs coefficients for x and y"
                )));
            }
        }
        SegmentGeometry::Analytic(_) => {}
    }
    Ok(())
}
