//! Path definition files and built-in paths.
//!
//! A path file is TOML with one `[[segment]]` table per segment, in order:
//!
//! ```toml
//! [[segment]]
//! kind = "line"
//! start = [0.0, 0.0]
//! end = [4.0, 0.0]
//!
//! [[segment]]
//! kind = "arc"
//! center = [4.0, -2.0]
//! radius = 2.0
//! start_angle_deg = 90.0
//! end_angle_deg = -90.0
//! orientation = "cw"
//!
//! [[segment]]
//! kind = "poly"          # x(u), y(u) coefficients, increasing powers
//! x = [4.0, -1.0]
//! y = [-4.0, 0.0]
//! ```
//!
//! Each segment may carry `s_end`; either every segment sets it or none does,
//! in which case `s` ranges are proportional to arc length.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{PathError, PathSegment, Point, ReferencePath, SegmentGeometry};

/// Name of the built-in benchmark path.
pub const BENCHMARK_NAME: &str = "benchmark";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Ccw,
    Cw,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SegmentSpec {
    Line {
        start: [f64; 2],
        end: [f64; 2],
        s_end: Option<f64>,
    },
    Arc {
        center: [f64; 2],
        radius: f64,
        start_angle: Option<f64>,
        end_angle: Option<f64>,
        start_angle_deg: Option<f64>,
        end_angle_deg: Option<f64>,
        orientation: Orientation,
        s_end: Option<f64>,
    },
    Poly {
        x: Vec<f64>,
        y: Vec<f64>,
        s_end: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathFile {
    pub segment: Vec<SegmentSpec>,
}

fn angle(rad: Option<f64>, deg: Option<f64>, what: &str) -> Result<f64, PathError> {
    match (rad, deg) {
        (Some(r), None) => Ok(r),
        (None, Some(d)) => Ok(d.to_radians()),
        _ => Err(PathError::File(format!(
            "arc needs exactly one of {what} / {what}_deg"
        ))),
    }
}

impl SegmentSpec {
    fn s_end(&self) -> Option<f64> {
        match self {
            Self::Line { s_end, .. } | Self::Arc { s_end, .. } | Self::Poly { s_end, .. } => *s_end,
        }
    }

    fn geometry(&self) -> Result<SegmentGeometry, PathError> {
        Ok(match self {
            Self::Line { start, end, .. } => SegmentGeometry::Line {
                start: Point::new(start[0], start[1]),
                end: Point::new(end[0], end[1]),
            },
            Self::Arc {
                center,
                radius,
                start_angle,
                end_angle,
                start_angle_deg,
                end_angle_deg,
                orientation,
                ..
            } => {
                let a0 = angle(*start_angle, *start_angle_deg, "start_angle")?;
                let a1 = angle(*end_angle, *end_angle_deg, "end_angle")?;
                let raw = a1 - a0;
                let sweep = match orientation {
                    Orientation::Ccw if raw <= 0.0 => raw + TAU * ((-raw / TAU).floor() + 1.0),
                    Orientation::Cw if raw >= 0.0 => raw - TAU * ((raw / TAU).floor() + 1.0),
                    _ => raw,
                };
                SegmentGeometry::Arc {
                    center: Point::new(center[0], center[1]),
                    radius: *radius,
                    start_angle: a0,
                    sweep,
                }
            }
            Self::Poly { x, y, .. } => SegmentGeometry::Poly {
                x: x.clone(),
                y: y.clone(),
            },
        })
    }
}

impl PathFile {
    pub fn parse(text: &str) -> Result<Self, PathError> {
        toml::from_str(text).map_err(|e| PathError::File(e.to_string()))
    }

    pub fn build(&self) -> Result<ReferencePath, PathError> {
        if self.segment.is_empty() {
            return Err(PathError::File("no [[segment]] entries".into()));
        }
        let ends: Vec<Option<f64>> = self.segment.iter().map(SegmentSpec::s_end).collect();
        let geoms = self
            .segment
            .iter()
            .map(SegmentSpec::geometry)
            .collect::<Result<Vec<_>, _>>()?;
        if ends.iter().all(Option::is_none) {
            return ReferencePath::from_geometries(geoms);
        }
        if ends.iter().any(Option::is_none) {
            return Err(PathError::File(
                "either all segments set s_end or none does".into(),
            ));
        }
        let mut start = 0.0;
        let segments = geoms
            .into_iter()
            .zip(ends)
            .map(|(geometry, end)| {
                let end = end.unwrap_or(1.0);
                let seg = PathSegment {
                    geometry,
                    s_start: start,
                    s_end: end,
                };
                start = end;
                seg
            })
            .collect();
        ReferencePath::new(segments)
    }
}

/// Looks up a built-in path by name.
pub fn builtin(name: &str) -> Option<ReferencePath> {
    match name {
        BENCHMARK_NAME => Some(benchmark()),
        _ => None,
    }
}

/// Resolves a built-in name or reads a path file.
pub fn load_path(spec: &str) -> Result<ReferencePath, PathError> {
    if let Some(p) = builtin(spec) {
        return Ok(p);
    }
    let text = std::fs::read_to_string(Path::new(spec))
        .map_err(|e| PathError::File(format!("{spec}: {e}")))?;
    PathFile::parse(&text)?.build()
}

/// Arc of radius 2 (CCW), a straight run of length 4, arc of radius 2 (CW),
/// parameterized as
///
/// ```text
/// s ∈ [0, 0.25):    (-2 sin 4πs,            2 + 2 cos 4πs)
/// s ∈ [0.25, 0.75): (8 (s - 0.25),          0)
/// s ∈ [0.75, 1]:    (4 + 2 sin 4π(s-0.75), -2 + 2 cos 4π(s-0.75))
/// ```
fn benchmark() -> ReferencePath {
    let segments = vec![
        PathSegment {
            geometry: SegmentGeometry::Arc {
                center: Point::new(0.0, 2.0),
                radius: 2.0,
                start_angle: FRAC_PI_2,
                sweep: PI,
            },
            s_start: 0.0,
            s_end: 0.25,
        },
        PathSegment {
            geometry: SegmentGeometry::Line {
                start: Point::new(0.0, 0.0),
                end: Point::new(4.0, 0.0),
            },
            s_start: 0.25,
            s_end: 0.75,
        },
        PathSegment {
            geometry: SegmentGeometry::Arc {
                center: Point::new(4.0, -2.0),
                radius: 2.0,
                start_angle: FRAC_PI_2,
                sweep: -PI,
            },
            s_start: 0.75,
            s_end: 1.0,
        },
    ];
    ReferencePath::new(segments).expect("benchmark path is well formed")
}
