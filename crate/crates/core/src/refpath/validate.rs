use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Point, ReferencePath};
use crate::angle::wrap;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationOptions {
    /// Radius of the neighborhood audited for nearest-point uniqueness.
    /// Defaults to the minimum radius under test.
    pub neighborhood: Option<f64>,
    /// Curvature samples per segment.
    pub curvature_samples: usize,
    pub uniqueness_points: usize,
    pub uniqueness_grid: usize,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        Self {
            neighborhood: None,
            curvature_samples: 2000,
            uniqueness_points: 200,
            uniqueness_grid: 2048,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JoinCheck {
    pub passed: bool,
    pub worst_position_gap: f64,
    pub worst_heading_gap: f64,
    /// Index of the first segment of the worst join, if any joins exist.
    pub worst_join: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureCheck {
    pub passed: bool,
    pub max_abs_kappa: f64,
    /// `1 / max |κ|`; `None` for a path without curvature.
    pub min_radius: Option<f64>,
    pub r_lower: f64,
    pub argmax_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniquenessCheck {
    pub passed: bool,
    pub neighborhood: f64,
    pub points: usize,
    pub violations: usize,
    pub first_violation: Option<Point>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub joins: JoinCheck,
    pub curvature: CurvatureCheck,
    pub uniqueness: UniquenessCheck,
    pub curvature_sign_changes: usize,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.joins.passed && self.curvature.passed && self.uniqueness.passed
    }

    /// Human-readable reasons for failure; empty when passed.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.joins.passed {
            out.push(format!(
                "tangent/position discontinuity after segment {}: position gap {:.3e}, heading gap {:.3e} rad",
                self.joins.worst_join.unwrap_or(0),
                self.joins.worst_position_gap,
                self.joins.worst_heading_gap
            ));
        }
        if !self.curvature.passed {
            out.push(format!(
                "minimum radius of curvature {:.6} is below the required {:.6} (at s = {:.6})",
                self.curvature.min_radius.unwrap_or(f64::INFINITY),
                self.curvature.r_lower,
                self.curvature.argmax_s
            ));
        }
        if !self.uniqueness.passed {
            out.push(format!(
                "{} of {} audited points have no unique nearest path point",
                self.uniqueness.violations, self.uniqueness.points
            ));
        }
        out
    }
}

const POSITION_TOL: f64 = 1e-9;
const HEADING_TOL: f64 = 1e-6;
const CURVATURE_REL_TOL: f64 = 1e-9;

impl ReferencePath {
    /// Checks the reference-path assumptions against a minimum radius.
    ///
    /// Failures are reported, never raised.
    pub fn validate_assumptions(&self, r_lower: f64, opts: &ValidationOptions) -> ValidationReport {
        ValidationReport {
            joins: self.check_joins(),
            curvature: self.check_curvature(r_lower, opts.curvature_samples),
            uniqueness: self.check_uniqueness(opts.neighborhood.unwrap_or(r_lower), opts),
            curvature_sign_changes: self.sign_changes(opts.curvature_samples),
        }
    }

    fn check_joins(&self) -> JoinCheck {
        let mut worst = JoinCheck {
            passed: true,
            worst_position_gap: 0.0,
            worst_heading_gap: 0.0,
            worst_join: None,
        };
        for (i, pair) in self.segments.windows(2).enumerate() {
            let end = pair[0].geometry.jet(1.0);
            let start = pair[1].geometry.jet(0.0);
            let gap = (end.pos - start.pos).norm();
            let heading = wrap(start.d1.y.atan2(start.d1.x) - end.d1.y.atan2(end.d1.x)).abs();
            let bad = gap > POSITION_TOL || heading > HEADING_TOL;
            if bad {
                worst.passed = false;
            }
            if gap > worst.worst_position_gap || heading > worst.worst_heading_gap || bad {
                worst.worst_position_gap = worst.worst_position_gap.max(gap);
                worst.worst_heading_gap = worst.worst_heading_gap.max(heading);
                worst.worst_join = Some(i);
            }
        }
        worst
    }

    /// Sample points: `n` interior points per segment plus both ends.
    fn curvature_samples(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        self.segments.iter().flat_map(move |seg| {
            let span = seg.s_end - seg.s_start;
            (0..=n).map(move |i| {
                let u = i as f64 / n as f64;
                // stay inside the segment so the right-limit rule does not
                // hand us the neighbour's curvature
                let u = u.clamp(1e-12, 1.0 - 1e-12);
                seg.s_start + span * u
            })
        })
    }

    fn check_curvature(&self, r_lower: f64, n: usize) -> CurvatureCheck {
        let mut max_k = 0.0f64;
        let mut argmax = 0.0;
        for s in self.curvature_samples(n.max(1)) {
            if let Ok(k) = self.signed_curvature(s) {
                if k.abs() > max_k {
                    max_k = k.abs();
                    argmax = s;
                }
            }
        }
        CurvatureCheck {
            passed: max_k * r_lower <= 1.0 + CURVATURE_REL_TOL,
            max_abs_kappa: max_k,
            min_radius: (max_k > 0.0).then(|| 1.0 / max_k),
            r_lower,
            argmax_s: argmax,
        }
    }

    fn sign_changes(&self, n: usize) -> usize {
        let mut last = 0.0;
        let mut changes = 0;
        for s in self.curvature_samples(n.max(1)) {
            let k = self.signed_curvature(s).map(|k| k.kappa()).unwrap_or(0.0);
            let sg = crate::angle::sign0(k);
            if sg != 0.0 {
                if last != 0.0 && sg != last {
                    changes += 1;
                }
                last = sg;
            }
        }
        changes
    }

    fn check_uniqueness(&self, neighborhood: f64, opts: &ValidationOptions) -> UniquenessCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut violations = 0;
        let mut first = None;
        for _ in 0..opts.uniqueness_points {
            let p = sample_neighborhood(self, neighborhood, &mut rng);
            if self.nearest_basins(p, opts.uniqueness_grid.max(16), neighborhood) > 1 {
                violations += 1;
                first.get_or_insert(p);
            }
        }
        UniquenessCheck {
            passed: violations == 0,
            neighborhood,
            points: opts.uniqueness_points,
            violations,
            first_violation: first,
        }
    }
}

/// Random point within `radius` of a uniformly drawn path point.
pub(crate) fn sample_neighborhood<R: Rng>(path: &ReferencePath, radius: f64, rng: &mut R) -> Point {
    let s: f64 = rng.gen_range(0.0..1.0);
    let c = path.jet(s).pos;
    let r = radius * rng.gen_range(0.0f64..1.0).sqrt() * (1.0 - 1e-9);
    let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    Point::new(c.x + r * a.cos(), c.y + r * a.sin())
}
