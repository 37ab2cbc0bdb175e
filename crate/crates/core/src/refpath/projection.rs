use serde::{Deserialize, Serialize};

use super::{PathError, Point, ReferencePath};

/// Samples of the coarse global bracketing grid.
pub const COARSE_SAMPLES: usize = 1024;
/// Half-width (in `s`) of the warm-start search window.
pub const WARM_WINDOW: f64 = 0.02;
/// Convergence tolerance on `s`.
pub const S_TOLERANCE: f64 = 1e-10;

const WARM_SAMPLES: usize = 16;
const MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub s_hat: f64,
    pub distance: f64,
    /// Outcome of the basin test. Global searches that find a second basin
    /// at the same distance fail instead; warm starts skip the test.
    pub unique: bool,
    /// Longitudinal offset `(p - g(s)) · t(s)`; zero at interior minimizers.
    pub residual: f64,
}

impl ReferencePath {
    fn half_dist2(&self, p: Point, s: f64) -> f64 {
        let d = p - self.jet(s).pos;
        0.5 * d.dot(d)
    }

    /// Derivative of `|p - g(s)|^2 / 2` and its second derivative.
    fn dist_derivs(&self, p: Point, s: f64) -> (f64, f64) {
        let j = self.jet(s);
        let r = p - j.pos;
        (-r.dot(j.d1), j.d1.dot(j.d1) - r.dot(j.d2))
    }

    /// Minimizes the distance on `[lo, hi]` starting from `start`.
    ///
    /// Safeguarded Newton (bisection fallback) on the derivative of the
    /// squared distance. When that derivative does not bracket a root the
    /// better interval end is returned.
    pub(crate) fn refine(&self, p: Point, lo: f64, hi: f64, start: f64) -> f64 {
        let (g_lo, _) = self.dist_derivs(p, lo);
        let (g_hi, _) = self.dist_derivs(p, hi);
        if g_lo >= 0.0 && g_hi <= 0.0 {
            // local maximum inside, pick the better end
            return if self.half_dist2(p, lo) <= self.half_dist2(p, hi) {
                lo
            } else {
                hi
            };
        }
        if g_lo >= 0.0 {
            return lo;
        }
        if g_hi <= 0.0 {
            return hi;
        }
        let (mut a, mut b) = (lo, hi);
        let mut s = start.clamp(lo, hi);
        for _ in 0..MAX_ITER {
            let (g, h) = self.dist_derivs(p, s);
            if g == 0.0 {
                return s;
            }
            if g < 0.0 {
                a = s;
            } else {
                b = s;
            }
            let mut next = if h > 0.0 { s - g / h } else { f64::NAN };
            if !(next > a && next < b) {
                next = 0.5 * (a + b);
            }
            let step = (next - s).abs();
            s = next;
            if step < S_TOLERANCE * 1e-2 || b - a < S_TOLERANCE {
                break;
            }
        }
        s
    }

    /// Grid local minima of the distance on `[lo, hi]`, refined.
    fn grid_minima(&self, p: Point, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        let grid: Vec<f64> = (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .collect();
        let vals: Vec<f64> = grid.iter().map(|&s| self.half_dist2(p, s)).collect();
        let mut out: Vec<(f64, f64)> = Vec::new();
        for i in 0..=n {
            let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
            let right = if i == n { f64::INFINITY } else { vals[i + 1] };
            if vals[i] <= left && vals[i] <= right {
                let a = grid[i.saturating_sub(1)];
                let b = grid[(i + 1).min(n)];
                let s = self.refine(p, a, b, grid[i]);
                let d = self.half_dist2(p, s);
                out.push(if d <= vals[i] { (s, d) } else { (grid[i], vals[i]) });
            }
        }
        out
    }

    fn result_at(&self, p: Point, s: f64, unique: bool) -> ProjectionResult {
        let j = self.jet(s);
        let r = p - j.pos;
        let speed = j.d1.norm();
        let residual = if speed > 0.0 { r.dot(j.d1) / speed } else { 0.0 };
        ProjectionResult {
            s_hat: s,
            distance: r.norm(),
            unique,
            residual,
        }
    }

    /// Nearest-point projection of `point` onto the path.
    ///
    /// With a `hint`, the search is restricted to `hint ± WARM_WINDOW` and
    /// returns the local minimizer continuous with the hint. Without a hint,
    /// a global search is done; the point must lie within `neighborhood` of
    /// the path and the minimizer must be unique.
    pub fn project(
        &self,
        point: Point,
        hint: Option<f64>,
        neighborhood: f64,
    ) -> Result<ProjectionResult, PathError> {
        if let Some(h) = hint {
            let h = h.clamp(0.0, 1.0);
            let lo = (h - WARM_WINDOW).max(0.0);
            let hi = (h + WARM_WINDOW).min(1.0);
            let best = self
                .grid_minima(point, lo, hi, WARM_SAMPLES)
                .into_iter()
                .min_by(|a, b| {
                    // prefer the basin closest to the hint on ties
                    a.1.total_cmp(&b.1)
                        .then((a.0 - h).abs().total_cmp(&(b.0 - h).abs()))
                })
                .map(|(s, _)| s)
                .unwrap_or(h);
            return Ok(self.result_at(point, best, true));
        }

        let minima = self.grid_minima(point, 0.0, 1.0, COARSE_SAMPLES);
        let (s_best, d_best) = minima
            .iter()
            .copied()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0.0, self.half_dist2(point, 0.0)));
        let dist = (2.0 * d_best).sqrt();
        if !(dist < neighborhood) {
            return Err(PathError::ProjectionAmbiguous {
                x: point.x,
                y: point.y,
                distance: dist,
                neighborhood,
            });
        }
        let cell = 2.0 / COARSE_SAMPLES as f64;
        let tol = 1e-9 * dist.max(1.0);
        if let Some(&(s_other, _)) = minima.iter().find(|(s, d)| {
            (s - s_best).abs() > cell && ((2.0 * d).sqrt() - dist).abs() <= tol
        }) {
            return Err(PathError::NonUnique {
                x: point.x,
                y: point.y,
                s_a: s_best,
                s_b: s_other,
            });
        }
        Ok(self.result_at(point, s_best, true))
    }

    /// Number of distinct local-minimum basins of the distance that lie
    /// strictly within `radius` of `p`, on a dense grid.
    ///
    /// More than one means the radius-`radius` tube around the path overlaps
    /// itself near `p`, so nearest points are not unique somewhere nearby.
    pub(crate) fn nearest_basins(&self, p: Point, grid: usize, radius: f64) -> usize {
        let cell = 2.0 / grid as f64;
        let mut basins: Vec<f64> = Vec::new();
        for (s, d) in self.grid_minima(p, 0.0, 1.0, grid) {
            if (2.0 * d).sqrt() < radius && basins.iter().all(|b| (b - s).abs() > cell) {
                basins.push(s);
            }
        }
        basins.len()
    }
}

#[cfg(test)]
mod tests {
    use super::super::{builtin, SegmentGeometry, BENCHMARK_NAME};
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn line() -> ReferencePath {
        ReferencePath::from_geometries(vec![SegmentGeometry::Line {
            start: Point::new(0.0, 0.0),
            end: Point::new(4.0, 0.0),
        }])
        .unwrap()
    }

    fn circle() -> ReferencePath {
        ReferencePath::from_geometries(vec![SegmentGeometry::Arc {
            center: Point::default(),
            radius: 2.0,
            start_angle: -PI / 2.0,
            sweep: 2.0 * PI,
        }])
        .unwrap()
    }

    #[test]
    fn perpendicular_foot_on_line() {
        let r = line().project(Point::new(1.0, 0.3), None, 0.8).unwrap();
        assert_abs_diff_eq!(r.s_hat, 0.25, epsilon = 1e-10);
        assert_abs_diff_eq!(r.distance, 0.3, epsilon = 1e-12);
        assert!(r.residual.abs() < 1e-10);
    }

    #[test]
    fn radial_projection_on_circle() {
        let c = circle();
        let r = c.project(Point::new(3.0, 0.0), None, 1.5).unwrap();
        let q = c.eval(r.s_hat).unwrap();
        assert_abs_diff_eq!(q.x, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(q.y, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(r.distance, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn benchmark_middle_point() {
        let p = builtin(BENCHMARK_NAME).unwrap();
        let r = p.project(Point::new(2.0, 0.5), None, 0.8).unwrap();
        assert_abs_diff_eq!(r.s_hat, 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(r.distance, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn outside_neighborhood_is_ambiguous() {
        let err = line().project(Point::new(2.0, 5.0), None, 0.8).unwrap_err();
        assert!(matches!(err, PathError::ProjectionAmbiguous { .. }));
        // a hint lifts the restriction
        let r = line().project(Point::new(2.0, 5.0), Some(0.5), 0.8).unwrap();
        assert_abs_diff_eq!(r.s_hat, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn circle_center_is_not_unique() {
        let err = circle().project(Point::new(0.0, 0.0), None, 10.0).unwrap_err();
        assert!(matches!(err, PathError::NonUnique { .. }));
    }

    #[test]
    fn endpoint_projection_keeps_residual() {
        let r = line().project(Point::new(-0.5, 0.1), None, 0.8).unwrap();
        assert_eq!(r.s_hat, 0.0);
        assert_abs_diff_eq!(r.residual, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn warm_start_follows_local_branch() {
        let p = builtin(BENCHMARK_NAME).unwrap();
        let q = p.eval(0.3).unwrap();
        let r = p
            .project(Point::new(q.x, q.y + 0.2), Some(0.295), 0.8)
            .unwrap();
        assert_abs_diff_eq!(r.s_hat, 0.3, epsilon = 1e-10);
    }

    #[test]
    fn orthogonality_on_benchmark() {
        let p = builtin(BENCHMARK_NAME).unwrap();
        for &(x, y) in &[(-1.5, 2.5), (1.0, -0.4), (4.5, -0.5), (5.2, -2.2)] {
            let r = p.project(Point::new(x, y), None, 0.8).unwrap();
            assert!(r.residual.abs() < 1e-9, "{x},{y}: {}", r.residual);
        }
    }
}
