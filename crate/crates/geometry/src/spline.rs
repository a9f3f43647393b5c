//! Closed centripetal Catmull-Rom splines.
//!
//! A closed spline with `n` control points has `n` segments. The global
//! parameter `t` in `[0, 1]` is split uniformly between segments, so control
//! point `i` sits at `t = i / n`. Inside a segment the centripetal knot
//! spacing (`|P_{i+1} - P_i|^0.5`) drives a cubic Hermite form, which keeps the
//! curve C1 in the knot parameter and hence gives matching unit tangents on
//! both sides of every control point, including the wrap point.

use serde::{Deserialize, Serialize};

use crate::{GeometryError, Result, Vec3};

const ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spline {
    pub control_points: Vec<Vec3>,
    pub closed: bool,
}

struct Segment {
    p1: Vec3,
    p2: Vec3,
    // Hermite end tangents, already scaled to the unit local parameter.
    m1: Vec3,
    m2: Vec3,
}

impl Spline {
    pub fn closed(control_points: Vec<Vec3>) -> Result<Self> {
        let s = Spline {
            control_points,
            closed: true,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.control_points.len();
        if n < 4 {
            return Err(GeometryError::TooFewControlPoints(n));
        }
        for i in 0..n {
            let d = self.control_points[(i + 1) % n].distance(self.control_points[i]);
            if !(d > 1e-12) {
                return Err(GeometryError::Degenerate(format!(
                    "control points {i} and {} coincide",
                    (i + 1) % n
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.control_points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.control_points.is_empty()
    }

    fn point(&self, i: isize) -> Vec3 {
        let n = self.control_points.len() as isize;
        self.control_points[i.rem_euclid(n) as usize]
    }

    fn segment(&self, i: usize) -> Segment {
        let i = i as isize;
        let (p0, p1, p2, p3) = (
            self.point(i - 1),
            self.point(i),
            self.point(i + 1),
            self.point(i + 2),
        );
        let d01 = p0.distance(p1).powf(ALPHA);
        let d12 = p1.distance(p2).powf(ALPHA);
        let d23 = p2.distance(p3).powf(ALPHA);
        let m1 = (p1 - p0) / d01 - (p2 - p0) / (d01 + d12) + (p2 - p1) / d12;
        let m2 = (p2 - p1) / d12 - (p3 - p1) / (d12 + d23) + (p3 - p2) / d23;
        Segment {
            p1,
            p2,
            m1: m1 * d12,
            m2: m2 * d12,
        }
    }

    /// Maps a global parameter to (segment index, local parameter in [0, 1]).
    fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.control_points.len();
        let t = t.rem_euclid(1.0);
        let s = t * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        (i, s - i as f64)
    }

    /// Position at parameter `t`; periodic with period 1.
    pub fn eval(&self, t: f64) -> Result<Vec3> {
        self.validate()?;
        Ok(self.eval_unchecked(t))
    }

    pub(crate) fn eval_unchecked(&self, t: f64) -> Vec3 {
        let (i, u) = self.locate(t);
        if u == 0.0 {
            // Exactly on a knot: return the control point itself.
            return self.control_points[i];
        }
        let seg = self.segment(i);
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        seg.p1 * h00 + seg.m1 * h10 + seg.p2 * h01 + seg.m2 * h11
    }

    /// Derivative with respect to the global parameter `t`.
    pub fn derivative(&self, t: f64) -> Result<Vec3> {
        self.validate()?;
        Ok(self.derivative_unchecked(t))
    }

    pub(crate) fn derivative_unchecked(&self, t: f64) -> Vec3 {
        let (i, u) = self.locate(t);
        let seg = self.segment(i);
        let u2 = u * u;
        let d00 = 6.0 * u2 - 6.0 * u;
        let d10 = 3.0 * u2 - 4.0 * u + 1.0;
        let d01 = -6.0 * u2 + 6.0 * u;
        let d11 = 3.0 * u2 - 2.0 * u;
        let n = self.control_points.len() as f64;
        (seg.p1 * d00 + seg.m1 * d10 + seg.p2 * d01 + seg.m2 * d11) * n
    }

    /// Unit tangent at `t`.
    pub fn tangent(&self, t: f64) -> Result<Vec3> {
        self.derivative(t)?
            .try_normalize()
            .ok_or_else(|| GeometryError::Degenerate(format!("zero tangent at t = {t}")))
    }

    /// Unit tangent arriving at the knot `i` from the previous segment.
    pub fn incoming_tangent(&self, i: usize) -> Result<Vec3> {
        self.validate()?;
        let n = self.control_points.len();
        let prev = (i + n - 1) % n;
        let seg = self.segment(prev);
        seg.m2
            .try_normalize()
            .ok_or_else(|| GeometryError::Degenerate(format!("zero tangent at knot {i}")))
    }

    /// `count` points at uniformly spaced parameters `k / count`.
    pub fn sample(&self, count: usize) -> Result<Vec<Vec3>> {
        self.validate()?;
        Ok((0..count)
            .map(|k| self.eval_unchecked(k as f64 / count as f64))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn circle(n: usize, r: f64) -> Spline {
        Spline::closed(
            (0..n)
                .map(|i| {
                    let a = TAU * i as f64 / n as f64;
                    Vec3::new(r * a.cos(), r * a.sin(), 0.0)
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn interpolates_square_corners_at_knots() {
        let pts = vec![
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(-1.0, 1.0, 0.0),
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
        ];
        let s = Spline::closed(pts.clone()).unwrap();
        for (i, p) in pts.iter().enumerate() {
            assert_eq!(s.eval(i as f64 / 4.0).unwrap(), *p);
        }
    }

    #[test]
    fn periodic_at_wrap() {
        let s = Spline::closed(vec![
            Vec3::new(1.0, 0.2, 0.1),
            Vec3::new(0.0, 1.3, -0.2),
            Vec3::new(-0.9, 0.1, 0.05),
            Vec3::new(0.1, -1.1, 0.0),
            Vec3::new(0.8, -0.7, 0.2),
        ])
        .unwrap();
        let a = s.eval(0.0).unwrap();
        let b = s.eval(1.0).unwrap();
        assert!(a.distance(b) < 1e-12);
        // Approaching the wrap from below converges on the first control point.
        let c = s.eval(1.0 - 1e-12).unwrap();
        assert!(a.distance(c) < 1e-9);
    }

    #[test]
    fn eight_point_circle_stays_near_unit_circle() {
        let s = circle(8, 1.0);
        let p = s.eval(1.0 / 16.0).unwrap();
        assert!((p.radial() - 1.0).abs() < 0.02, "radius {}", p.radial());
    }

    #[test]
    fn tangents_match_across_every_knot() {
        let s = Spline::closed(vec![
            Vec3::new(1.0, 0.0, 0.3),
            Vec3::new(0.2, 0.9, -0.1),
            Vec3::new(-1.2, 0.1, 0.0),
            Vec3::new(-0.1, -0.8, 0.4),
            Vec3::new(0.7, -0.6, -0.2),
        ])
        .unwrap();
        for i in 0..s.len() {
            let out = s.tangent(i as f64 / 5.0).unwrap();
            let inc = s.incoming_tangent(i).unwrap();
            let angle = out.dot(inc).clamp(-1.0, 1.0).acos();
            assert!(angle < 1e-6, "knot {i}: angle {angle}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = circle(6, 2.0);
        for k in 1..20 {
            let t = k as f64 / 20.0 + 0.013;
            let h = 1e-6;
            let fd = (s.eval(t + h).unwrap() - s.eval(t - h).unwrap()) / (2.0 * h);
            let d = s.derivative(t).unwrap();
            assert!((fd - d).norm() < 1e-5 * d.norm(), "t = {t}");
        }
    }

    #[test]
    fn rejects_short_or_degenerate_polygons() {
        assert!(matches!(
            Spline::closed(vec![Vec3::X, Vec3::Y, Vec3::Z]),
            Err(GeometryError::TooFewControlPoints(3))
        ));
        assert!(Spline::closed(vec![Vec3::X, Vec3::X, Vec3::Y, Vec3::Z]).is_err());
    }
}
