//! Rotation-minimizing frames along closed splines.
//!
//! Frames are propagated with the double-reflection scheme. Going once
//! around a closed curve generally leaves the transported normal rotated
//! against the starting one (holonomy); that angle is spread evenly over
//! all samples so the field closes up without a seam.

use crate::{GeometryError, Result, Spline, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub point: Vec3,
    pub tangent: Vec3,
    pub normal: Vec3,
    pub binormal: Vec3,
}

impl Frame {
    /// Largest deviation from orthonormality among the three axes.
    pub fn orthonormality_defect(&self) -> f64 {
        [
            self.tangent.norm() - 1.0,
            self.normal.norm() - 1.0,
            self.binormal.norm() - 1.0,
            self.tangent.dot(self.normal),
            self.tangent.dot(self.binormal),
            self.normal.dot(self.binormal),
        ]
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max)
    }
}

/// Carries `normal` from (`from`, `t0`) to (`to`, `t1`) by double reflection.
pub(crate) fn transport(from: Vec3, t0: Vec3, normal: Vec3, to: Vec3, t1: Vec3) -> Vec3 {
    let v1 = to - from;
    let c1 = v1.norm_squared();
    let (r_l, t_l) = if c1 > 0.0 {
        (
            normal - v1 * (2.0 / c1 * v1.dot(normal)),
            t0 - v1 * (2.0 / c1 * v1.dot(t0)),
        )
    } else {
        (normal, t0)
    };
    let v2 = t1 - t_l;
    let c2 = v2.norm_squared();
    let r = if c2 > 1e-30 {
        r_l - v2 * (2.0 / c2 * v2.dot(r_l))
    } else {
        r_l
    };
    // Re-project to kill rounding drift.
    (r - t1 * t1.dot(r)).normalize()
}

fn initial_normal(point: Vec3, tangent: Vec3) -> Vec3 {
    // Prefer the outward radial direction (a circle in the xy-plane then gets
    // radial normals); fall back to any perpendicular axis.
    let candidates = [Vec3::new(point.x, point.y, 0.0), Vec3::Z, Vec3::X, Vec3::Y];
    for c in candidates {
        let projected = c - tangent * tangent.dot(c);
        if projected.norm() > 1e-6 {
            return projected.normalize();
        }
    }
    unreachable!("some coordinate axis is always transverse to a unit tangent")
}

/// Signed angle from `a` to `b` about the unit `axis`.
fn signed_angle(a: Vec3, b: Vec3, axis: Vec3) -> f64 {
    a.cross(b).dot(axis).atan2(a.dot(b))
}

/// Samples `n_samples` parallel-transport frames at `t = k / n_samples`.
pub fn build_frames(spline: &Spline, n_samples: usize) -> Result<Vec<Frame>> {
    if n_samples < 8 {
        return Err(GeometryError::invalid(
            "n_samples",
            format!("need at least 8 samples, got {n_samples}"),
        ));
    }
    spline.validate()?;

    let mut points = Vec::with_capacity(n_samples);
    let mut tangents = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let t = k as f64 / n_samples as f64;
        let p = spline.eval_unchecked(t);
        if let Some(&prev) = points.last() {
            if p == prev {
                return Err(GeometryError::Degenerate(format!(
                    "consecutive samples {} and {k} coincide",
                    k - 1
                )));
            }
        }
        let tan = spline.derivative_unchecked(t).try_normalize().ok_or_else(|| {
            GeometryError::Degenerate(format!("zero tangent at sample {k}"))
        })?;
        points.push(p);
        tangents.push(tan);
    }
    if points[0] == points[n_samples - 1] {
        return Err(GeometryError::Degenerate(
            "first and last samples coincide".into(),
        ));
    }

    let mut normals = Vec::with_capacity(n_samples);
    normals.push(initial_normal(points[0], tangents[0]));
    for k in 1..n_samples {
        let n = transport(points[k - 1], tangents[k - 1], normals[k - 1], points[k], tangents[k]);
        normals.push(n);
    }

    // Close the loop: transport the last frame back onto sample 0 and spread
    // the residual twist linearly.
    let back = transport(
        points[n_samples - 1],
        tangents[n_samples - 1],
        normals[n_samples - 1],
        points[0],
        tangents[0],
    );
    let holonomy = signed_angle(back, normals[0], tangents[0]);

    Ok((0..n_samples)
        .map(|k| {
            let tangent = tangents[k];
            let angle = holonomy * k as f64 / n_samples as f64;
            let mut normal = normals[k].rotate_about(tangent, angle);
            normal = (normal - tangent * tangent.dot(normal)).normalize();
            let binormal = tangent.cross(normal).normalize();
            Frame {
                point: points[k],
                tangent,
                normal,
                binormal,
            }
        })
        .collect())
}

/// Angle between `frames[0]` and the last frame transported one step
/// further onto sample 0. Zero means a seamless frame field.
pub fn wrap_mismatch(frames: &[Frame]) -> f64 {
    let last = frames[frames.len() - 1];
    let first = frames[0];
    let carried = transport(last.point, last.tangent, last.normal, first.point, first.tangent);
    signed_angle(carried, first.normal, first.tangent).abs()
}
