//! Line-drawing sketches of ring strands (the "sketch" image domain).

use crate::camera::ViewBasis;
use crate::{Camera, GeometryError, Image, Result, Rgb, RingModel, Spline};

/// Stroke color of sketch lines (#303030).
pub const SKETCH_STROKE: Rgb = Rgb::new(48.0 / 255.0, 48.0 / 255.0, 48.0 / 255.0);

const MIN_SAMPLES: usize = 256;
// Maximum projected spacing between consecutive polyline points, in pixels.
const MAX_STEP_PX: f64 = 0.5;
const SUPERSAMPLE: u32 = 2;

/// Stroke width in pixels for a ring seen through `camera`: the projected
/// diameter of the tube at the target distance, at least one pixel.
pub fn stroke_width_for(ring: &RingModel, camera: &Camera) -> f64 {
    let width = 2.0 * ring.tube_radius * camera.focal_px() / camera.distance_to_target();
    width.max(1.0)
}

/// Projects a strand to pixel space as a dense polyline. Points behind the
/// camera come back as `None`. The sampling density guarantees at least
/// 256 points and at most half a pixel between visible neighbours.
pub fn sample_strand_polyline(strand: &Spline, camera: &Camera) -> Result<Vec<Option<(f64, f64)>>> {
    strand.validate()?;
    let basis = camera.basis();
    let project = |n: usize| -> Vec<Option<(f64, f64)>> {
        (0..n)
            .map(|k| {
                let p = strand.eval_unchecked(k as f64 / n as f64);
                camera.project_with(&basis, p).map(|(x, y, _)| (x, y))
            })
            .collect()
    };
    let coarse = project(MIN_SAMPLES);
    let max_step = max_visible_step(&coarse);
    if max_step <= MAX_STEP_PX {
        return Ok(coarse);
    }
    let n = ((MIN_SAMPLES as f64 * max_step / MAX_STEP_PX).ceil() as usize).max(MIN_SAMPLES);
    let mut fine = project(n);
    // Curvature can concentrate spacing; refine until the bound holds.
    let mut n = n;
    while max_visible_step(&fine) > MAX_STEP_PX && n < 1 << 20 {
        n *= 2;
        fine = project(n);
    }
    Ok(fine)
}

fn max_visible_step(pts: &[Option<(f64, f64)>]) -> f64 {
    let n = pts.len();
    (0..n)
        .filter_map(|i| match (pts[i], pts[(i + 1) % n]) {
            (Some(a), Some(b)) => Some((a.0 - b.0).hypot(a.1 - b.1)),
            _ => None,
        })
        .fold(0.0, f64::max)
}

fn segment_distance(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (px - a.0 - t * dx).hypot(py - a.1 - t * dy)
}

/// Draws every strand as a round-capped dark-gray stroke of `line_width`
/// pixels on white. Strands are not depth-sorted or occluded.
pub fn project_sketch(ring: &RingModel, camera: &Camera, line_width: f64) -> Result<Image> {
    camera.validate()?;
    if !(line_width >= 1.0 && line_width.is_finite()) {
        return Err(GeometryError::invalid(
            "line_width",
            format!("must be at least 1 pixel, got {line_width}"),
        ));
    }
    let (w, h) = camera.image_size;
    let mut image = Image::filled(w, h, Rgb::WHITE);
    if ring.strands.is_empty() {
        return Ok(image);
    }
    let basis: ViewBasis = camera.basis();
    if ring
        .control_points()
        .all(|p| camera.project_with(&basis, *p).is_none())
    {
        return Err(GeometryError::BehindCamera);
    }

    let (sw, sh) = (w * SUPERSAMPLE, h * SUPERSAMPLE);
    let mut covered = vec![false; sw as usize * sh as usize];
    let half = 0.5 * line_width;
    let inv = 1.0 / SUPERSAMPLE as f64;
    let mut any_visible = false;
    for strand in &ring.strands {
        let pts = sample_strand_polyline(strand, camera)?;
        let n = pts.len();
        for i in 0..n {
            let (Some(a), Some(b)) = (pts[i], pts[(i + 1) % n]) else {
                continue;
            };
            any_visible = true;
            let x0 = ((a.0.min(b.0) - half) * SUPERSAMPLE as f64).floor().max(0.0) as i64;
            let x1 = ((a.0.max(b.0) + half) * SUPERSAMPLE as f64).ceil().min(sw as f64 - 1.0) as i64;
            let y0 = ((a.1.min(b.1) - half) * SUPERSAMPLE as f64).floor().max(0.0) as i64;
            let y1 = ((a.1.max(b.1) + half) * SUPERSAMPLE as f64).ceil().min(sh as f64 - 1.0) as i64;
            for sy in y0..=y1 {
                for sx in x0..=x1 {
                    let px = (sx as f64 + 0.5) * inv;
                    let py = (sy as f64 + 0.5) * inv;
                    if segment_distance(px, py, a, b) <= half {
                        covered[sy as usize * sw as usize + sx as usize] = true;
                    }
                }
            }
        }
    }
    if !any_visible {
        return Err(GeometryError::BehindCamera);
    }

    let total = (SUPERSAMPLE * SUPERSAMPLE) as f32;
    for y in 0..h {
        for x in 0..w {
            let mut hits = 0u32;
            for dy in 0..SUPERSAMPLE {
                for dx in 0..SUPERSAMPLE {
                    let sx = x * SUPERSAMPLE + dx;
                    let sy = y * SUPERSAMPLE + dy;
                    hits += covered[sy as usize * sw as usize + sx as usize] as u32;
                }
            }
            if hits > 0 {
                let c = hits as f32 / total;
                let mix = |bg: f32, fg: f32| bg * (1.0 - c) + fg * c;
                image.set(
                    x,
                    y,
                    Rgb::new(
                        mix(1.0, SKETCH_STROKE.r),
                        mix(1.0, SKETCH_STROKE.g),
                        mix(1.0, SKETCH_STROKE.b),
                    ),
                );
            }
        }
    }
    Ok(image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{generate_ring, RingSpec, Vec3};

    fn top_camera(size: u32) -> Camera {
        Camera {
            eye: Vec3::new(0.0, 0.0, 4.0),
            target: Vec3::ZERO,
            up: Vec3::Y,
            vertical_fov: 0.8,
            image_size: (size, size),
        }
    }

    #[test]
    fn empty_ring_is_white() {
        let mut ring = generate_ring(&RingSpec::default()).unwrap();
        ring.strands.clear();
        let img = project_sketch(&ring, &top_camera(32), 2.0).unwrap();
        assert!(img.pixels.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn behind_camera_is_error() {
        let ring = generate_ring(&RingSpec::default()).unwrap();
        let cam = Camera {
            eye: Vec3::new(0.0, 0.0, 4.0),
            target: Vec3::new(0.0, 0.0, 8.0),
            up: Vec3::Y,
            vertical_fov: 0.8,
            image_size: (32, 32),
        };
        assert!(matches!(
            project_sketch(&ring, &cam, 2.0),
            Err(GeometryError::BehindCamera)
        ));
    }

    #[test]
    fn strokes_use_sketch_gray() {
        let ring = generate_ring(&RingSpec { n_strands: 1, ..RingSpec::default() }).unwrap();
        let img = project_sketch(&ring, &top_camera(64), 4.0).unwrap();
        let darkest = img.pixels.iter().cloned().fold(1.0f32, f32::min);
        assert!((darkest - SKETCH_STROKE.r).abs() < 1e-6);
    }

    #[test]
    fn polyline_is_dense() {
        let ring = generate_ring(&RingSpec::default()).unwrap();
        let cam = top_camera(400);
        let pts = sample_strand_polyline(&ring.strands[0], &cam).unwrap();
        assert!(pts.len() >= 256);
        assert!(max_visible_step(&pts) <= MAX_STEP_PX);
    }

    #[test]
    fn line_width_is_rejected_below_one() {
        let ring = generate_ring(&RingSpec::default()).unwrap();
        assert!(project_sketch(&ring, &top_camera(16), 0.5).is_err());
    }
}
