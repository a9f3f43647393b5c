use crate::frames::build_frames;
use crate::{GeometryError, Result, RingModel, Spline, TriMesh};
use std::f64::consts::TAU;

/// A swept tube together with diagnostics about its validity.
#[derive(Debug, Clone)]
pub struct Extrusion {
    pub mesh: TriMesh,
    /// The tube radius reaches the centerline's radius of curvature or the
    /// spacing between rings, so neighbouring cross-sections overlap.
    pub self_intersecting: bool,
}

/// Sweeps a circle of `radius` along the closed `spline`: `n_u` rings of
/// `n_v` vertices each, stitched into a torus-topology mesh.
pub fn extrude_tube(spline: &Spline, radius: f64, n_u: usize, n_v: usize) -> Result<Extrusion> {
    if n_u < 8 {
        return Err(GeometryError::invalid(
            "n_u",
            format!("need at least 8 samples along the curve, got {n_u}"),
        ));
    }
    if n_v < 6 {
        return Err(GeometryError::invalid(
            "n_v",
            format!("need at least 6 samples around the tube, got {n_v}"),
        ));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(GeometryError::invalid("radius", "must be positive"));
    }
    let frames = build_frames(spline, n_u)?;

    let mut mesh = TriMesh {
        vertices: Vec::with_capacity(n_u * n_v),
        normals: Vec::with_capacity(n_u * n_v),
        triangles: Vec::with_capacity(2 * n_u * n_v),
    };
    for f in &frames {
        for j in 0..n_v {
            let (s, c) = (TAU * j as f64 / n_v as f64).sin_cos();
            let dir = f.normal * c + f.binormal * s;
            mesh.vertices.push(f.point + dir * radius);
            mesh.normals.push(dir);
        }
    }
    let idx = |i: usize, j: usize| ((i % n_u) * n_v + (j % n_v)) as u32;
    for i in 0..n_u {
        for j in 0..n_v {
            let a = idx(i, j);
            let b = idx(i, j + 1);
            let c = idx(i + 1, j + 1);
            let d = idx(i + 1, j);
            // Winding chosen so face normals point away from the centerline.
            mesh.triangles.push([a, b, c]);
            mesh.triangles.push([a, c, d]);
        }
    }

    // Discrete curvature: turning angle over step length.
    let self_intersecting = (0..n_u).any(|i| {
        let f0 = &frames[i];
        let f1 = &frames[(i + 1) % n_u];
        let step = f0.point.distance(f1.point);
        let turn = f0.tangent.dot(f1.tangent).clamp(-1.0, 1.0).acos();
        radius * turn >= step
    });

    Ok(Extrusion {
        mesh,
        self_intersecting,
    })
}

/// Tubes for every strand of a ring, merged into one mesh.
pub fn extrude_ring(ring: &RingModel, n_u: usize, n_v: usize) -> Result<Extrusion> {
    let mut mesh = TriMesh::default();
    let mut self_intersecting = false;
    for strand in &ring.strands {
        let tube = extrude_tube(strand, ring.tube_radius, n_u, n_v)?;
        self_intersecting |= tube.self_intersecting;
        mesh.append(&tube.mesh);
    }
    Ok(Extrusion {
        mesh,
        self_intersecting,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{generate_ring, RingSpec, Vec3};
    use std::f64::consts::PI;

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
    fn torus_counts_and_watertight() {
        let ext = extrude_tube(&circle(32, 1.0), 0.1, 64, 16).unwrap();
        assert_eq!(ext.mesh.vertices.len(), 1024);
        assert_eq!(ext.mesh.triangles.len(), 2048);
        assert!(ext.mesh.is_watertight());
        ext.mesh.validate().unwrap();
        assert!(!ext.self_intersecting);
    }

    #[test]
    fn torus_area_close_to_analytic() {
        let (big_r, r) = (1.0, 0.1);
        let ext = extrude_tube(&circle(64, big_r), r, 64, 16).unwrap();
        let expected = 4.0 * PI * PI * big_r * r;
        let rel = (ext.mesh.surface_area() - expected).abs() / expected;
        assert!(rel < 0.01, "relative area error {rel}");
    }

    #[test]
    fn face_normals_point_outward() {
        let ext = extrude_tube(&circle(16, 1.0), 0.2, 32, 8).unwrap();
        let m = &ext.mesh;
        for &tri in &m.triangles {
            let [a, b, c] = m.corners(tri);
            let face = (b - a).cross(c - a);
            let avg = m.normals[tri[0] as usize] + m.normals[tri[1] as usize] + m.normals[tri[2] as usize];
            assert!(face.dot(avg) > 0.0);
        }
    }

    #[test]
    fn random_strand_watertight() {
        let ring = generate_ring(&RingSpec { seed: 3, ..RingSpec::default() }).unwrap();
        let ext = extrude_ring(&ring, 96, 12).unwrap();
        assert!(ext.mesh.is_watertight());
        assert_eq!(ext.mesh.triangles.len(), 3 * 2 * 96 * 12);
    }

    #[test]
    fn fat_tube_is_flagged() {
        let ext = extrude_tube(&circle(16, 0.5), 0.6, 64, 8).unwrap();
        assert!(ext.self_intersecting);
        assert_eq!(ext.mesh.triangles.len(), 2 * 64 * 8);
    }

    #[test]
    fn parameter_bounds() {
        let s = circle(8, 1.0);
        assert!(extrude_tube(&s, 0.1, 7, 8).is_err());
        assert!(extrude_tube(&s, 0.1, 8, 5).is_err());
    }
}
