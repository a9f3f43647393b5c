//! Z-buffered triangle rasterization with deferred Blinn-Phong shading.
//!
//! Triangles are scan-converted with edge functions at sample centers.
//! Depth and attribute interpolation are perspective-correct: screen-space
//! barycentrics are reweighted by reciprocal view depth. Triangles with a
//! vertex behind the camera are skipped rather than clipped.

use ringforge_geometry::{Camera, GeometryError, Image, Rgb, TriMesh, Vec3};
use thiserror::Error;

use crate::Scene;

/// Samples per pixel along each axis; output is the box-filtered average.
pub const SUPERSAMPLE: u32 = 2;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("image size must be non-zero, got {0}x{1}")]
    ZeroSize(u32, u32),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Per-sample visibility: nearest triangle, its view depth and the
/// perspective-correct barycentric weights of that triangle's corners.
#[derive(Debug, Clone)]
pub struct Fragments {
    pub width: u32,
    pub height: u32,
    pub depth: Vec<f64>,
    pub triangle: Vec<Option<u32>>,
    pub weights: Vec<[f64; 3]>,
}

impl Fragments {
    pub fn at(&self, x: u32, y: u32) -> Option<(u32, f64)> {
        let i = y as usize * self.width as usize + x as usize;
        self.triangle[i].map(|t| (t, self.depth[i]))
    }
}

fn edge(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> f64 {
    (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0)
}

/// Resolves visibility for every sample of a `camera.image_size` grid.
pub fn rasterize_fragments(mesh: &TriMesh, camera: &Camera) -> Result<Fragments, RenderError> {
    let (w, h) = camera.image_size;
    if w == 0 || h == 0 {
        return Err(RenderError::ZeroSize(w, h));
    }
    camera.validate()?;
    let n = w as usize * h as usize;
    let mut frags = Fragments {
        width: w,
        height: h,
        depth: vec![f64::INFINITY; n],
        triangle: vec![None; n],
        weights: vec![[0.0; 3]; n],
    };
    let basis = camera.basis();
    let projected: Vec<Option<(f64, f64, f64)>> = mesh
        .vertices
        .iter()
        .map(|&v| camera.project_with(&basis, v))
        .collect();

    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let (Some(a), Some(b), Some(c)) = (
            projected[tri[0] as usize],
            projected[tri[1] as usize],
            projected[tri[2] as usize],
        ) else {
            continue;
        };
        let (pa, pb, pc) = ((a.0, a.1), (b.0, b.1), (c.0, c.1));
        let area = edge(pa, pb, pc);
        if area.abs() < 1e-12 {
            continue;
        }
        let min_x = a.0.min(b.0).min(c.0).floor().max(0.0) as i64;
        let max_x = a.0.max(b.0).max(c.0).ceil().min(w as f64 - 1.0) as i64;
        let min_y = a.1.min(b.1).min(c.1).floor().max(0.0) as i64;
        let max_y = a.1.max(b.1).max(c.1).ceil().min(h as f64 - 1.0) as i64;
        let inv_z = [1.0 / a.2, 1.0 / b.2, 1.0 / c.2];
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                let p = (x as f64 + 0.5, y as f64 + 0.5);
                let l0 = edge(pb, pc, p) / area;
                let l1 = edge(pc, pa, p) / area;
                let l2 = edge(pa, pb, p) / area;
                if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
                    continue;
                }
                let wz = [l0 * inv_z[0], l1 * inv_z[1], l2 * inv_z[2]];
                let sum = wz[0] + wz[1] + wz[2];
                let depth = 1.0 / sum;
                let i = y as usize * w as usize + x as usize;
                if depth < frags.depth[i] {
                    frags.depth[i] = depth;
                    frags.triangle[i] = Some(ti as u32);
                    frags.weights[i] = [wz[0] / sum, wz[1] / sum, wz[2] / sum];
                }
            }
        }
    }
    Ok(frags)
}

fn shade(mesh: &TriMesh, scene: &Scene, tri: [u32; 3], wts: [f64; 3]) -> [f32; 3] {
    let mut normal = Vec3::ZERO;
    let mut pos = Vec3::ZERO;
    for k in 0..3 {
        normal += mesh.normals[tri[k] as usize] * wts[k];
        pos += mesh.vertices[tri[k] as usize] * wts[k];
    }
    let view = (scene.camera.eye - pos).try_normalize().unwrap_or(Vec3::Z);
    let mut normal = normal.try_normalize().unwrap_or(view);
    if normal.dot(view) < 0.0 {
        // Two-sided lighting for surfaces seen from behind.
        normal = -normal;
    }
    let l = scene.light_dir;
    let half = (l + view).try_normalize().unwrap_or(normal);
    let diffuse = scene.light_intensity * normal.dot(l).max(0.0);
    let specular = scene.material.specular_strength
        * normal.dot(half).max(0.0).powf(scene.material.shininess);
    let base = scene.material.base_color.to_array();
    base.map(|c| ((c as f64 * (scene.ambient + diffuse) + specular).clamp(0.0, 1.0)) as f32)
}

/// Shaded render of `mesh`; uncovered pixels take the scene background.
pub fn rasterize(mesh: &TriMesh, scene: &Scene) -> Result<Image, RenderError> {
    let (w, h) = scene.camera.image_size;
    if w == 0 || h == 0 {
        return Err(RenderError::ZeroSize(w, h));
    }
    let mut fine_cam = scene.camera.clone();
    fine_cam.image_size = (w * SUPERSAMPLE, h * SUPERSAMPLE);
    let frags = rasterize_fragments(mesh, &fine_cam)?;

    let bg = scene.background.to_array();
    let mut out = Image::filled(w, h, scene.background);
    let norm = 1.0 / (SUPERSAMPLE * SUPERSAMPLE) as f32;
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0f32; 3];
            let mut covered = false;
            for dy in 0..SUPERSAMPLE {
                for dx in 0..SUPERSAMPLE {
                    let i = (y * SUPERSAMPLE + dy) as usize * fine_cam.image_size.0 as usize
                        + (x * SUPERSAMPLE + dx) as usize;
                    let color = match frags.triangle[i] {
                        Some(t) => {
                            covered = true;
                            shade(mesh, scene, mesh.triangles[t as usize], frags.weights[i])
                        }
                        None => bg,
                    };
                    for c in 0..3 {
                        acc[c] += color[c];
                    }
                }
            }
            if covered {
                out.set(x, y, Rgb::from_array(acc.map(|v| (v * norm).clamp(0.0, 1.0))));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{make_scene, Material, BACKGROUND};

    fn facing_scene(size: u32) -> Scene {
        Scene {
            camera: Camera {
                eye: Vec3::new(0.0, 0.0, 5.0),
                target: Vec3::ZERO,
                up: Vec3::Y,
                vertical_fov: 0.7,
                image_size: (size, size),
            },
            light_dir: Vec3::Z,
            light_intensity: 0.8,
            ambient: 0.0,
            material: Material {
                base_color: Rgb::new(0.5, 0.4, 0.3),
                specular_strength: 0.0,
                shininess: 1.0,
            },
            background: BACKGROUND,
            grain_sigma: 0.0,
        }
    }

    #[test]
    fn empty_mesh_gives_background() {
        let img = rasterize(&TriMesh::default(), &make_scene(1, (16, 16))).unwrap();
        assert!(img.pixels.chunks(3).all(|p| p == BACKGROUND.to_array()));
    }

    #[test]
    fn lambert_identity_on_facing_triangle() {
        let mesh = TriMesh {
            vertices: vec![
                Vec3::new(-2.0, -2.0, 0.0),
                Vec3::new(2.0, -2.0, 0.0),
                Vec3::new(0.0, 2.0, 0.0),
            ],
            normals: vec![Vec3::Z; 3],
            triangles: vec![[0, 1, 2]],
        };
        let img = rasterize(&mesh, &facing_scene(32)).unwrap();
        let c = img.get(16, 16);
        assert!((c.r - 0.4).abs() < 1e-6 && (c.g - 0.32).abs() < 1e-6 && (c.b - 0.24).abs() < 1e-6);
    }

    #[test]
    fn zero_size_rejected() {
        let mut scene = make_scene(1, (16, 16));
        scene.camera.image_size = (0, 16);
        assert!(matches!(
            rasterize(&TriMesh::default(), &scene),
            Err(RenderError::ZeroSize(0, 16))
        ));
    }

    #[test]
    fn output_is_clamped() {
        let mesh = TriMesh {
            vertices: vec![
                Vec3::new(-2.0, -2.0, 0.0),
                Vec3::new(2.0, -2.0, 0.0),
                Vec3::new(0.0, 2.0, 0.0),
            ],
            normals: vec![Vec3::Z; 3],
            triangles: vec![[0, 1, 2]],
        };
        let mut scene = facing_scene(16);
        scene.light_intensity = 50.0;
        scene.material.specular_strength = 10.0;
        let img = rasterize(&mesh, &scene).unwrap();
        assert!(img.pixels.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
