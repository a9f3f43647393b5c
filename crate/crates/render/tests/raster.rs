use proptest::prelude::*;
use ringforge_geometry::{generate_ring, Camera, Image, Rgb, RingSpec, TriMesh, Vec3};
use ringforge_render::{
    add_grain, make_scene, rasterize, rasterize_fragments, render_ring, Material, Scene, BACKGROUND,
};

fn front_camera(size: u32) -> Camera {
    Camera {
        eye: Vec3::new(0.0, 0.0, 5.0),
        target: Vec3::ZERO,
        up: Vec3::Y,
        vertical_fov: 0.6,
        image_size: (size, size),
    }
}

/// Distance along `dir` from `origin` to the triangle, with the smallest
/// barycentric coordinate of the hit (Moller-Trumbore).
fn ray_hit(origin: Vec3, dir: Vec3, [a, b, c]: [Vec3; 3]) -> Option<(f64, f64)> {
    let (e1, e2) = (b - a, c - a);
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-12 {
        return None;
    }
    let s = origin - a;
    let u = s.dot(p) / det;
    let q = s.cross(e1);
    let v = dir.dot(q) / det;
    let t = e2.dot(q) / det;
    let w = 1.0 - u - v;
    (u >= 0.0 && v >= 0.0 && w >= 0.0 && t > 0.0).then_some((t, u.min(v).min(w)))
}

fn vertex() -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.5f64..1.5).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nearer_triangle_wins(tris in proptest::array::uniform6(vertex())) {
        let mesh = TriMesh {
            vertices: tris.to_vec(),
            normals: vec![Vec3::Z; 6],
            triangles: vec![[0, 1, 2], [3, 4, 5]],
        };
        let cam = front_camera(40);
        let frags = rasterize_fragments(&mesh, &cam).unwrap();
        let forward = (cam.target - cam.eye).normalize();
        for y in 0..40 {
            for x in 0..40 {
                let dir = cam.ray_direction(x as f64 + 0.5, y as f64 + 0.5);
                let hits: Vec<(u32, f64, f64)> = mesh
                    .triangles
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &t)| ray_hit(cam.eye, dir, mesh.corners(t)).map(|(d, m)| (i as u32, d, m)))
                    .collect();
                // Samples on an edge or where both surfaces meet are ambiguous.
                if hits.iter().any(|h| h.2 < 1e-6) {
                    continue;
                }
                if let [a, b] = hits[..] {
                    if (a.1 - b.1).abs() < 1e-6 {
                        continue;
                    }
                }
                let nearest = hits.iter().min_by(|a, b| a.1.total_cmp(&b.1));
                match (nearest, frags.at(x, y)) {
                    (None, None) => {}
                    (Some(h), Some((tri, depth))) => {
                        prop_assert_eq!(tri, h.0, "pixel ({}, {})", x, y);
                        prop_assert!((depth - h.1 * dir.dot(forward)).abs() < 1e-6);
                    }
                    (want, got) => prop_assert!(false, "pixel ({x}, {y}): oracle {want:?}, rasterizer {got:?}"),
                }
            }
        }
    }
}

fn sphere(radius: f64, rings: usize, segments: usize) -> TriMesh {
    let mut vertices = Vec::new();
    for i in 0..=rings {
        let theta = std::f64::consts::PI * i as f64 / rings as f64;
        for j in 0..segments {
            let phi = std::f64::consts::TAU * j as f64 / segments as f64;
            vertices.push(Vec3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()) * radius);
        }
    }
    let mut triangles = Vec::new();
    for i in 0..rings {
        for j in 0..segments {
            let a = (i * segments + j) as u32;
            let b = (i * segments + (j + 1) % segments) as u32;
            let (c, d) = (a + segments as u32, b + segments as u32);
            triangles.push([a, c, b]);
            triangles.push([b, c, d]);
        }
    }
    let normals = vertices.iter().map(|v| v.normalize()).collect();
    TriMesh { vertices, normals, triangles }
}

fn specular_scene(size: u32, light_dir: Vec3) -> Scene {
    Scene {
        camera: front_camera(size),
        light_dir,
        light_intensity: 1.0,
        ambient: 0.0,
        material: Material {
            base_color: Rgb::new(0.02, 0.02, 0.02),
            specular_strength: 0.9,
            shininess: 200.0,
        },
        background: Rgb::new(0.0, 0.0, 0.0),
        grain_sigma: 0.0,
    }
}

fn brightest(img: &Image) -> (u32, u32) {
    let mut best = (0, 0, f32::MIN);
    for y in 0..img.height {
        for x in 0..img.width {
            let v: f32 = img.get(x, y).to_array().iter().sum();
            if v > best.2 {
                best = (x, y, v);
            }
        }
    }
    (best.0, best.1)
}

#[test]
fn sphere_highlight_lands_on_the_half_vector() {
    let mesh = sphere(1.0, 96, 192);
    for light in [Vec3::new(0.4, 0.5, 0.77), Vec3::new(-0.6, 0.2, 0.77), Vec3::new(0.0, -0.5, 0.87)] {
        let scene = specular_scene(128, light.normalize());
        // The highlight is where the normal bisects light and view.
        let mut p = Vec3::Z;
        for _ in 0..100 {
            let view = (scene.camera.eye - p).normalize();
            p = (scene.light_dir + view).normalize();
        }
        let (ex, ey, _) = scene.camera.project(p).unwrap();
        let (bx, by) = brightest(&rasterize(&mesh, &scene).unwrap());
        let miss = (bx as f64 + 0.5 - ex).hypot(by as f64 + 0.5 - ey);
        assert!(miss <= 5.0, "light {light:?}: brightest ({bx}, {by}), expected ({ex:.1}, {ey:.1})");
    }
}

#[test]
fn output_is_clamped_for_any_intensity() {
    let mesh = sphere(1.0, 24, 48);
    for intensity in [0.0, 1.0, 50.0] {
        let scene = Scene {
            light_intensity: intensity,
            ambient: 1.0,
            ..specular_scene(48, Vec3::Z)
        };
        let img = rasterize(&mesh, &scene).unwrap();
        assert!(img.pixels.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn scenes_follow_their_ranges() {
    for seed in 0..1000 {
        let s = make_scene(seed, (64, 64));
        assert_eq!(s, make_scene(seed, (64, 64)));
        assert!(s.light_dir.z >= 0.0);
        assert!((s.light_dir.norm() - 1.0).abs() < 1e-9);
        assert_eq!(s.background.to_u8(), [185, 226, 234]);
        assert!((0.0..=0.02).contains(&s.grain_sigma));
        let d = s.camera.distance_to_target();
        assert!((3.0..=5.0).contains(&d), "distance {d}");
        let elevation = (s.camera.eye.z / d).asin().to_degrees();
        assert!((10.0 - 1e-9..=60.0 + 1e-9).contains(&elevation), "elevation {elevation}");
    }
}

#[test]
fn grain_matches_its_sigma() {
    let img = Image::filled(256, 256, BACKGROUND);
    for (seed, sigma) in [(1, 0.02), (2, 0.01), (3, 0.005)] {
        let noisy = add_grain(&img, BACKGROUND, sigma, seed);
        let diffs: Vec<f64> = noisy.pixels.iter().step_by(3).zip(img.pixels.iter().step_by(3)).map(|(a, b)| (a - b) as f64).collect();
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        let std = (diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (diffs.len() - 1) as f64).sqrt();
        assert!((std / sigma - 1.0).abs() < 0.1, "sigma {sigma}: sample std {std}");
    }
}

#[test]
fn ring_renders_are_deterministic() {
    let ring = generate_ring(&RingSpec { n_strands: 3, seed: 8, ..RingSpec::default() }).unwrap();
    let scene = make_scene(4, (64, 64));
    let a = render_ring(&ring, &scene, 77).unwrap();
    assert_eq!(a, render_ring(&ring, &scene, 77).unwrap());
    assert!(a.pixels.chunks(3).any(|p| p != BACKGROUND.to_array()), "ring is not visible");
}
