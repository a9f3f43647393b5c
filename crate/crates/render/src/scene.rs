use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringforge_geometry::{Camera, Rgb, Vec3};
use serde::{Deserialize, Serialize};

/// Render-domain background, #B9E2EA.
pub const BACKGROUND: Rgb = Rgb::new(185.0 / 255.0, 226.0 / 255.0, 234.0 / 255.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub base_color: Rgb,
    pub specular_strength: f64,
    pub shininess: f64,
}

impl Default for Material {
    fn default() -> Self {
        // Polished yellow gold.
        Material {
            base_color: Rgb::new(0.83, 0.69, 0.22),
            specular_strength: 0.6,
            shininess: 48.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub camera: Camera,
    /// Unit vector pointing from the surface toward the light.
    pub light_dir: Vec3,
    pub light_intensity: f64,
    pub ambient: f64,
    pub material: Material,
    pub background: Rgb,
    pub grain_sigma: f64,
}

pub const VERTICAL_FOV: f64 = 50.0 * PI / 180.0;

/// Random scene for a ring of unit radius.
pub fn make_scene(seed: u64, image_size: (u32, u32)) -> Scene {
    make_scene_for(seed, image_size, 1.0)
}

/// Random scene: light uniform on the upper hemisphere, camera on a sphere
/// of radius 3-5 ring radii at elevation 10-60 degrees looking at the ring
/// center, grain sigma in [0, 0.02].
pub fn make_scene_for(seed: u64, image_size: (u32, u32), ring_radius: f64) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Uniform on the hemisphere: z uniform in [0, 1], azimuth uniform.
    let z: f64 = rng.random();
    let phi = rng.random::<f64>() * TAU;
    let r = (1.0 - z * z).max(0.0).sqrt();
    let light_dir = Vec3::new(r * phi.cos(), r * phi.sin(), z).normalize();

    let distance = ring_radius * (3.0 + 2.0 * rng.random::<f64>());
    let azimuth = rng.random::<f64>() * TAU;
    let elevation = (10.0 + 50.0 * rng.random::<f64>()).to_radians();
    let camera = Camera::orbit(Vec3::ZERO, distance, azimuth, elevation, VERTICAL_FOV, image_size);

    let light_intensity = 0.8 + 0.4 * rng.random::<f64>();
    let ambient = 0.15 + 0.15 * rng.random::<f64>();
    let grain_sigma = 0.02 * rng.random::<f64>();

    Scene {
        camera,
        light_dir,
        light_intensity,
        ambient,
        material: Material::default(),
        background: BACKGROUND,
        grain_sigma,
    }
}
