//! Render-domain image synthesis: randomized scenes, a z-buffered
//! Blinn-Phong triangle rasterizer and background film grain.

mod grain;
mod raster;
mod scene;

pub use grain::add_grain;
pub use raster::{rasterize, rasterize_fragments, Fragments, RenderError, SUPERSAMPLE};
pub use scene::{make_scene, make_scene_for, Material, Scene, BACKGROUND};

use ringforge_geometry::{extrude_ring, Image, RingModel};

/// Tessellation used for classic renders: samples along each strand and
/// around each tube.
pub const TUBE_SAMPLES: (usize, usize) = (192, 12);

/// Meshes `ring`, rasterizes it under `scene` and applies the scene's grain.
pub fn render_ring(ring: &RingModel, scene: &Scene, grain_seed: u64) -> Result<Image, RenderError> {
    let mesh = extrude_ring(ring, TUBE_SAMPLES.0, TUBE_SAMPLES.1)?.mesh;
    let image = rasterize(&mesh, scene)?;
    Ok(add_grain(&image, scene.background, scene.grain_sigma, grain_seed))
}
