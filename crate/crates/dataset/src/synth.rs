use ringforge_geometry::{generate_ring, project_sketch, stroke_width_for, Camera, Image, RingModel, RingSpec};
use ringforge_render::{make_scene_for, render_ring, Scene};

use crate::Result;

/// Viewpoint a ring's sketch is drawn from: the camera of the randomized
/// scene seeded by the ring's own seed.
pub fn sketch_camera(ring: &RingModel, size: u32) -> Camera {
    make_scene_for(ring.spec.seed, (size, size), ring.spec.ring_radius).camera
}

/// Sketch of `ring` with strokes as wide as the projected tube times
/// `width_scale` (never thinner than one pixel).
pub fn sketch_ring(ring: &RingModel, size: u32, width_scale: f64) -> Result<Image> {
    let camera = sketch_camera(ring, size);
    let width = (stroke_width_for(ring, &camera) * width_scale).max(1.0);
    Ok(project_sketch(ring, &camera, width)?)
}

pub fn sketch_spec(spec: &RingSpec, size: u32, width_scale: f64) -> Result<Image> {
    sketch_ring(&generate_ring(spec)?, size, width_scale)
}

/// Randomized scene for a render, plus the finished image.
pub fn render_spec(spec: &RingSpec, scene_seed: u64, size: u32) -> Result<(Scene, Image)> {
    let ring = generate_ring(spec)?;
    let scene = make_scene_for(scene_seed, (size, size), spec.ring_radius);
    let image = render_ring(&ring, &scene, scene_seed)?;
    Ok((scene, image))
}
