#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringforge_autodiff::Tensor;
use ringforge_cyclegan::{image_to_tensor, DiscriminatorConfig, GeneratorConfig, TrainConfig};
use ringforge_geometry::{Image, Rgb};

pub const BLUE: Rgb = Rgb::new(185.0 / 255.0, 226.0 / 255.0, 234.0 / 255.0);
const INK: Rgb = Rgb::new(0.19, 0.19, 0.19);
const GOLD: Rgb = Rgb::new(0.83, 0.69, 0.22);

/// A ring-like annulus, drawn as a thin dark outline on white (sketch) or a
/// filled gold band on pale blue (render).
pub fn toy_image(size: u32, seed: u64, render: bool) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = size as f32 / 2.0 + rng.random_range(-2.0..2.0);
    let r = size as f32 * rng.random_range(0.25..0.35);
    let band = size as f32 * 0.08;
    let (bg, fg) = if render { (BLUE, GOLD) } else { (Rgb::WHITE, INK) };
    let mut img = Image::filled(size, size, bg);
    for y in 0..size {
        for x in 0..size {
            let d = ((x as f32 + 0.5 - c).powi(2) + (y as f32 + 0.5 - c).powi(2)).sqrt();
            let hit = if render {
                (d - r).abs() < band
            } else {
                ((d - r).abs() - band).abs() < 0.7
            };
            if hit {
                img.set(x, y, fg);
            }
        }
    }
    img.quantized()
}

pub fn toy_tensors(n: usize, size: u32, render: bool) -> Vec<Tensor> {
    (0..n).map(|i| image_to_tensor(&toy_image(size, 100 + i as u64 * 2 + render as u64, render))).collect()
}

pub fn small_config(image_size: u32) -> TrainConfig {
    TrainConfig {
        image_size,
        history_buffer_size: 4,
        generator: GeneratorConfig {
            base_channels: 8,
            n_res_blocks: 2,
            ..GeneratorConfig::default()
        },
        discriminator: DiscriminatorConfig {
            base_channels: 8,
            ..DiscriminatorConfig::default()
        },
        ..TrainConfig::default()
    }
}
