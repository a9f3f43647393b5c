use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use ringforge_geometry::{Image, Rgb};

/// Adds monochrome Gaussian noise of standard deviation `sigma` to pixels
/// that exactly equal `background`; everything else is left untouched.
pub fn add_grain(image: &Image, background: Rgb, sigma: f64, seed: u64) -> Image {
    let mut out = image.clone();
    if !(sigma > 0.0) {
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("sigma is positive and finite");
    let bg = background.to_array();
    for px in out.pixels.chunks_exact_mut(3) {
        if px == bg {
            let n = normal.sample(&mut rng) as f32;
            for c in px.iter_mut() {
                *c = (*c + n).clamp(0.0, 1.0);
            }
        }
    }
    out
}
