use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringforge_autodiff::Tensor;
use serde::{Deserialize, Serialize};

/// Pool of previously generated images shown to a discriminator in place
/// of the newest fakes, so it does not chase the generator's latest mode.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    capacity: usize,
    images: Vec<Tensor>,
    rng: ChaCha8Rng,
}

/// Enough to rebuild a buffer's sampler exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl HistoryBuffer {
    pub fn new(capacity: usize, seed: u64) -> Self {
        HistoryBuffer {
            capacity,
            images: Vec::with_capacity(capacity),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn images(&self) -> &[Tensor] {
        &self.images
    }

    /// Offers a fresh image and returns the one the discriminator should
    /// see. Until the pool is full every image is stored and returned.
    /// After that, with probability one half the image replaces a random
    /// slot and the evicted image is returned; otherwise it is returned
    /// unchanged.
    pub fn query(&mut self, image: Tensor) -> Tensor {
        if self.capacity == 0 {
            return image;
        }
        if self.images.len() < self.capacity {
            self.images.push(image.clone());
            return image;
        }
        if self.rng.random_bool(0.5) {
            let slot = self.rng.random_range(0..self.capacity);
            std::mem::replace(&mut self.images[slot], image)
        } else {
            image
        }
    }

    pub fn sampler_state(&self) -> SamplerState {
        SamplerState {
            seed: self.rng.get_seed(),
            stream: self.rng.get_stream(),
            word_pos: self.rng.get_word_pos(),
        }
    }

    /// Rebuilds a buffer from saved contents.
    pub fn restore(capacity: usize, images: Vec<Tensor>, state: SamplerState) -> Self {
        let mut rng = ChaCha8Rng::from_seed(state.seed);
        rng.set_stream(state.stream);
        rng.set_word_pos(state.word_pos);
        HistoryBuffer { capacity, images, rng }
    }
}
