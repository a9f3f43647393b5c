use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{DatasetError, Result};

/// Index pairs for one step: `a[k]` is shown alongside `b[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepIndices {
    pub epoch: u32,
    pub step_in_epoch: usize,
    pub a: Vec<usize>,
    pub b: Vec<usize>,
}

/// Independent shuffles of both domains for `epoch`, positionally paired and
/// truncated to the shorter domain.
pub fn epoch_order(len_a: usize, len_b: usize, seed: u64, epoch: u32) -> Result<Vec<(usize, usize)>> {
    if len_a == 0 {
        return Err(DatasetError::Empty("A"));
    }
    if len_b == 0 {
        return Err(DatasetError::Empty("B"));
    }
    let shuffled = |len: usize, stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut v: Vec<usize> = (0..len).collect();
        v.shuffle(&mut rng);
        v
    };
    let a = shuffled(len_a, 2 * epoch as u64);
    let b = shuffled(len_b, 2 * epoch as u64 + 1);
    Ok(a.into_iter().zip(b).collect())
}

/// Deterministic sequence of unpaired batches over several epochs.
#[derive(Debug, Clone)]
pub struct UnpairedStream {
    len_a: usize,
    len_b: usize,
    seed: u64,
    batch_size: usize,
    epochs: std::ops::Range<u32>,
    current: Vec<(usize, usize)>,
    cursor: usize,
    step: usize,
}

impl UnpairedStream {
    /// Streams epochs `epochs.start..epochs.end`, so a resumed run can pick
    /// up at any epoch with the same order it would have seen.
    pub fn new(len_a: usize, len_b: usize, seed: u64, epochs: std::ops::Range<u32>, batch_size: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(crate::error::config("batch_size", "must be positive"));
        }
        let current = if epochs.is_empty() {
            Vec::new()
        } else {
            epoch_order(len_a, len_b, seed, epochs.start)?
        };
        Ok(UnpairedStream {
            len_a,
            len_b,
            seed,
            batch_size,
            epochs,
            current,
            cursor: 0,
            step: 0,
        })
    }

    pub fn steps_per_epoch(&self) -> usize {
        self.len_a.min(self.len_b).div_ceil(self.batch_size)
    }
}

impl Iterator for UnpairedStream {
    type Item = StepIndices;

    fn next(&mut self) -> Option<StepIndices> {
        if self.epochs.is_empty() {
            return None;
        }
        if self.cursor >= self.current.len() {
            self.epochs.start += 1;
            if self.epochs.is_empty() {
                return None;
            }
            self.current = epoch_order(self.len_a, self.len_b, self.seed, self.epochs.start).ok()?;
            self.cursor = 0;
            self.step = 0;
        }
        let end = (self.cursor + self.batch_size).min(self.current.len());
        let chunk = &self.current[self.cursor..end];
        let item = StepIndices {
            epoch: self.epochs.start,
            step_in_epoch: self.step,
            a: chunk.iter().map(|p| p.0).collect(),
            b: chunk.iter().map(|p| p.1).collect(),
        };
        self.cursor = end;
        self.step += 1;
        Some(item)
    }
}
