use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringforge_geometry::RingSpec;
use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

/// Inclusive bounds a per-image value is drawn from uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range<T> {
    pub min: T,
    pub max: T,
}

impl<T> Range<T> {
    pub const fn new(min: T, max: T) -> Self {
        Range { min, max }
    }
}

/// Distributions the corpus rings are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpecRanges {
    pub n_strands: Range<u32>,
    pub ring_radius: Range<f64>,
    pub tube_radius: Range<f64>,
    pub height_amplitude: Range<f64>,
    pub radial_amplitude: Range<f64>,
    pub n_control_points: Range<u32>,
    /// Multiplier on the projected tube diameter used as sketch stroke width.
    pub line_width_scale: Range<f64>,
}

impl Default for SpecRanges {
    fn default() -> Self {
        SpecRanges {
            n_strands: Range::new(2, 4),
            ring_radius: Range::new(1.0, 1.0),
            tube_radius: Range::new(0.04, 0.09),
            height_amplitude: Range::new(0.05, 0.3),
            radial_amplitude: Range::new(0.05, 0.2),
            n_control_points: Range::new(6, 10),
            line_width_scale: Range::new(1.0, 1.0),
        }
    }
}

fn check_f(field: &'static str, r: Range<f64>, lo: f64) -> Result<()> {
    if !(r.min.is_finite() && r.max.is_finite()) || r.min > r.max {
        return Err(config(field, format!("need finite min <= max, got [{}, {}]", r.min, r.max)));
    }
    if r.min < lo {
        return Err(config(field, format!("minimum {} is below {lo}", r.min)));
    }
    Ok(())
}

impl SpecRanges {
    pub fn validate(&self) -> Result<()> {
        if self.n_strands.min == 0 || self.n_strands.min > self.n_strands.max {
            return Err(config("n_strands", "need 1 <= min <= max"));
        }
        if self.n_control_points.min < 4 || self.n_control_points.min > self.n_control_points.max {
            return Err(config("n_control_points", "need 4 <= min <= max"));
        }
        check_f("ring_radius", self.ring_radius, f64::MIN_POSITIVE)?;
        check_f("tube_radius", self.tube_radius, f64::MIN_POSITIVE)?;
        check_f("height_amplitude", self.height_amplitude, 0.0)?;
        check_f("radial_amplitude", self.radial_amplitude, 0.0)?;
        check_f("line_width_scale", self.line_width_scale, f64::MIN_POSITIVE)?;
        if self.tube_radius.max >= self.ring_radius.min {
            return Err(config("tube_radius", "largest tube must be thinner than the smallest ring radius"));
        }
        if self.radial_amplitude.max >= self.ring_radius.min {
            return Err(config("radial_amplitude", "largest amplitude must be below the smallest ring radius"));
        }
        Ok(())
    }

    /// Draws a ring specification, and a stroke-width multiplier for its
    /// sketch, from `seed` alone. The spec carries `seed` as its own.
    pub fn sample(&self, seed: u64) -> (RingSpec, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = |rng: &mut ChaCha8Rng, r: Range<f64>| if r.min == r.max { r.min } else { rng.random_range(r.min..=r.max) };
        let spec = RingSpec {
            n_strands: rng.random_range(self.n_strands.min..=self.n_strands.max) as usize,
            ring_radius: f(&mut rng, self.ring_radius),
            tube_radius: f(&mut rng, self.tube_radius),
            height_amplitude: f(&mut rng, self.height_amplitude),
            radial_amplitude: f(&mut rng, self.radial_amplitude),
            n_control_points: rng.random_range(self.n_control_points.min..=self.n_control_points.max) as usize,
            seed,
        };
        let scale = f(&mut rng, self.line_width_scale);
        (spec, scale)
    }
}
