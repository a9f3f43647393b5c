use std::f64::consts::TAU;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{GeometryError, Result, Spline, Vec3};

/// User-facing parameters of a ring. Lengths are in model units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RingSpec {
    pub n_strands: usize,
    pub ring_radius: f64,
    pub tube_radius: f64,
    pub height_amplitude: f64,
    pub radial_amplitude: f64,
    pub n_control_points: usize,
    pub seed: u64,
}

impl Default for RingSpec {
    fn default() -> Self {
        RingSpec {
            n_strands: 3,
            ring_radius: 1.0,
            tube_radius: 0.06,
            height_amplitude: 0.25,
            radial_amplitude: 0.15,
            n_control_points: 8,
            seed: 0,
        }
    }
}

impl RingSpec {
    /// Every violated bound as `(field, message)`, in field order.
    pub fn violations(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if self.n_strands < 1 {
            out.push(("n_strands", "must be at least 1".to_string()));
        }
        if !self.ring_radius.is_finite() || self.ring_radius <= 0.0 {
            out.push(("ring_radius", format!("must be finite and positive, got {}", self.ring_radius)));
        }
        if !(self.tube_radius.is_finite() && self.tube_radius > 0.0 && self.tube_radius < self.ring_radius) {
            out.push((
                "tube_radius",
                format!(
                    "must satisfy 0 < tube_radius < ring_radius ({}), got {}",
                    self.ring_radius, self.tube_radius
                ),
            ));
        }
        if !(self.height_amplitude.is_finite() && self.height_amplitude >= 0.0) {
            out.push((
                "height_amplitude",
                format!("must be finite and non-negative, got {}", self.height_amplitude),
            ));
        }
        if !(self.radial_amplitude.is_finite() && self.radial_amplitude >= 0.0 && self.radial_amplitude < self.ring_radius)
        {
            out.push((
                "radial_amplitude",
                format!(
                    "must satisfy 0 <= radial_amplitude < ring_radius ({}), got {}",
                    self.ring_radius, self.radial_amplitude
                ),
            ));
        }
        if self.n_control_points < 4 {
            out.push((
                "n_control_points",
                format!("must be at least 4, got {}", self.n_control_points),
            ));
        }
        out
    }

    /// Fails with the first violated bound.
    pub fn validate(&self) -> Result<()> {
        match self.violations().into_iter().next() {
            Some((field, message)) => Err(GeometryError::invalid(field, message)),
            None => Ok(()),
        }
    }

    /// Inclusive band `[min, max]` that every control point's distance
    /// from the vertical axis must fall in.
    pub fn radial_band(&self) -> (f64, f64) {
        (
            self.ring_radius - self.radial_amplitude,
            self.ring_radius + self.radial_amplitude,
        )
    }
}

/// Opaque identifier derived from the spec contents.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingId(pub String);

impl fmt::Display for RingId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingModel {
    pub strands: Vec<Spline>,
    pub tube_radius: f64,
    pub spec: RingSpec,
    pub id: RingId,
}

impl RingModel {
    pub fn control_points(&self) -> impl Iterator<Item = &Vec3> {
        self.strands.iter().flat_map(|s| s.control_points.iter())
    }
}

fn spec_fingerprint(spec: &RingSpec) -> u64 {
    // FNV-1a over the raw field bits.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |v: u64| {
        for b in v.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    feed(spec.n_strands as u64);
    feed(spec.ring_radius.to_bits());
    feed(spec.tube_radius.to_bits());
    feed(spec.height_amplitude.to_bits());
    feed(spec.radial_amplitude.to_bits());
    feed(spec.n_control_points as u64);
    feed(spec.seed);
    h
}

/// Generates a ring: each strand gets `n_control_points` control points at
/// equally spaced angles (with a random per-strand phase), each jittered
/// radially and vertically by independent uniform draws within the
/// amplitudes. Strand `i` draws from stream `i` of the seeded generator.
pub fn generate_ring(spec: &RingSpec) -> Result<RingModel> {
    spec.validate()?;
    let n = spec.n_control_points;
    let step = TAU / n as f64;
    let mut strands = Vec::with_capacity(spec.n_strands);
    for strand in 0..spec.n_strands {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(strand as u64);
        let phase = rng.random::<f64>() * step;
        let points = (0..n)
            .map(|j| {
                let angle = phase + step * j as f64;
                let dr = (2.0 * rng.random::<f64>() - 1.0) * spec.radial_amplitude;
                let dz = (2.0 * rng.random::<f64>() - 1.0) * spec.height_amplitude;
                let r = spec.ring_radius + dr;
                Vec3::new(r * angle.cos(), r * angle.sin(), dz)
            })
            .collect();
        strands.push(Spline::closed(points)?);
    }
    Ok(RingModel {
        strands,
        tube_radius: spec.tube_radius,
        spec: spec.clone(),
        id: RingId(format!("ring-{:016x}", spec_fingerprint(spec))),
    })
}
