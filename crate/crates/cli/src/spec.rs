use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use ringforge_geometry::RingSpec;
use serde_json::Value;

use crate::invalid;

const FIELDS: [&str; 7] = [
    "n_strands",
    "ring_radius",
    "tube_radius",
    "height_amplitude",
    "radial_amplitude",
    "n_control_points",
    "seed",
];

/// A ring spec from an optional JSON file, with individual flags taking
/// precedence over the file.
#[derive(Debug, Clone, Default, Args)]
pub struct SpecArgs {
    /// JSON file with RingSpec fields; missing fields take their defaults
    #[arg(long, value_name = "FILE")]
    pub spec: Option<PathBuf>,
    /// Number of interwoven strands
    #[arg(long)]
    pub n_strands: Option<usize>,
    /// Mean radius of the ring centerline
    #[arg(long)]
    pub ring_radius: Option<f64>,
    /// Radius of each swept tube
    #[arg(long)]
    pub tube_radius: Option<f64>,
    /// Largest vertical offset of a control point
    #[arg(long)]
    pub height_amplitude: Option<f64>,
    /// Largest radial offset of a control point
    #[arg(long)]
    pub radial_amplitude: Option<f64>,
    /// Control points per strand
    #[arg(long)]
    pub n_control_points: Option<usize>,
}

impl SpecArgs {
    /// Builds and validates the spec; `seed` (the global flag) overrides the
    /// file's seed. Every violated bound is listed.
    pub fn resolve(&self, seed: Option<u64>) -> anyhow::Result<RingSpec> {
        let mut spec = match &self.spec {
            Some(path) => {
                let text =
                    std::fs::read_to_string(path).with_context(|| format!("cannot read spec {}", path.display()))?;
                parse_spec_file(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?
            }
            None => RingSpec::default(),
        };
        if let Some(v) = self.n_strands {
            spec.n_strands = v;
        }
        if let Some(v) = self.ring_radius {
            spec.ring_radius = v;
        }
        if let Some(v) = self.tube_radius {
            spec.tube_radius = v;
        }
        if let Some(v) = self.height_amplitude {
            spec.height_amplitude = v;
        }
        if let Some(v) = self.radial_amplitude {
            spec.radial_amplitude = v;
        }
        if let Some(v) = self.n_control_points {
            spec.n_control_points = v;
        }
        if let Some(s) = seed {
            spec.seed = s;
        }
        let violations = spec.violations();
        if !violations.is_empty() {
            let lines: Vec<String> = violations.iter().map(|(f, m)| format!("{f}: {m}")).collect();
            return Err(invalid(format!("invalid ring spec\n  {}", lines.join("\n  "))));
        }
        Ok(spec)
    }
}

/// Parses a spec file, rejecting keys that are not RingSpec fields.
pub fn parse_spec_file(text: &str) -> Result<RingSpec, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let Value::Object(map) = &value else {
        return Err("expected a JSON object".into());
    };
    if let Some(unknown) = map.keys().find(|k| !FIELDS.contains(&k.as_str())) {
        return Err(format!("unknown field `{unknown}`"));
    }
    serde_json::from_value(value).map_err(|e| e.to_string())
}
