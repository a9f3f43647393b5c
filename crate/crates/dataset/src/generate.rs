use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use ringforge_geometry::Image;
use serde::{Deserialize, Serialize};

use crate::error::{config, io, DatasetError, Result};
use crate::manifest::{DatasetManifest, Domain, Entry};
use crate::synth::{render_spec, sketch_spec};
use crate::SpecRanges;

pub const GENERATOR_VERSION: &str = concat!("ringforge-dataset/", env!("CARGO_PKG_VERSION"));

const SCENE_SALT: u64 = 0x5ce9_e5a1_7000_0001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub n_a: usize,
    pub n_b: usize,
    pub image_size: u32,
    pub seed: u64,
    pub ranges: SpecRanges,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        DatasetConfig {
            n_a: 179,
            n_b: 176,
            image_size: 64,
            seed: 0,
            ranges: SpecRanges::default(),
        }
    }
}

impl DatasetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_a == 0 {
            return Err(config("n_a", "must be at least 1"));
        }
        if self.n_b == 0 {
            return Err(config("n_b", "must be at least 1"));
        }
        if !(16..=4096).contains(&self.image_size) {
            return Err(config("image_size", format!("{} is outside [16, 4096]", self.image_size)));
        }
        self.ranges.validate()
    }
}

/// SplitMix64 finalizer of `master + k * golden`: a bijection in `k`, so
/// distinct indices never share a seed.
pub fn derive_seed(master: u64, k: u64) -> u64 {
    let mut z = master.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Ring seeds interleave the domains (even indices for sketches, odd for
/// renders), so no sketch and render ever come from the same ring.
pub fn ring_seed(master: u64, domain: Domain, index: usize) -> u64 {
    let k = 2 * index as u64 + matches!(domain, Domain::B) as u64;
    derive_seed(master, k)
}

pub fn scene_seed(master: u64, index: usize) -> u64 {
    derive_seed(master ^ SCENE_SALT, index as u64)
}

fn file_name(domain: Domain, index: usize) -> String {
    format!("{}/{index:04}.png", domain.dir_name())
}

fn entry(master: u64, domain: Domain, index: usize) -> Entry {
    Entry {
        file: file_name(domain, index),
        ring_seed: ring_seed(master, domain, index),
        scene_seed: matches!(domain, Domain::B).then(|| scene_seed(master, index)),
    }
}

/// Re-synthesizes the image an entry describes.
pub fn synthesize(e: &Entry, ranges: &SpecRanges, size: u32) -> Result<Image> {
    let (spec, width_scale) = ranges.sample(e.ring_seed);
    match e.scene_seed {
        None => sketch_spec(&spec, size, width_scale),
        Some(scene) => Ok(render_spec(&spec, scene, size)?.1),
    }
}

/// Regenerates entry `index` of `m` in memory.
pub fn regenerate_entry(m: &DatasetManifest, index: usize) -> Result<Image> {
    let e = m.entries.get(index).ok_or(DatasetError::NoSuchEntry {
        index,
        len: m.entries.len(),
    })?;
    synthesize(e, &m.ranges, m.image_size)
}

fn write_domain(cfg: &DatasetConfig, domain: Domain, n: usize, root: &Path) -> Result<DatasetManifest> {
    let dir = root.join(domain.dir_name());
    fs::create_dir_all(&dir).map_err(io(&dir))?;
    let entries: Vec<Entry> = (0..n).map(|i| entry(cfg.seed, domain, i)).collect();
    entries.par_iter().try_for_each(|e| -> Result<()> {
        let img = synthesize(e, &cfg.ranges, cfg.image_size)?;
        let path = root.join(&e.file);
        let png = img.encode_png()?;
        fs::write(&path, png).map_err(io(&path))
    })?;
    let m = DatasetManifest {
        domain,
        image_size: cfg.image_size,
        master_seed: cfg.seed,
        ranges: cfg.ranges.clone(),
        created_at: creation_time(),
        generator_version: GENERATOR_VERSION.into(),
        entries,
    };
    m.save(root)?;
    Ok(m)
}

/// Wall-clock time, unless `SOURCE_DATE_EPOCH` pins it for reproducible
/// output trees.
fn creation_time() -> DateTime<Utc> {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|secs| DateTime::from_timestamp(secs, 0))
        .unwrap_or_else(Utc::now)
}

fn clear(root: &Path) -> Result<()> {
    for d in [Domain::A, Domain::B] {
        let dir = root.join(d.dir_name());
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(io(&dir))?;
        }
        let m = DatasetManifest::path_in(root, d);
        if m.exists() {
            fs::remove_file(&m).map_err(io(&m))?;
        }
    }
    Ok(())
}

/// Writes `n_a` sketches and `n_b` renders under `out_dir` as
/// `trainA/NNNN.png`, `trainB/NNNN.png` plus one manifest per domain.
/// Existing corpus files are replaced; on failure everything written so far
/// is removed.
pub fn generate_dataset(cfg: &DatasetConfig, out_dir: &Path) -> Result<(DatasetManifest, DatasetManifest)> {
    cfg.validate()?;
    fs::create_dir_all(out_dir).map_err(io(out_dir))?;
    clear(out_dir)?;
    let result = write_domain(cfg, Domain::A, cfg.n_a, out_dir)
        .and_then(|a| Ok((a, write_domain(cfg, Domain::B, cfg.n_b, out_dir)?)));
    if result.is_err() {
        let _ = clear(out_dir);
    }
    result
}
