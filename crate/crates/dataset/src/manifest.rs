use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{io, DatasetError, Result};
use crate::SpecRanges;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Domain {
    /// Line sketches.
    A,
    /// Shaded renders.
    B,
}

impl Domain {
    pub fn dir_name(self) -> &'static str {
        match self {
            Domain::A => "trainA",
            Domain::B => "trainB",
        }
    }

    pub fn manifest_name(self) -> &'static str {
        match self {
            Domain::A => "manifest_a.json",
            Domain::B => "manifest_b.json",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Domain::A => "A",
            Domain::B => "B",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    /// Relative to the dataset root.
    pub file: String,
    pub ring_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_seed: Option<u64>,
}

/// Everything needed to regenerate one domain of a corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub domain: Domain,
    pub image_size: u32,
    pub master_seed: u64,
    pub ranges: SpecRanges,
    pub created_at: DateTime<Utc>,
    pub generator_version: String,
    pub entries: Vec<Entry>,
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn path_in(root: &Path, domain: Domain) -> PathBuf {
        root.join(domain.manifest_name())
    }

    pub fn load(root: &Path, domain: Domain) -> Result<Self> {
        let path = Self::path_in(root, domain);
        let bytes = fs::read(&path).map_err(io(&path))?;
        let m: DatasetManifest = serde_json::from_slice(&bytes).map_err(|e| DatasetError::Manifest {
            path: path.clone(),
            message: e.to_string(),
        })?;
        if m.domain != domain {
            return Err(DatasetError::Manifest {
                path,
                message: format!("describes domain {}, expected {domain}", m.domain),
            });
        }
        Ok(m)
    }

    pub fn save(&self, root: &Path) -> Result<PathBuf> {
        let path = Self::path_in(root, self.domain);
        let mut json = serde_json::to_vec_pretty(self).expect("manifest serializes");
        json.push(b'\n');
        fs::write(&path, json).map_err(io(&path))?;
        Ok(path)
    }

    /// Checks that every listed file exists and no extra images are present.
    pub fn verify_files(&self, root: &Path) -> Result<()> {
        let dir = root.join(self.domain.dir_name());
        let on_disk = fs::read_dir(&dir)
            .map_err(io(&dir))?
            .filter_map(|e| e.ok())
            .filter(|e| e.path().extension().is_some_and(|x| x == "png"))
            .count();
        let missing = self.entries.iter().find(|e| !root.join(&e.file).is_file());
        if let Some(e) = missing {
            return Err(DatasetError::Manifest {
                path: Self::path_in(root, self.domain),
                message: format!("listed file {} is missing", e.file),
            });
        }
        if on_disk != self.entries.len() {
            return Err(DatasetError::Manifest {
                path: Self::path_in(root, self.domain),
                message: format!("{} entries but {on_disk} images on disk", self.entries.len()),
            });
        }
        Ok(())
    }
}
