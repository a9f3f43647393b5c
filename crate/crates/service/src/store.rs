use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::RwLock;

use chrono::{DateTime, Utc};
use ringforge_geometry::RingSpec;
use serde::{Deserialize, Serialize};

use crate::error::{io_err, Result, ServiceError};

const RECORD_FILE: &str = "record.json";
pub(crate) const SKETCH_FILE: &str = "sketch.png";
pub(crate) const RENDER_FILE: &str = "render.png";
pub(crate) const MESH_FILE: &str = "mesh.stl";

/// Blob file names inside the ring's directory. A name is set exactly when
/// the file exists.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RingFiles {
    pub sketch: Option<String>,
    pub render: Option<String>,
    /// Checkpoint the stored render came from.
    pub render_checkpoint: Option<String>,
    pub mesh: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingRecord {
    pub id: String,
    pub spec: RingSpec,
    pub created_at: DateTime<Utc>,
    pub files: RingFiles,
}

/// Ring records kept in memory and mirrored to one directory per ring.
/// Mutations hold the write lock while touching disk, so readers never see
/// a record whose files are missing.
#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    records: RwLock<BTreeMap<String, RingRecord>>,
}

impl Store {
    /// Opens (creating if needed) `root` and reloads every stored record.
    /// Blob names whose files have gone missing are dropped.
    pub fn open(root: impl Into<PathBuf>) -> Result<Store> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(io_err(&root))?;
        let mut records = BTreeMap::new();
        for entry in fs::read_dir(&root).map_err(io_err(&root))? {
            let dir = entry.map_err(io_err(&root))?.path();
            let path = dir.join(RECORD_FILE);
            if !path.is_file() {
                continue;
            }
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            let mut record: RingRecord = serde_json::from_str(&text).map_err(|e| ServiceError::Record {
                path: path.clone(),
                message: e.to_string(),
            })?;
            for slot in [&mut record.files.sketch, &mut record.files.render, &mut record.files.mesh] {
                if slot.as_ref().is_some_and(|name| !dir.join(name).is_file()) {
                    *slot = None;
                }
            }
            if record.files.render.is_none() {
                record.files.render_checkpoint = None;
            }
            records.insert(record.id.clone(), record);
        }
        Ok(Store {
            root,
            records: RwLock::new(records),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn ring_dir(&self, id: &str) -> PathBuf {
        self.root.join(id)
    }

    pub fn len(&self) -> usize {
        self.records.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, id: &str) -> Option<RingRecord> {
        self.records.read().unwrap().get(id).cloned()
    }

    /// All records, oldest first.
    pub fn list(&self) -> Vec<RingRecord> {
        let mut all: Vec<_> = self.records.read().unwrap().values().cloned().collect();
        all.sort_by(|a, b| a.created_at.cmp(&b.created_at).then_with(|| a.id.cmp(&b.id)));
        all
    }

    /// Stores a new record together with its sketch.
    pub fn insert(&self, mut record: RingRecord, sketch_png: &[u8]) -> Result<RingRecord> {
        let mut records = self.records.write().unwrap();
        if records.contains_key(&record.id) {
            return Err(ServiceError::Config(format!("duplicate ring id {}", record.id)));
        }
        let dir = self.ring_dir(&record.id);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        write_atomic(&dir.join(SKETCH_FILE), sketch_png)?;
        record.files = RingFiles {
            sketch: Some(SKETCH_FILE.to_string()),
            ..RingFiles::default()
        };
        if let Err(e) = write_record(&dir, &record) {
            let _ = fs::remove_dir_all(&dir);
            return Err(e);
        }
        records.insert(record.id.clone(), record.clone());
        Ok(record)
    }

    pub fn set_render(&self, id: &str, checkpoint: &str, png: &[u8]) -> Result<RingRecord> {
        self.update_blob(id, RENDER_FILE, png, |files| {
            files.render = Some(RENDER_FILE.to_string());
            files.render_checkpoint = Some(checkpoint.to_string());
        })
    }

    pub fn set_mesh(&self, id: &str, stl: &[u8]) -> Result<RingRecord> {
        self.update_blob(id, MESH_FILE, stl, |files| files.mesh = Some(MESH_FILE.to_string()))
    }

    fn update_blob(&self, id: &str, name: &str, bytes: &[u8], mark: impl FnOnce(&mut RingFiles)) -> Result<RingRecord> {
        let mut records = self.records.write().unwrap();
        let current = records.get(id).ok_or_else(|| ServiceError::UnknownRing(id.to_string()))?;
        let dir = self.ring_dir(id);
        write_atomic(&dir.join(name), bytes)?;
        let mut updated = current.clone();
        mark(&mut updated.files);
        write_record(&dir, &updated)?;
        records.insert(id.to_string(), updated.clone());
        Ok(updated)
    }

    /// Reads a blob by file name if the record lists it.
    pub fn read_blob(&self, id: &str, name: &str) -> Result<Option<Vec<u8>>> {
        let records = self.records.read().unwrap();
        let Some(record) = records.get(id) else {
            return Err(ServiceError::UnknownRing(id.to_string()));
        };
        let f = &record.files;
        let listed = [&f.sketch, &f.render, &f.mesh]
            .into_iter()
            .any(|slot| slot.as_deref() == Some(name));
        if !listed {
            return Ok(None);
        }
        let path = self.ring_dir(id).join(name);
        fs::read(&path).map(Some).map_err(io_err(path))
    }

    /// Deletes the record and its directory. Returns false for unknown ids.
    pub fn remove(&self, id: &str) -> Result<bool> {
        let mut records = self.records.write().unwrap();
        if records.remove(id).is_none() {
            return Ok(false);
        }
        let dir = self.ring_dir(id);
        fs::remove_dir_all(&dir).map_err(io_err(dir))?;
        Ok(true)
    }
}

fn write_record(dir: &Path, record: &RingRecord) -> Result<()> {
    let json = serde_json::to_vec_pretty(record).expect("ring records always serialize");
    write_atomic(&dir.join(RECORD_FILE), &json)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let partial = path.with_extension("partial");
    fs::write(&partial, bytes).map_err(io_err(&partial))?;
    fs::rename(&partial, path).map_err(io_err(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str) -> RingRecord {
        RingRecord {
            id: id.to_string(),
            spec: RingSpec::default(),
            created_at: Utc::now(),
            files: RingFiles::default(),
        }
    }

    #[test]
    fn reload_drops_missing_blobs() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        store.insert(record("a"), b"png").unwrap();
        store.set_mesh("a", b"stl").unwrap();
        store.set_render("a", "ck", b"render").unwrap();
        fs::remove_file(dir.path().join("a").join(MESH_FILE)).unwrap();
        fs::remove_file(dir.path().join("a").join(RENDER_FILE)).unwrap();

        let reopened = Store::open(dir.path()).unwrap();
        let files = reopened.get("a").unwrap().files;
        assert_eq!(files.sketch.as_deref(), Some(SKETCH_FILE));
        assert_eq!(files.mesh, None);
        assert_eq!(files.render_checkpoint, None);
        assert_eq!(reopened.read_blob("a", SKETCH_FILE).unwrap().unwrap(), b"png");
    }

    #[test]
    fn unknown_ids_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert!(matches!(store.set_mesh("nope", b""), Err(ServiceError::UnknownRing(_))));
        store.insert(record("a"), b"png").unwrap();
        assert!(store.insert(record("a"), b"png").is_err());
        assert!(store.remove("a").unwrap());
        assert!(!store.remove("a").unwrap());
        assert!(!dir.path().join("a").exists());
    }
}
