use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringforge_cyclegan::Translator;
use serde::Serialize;

use crate::error::{io_err, Result, ServiceError};
use crate::{ServiceConfig, Store};

/// Extensions tried, in order, when resolving a checkpoint name.
const CHECKPOINT_EXTENSIONS: [&str; 2] = ["", ".ckpt"];

/// Monotonic counters exposed on `/metrics`.
#[derive(Debug, Default)]
pub struct Metrics {
    pub rings_created: AtomicU64,
    pub rings_deleted: AtomicU64,
    pub renders: AtomicU64,
    pub mesh_generations: AtomicU64,
    pub mesh_cache_hits: AtomicU64,
}

#[derive(Debug, Serialize)]
pub(crate) struct MetricsSnapshot {
    pub rings: usize,
    pub rings_created: u64,
    pub rings_deleted: u64,
    pub renders: u64,
    pub mesh_generations: u64,
    pub mesh_cache_hits: u64,
    pub checkpoints_loaded: usize,
}

impl Metrics {
    pub(crate) fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Ordering::Relaxed);
    }
}

/// Shared state behind every handler. Loaded checkpoints are immutable and
/// handed out as `Arc`s.
#[derive(Debug)]
pub struct AppState {
    config: ServiceConfig,
    store: Store,
    default_checkpoint: Option<String>,
    translators: RwLock<HashMap<String, Arc<Translator>>>,
    pub(crate) mesh_lock: Mutex<()>,
    seeds: Mutex<ChaCha8Rng>,
    pub metrics: Metrics,
    started: Instant,
}

impl AppState {
    /// Opens the store under `data_dir` and loads the default checkpoint,
    /// failing if it is unreadable.
    pub fn new(config: ServiceConfig) -> Result<AppState> {
        if config.image_size < 8 {
            return Err(ServiceError::Config(format!(
                "image size must be at least 8, got {}",
                config.image_size
            )));
        }
        fs::create_dir_all(&config.data_dir).map_err(io_err(&config.data_dir))?;
        let store = Store::open(config.data_dir.join("rings"))?;
        let mut translators = HashMap::new();
        let mut default_checkpoint = None;
        if let Some(path) = &config.checkpoint {
            let name = checkpoint_name(path);
            let translator = Translator::load(path)?;
            tracing::info!(checkpoint = %name, image_size = translator.image_size(), "loaded checkpoint");
            translators.insert(name.clone(), Arc::new(translator));
            default_checkpoint = Some(name);
        }
        Ok(AppState {
            store,
            default_checkpoint,
            translators: RwLock::new(translators),
            mesh_lock: Mutex::new(()),
            seeds: Mutex::new(match config.seed {
                Some(s) => ChaCha8Rng::seed_from_u64(s),
                None => ChaCha8Rng::from_os_rng(),
            }),
            metrics: Metrics::default(),
            started: Instant::now(),
            config,
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn store(&self) -> &Store {
        &self.store
    }

    pub fn default_checkpoint(&self) -> Option<&str> {
        self.default_checkpoint.as_deref()
    }

    /// Seed for a ring posted without one.
    pub(crate) fn draw_seed(&self) -> u64 {
        self.seeds.lock().unwrap().random()
    }

    pub fn uptime_seconds(&self) -> f64 {
        self.started.elapsed().as_secs_f64()
    }

    pub(crate) fn checkpoints_dir(&self) -> PathBuf {
        self.config.data_dir.join("checkpoints")
    }

    /// The loaded translator for `name`, reading it from the checkpoints
    /// directory on first use. `Ok(None)` when no such file exists.
    pub(crate) fn translator(&self, name: &str) -> Result<Option<Arc<Translator>>> {
        if let Some(t) = self.translators.read().unwrap().get(name) {
            return Ok(Some(t.clone()));
        }
        let dir = self.checkpoints_dir();
        let Some(path) = CHECKPOINT_EXTENSIONS
            .iter()
            .map(|ext| dir.join(format!("{name}{ext}")))
            .find(|p| p.is_file())
        else {
            return Ok(None);
        };
        let loaded = Arc::new(Translator::load(&path)?);
        let mut cache = self.translators.write().unwrap();
        Ok(Some(cache.entry(name.to_string()).or_insert(loaded).clone()))
    }

    pub(crate) fn snapshot(&self) -> MetricsSnapshot {
        let m = &self.metrics;
        let get = |c: &AtomicU64| c.load(Ordering::Relaxed);
        MetricsSnapshot {
            rings: self.store.len(),
            rings_created: get(&m.rings_created),
            rings_deleted: get(&m.rings_deleted),
            renders: get(&m.renders),
            mesh_generations: get(&m.mesh_generations),
            mesh_cache_hits: get(&m.mesh_cache_hits),
            checkpoints_loaded: self.translators.read().unwrap().len(),
        }
    }
}

fn checkpoint_name(path: &Path) -> String {
    path.file_stem()
        .or(path.file_name())
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "default".to_string())
}

/// Checkpoint names are bare file names inside the checkpoints directory.
pub(crate) fn valid_checkpoint_name(name: &str) -> bool {
    !name.is_empty()
        && name != "."
        && name != ".."
        && name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}
