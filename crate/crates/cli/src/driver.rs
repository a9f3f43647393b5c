//! The epoch loop around [`Trainer`]: feeds shuffled unpaired batches,
//! appends one JSON line per step to the metrics log and saves checkpoints.

use std::fs::{self, OpenOptions};
use std::io::{LineWriter, Write};
use std::path::{Path, PathBuf};

use ringforge_cyclegan::{CycleGanError, StepMetrics, Trainer};
use ringforge_dataset::{Corpus, DatasetError, Domain, UnpairedStream};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Model(#[from] CycleGanError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Incompatible(String),
}

#[derive(Debug, Clone)]
pub struct DriverOptions {
    pub checkpoint: PathBuf,
    pub metrics_log: PathBuf,
    /// Extra checkpoint every this many steps; zero saves at epoch ends only.
    pub checkpoint_every: u64,
    /// Stop (after saving) once this many steps ran in this call.
    pub max_steps: Option<u64>,
}

#[derive(Debug, Clone, Default)]
pub struct DriverSummary {
    pub steps_run: u64,
    pub last: Option<StepMetrics>,
    pub finished: bool,
}

/// Trains until the schedule ends or `max_steps` is hit. A trainer loaded
/// from a checkpoint continues mid-epoch exactly where it stopped, with the
/// same batch order. A non-finite loss aborts without saving, leaving the
/// last checkpoint on disk untouched.
pub fn run(
    trainer: &mut Trainer,
    corpus: &Corpus,
    opts: &DriverOptions,
    mut on_step: impl FnMut(&StepMetrics),
) -> Result<DriverSummary, DriverError> {
    let cfg = trainer.config().clone();
    if corpus.image_size != cfg.image_size {
        return Err(DriverError::Incompatible(format!(
            "corpus is loaded at {} px but the model trains at {} px",
            corpus.image_size, cfg.image_size
        )));
    }
    let (len_a, len_b) = (corpus.a.len(), corpus.b.len());
    let steps_per_epoch = len_a.min(len_b).div_ceil(cfg.batch_size) as u64;
    for path in [&opts.checkpoint, &opts.metrics_log] {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(io(dir))?;
        }
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&opts.metrics_log)
        .map_err(io(&opts.metrics_log))?;
    let mut log = LineWriter::new(file);

    let mut summary = DriverSummary::default();
    while !trainer.is_finished() {
        let epoch = trainer.epoch();
        let done = trainer
            .step()
            .checked_sub(epoch as u64 * steps_per_epoch)
            .filter(|&d| d <= steps_per_epoch)
            .ok_or_else(|| {
                DriverError::Incompatible(format!(
                    "trainer at step {} of epoch {epoch} does not fit a corpus with {steps_per_epoch} steps per epoch",
                    trainer.step()
                ))
            })?;
        let stream = UnpairedStream::new(len_a, len_b, cfg.seed, epoch..epoch + 1, cfg.batch_size)?;
        for indices in stream.skip(done as usize) {
            if opts.max_steps.is_some_and(|m| summary.steps_run >= m) {
                trainer.save(&opts.checkpoint)?;
                return Ok(summary);
            }
            let x = corpus.batch(Domain::A, &indices.a);
            let y = corpus.batch(Domain::B, &indices.b);
            let metrics = trainer.train_step(&x, &y)?;
            let line = serde_json::to_string(&metrics).expect("metrics always serialize");
            writeln!(log, "{line}").map_err(io(&opts.metrics_log))?;
            summary.steps_run += 1;
            on_step(&metrics);
            summary.last = Some(metrics);
            if opts.checkpoint_every > 0 && trainer.step() % opts.checkpoint_every == 0 {
                trainer.save(&opts.checkpoint)?;
            }
        }
        trainer.advance_epoch();
        trainer.save(&opts.checkpoint)?;
    }
    summary.finished = true;
    Ok(summary)
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> DriverError + '_ {
    move |source| DriverError::Io {
        path: path.to_path_buf(),
        source,
    }
}
