use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ringforge_autodiff::checkpoint::Checkpoint;
use ringforge_geometry::Image;
use serde::Deserialize;

use crate::config::{GeneratorConfig, TrainConfig};
use crate::convert::{image_to_tensor, tensor_to_image};
use crate::generator::Generator;
use crate::trainer::{import_params, Trainer, CHECKPOINT_KIND};
use crate::{CycleGanError, Result};

/// Read-only pair of trained generators. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct Translator {
    g_ab: Generator,
    g_ba: Generator,
    image_size: u32,
}

#[derive(Deserialize)]
struct Meta {
    kind: String,
    config: TrainConfig,
}

impl Translator {
    pub fn from_trainer(t: &Trainer) -> Self {
        Translator {
            g_ab: t.model().g_ab.clone(),
            g_ba: t.model().g_ba.clone(),
            image_size: t.config().image_size,
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let meta: Meta = serde_json::from_value(ckpt.metadata.clone())
            .map_err(|e| CycleGanError::CheckpointMismatch(format!("unreadable metadata: {e}")))?;
        if meta.kind != CHECKPOINT_KIND {
            return Err(CycleGanError::CheckpointMismatch(format!("unexpected kind {:?}", meta.kind)));
        }
        Self::with_config(ckpt, meta.config.generator, meta.config.image_size)
    }

    /// Builds generators from `config` and fills them from `ckpt`, failing
    /// with the offending tensor's expected and stored shapes if the
    /// architectures differ.
    pub fn with_config(ckpt: &Checkpoint, config: GeneratorConfig, image_size: u32) -> Result<Self> {
        // Initial values are overwritten by the import.
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut g_ab = Generator::new(config.clone(), &mut rng)?;
        let mut g_ba = Generator::new(config, &mut rng)?;
        import_params(g_ab.params_mut(), "g_ab", ckpt)?;
        import_params(g_ba.params_mut(), "g_ba", ckpt)?;
        Ok(Translator { g_ab, g_ba, image_size })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }

    pub fn image_size(&self) -> u32 {
        self.image_size
    }

    pub fn generator_config(&self) -> &GeneratorConfig {
        self.g_ab.config()
    }

    fn run(&self, g: &Generator, img: &Image) -> Result<Image> {
        let s = self.image_size;
        if (img.width, img.height) != (s, s) {
            return Err(CycleGanError::SizeMismatch {
                expected: (s, s),
                found: (img.width, img.height),
            });
        }
        let out = g.translate(&image_to_tensor(img))?;
        Ok(tensor_to_image(&out, 0)?.quantized())
    }

    /// Sketch to render, quantized to 8 bits per channel.
    pub fn to_render(&self, sketch: &Image) -> Result<Image> {
        self.run(&self.g_ab, sketch)
    }

    /// Render to sketch.
    pub fn to_sketch(&self, render: &Image) -> Result<Image> {
        self.run(&self.g_ba, render)
    }
}
