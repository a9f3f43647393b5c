use serde::{Deserialize, Serialize};

use crate::error::{config, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub in_channels: usize,
    pub out_channels: usize,
    pub base_channels: usize,
    pub n_downsample: usize,
    pub n_res_blocks: usize,
    /// Appends one channel of Gaussian noise to the input during training
    /// (zeros at inference), so one sketch can map to several renders.
    pub noise_channel: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            in_channels: 3,
            out_channels: 3,
            base_channels: 64,
            n_downsample: 2,
            n_res_blocks: 6,
            noise_channel: false,
        }
    }
}

/// Kernel and padding of the first and last generator layers.
pub const END_KERNEL: usize = 7;
pub const END_PADDING: usize = 3;

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.out_channels == 0 {
            return Err(config("in_channels", "channel counts must be positive"));
        }
        if self.base_channels == 0 {
            return Err(config("base_channels", "must be positive"));
        }
        if self.n_res_blocks == 0 {
            return Err(config("n_res_blocks", "at least one residual block is required"));
        }
        if self.n_downsample > 6 {
            return Err(config("n_downsample", "at most 6 downsampling stages are supported"));
        }
        Ok(())
    }

    /// Spatial sizes must be divisible by this.
    pub fn size_multiple(&self) -> usize {
        1 << self.n_downsample
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscriminatorConfig {
    pub in_channels: usize,
    /// Width of the first layer; later layers use 2x, 4x and 8x.
    pub base_channels: usize,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        DiscriminatorConfig {
            in_channels: 3,
            base_channels: 64,
        }
    }
}

impl DiscriminatorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.base_channels == 0 {
            return Err(config("base_channels", "channel counts must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub lambda_cyc: f64,
    pub lambda_ident: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_cyc: 10.0,
            lambda_ident: 0.1,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_cyc >= 0.0 && self.lambda_cyc.is_finite()) {
            return Err(config("lambda_cyc", "must be finite and non-negative"));
        }
        if !(self.lambda_ident >= 0.0 && self.lambda_ident.is_finite()) {
            return Err(config("lambda_ident", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// How discriminator scores are turned into adversarial losses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversarialLoss {
    /// Log-likelihood form on sigmoid scores.
    #[default]
    Bce,
    /// Squared distance of the scores to the targets.
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs_phase1: u32,
    pub epochs_phase2: u32,
    pub lr: f64,
    /// Phase two trains at `lr / lr_divisor`.
    pub lr_divisor: f64,
    pub batch_size: usize,
    pub d_loss_scale: f64,
    /// Zero disables the buffer: discriminators see only the newest fakes.
    pub history_buffer_size: usize,
    pub image_size: u32,
    pub seed: u64,
    pub adversarial_loss: AdversarialLoss,
    pub weights: LossWeights,
    pub generator: GeneratorConfig,
    pub discriminator: DiscriminatorConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs_phase1: 100,
            epochs_phase2: 100,
            lr: 0.0002,
            lr_divisor: 10.0,
            batch_size: 1,
            d_loss_scale: 0.5,
            history_buffer_size: 50,
            image_size: 64,
            seed: 0,
            adversarial_loss: AdversarialLoss::Bce,
            weights: LossWeights::default(),
            generator: GeneratorConfig::default(),
            discriminator: DiscriminatorConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn total_epochs(&self) -> u32 {
        self.epochs_phase1 + self.epochs_phase2
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(config("lr", "must be positive"));
        }
        if !(self.lr_divisor >= 1.0 && self.lr_divisor.is_finite()) {
            return Err(config("lr_divisor", "must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(config("batch_size", "must be positive"));
        }
        if !(self.d_loss_scale > 0.0 && self.d_loss_scale.is_finite()) {
            return Err(config("d_loss_scale", "must be positive"));
        }
        if self.total_epochs() == 0 {
            return Err(config("epochs_phase1", "schedule has no epochs"));
        }
        self.weights.validate()?;
        self.generator.validate()?;
        self.discriminator.validate()?;
        if self.image_size as usize % self.generator.size_multiple() != 0 {
            return Err(config(
                "image_size",
                format!(
                    "{} is not divisible by {}",
                    self.image_size,
                    self.generator.size_multiple()
                ),
            ));
        }
        if crate::discriminator::patch_size(self.image_size as usize).is_none() {
            return Err(config("image_size", format!("{} is too small for the discriminator", self.image_size)));
        }
        Ok(())
    }
}
