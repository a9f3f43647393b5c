//! Cycle-consistent adversarial translation between line sketches
//! (domain A) and shaded renders (domain B) of rings.
//!
//! Two generators map A to B and back, two patch discriminators judge each
//! domain, and training alternates a generator update on the combined
//! adversarial, cycle and identity objective with discriminator updates on
//! pooled fakes.

pub mod config;
mod convert;
pub mod discriminator;
mod error;
mod generator;
mod history;
mod infer;
mod layers;
pub mod losses;
mod trainer;

pub use config::{AdversarialLoss, DiscriminatorConfig, GeneratorConfig, LossWeights, TrainConfig};
pub use convert::{image_to_tensor, tensor_to_image};
pub use discriminator::{patch_size, Discriminator};
pub use error::{CycleGanError, Result};
pub use generator::Generator;
pub use history::{HistoryBuffer, SamplerState};
pub use infer::Translator;
pub use layers::Binding;
pub use trainer::{lr_schedule, CycleGan, StepMetrics, Trainer};
