//! The two unpaired training domains: sketches of randomly generated rings
//! (A) and shaded renders of other, independently generated rings (B).
//!
//! Every image is a pure function of the master seed, the spec ranges and
//! its index, so a corpus can be regenerated byte for byte from its
//! manifests.

mod error;
mod generate;
mod load;
mod manifest;
mod ranges;
mod stream;
mod synth;

pub use error::{DatasetError, Result};
pub use generate::{
    derive_seed, generate_dataset, regenerate_entry, ring_seed, scene_seed, synthesize, DatasetConfig, GENERATOR_VERSION,
};
pub use load::{load_image, load_sample, Corpus, ImageSample};
pub use manifest::{DatasetManifest, Domain, Entry};
pub use ranges::{Range, SpecRanges};
pub use stream::{epoch_order, StepIndices, UnpairedStream};
pub use synth::{render_spec, sketch_camera, sketch_ring, sketch_spec};
