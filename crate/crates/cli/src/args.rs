use std::net::IpAddr;
use std::path::PathBuf;

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use ringforge_render::TUBE_SAMPLES;

use crate::spec::SpecArgs;

#[derive(Debug, Parser)]
#[command(name = "ringforge", version, about = "Generate rings, train sketch-to-render translation and serve the results")]
pub struct Cli {
    /// Seed for every random choice the command makes
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file or directory (meaning depends on the command)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// More log output; repeat for more detail
    #[arg(short, long, global = true, action = ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the unpaired sketch (trainA) and render (trainB) corpora
    GenDataset(GenDatasetArgs),
    /// Train the translation model on a generated corpus
    Train(TrainArgs),
    /// Translate one image with a trained checkpoint
    Infer(InferArgs),
    /// Render a ring with the shaded software renderer
    RenderClassic(RenderArgs),
    /// Write a ring's tube mesh as STL or OBJ
    Export(ExportArgs),
    /// Serve the HTTP API
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct GenDatasetArgs {
    /// Number of sketches (domain A)
    #[arg(long, default_value_t = 179)]
    pub n_a: usize,
    /// Number of renders (domain B)
    #[arg(long, default_value_t = 176)]
    pub n_b: usize,
    /// Side of the square images in pixels
    #[arg(long, default_value_t = 64)]
    pub size: u32,
    /// JSON file with the spec ranges rings are drawn from
    #[arg(long, value_name = "FILE")]
    pub ranges: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AdversarialArg {
    Bce,
    LeastSquares,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus directory written by gen-dataset
    #[arg(long, value_name = "DIR")]
    pub dataset: PathBuf,
    /// Training resolution; defaults to the corpus resolution
    #[arg(long)]
    pub size: Option<u32>,
    /// Epochs at the base learning rate
    #[arg(long, default_value_t = 100)]
    pub epochs1: u32,
    /// Epochs at the reduced learning rate
    #[arg(long, default_value_t = 100)]
    pub epochs2: u32,
    /// Learning rate of the first phase
    #[arg(long, default_value_t = 0.0002)]
    pub lr1: f64,
    /// Learning rate of the second phase
    #[arg(long, default_value_t = 0.00002)]
    pub lr2: f64,
    /// Image pairs per step
    #[arg(long, default_value_t = 1)]
    pub batch_size: usize,
    /// Width of the first generator layer
    #[arg(long, default_value_t = 64)]
    pub base_channels: usize,
    /// Residual blocks in each generator
    #[arg(long, default_value_t = 6)]
    pub res_blocks: usize,
    /// Stride-2 down (and up) sampling stages in each generator
    #[arg(long, default_value_t = 2)]
    pub downsample: usize,
    /// Width of the first discriminator layer
    #[arg(long, default_value_t = 64)]
    pub disc_channels: usize,
    /// Past fakes kept per discriminator; 0 disables the pool
    #[arg(long, default_value_t = 50)]
    pub history_size: usize,
    /// Weight of the cycle-consistency loss
    #[arg(long, default_value_t = 10.0)]
    pub lambda_cyc: f64,
    /// Weight of the identity loss
    #[arg(long, default_value_t = 0.1)]
    pub lambda_ident: f64,
    /// Adversarial objective of both discriminators
    #[arg(long, value_enum, default_value_t = AdversarialArg::Bce)]
    pub adversarial_loss: AdversarialArg,
    /// Feed generators an extra channel of Gaussian noise
    #[arg(long)]
    pub noise_channel: bool,
    /// JSON training config; flags given explicitly override it
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Checkpoint written at every epoch end [default: <out>/checkpoint.ckpt]
    #[arg(long, value_name = "FILE")]
    pub out_checkpoint: Option<PathBuf>,
    /// Newline-delimited JSON step log [default: metrics.jsonl beside the checkpoint]
    #[arg(long, value_name = "FILE")]
    pub metrics_log: Option<PathBuf>,
    /// Continue from this checkpoint with its stored config
    #[arg(long, value_name = "FILE")]
    pub resume: Option<PathBuf>,
    /// Also checkpoint every N steps; 0 checkpoints at epoch ends only
    #[arg(long, default_value_t = 0)]
    pub checkpoint_every: u64,
    /// Stop after this many steps (the checkpoint allows resuming)
    #[arg(long)]
    pub max_steps: Option<u64>,
}

/// Flags of `train` that shape the model or schedule, by argument id.
pub const TRAIN_CONFIG_FLAGS: [&str; 14] = [
    "epochs1",
    "epochs2",
    "lr1",
    "lr2",
    "batch_size",
    "base_channels",
    "res_blocks",
    "downsample",
    "disc_channels",
    "history_size",
    "lambda_cyc",
    "lambda_ident",
    "adversarial_loss",
    "noise_channel",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Direction {
    SketchToRender,
    RenderToSketch,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Trained checkpoint
    #[arg(long, value_name = "FILE")]
    pub checkpoint: PathBuf,
    /// Input image; resized to the checkpoint resolution if needed
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Which generator to run
    #[arg(long, value_enum, default_value_t = Direction::SketchToRender)]
    pub direction: Direction,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Side of the square image in pixels
    #[arg(long, default_value_t = 400)]
    pub size: u32,
    /// Seed of the randomized camera, light and material [default: the ring seed]
    #[arg(long)]
    pub scene_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Stl,
    Obj,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Mesh file format
    #[arg(long, value_enum, default_value_t = FormatArg::Stl)]
    pub format: FormatArg,
    /// Cross-sections along each strand
    #[arg(long, default_value_t = TUBE_SAMPLES.0)]
    pub samples_u: usize,
    /// Vertices around each cross-section
    #[arg(long, default_value_t = TUBE_SAMPLES.1)]
    pub samples_v: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Directory holding ring records and named checkpoints [default: --out, else ringforge-data]
    #[arg(long, env = "RINGFORGE_DATA_DIR", value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    /// Checkpoint used when a render request names none
    #[arg(long, env = "RINGFORGE_CHECKPOINT", value_name = "FILE")]
    pub checkpoint: Option<PathBuf>,
    /// Address to listen on
    #[arg(long, env = "RINGFORGE_HOST", default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Port to listen on
    #[arg(long, env = "RINGFORGE_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Sketch resolution; must match the checkpoint
    #[arg(long, env = "RINGFORGE_IMAGE_SIZE", default_value_t = 64)]
    pub image_size: u32,
    /// Browser origin allowed by CORS [default: any]
    #[arg(long, env = "RINGFORGE_CORS_ORIGIN")]
    pub cors_origin: Option<String>,
}
