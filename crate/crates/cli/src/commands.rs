use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::parser::ValueSource;
use clap::ArgMatches;
use image::imageops::FilterType;
use ringforge_cyclegan::{AdversarialLoss, CycleGanError, StepMetrics, TrainConfig, Trainer, Translator};
use ringforge_dataset::{generate_dataset, render_spec, Corpus, DatasetConfig, DatasetManifest, Domain, SpecRanges};
use ringforge_geometry::{export_mesh, extrude_ring, generate_ring, Image, MeshFormat};
use ringforge_service::ServiceConfig;

use crate::args::{
    AdversarialArg, Cli, Command, Direction, ExportArgs, FormatArg, GenDatasetArgs, InferArgs, RenderArgs, ServeArgs,
    TrainArgs, TRAIN_CONFIG_FLAGS,
};
use crate::driver::{self, DriverError, DriverOptions};
use crate::invalid;

/// Runs the parsed command. `matches` tells explicitly given flags apart
/// from defaults.
pub fn execute(cli: Cli, matches: &ArgMatches) -> anyhow::Result<()> {
    let sub = matches.subcommand().map(|(_, m)| m);
    match cli.command {
        Command::GenDataset(args) => gen_dataset(args, cli.seed, cli.out),
        Command::Train(args) => train(args, cli.seed, cli.out, sub.expect("train has matches")),
        Command::Infer(args) => infer(args, cli.out),
        Command::RenderClassic(args) => render_classic(args, cli.seed, cli.out),
        Command::Export(args) => export(args, cli.seed, cli.out),
        Command::Serve(args) => serve(args, cli.seed, cli.out),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| invalid(format!("{what} {}: {e}", path.display())))
}

fn gen_dataset(args: GenDatasetArgs, seed: Option<u64>, out: Option<PathBuf>) -> anyhow::Result<()> {
    let ranges = match &args.ranges {
        Some(path) => read_json::<SpecRanges>(path, "spec ranges")?,
        None => SpecRanges::default(),
    };
    let cfg = DatasetConfig {
        n_a: args.n_a,
        n_b: args.n_b,
        image_size: args.size,
        seed: seed.unwrap_or(0),
        ranges,
    };
    cfg.validate().map_err(|e| invalid(e.to_string()))?;
    let out = out.unwrap_or_else(|| PathBuf::from("dataset"));
    tracing::info!(n_a = cfg.n_a, n_b = cfg.n_b, size = cfg.image_size, out = %out.display(), "generating corpus");
    generate_dataset(&cfg, &out)?;
    for domain in [Domain::A, Domain::B] {
        println!("{}", DatasetManifest::path_in(&out, domain).display());
    }
    Ok(())
}

fn explicit(m: &ArgMatches, id: &str) -> bool {
    m.value_source(id) == Some(ValueSource::CommandLine)
}

/// Training config from the optional file, the flags and the corpus size.
pub fn train_config(args: &TrainArgs, seed: Option<u64>, m: &ArgMatches, corpus_size: u32) -> anyhow::Result<TrainConfig> {
    let (mut cfg, from_file) = match &args.config {
        Some(path) => (read_json::<TrainConfig>(path, "training config")?, true),
        None => (TrainConfig::default(), false),
    };
    let take = |id: &str| !from_file || explicit(m, id);
    if take("epochs1") {
        cfg.epochs_phase1 = args.epochs1;
    }
    if take("epochs2") {
        cfg.epochs_phase2 = args.epochs2;
    }
    let lr1 = if take("lr1") { args.lr1 } else { cfg.lr };
    let lr2 = if take("lr2") { args.lr2 } else { cfg.lr / cfg.lr_divisor };
    if !(lr1 > 0.0 && lr2 > 0.0 && lr2 <= lr1) {
        return Err(invalid(format!("need 0 < lr2 <= lr1, got lr1 {lr1} and lr2 {lr2}")));
    }
    cfg.lr = lr1;
    cfg.lr_divisor = lr1 / lr2;
    if take("batch_size") {
        cfg.batch_size = args.batch_size;
    }
    if take("base_channels") {
        cfg.generator.base_channels = args.base_channels;
    }
    if take("res_blocks") {
        cfg.generator.n_res_blocks = args.res_blocks;
    }
    if take("downsample") {
        cfg.generator.n_downsample = args.downsample;
    }
    if take("disc_channels") {
        cfg.discriminator.base_channels = args.disc_channels;
    }
    if take("history_size") {
        cfg.history_buffer_size = args.history_size;
    }
    if take("lambda_cyc") {
        cfg.weights.lambda_cyc = args.lambda_cyc;
    }
    if take("lambda_ident") {
        cfg.weights.lambda_ident = args.lambda_ident;
    }
    if take("adversarial_loss") {
        cfg.adversarial_loss = match args.adversarial_loss {
            AdversarialArg::Bce => AdversarialLoss::Bce,
            AdversarialArg::LeastSquares => AdversarialLoss::LeastSquares,
        };
    }
    if take("noise_channel") {
        cfg.generator.noise_channel = args.noise_channel;
    }
    if let Some(size) = args.size {
        cfg.image_size = size;
    } else if !from_file {
        cfg.image_size = corpus_size;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(cfg)
}

fn train(args: TrainArgs, seed: Option<u64>, out: Option<PathBuf>, m: &ArgMatches) -> anyhow::Result<()> {
    let manifests = [Domain::A, Domain::B].map(|d| DatasetManifest::load(&args.dataset, d));
    let corpus_size = match manifests {
        [Ok(a), Ok(b)] if a.image_size == b.image_size => a.image_size,
        [Ok(a), Ok(b)] => return Err(invalid(format!("domains differ in size: {} vs {}", a.image_size, b.image_size))),
        [Err(e), _] | [_, Err(e)] => return Err(invalid(format!("not a dataset: {e}"))),
    };
    let out_dir = out.unwrap_or_else(|| PathBuf::from("run"));
    let checkpoint = args.out_checkpoint.clone().unwrap_or_else(|| out_dir.join("checkpoint.ckpt"));
    let metrics_log = args.metrics_log.clone().unwrap_or_else(|| {
        checkpoint.parent().map(|d| d.join("metrics.jsonl")).unwrap_or_else(|| "metrics.jsonl".into())
    });

    let mut trainer = match &args.resume {
        Some(path) => {
            if let Some(flag) = TRAIN_CONFIG_FLAGS.iter().find(|id| explicit(m, id)) {
                return Err(invalid(format!(
                    "--{} cannot be combined with --resume; the checkpoint's config is used",
                    flag.replace('_', "-")
                )));
            }
            if args.config.is_some() || seed.is_some() {
                return Err(invalid("--config and --seed cannot be combined with --resume"));
            }
            if !path.is_file() {
                return Err(invalid(format!("no checkpoint at {}", path.display())));
            }
            let trainer = Trainer::load(path).with_context(|| format!("cannot resume from {}", path.display()))?;
            if let Some(size) = args.size.filter(|&s| s != trainer.config().image_size) {
                return Err(invalid(format!(
                    "--size {size} differs from the checkpoint's {}",
                    trainer.config().image_size
                )));
            }
            tracing::info!(epoch = trainer.epoch(), step = trainer.step(), "resuming");
            trainer
        }
        None => Trainer::new(train_config(&args, seed, m, corpus_size)?)?,
    };
    let size = trainer.config().image_size;
    let corpus = Corpus::load(&args.dataset, size).with_context(|| format!("cannot load {}", args.dataset.display()))?;
    let opts = DriverOptions {
        checkpoint: checkpoint.clone(),
        metrics_log: metrics_log.clone(),
        checkpoint_every: args.checkpoint_every,
        max_steps: args.max_steps,
    };
    let log_every = corpus.a.len().min(corpus.b.len()).max(1) as u64;
    let report = |s: &StepMetrics| {
        tracing::debug!(step = s.step, cycle = s.cycle, g = s.g_total, d_a = s.d_a, d_b = s.d_b, "step");
        if s.step % log_every == 0 {
            tracing::info!(epoch = s.epoch, step = s.step, lr = s.lr, cycle = s.cycle, g = s.g_total, "progress");
        }
    };
    match driver::run(&mut trainer, &corpus, &opts, report) {
        Ok(summary) => {
            tracing::info!(steps = summary.steps_run, finished = summary.finished, "training stopped");
            println!("checkpoint: {}", checkpoint.display());
            println!("metrics: {}", metrics_log.display());
            Ok(())
        }
        Err(DriverError::Model(e @ CycleGanError::NonFinite { .. })) => {
            let kept = if checkpoint.is_file() {
                format!("last good checkpoint kept at {}", checkpoint.display())
            } else {
                "no checkpoint was written".to_string()
            };
            bail!("{e}; {kept}")
        }
        Err(e) => Err(e.into()),
    }
}

fn infer(args: InferArgs, out: Option<PathBuf>) -> anyhow::Result<()> {
    let out = out.ok_or_else(|| invalid("infer needs --out"))?;
    for (path, what) in [(&args.checkpoint, "checkpoint"), (&args.input, "input image")] {
        if !path.is_file() {
            return Err(invalid(format!("no {what} at {}", path.display())));
        }
    }
    let translator = Translator::load(&args.checkpoint)
        .with_context(|| format!("cannot load checkpoint {}", args.checkpoint.display()))?;
    let size = translator.image_size();
    let mut rgb = image::open(&args.input)
        .with_context(|| format!("cannot decode {}", args.input.display()))?
        .to_rgb8();
    if rgb.dimensions() != (size, size) {
        rgb = image::imageops::resize(&rgb, size, size, FilterType::Triangle);
    }
    let input = Image::from_rgb_image(&rgb);
    let result = match args.direction {
        Direction::SketchToRender => translator.to_render(&input)?,
        Direction::RenderToSketch => translator.to_sketch(&input)?,
    };
    result.save_png(&out).with_context(|| format!("cannot write {}", out.display()))?;
    println!("{}", out.display());
    Ok(())
}

fn render_classic(args: RenderArgs, seed: Option<u64>, out: Option<PathBuf>) -> anyhow::Result<()> {
    let spec = args.spec.resolve(seed)?;
    if !(16..=4096).contains(&args.size) {
        return Err(invalid(format!("--size {} is outside [16, 4096]", args.size)));
    }
    let out = out.unwrap_or_else(|| PathBuf::from("render.png"));
    let (_, image) = render_spec(&spec, args.scene_seed.unwrap_or(spec.seed), args.size)?;
    image.save_png(&out).with_context(|| format!("cannot write {}", out.display()))?;
    println!("{}", out.display());
    Ok(())
}

fn export(args: ExportArgs, seed: Option<u64>, out: Option<PathBuf>) -> anyhow::Result<()> {
    let spec = args.spec.resolve(seed)?;
    if args.samples_u < 3 || args.samples_v < 3 {
        return Err(invalid("--samples-u and --samples-v must be at least 3"));
    }
    let (format, ext) = match args.format {
        FormatArg::Stl => (MeshFormat::StlBinary, "stl"),
        FormatArg::Obj => (MeshFormat::Obj, "obj"),
    };
    let out = out.unwrap_or_else(|| PathBuf::from(format!("ring.{ext}")));
    let extrusion = extrude_ring(&generate_ring(&spec)?, args.samples_u, args.samples_v)?;
    if extrusion.self_intersecting {
        tracing::warn!("tube cross-sections overlap; the mesh self-intersects");
    }
    let bytes = export_mesh(&extrusion.mesh, format)?;
    std::fs::write(&out, bytes).with_context(|| format!("cannot write {}", out.display()))?;
    println!("{}", out.display());
    Ok(())
}

fn serve(args: ServeArgs, seed: Option<u64>, out: Option<PathBuf>) -> anyhow::Result<()> {
    if args.image_size < 32 {
        return Err(invalid(format!("--image-size {} is below 32", args.image_size)));
    }
    if let Some(path) = args.checkpoint.as_ref().filter(|p| !p.is_file()) {
        return Err(invalid(format!("no checkpoint at {}", path.display())));
    }
    let config = ServiceConfig {
        data_dir: args.data_dir.or(out).unwrap_or_else(|| PathBuf::from("ringforge-data")),
        checkpoint: args.checkpoint,
        host: args.host,
        port: args.port,
        image_size: args.image_size,
        cors_origin: args.cors_origin,
        seed,
    };
    let runtime = tokio::runtime::Runtime::new().context("cannot start the async runtime")?;
    runtime.block_on(ringforge_service::serve(config))?;
    Ok(())
}
