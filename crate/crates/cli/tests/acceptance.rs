//! End-to-end acceptance checks, one line of output per criterion.
//! Runs without the libtest harness so the lines always reach stdout.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ringforge_autodiff::gradcheck::{check_all_ops, covered_ops};
use ringforge_autodiff::kernels::ConvGeometry;
use ringforge_autodiff::{Graph, Tensor, Var};
use ringforge_cli::driver::{self, DriverOptions};
use ringforge_cyclegan::config::{END_KERNEL, END_PADDING};
use ringforge_cyclegan::losses::{
    cycle_loss, discriminator_loss, generator_adversarial, identity_loss, total_generator_loss,
};
use ringforge_cyclegan::{
    lr_schedule, patch_size, AdversarialLoss, Discriminator, DiscriminatorConfig, Generator, GeneratorConfig,
    LossWeights, StepMetrics, TrainConfig, Trainer, Translator,
};
use ringforge_dataset::{generate_dataset, regenerate_entry, Corpus, DatasetConfig};
use ringforge_geometry::{
    build_frames, export_mesh, extrude_ring, extrude_tube, generate_ring, parse_stl, wrap_mismatch, Image, MeshFormat,
    RingSpec, Spline, Vec3,
};
use ringforge_render::TUBE_SAMPLES;
use ringforge_service::{router, AppState, ServiceConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn workdir() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| tempfile::tempdir().expect("temporary directory")).path()
}

fn main() -> ExitCode {
    let criteria: [(u8, &str, fn() -> Outcome); 9] = [
        (1, "gradient check of every differentiable op", gradient_check),
        (2, "loss formulas against scalar oracles", loss_oracles),
        (3, "learning-rate schedule and halved discriminator loss", schedule),
        (4, "architecture arithmetic", architecture),
        (5, "overfit smoke training", smoke_training),
        (6, "geometry suite", geometry),
        (7, "dataset reproducibility", dataset),
        (8, "service round trip", service),
        (9, "checkpoint round trip", checkpoint),
    ];
    let mut failed = 0;
    for (n, name, check) in criteria {
        let start = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(o) => o,
            Err(panic) => Err(panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] {n}. {name}: {detail} ({secs:.1} s)"),
            Err(why) => {
                failed += 1;
                println!("[FAIL] {n}. {name}: {why} ({secs:.1} s)");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn gradient_check() -> Outcome {
    const TRIALS: usize = 20;
    let start = Instant::now();
    let reports = check_all_ops(TRIALS, 2024).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(reports.len() == covered_ops().len(), || "not every op was checked".into())?;
    let worst = reports
        .iter()
        .max_by(|a, b| a.max_rel_error.total_cmp(&b.max_rel_error))
        .expect("at least one op");
    for r in &reports {
        ensure(r.trials >= TRIALS, || format!("{} ran only {} trials", r.op, r.trials))?;
        ensure(r.max_rel_error < 1e-3, || format!("{} max relative error {:.2e}", r.op, r.max_rel_error))?;
    }
    ensure(elapsed < Duration::from_secs(120), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} ops x {TRIALS} trials, worst {} at {:.2e}",
        reports.len(),
        worst.op,
        worst.max_rel_error
    ))
}

const LOSS_SHAPE: [usize; 4] = [2, 3, 8, 8];

fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Tensor<f64> {
    Tensor::from_fn(LOSS_SHAPE.to_vec(), |_| rng.random_range(lo..hi))
}

fn oracle_l1(a: &Tensor<f64>, b: &Tensor<f64>) -> f64 {
    let mut s = 0.0;
    for i in 0..a.numel() {
        s += (a.data()[i] - b.data()[i]).abs();
    }
    s / a.numel() as f64
}

fn oracle_bce(p: &Tensor<f64>, target: f64) -> f64 {
    let mut s = 0.0;
    for &v in p.data() {
        s -= target * v.ln() + (1.0 - target) * (1.0 - v).ln();
    }
    s / p.numel() as f64
}

fn oracle_mse(p: &Tensor<f64>, target: f64) -> f64 {
    p.data().iter().map(|v| (v - target) * (v - target)).sum::<f64>() / p.numel() as f64
}

fn scalar(g: &Graph<f64>, v: Var) -> f64 {
    g.value(v).item()
}

fn loss_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let [x, x_rec, y, y_rec, g_ba_x, g_ab_y] = std::array::from_fn(|_| uniform(&mut rng, -1.0, 1.0));
    let d_real = uniform(&mut rng, 0.02, 0.98);
    let d_fake = uniform(&mut rng, 0.02, 0.98);
    let d_fake_ba = uniform(&mut rng, 0.02, 0.98);

    let mut g = Graph::<f64>::new();
    let c = |g: &mut Graph<f64>, t: &Tensor<f64>| g.constant(t.clone());
    let (vx, vxr, vy, vyr, vbx, vay) = (c(&mut g, &x), c(&mut g, &x_rec), c(&mut g, &y), c(&mut g, &y_rec), c(&mut g, &g_ba_x), c(&mut g, &g_ab_y));
    let (vr, vf, vf2) = (c(&mut g, &d_real), c(&mut g, &d_fake), c(&mut g, &d_fake_ba));
    let err = |e: ringforge_cyclegan::CycleGanError| e.to_string();

    let cyc = cycle_loss(&mut g, vx, vxr, vy, vyr).map_err(err)?;
    let ident = identity_loss(&mut g, vx, vbx, vy, vay).map_err(err)?;
    let gan_ab = generator_adversarial(&mut g, AdversarialLoss::Bce, vf).map_err(err)?;
    let gan_ba = generator_adversarial(&mut g, AdversarialLoss::Bce, vf2).map_err(err)?;
    let d_bce = discriminator_loss(&mut g, AdversarialLoss::Bce, vr, vf, 1.0).map_err(err)?;
    let d_ls = discriminator_loss(&mut g, AdversarialLoss::LeastSquares, vr, vf, 1.0).map_err(err)?;
    let weights = LossWeights::default();
    ensure(weights.lambda_cyc == 10.0 && weights.lambda_ident == 0.1, || format!("default weights {weights:?}"))?;
    let total = total_generator_loss(&mut g, gan_ab, gan_ba, cyc, ident, &weights).map_err(err)?;

    let want_cyc = oracle_l1(&x_rec, &x) + oracle_l1(&y_rec, &y);
    let want_ident = oracle_l1(&g_ab_y, &y) + oracle_l1(&g_ba_x, &x);
    let want_gan_ab = oracle_bce(&d_fake, 1.0);
    let want_gan_ba = oracle_bce(&d_fake_ba, 1.0);
    let want_d_bce = oracle_bce(&d_real, 1.0) + oracle_bce(&d_fake, 0.0);
    let want_d_ls = oracle_mse(&d_real, 1.0) + oracle_mse(&d_fake, 0.0);
    let want_total = want_gan_ab + want_gan_ba + 10.0 * want_cyc + 0.1 * want_ident;

    let checks = [
        ("cycle", scalar(&g, cyc), want_cyc),
        ("identity", scalar(&g, ident), want_ident),
        ("adversarial G", scalar(&g, gan_ab), want_gan_ab),
        ("adversarial D (bce)", scalar(&g, d_bce), want_d_bce),
        ("adversarial D (least squares)", scalar(&g, d_ls), want_d_ls),
        ("total", scalar(&g, total), want_total),
    ];
    let mut worst: f64 = 0.0;
    for (name, got, want) in checks {
        let diff = (got - want).abs();
        worst = worst.max(diff);
        ensure(diff < 1e-6, || format!("{name}: {got} vs oracle {want}"))?;
    }
    Ok(format!("{} losses on 2x3x8x8, max abs deviation {worst:.1e}", checks.len()))
}

fn schedule() -> Outcome {
    let cfg = TrainConfig::default();
    for epoch in 0..100 {
        let lr = lr_schedule(epoch, &cfg).map_err(|e| e.to_string())?;
        ensure(lr == 0.0002, || format!("epoch {epoch}: lr {lr}"))?;
    }
    for epoch in 100..200 {
        let lr = lr_schedule(epoch, &cfg).map_err(|e| e.to_string())?;
        ensure(lr == 0.00002, || format!("epoch {epoch}: lr {lr}"))?;
    }
    ensure(lr_schedule(200, &cfg).is_err(), || "epoch 200 is past the schedule".into())?;

    ensure(cfg.d_loss_scale == 0.5, || format!("d_loss_scale {}", cfg.d_loss_scale))?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let real = uniform(&mut rng, 0.05, 0.95);
    let fake = uniform(&mut rng, 0.05, 0.95);
    let mut g = Graph::<f64>::new();
    let (r, f) = (g.constant(real.clone()), g.constant(fake.clone()));
    let d = discriminator_loss(&mut g, AdversarialLoss::Bce, r, f, cfg.d_loss_scale).map_err(|e| e.to_string())?;
    let unscaled = oracle_bce(&real, 1.0) + oracle_bce(&fake, 0.0);
    let got = scalar(&g, d);
    ensure((got - 0.5 * unscaled).abs() < 1e-12, || format!("D loss {got}, half of oracle {}", 0.5 * unscaled))?;
    Ok(format!("0.0002 for epochs 0-99, 0.00002 for 100-199; D loss {got:.6} = 0.5 x {unscaled:.6}"))
}

fn architecture() -> Outcome {
    ensure(END_KERNEL == 7 && END_PADDING == 3, || format!("end layers k{END_KERNEL} p{END_PADDING}"))?;
    ensure(ConvGeometry::output_extent(64, END_KERNEL, 1, END_PADDING) == Some(64), || "k7 p3 changes size".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let gen_cfg = GeneratorConfig {
        base_channels: 8,
        n_res_blocks: 2,
        ..GeneratorConfig::default()
    };
    let gen = Generator::<f32>::new(gen_cfg.clone(), &mut rng).map_err(|e| e.to_string())?;
    let stem = gen.params().get(0).shape().to_vec();
    ensure(stem == [8, 3, 7, 7], || format!("first generator weight {stem:?}"))?;
    for size in [32usize, 64] {
        let x = Tensor::<f32>::zeros([1, 3, size, size]);
        let y = gen.translate(&x).map_err(|e| e.to_string())?;
        ensure(y.shape() == [1, 3, size, size], || format!("generator maps {size} to {:?}", y.shape()))?;
    }

    ensure(patch_size(256) == Some(30), || format!("patch_size(256) = {:?}", patch_size(256)))?;
    ensure(patch_size(64) == Some(6), || format!("patch_size(64) = {:?}", patch_size(64)))?;
    let disc = Discriminator::<f32>::new(
        DiscriminatorConfig {
            base_channels: 4,
            ..DiscriminatorConfig::default()
        },
        &mut rng,
    )
    .map_err(|e| e.to_string())?;
    for (size, p) in [(256usize, 30usize), (64, 6)] {
        let s = disc.score(&Tensor::zeros([1, 3, size, size])).map_err(|e| e.to_string())?;
        ensure(s.shape() == [1, 1, p, p], || format!("discriminator maps {size} px to {:?}", s.shape()))?;
    }
    Ok("generator keeps 32 and 64 px with k7/p3 end layers; patch maps 30x30 at 256 px, 6x6 at 64 px".into())
}

struct Smoke {
    corpus_dir: PathBuf,
    checkpoint: PathBuf,
    trainer: Trainer,
    metrics: Vec<StepMetrics>,
    elapsed: Duration,
}

const SMOKE_SIZE: u32 = 32;
const SMOKE_STEPS: u64 = 300;

/// Desk-scale widths; the architecture and all training hyperparameters
/// are otherwise the defaults.
fn smoke_config() -> TrainConfig {
    TrainConfig {
        image_size: SMOKE_SIZE,
        generator: GeneratorConfig {
            base_channels: 16,
            ..GeneratorConfig::default()
        },
        discriminator: DiscriminatorConfig {
            base_channels: 16,
            ..DiscriminatorConfig::default()
        },
        ..TrainConfig::default()
    }
}

fn smoke() -> &'static Smoke {
    static SMOKE: OnceLock<Smoke> = OnceLock::new();
    SMOKE.get_or_init(|| {
        let root = workdir().join("smoke");
        let corpus_dir = root.join("dataset");
        let cfg = DatasetConfig {
            n_a: 8,
            n_b: 8,
            image_size: SMOKE_SIZE,
            seed: 5,
            ..DatasetConfig::default()
        };
        generate_dataset(&cfg, &corpus_dir).expect("smoke corpus");
        let corpus = Corpus::load(&corpus_dir, SMOKE_SIZE).expect("smoke corpus loads");
        let opts = DriverOptions {
            checkpoint: root.join("smoke.ckpt"),
            metrics_log: root.join("metrics.jsonl"),
            checkpoint_every: 0,
            max_steps: Some(SMOKE_STEPS),
        };
        let mut trainer = Trainer::new(smoke_config()).expect("smoke config is valid");
        let mut metrics = Vec::new();
        let start = Instant::now();
        driver::run(&mut trainer, &corpus, &opts, |m| metrics.push(m.clone())).expect("smoke training runs");
        Smoke {
            corpus_dir,
            checkpoint: opts.checkpoint,
            trainer,
            metrics,
            elapsed: start.elapsed(),
        }
    })
}

fn smoke_training() -> Outcome {
    let s = smoke();
    ensure(s.metrics.len() as u64 == SMOKE_STEPS, || format!("ran {} steps", s.metrics.len()))?;
    for m in &s.metrics {
        let all = [m.gan_ab, m.gan_ba, m.cycle, m.identity, m.g_total, m.d_a, m.d_b];
        ensure(all.iter().all(|v| v.is_finite()), || format!("non-finite loss at step {}", m.step))?;
    }
    let first = s.metrics[0].cycle;
    let tail = &s.metrics[s.metrics.len() - 20..];
    let last = tail.iter().map(|m| m.cycle).sum::<f64>() / tail.len() as f64;
    ensure(last < 0.5 * first, || format!("cycle loss {first:.4} at step 1, mean of last 20 steps {last:.4}"))?;
    ensure(s.elapsed < Duration::from_secs(600), || format!("took {:?}", s.elapsed))?;
    Ok(format!(
        "8+8 images at 32 px, {SMOKE_STEPS} steps: cycle {first:.3} -> {last:.3} ({:.0}%), all losses finite, {:.0} s",
        100.0 * last / first,
        s.elapsed.as_secs_f64()
    ))
}

fn random_spec(rng: &mut ChaCha8Rng) -> RingSpec {
    let ring_radius = rng.random_range(0.5..2.0);
    RingSpec {
        n_strands: rng.random_range(1..=5),
        ring_radius,
        tube_radius: ring_radius * rng.random_range(0.02..0.1),
        height_amplitude: ring_radius * rng.random_range(0.0..0.4),
        radial_amplitude: ring_radius * rng.random_range(0.0..0.3),
        n_control_points: rng.random_range(4..=12),
        seed: rng.random(),
    }
}

fn geometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst_wrap: f64 = 0.0;
    let mut worst_turn: f64 = 0.0;
    for k in 0..100 {
        let spec = random_spec(&mut rng);
        let ring = generate_ring(&spec).map_err(|e| format!("spec {k}: {e}"))?;
        let mesh = extrude_ring(&ring, TUBE_SAMPLES.0, TUBE_SAMPLES.1).map_err(|e| e.to_string())?.mesh;
        ensure(mesh.is_watertight(), || format!("spec {k} ({spec:?}) is not watertight"))?;
        for strand in &ring.strands {
            let delta = 1e-13;
            let p0 = strand.eval(0.0).map_err(|e| e.to_string())?;
            let p1 = strand.eval(1.0 - delta).map_err(|e| e.to_string())?;
            let d0 = strand.derivative(0.0).map_err(|e| e.to_string())?;
            let d1 = strand.derivative(1.0 - delta).map_err(|e| e.to_string())?;
            let frames = build_frames(strand, TUBE_SAMPLES.0).map_err(|e| e.to_string())?;
            let turn = d0.normalize().dot(d1.normalize()).clamp(-1.0, 1.0).acos();
            worst_wrap = worst_wrap.max((p1 - p0).norm());
            worst_turn = worst_turn.max(turn);
            let frame_gap = wrap_mismatch(&frames);
            let frame_bound = std::f64::consts::TAU / TUBE_SAMPLES.0 as f64 + 1e-6;
            ensure(frame_gap < frame_bound, || format!("spec {k}: frame wrap angle {frame_gap:.2e}"))?;
        }
        let stl = export_mesh(&mesh, MeshFormat::StlBinary).map_err(|e| e.to_string())?;
        let again = export_mesh(&parse_stl(&stl).map_err(|e| e.to_string())?, MeshFormat::StlBinary).map_err(|e| e.to_string())?;
        ensure(stl == again, || format!("spec {k}: STL round trip changed the bytes"))?;
    }
    ensure(worst_wrap < 1e-9, || format!("wrap position gap {worst_wrap:.2e}"))?;
    ensure(worst_turn < 1e-6, || format!("wrap tangent turn {worst_turn:.2e} rad"))?;

    let (big_r, small_r) = (1.0, 0.25);
    let circle = Spline::closed(
        (0..256)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 256.0;
                Vec3::new(big_r * a.cos(), big_r * a.sin(), 0.0)
            })
            .collect(),
    )
    .map_err(|e| e.to_string())?;
    let torus = extrude_tube(&circle, small_r, 512, 64).map_err(|e| e.to_string())?.mesh;
    let exact = 4.0 * std::f64::consts::PI.powi(2) * big_r * small_r;
    let rel = (torus.surface_area() - exact).abs() / exact;
    ensure(rel < 0.01, || format!("torus area off by {:.3}%", 100.0 * rel))?;
    Ok(format!(
        "100 random specs watertight with byte-stable STL, wrap gap {worst_wrap:.1e} (tangent {worst_turn:.1e} rad), torus area within {:.3}%",
        100.0 * rel
    ))
}

fn dataset() -> Outcome {
    let root = workdir().join("regen");
    let cfg = DatasetConfig {
        n_a: 6,
        n_b: 6,
        image_size: 64,
        seed: 11,
        ..DatasetConfig::default()
    };
    let (ma, mb) = generate_dataset(&cfg, &root).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for m in [&ma, &mb] {
        for (i, entry) in m.entries.iter().enumerate() {
            let path = root.join(&entry.file);
            let stored = std::fs::read(&path).map_err(|e| e.to_string())?;
            std::fs::remove_file(&path).map_err(|e| e.to_string())?;
            let png = regenerate_entry(m, i).and_then(|img| Ok(img.encode_png()?)).map_err(|e| e.to_string())?;
            ensure(png == stored, || format!("{} regenerated differently", entry.file))?;
            checked += 1;
        }
    }

    let full = workdir().join("full-size");
    let start = Instant::now();
    let cfg = DatasetConfig {
        image_size: 400,
        ..DatasetConfig::default()
    };
    let (pa, pb) = generate_dataset(&cfg, &full).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    ensure((pa.len(), pb.len()) == (179, 176), || format!("corpus shape {}/{}", pa.len(), pb.len()))?;
    pa.verify_files(&full).and(pb.verify_files(&full)).map_err(|e| e.to_string())?;
    let sample = Image::load(full.join(&pb.entries[175].file)).map_err(|e| e.to_string())?;
    ensure((sample.width, sample.height) == (400, 400), || format!("render is {}x{}", sample.width, sample.height))?;
    let _ = std::fs::remove_dir_all(&full);
    Ok(format!(
        "{checked} deleted images regenerated byte-identical; 179/176 corpus at 400 px in {elapsed:.0} s"
    ))
}

struct Reply {
    status: StatusCode,
    body: Vec<u8>,
}

impl Reply {
    fn json(&self) -> Value {
        serde_json::from_slice(&self.body).unwrap_or(Value::Null)
    }
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> Reply {
    let body = body.map(|v| Body::from(v.to_string())).unwrap_or_else(Body::empty);
    let req = Request::builder().method(method).uri(uri).body(body).unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = to_bytes(resp.into_body(), usize::MAX).await.unwrap().to_vec();
    Reply { status, body }
}

fn expect(r: &Reply, status: StatusCode, what: &str) -> Result<(), String> {
    ensure(r.status == status, || {
        format!("{what}: {} ({})", r.status, String::from_utf8_lossy(&r.body))
    })
}

fn service() -> Outcome {
    let smoke = smoke();
    let data_dir = workdir().join("service");
    let config = ServiceConfig {
        checkpoint: Some(smoke.checkpoint.clone()),
        image_size: SMOKE_SIZE,
        ..ServiceConfig::new(&data_dir)
    };
    let start = || -> Result<Router, String> {
        Ok(router(Arc::new(AppState::new(config.clone()).map_err(|e| e.to_string())?)))
    };
    let runtime = tokio::runtime::Builder::new_current_thread().build().map_err(|e| e.to_string())?;
    runtime.block_on(async {
        let app = start()?;
        let created = call(&app, Method::POST, "/rings", Some(json!({ "n_strands": 3 }))).await;
        expect(&created, StatusCode::CREATED, "POST /rings")?;
        let ring = created.json();
        let id = ring["id"].as_str().ok_or("no id")?.to_string();
        let sketch = call(&app, Method::GET, &format!("/rings/{id}/sketch.png"), None).await;
        expect(&sketch, StatusCode::OK, "GET sketch")?;
        let rendered = call(&app, Method::POST, &format!("/rings/{id}/render"), Some(json!({}))).await;
        expect(&rendered, StatusCode::OK, "POST render")?;
        let render_url = rendered.json()["render_url"].as_str().ok_or("no render_url")?.to_string();
        let first = call(&app, Method::GET, &render_url, None).await;
        expect(&first, StatusCode::OK, "GET render")?;
        let again = call(&app, Method::POST, &format!("/rings/{id}/render"), None).await;
        expect(&again, StatusCode::OK, "repeat render")?;
        let second = call(&app, Method::GET, &render_url, None).await;
        ensure(first.body == second.body, || "repeated render is not byte-identical".into())?;
        let mesh = call(&app, Method::GET, &format!("/rings/{id}/mesh.stl"), None).await;
        expect(&mesh, StatusCode::OK, "GET mesh")?;
        parse_stl(&mesh.body).map_err(|e| format!("served STL: {e}"))?;

        let image = Image::decode(&first.body).map_err(|e| e.to_string())?;
        let blue = [185.0f64, 226.0, 234.0];
        let nearest = image
            .to_rgb8()
            .chunks(3)
            .map(|q| (0..3).map(|c| (q[c] as f64 - blue[c]).powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        ensure(nearest <= 30.0, || format!("no render pixel within 30 of #B9E2EA (closest {nearest:.1})"))?;

        drop(app);
        let restarted = start()?;
        for (uri, bytes) in [
            (format!("/rings/{id}/sketch.png"), &sketch.body),
            (render_url.clone(), &first.body),
            (format!("/rings/{id}/mesh.stl"), &mesh.body),
        ] {
            let r = call(&restarted, Method::GET, &uri, None).await;
            expect(&r, StatusCode::OK, &format!("GET {uri} after restart"))?;
            ensure(&r.body == bytes, || format!("{uri} changed across restart"))?;
        }
        let listed = call(&restarted, Method::GET, "/rings", None).await.json();
        ensure(listed.as_array().map(Vec::len) == Some(1), || format!("listing after restart: {listed}"))?;
        Ok(format!(
            "create, sketch, render (closest background pixel {nearest:.1}), mesh; repeat render identical; restart preserved 3 resources"
        ))
    })
}

fn checkpoint() -> Outcome {
    let smoke = smoke();
    let sketch = Image::load(smoke.corpus_dir.join("trainA/0000.png")).map_err(|e| e.to_string())?;
    let live = Translator::from_trainer(&smoke.trainer).to_render(&sketch).map_err(|e| e.to_string())?;
    let path = workdir().join("roundtrip.ckpt");
    smoke.trainer.save(&path).map_err(|e| e.to_string())?;
    let loaded = Translator::load(&path).map_err(|e| e.to_string())?.to_render(&sketch).map_err(|e| e.to_string())?;
    let resumed = Trainer::load(&path).map_err(|e| e.to_string())?;
    let via_trainer = Translator::from_trainer(&resumed).to_render(&sketch).map_err(|e| e.to_string())?;
    let bits = |img: &Image| img.pixels.iter().map(|p| p.to_bits()).collect::<Vec<u32>>();
    ensure(bits(&live) == bits(&loaded), || "translator from file differs".into())?;
    ensure(bits(&live) == bits(&via_trainer), || "reloaded trainer differs".into())?;
    Ok(format!("{} px render bit-identical after save and load", sketch.width))
}
