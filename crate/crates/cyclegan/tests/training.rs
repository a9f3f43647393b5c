mod common;

use common::{small_config, toy_image, toy_tensors, BLUE};
use ringforge_autodiff::{Graph, Tensor};
use ringforge_cyclegan::{
    image_to_tensor, Binding, CycleGan, CycleGanError, GeneratorConfig, HistoryBuffer, Trainer, TrainConfig, Translator,
};

fn bits(t: &Tensor) -> Vec<u32> {
    t.data().iter().map(|v| v.to_bits()).collect()
}

fn run(trainer: &mut Trainer, steps: usize) -> Vec<ringforge_cyclegan::StepMetrics> {
    let a = toy_tensors(4, 32, false);
    let b = toy_tensors(4, 32, true);
    (0..steps)
        .map(|_| {
            let i = trainer.step() as usize;
            trainer.train_step(&a[i % 4], &b[(i + 1) % 4]).unwrap()
        })
        .collect()
}

#[test]
fn identical_seeds_give_identical_metrics() {
    let mut a = Trainer::new(small_config(32)).unwrap();
    let mut b = Trainer::new(small_config(32)).unwrap();
    assert_eq!(run(&mut a, 3), run(&mut b, 3));
}

#[test]
fn generator_phase_leaves_discriminators_alone() {
    let model = CycleGan::new(&small_config(32)).unwrap();
    let x = toy_tensors(1, 32, false).remove(0);
    let mut g = Graph::new();
    let xv = g.constant(x);
    let fake = model.g_ab.forward(&mut g, xv, Binding::Trainable).unwrap();
    let score = model.d_b.forward(&mut g, fake, Binding::Frozen).unwrap();
    let loss = g.mean(score);
    g.backward(loss).unwrap();
    assert!(model.d_b.params().grads(&g).iter().all(Option::is_none));
    assert!(model.g_ab.params().grads(&g).iter().all(Option::is_some));
}

#[test]
fn a_step_updates_every_network() {
    let mut t = Trainer::new(small_config(32)).unwrap();
    let before = t.model().clone();
    run(&mut t, 1);
    let after = t.model();
    let moved = |a: &ringforge_autodiff::ParamSet, b: &ringforge_autodiff::ParamSet| {
        a.iter().zip(b.iter()).any(|((_, x), (_, y))| x != y)
    };
    assert!(moved(before.g_ab.params(), after.g_ab.params()));
    assert!(moved(before.g_ba.params(), after.g_ba.params()));
    assert!(moved(before.d_a.params(), after.d_a.params()));
    assert!(moved(before.d_b.params(), after.d_b.params()));
}

#[test]
fn non_finite_input_aborts_without_updating() {
    let mut t = Trainer::new(small_config(32)).unwrap();
    let before = t.model().clone();
    let mut x = toy_tensors(1, 32, false).remove(0);
    x.data_mut()[5] = f32::NAN;
    let y = toy_tensors(1, 32, true).remove(0);
    let err = t.train_step(&x, &y).unwrap_err();
    assert!(matches!(err, CycleGanError::NonFinite { step: 1, .. }), "{err}");
    assert!(err.to_string().contains("loss"));
    for ((_, a), (_, b)) in before.g_ab.params().iter().zip(t.model().g_ab.params().iter()) {
        assert_eq!(bits(a), bits(b));
    }
    assert_eq!(t.step(), 0);
}

#[test]
fn resume_continues_bit_for_bit() {
    let mut straight = Trainer::new(small_config(32)).unwrap();
    let expect = run(&mut straight, 8);

    let mut first = Trainer::new(small_config(32)).unwrap();
    let mut got = run(&mut first, 5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.ckpt");
    first.save(&path).unwrap();
    let mut resumed = Trainer::load(&path).unwrap();
    assert_eq!(resumed.step(), 5);
    assert_eq!(resumed.history_len(), first.history_len());
    got.extend(run(&mut resumed, 3));
    assert_eq!(got, expect);
    for ((_, a), (_, b)) in straight.model().d_a.params().iter().zip(resumed.model().d_a.params().iter()) {
        assert_eq!(bits(a), bits(b));
    }
}

#[test]
fn schedule_advances_by_epoch() {
    let cfg = TrainConfig {
        epochs_phase1: 1,
        epochs_phase2: 1,
        ..small_config(32)
    };
    let mut t = Trainer::new(cfg).unwrap();
    assert_eq!(run(&mut t, 1)[0].lr, 0.0002);
    t.advance_epoch();
    assert_eq!(run(&mut t, 1)[0].lr, 0.00002);
    t.advance_epoch();
    assert!(t.is_finished());
    assert!(matches!(t.train_step(&Tensor::zeros([1, 3, 32, 32]), &Tensor::zeros([1, 3, 32, 32])), Err(CycleGanError::EpochOutOfRange { .. })));
}

#[test]
fn translator_round_trips_through_a_checkpoint() {
    let mut t = Trainer::new(small_config(32)).unwrap();
    run(&mut t, 2);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    t.save(&path).unwrap();

    let live = Translator::from_trainer(&t);
    let loaded = Translator::load(&path).unwrap();
    let sketch = toy_image(32, 7, false);
    let a = live.to_render(&sketch).unwrap();
    let b = loaded.to_render(&sketch).unwrap();
    let c = loaded.to_render(&sketch).unwrap();
    assert_eq!(a.to_rgb8(), b.to_rgb8());
    assert_eq!(b, c);
    assert_eq!((b.width, b.height), (32, 32));

    assert!(matches!(loaded.to_render(&toy_image(64, 7, false)), Err(CycleGanError::SizeMismatch { .. })));

    let other = GeneratorConfig {
        base_channels: 4,
        ..small_config(32).generator
    };
    let ckpt = ringforge_autodiff::checkpoint::Checkpoint::load(&path).unwrap();
    let err = Translator::with_config(&ckpt, other, 32).unwrap_err();
    assert!(matches!(err, CycleGanError::CheckpointMismatch(_)));
    assert!(err.to_string().contains("expected"), "{err}");
}

#[test]
fn history_returns_fresh_images_half_the_time() {
    let mut h = HistoryBuffer::new(50, 11);
    for i in 0..50 {
        h.query(Tensor::full([1], -(i as f32) - 1.0));
    }
    let n = 10_000;
    let fresh = (0..n)
        .filter(|&i| {
            let t = Tensor::full([1], i as f32);
            h.query(t.clone()) == t
        })
        .count();
    let p = fresh as f64 / n as f64;
    assert!((p - 0.5).abs() < 0.02, "fresh fraction {p}");
    assert_eq!(h.len(), 50);
}

/// Eight toy sketches and renders at 32 px; the cycle loss must fall and
/// translated sketches must pick up the render background colour.
#[test]
fn overfits_a_toy_set() {
    let cfg = TrainConfig {
        generator: GeneratorConfig {
            base_channels: 16,
            n_res_blocks: 6,
            ..GeneratorConfig::default()
        },
        discriminator: ringforge_cyclegan::DiscriminatorConfig {
            base_channels: 16,
            ..Default::default()
        },
        image_size: 32,
        ..TrainConfig::default()
    };
    let mut t = Trainer::new(cfg).unwrap();
    let sketches: Vec<_> = (0..8).map(|i| toy_image(32, 100 + 2 * i, false)).collect();
    let renders = toy_tensors(8, 32, true);
    let a: Vec<_> = sketches.iter().map(image_to_tensor).collect();
    let mut cycle = Vec::new();
    for i in 0..300 {
        let m = t.train_step(&a[i % 8], &renders[(i * 3 + 1) % 8]).unwrap();
        assert!(m.g_total.is_finite() && m.d_a.is_finite() && m.d_b.is_finite());
        cycle.push(m.cycle);
    }
    let tail = cycle[292..].iter().sum::<f64>() / 8.0;
    assert!(tail < cycle[0], "cycle {} -> {tail}", cycle[0]);

    let tr = Translator::from_trainer(&t);
    let blue = BLUE.to_array();
    let mut err = 0.0;
    let mut count = 0;
    for s in &sketches {
        let out = tr.to_render(s).unwrap();
        for (src, dst) in s.pixels.chunks(3).zip(out.pixels.chunks(3)) {
            if src.iter().all(|v| *v == 1.0) {
                err += (0..3).map(|c| (dst[c] - blue[c]).abs() as f64).sum::<f64>() / 3.0;
                count += 1;
            }
        }
    }
    let mean = err / count as f64;
    assert!(mean < 0.15, "background error {mean}");
}
