use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ringforge_autodiff::checkpoint::Checkpoint;
use ringforge_autodiff::{adam_step, AdamConfig, AdamState, ParamSet, Tensor};
use serde_json::json;

fn params(seed: u64) -> ParamSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ParamSet::new();
    p.push("conv.weight", Tensor::randn([4, 3, 3, 3], 0.0, 0.02, &mut rng));
    p.push("conv.bias", Tensor::zeros([4]));
    p
}

#[test]
fn params_and_moments_round_trip_through_a_file() {
    let mut p = params(1);
    let mut state = AdamState::new(&p);
    let grads: Vec<_> = p.iter().map(|(_, t)| Some(vec![0.25f32; t.numel()])).collect();
    for _ in 0..3 {
        adam_step(&mut p, &grads, &mut state, &AdamConfig::default(), 2e-4).unwrap();
    }
    let mut ckpt = Checkpoint::new(json!({"kind": "test"}));
    p.export("net", &mut ckpt);
    state.export("net.adam", &mut ckpt);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    ckpt.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back.metadata["kind"], "test");

    let mut q = params(2);
    q.import("net", &back).unwrap();
    for ((_, a), (_, b)) in p.iter().zip(q.iter()) {
        let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(a), bits(b));
    }
    let mut s2 = AdamState::new(&q);
    s2.import("net.adam", &back).unwrap();
    assert_eq!(s2, state);
}

#[test]
fn import_rejects_shape_changes() {
    let p = params(1);
    let mut ckpt = Checkpoint::default();
    p.export("net", &mut ckpt);
    let mut other = ParamSet::new();
    other.push("conv.weight", Tensor::zeros([4, 3, 5, 5]));
    other.push("conv.bias", Tensor::zeros([4]));
    assert!(other.import("net", &ckpt).is_err());
    assert!(params(3).import("missing", &ckpt).is_err());
}

#[test]
fn zero_gradient_leaves_parameters_unchanged() {
    let mut p = params(4);
    let before = p.get(0).clone();
    let mut state = AdamState::new(&p);
    let grads: Vec<_> = p.iter().map(|(_, t)| Some(vec![0.0f32; t.numel()])).collect();
    adam_step(&mut p, &grads, &mut state, &AdamConfig::default(), 0.1).unwrap();
    assert_eq!(p.get(0), &before);
}
