//! Central finite-difference verification of every differentiable graph
//! operation, in `f64`.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::{Graph, Result, Tensor, Var};

/// Finite-difference step.
pub const STEP: f64 = 1e-4;

/// Denominator floor for the relative error, so exact zeros compare by
/// absolute difference instead of dividing by nothing.
const REL_FLOOR: f64 = 1e-6;

/// Outcome for one operation over several random trials.
#[derive(Debug, Clone, PartialEq)]
pub struct OpReport {
    pub op: &'static str,
    pub trials: usize,
    pub max_rel_error: f64,
}

type Build = dyn Fn(&mut Graph<f64>, &[Var]) -> Result<Var>;

fn rel_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(REL_FLOOR)
}

fn reduce(g: &mut Graph<f64>, out: Var, weights: Option<&Tensor<f64>>) -> Result<Var> {
    match weights {
        Some(w) => {
            let w = g.constant(w.clone());
            let p = g.mul(out, w)?;
            Ok(g.sum(p))
        }
        None => Ok(out),
    }
}

fn forward(build: &Build, inputs: &[Tensor<f64>], weights: Option<&Tensor<f64>>) -> Result<f64> {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.constant(t.clone())).collect();
    let out = build(&mut g, &vars)?;
    let loss = reduce(&mut g, out, weights)?;
    Ok(g.value(loss).item())
}

/// Largest relative error between the reverse-mode gradient and a central
/// difference, over every element of every input. Non-scalar outputs are
/// projected onto a random weighting first.
pub fn check_gradients(build: &Build, inputs: &[Tensor<f64>], rng: &mut impl Rng) -> Result<f64> {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs
        .iter()
        .map(|t| g.leaf(t.clone().with_requires_grad(true)))
        .collect();
    let out = build(&mut g, &vars)?;
    let weights = (g.value(out).numel() != 1).then(|| {
        let shape = g.shape(out).to_vec();
        Tensor::from_fn(shape, |_| rng.random_range(-1.0..1.0))
    });
    let loss = reduce(&mut g, out, weights.as_ref())?;
    g.backward(loss)?;

    let mut worst = 0.0f64;
    let mut probe = inputs.to_vec();
    for (k, &v) in vars.iter().enumerate() {
        let analytic = g.grad(v).map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; inputs[k].numel()]);
        for (e, &a) in analytic.iter().enumerate() {
            let x = inputs[k].data()[e];
            probe[k].data_mut()[e] = x + STEP;
            let up = forward(build, &probe, weights.as_ref())?;
            probe[k].data_mut()[e] = x - STEP;
            let down = forward(build, &probe, weights.as_ref())?;
            probe[k].data_mut()[e] = x;
            worst = worst.max(rel_error(a, (up - down) / (2.0 * STEP)));
        }
    }
    Ok(worst)
}

/// Uniform in `[-2, 2]`, kept at least 0.01 away from zero so piecewise ops
/// are never probed across their kink.
fn away_from_zero(shape: &[usize], rng: &mut impl Rng) -> Tensor<f64> {
    Tensor::from_fn(shape.to_vec(), |_| {
        let v: f64 = rng.random_range(0.01..2.0);
        if rng.random_bool(0.5) {
            v
        } else {
            -v
        }
    })
}

fn uniform(shape: &[usize], lo: f64, hi: f64, rng: &mut impl Rng) -> Tensor<f64> {
    Tensor::from_fn(shape.to_vec(), |_| rng.random_range(lo..hi))
}

struct Case {
    op: &'static str,
    inputs: Box<dyn Fn(&mut StdRng) -> Vec<Tensor<f64>>>,
    build: Box<Build>,
}

fn case(
    op: &'static str,
    inputs: impl Fn(&mut StdRng) -> Vec<Tensor<f64>> + 'static,
    build: impl Fn(&mut Graph<f64>, &[Var]) -> Result<Var> + 'static,
) -> Case {
    Case {
        op,
        inputs: Box::new(inputs),
        build: Box::new(build),
    }
}

fn cases() -> Vec<Case> {
    const S: [usize; 3] = [2, 3, 4];
    let two = |rng: &mut StdRng| vec![away_from_zero(&S, rng), away_from_zero(&S, rng)];
    let one = |rng: &mut StdRng| vec![away_from_zero(&S, rng)];
    vec![
        case("add", two, |g, v| g.add(v[0], v[1])),
        case("sub", two, |g, v| g.sub(v[0], v[1])),
        case("mul", two, |g, v| g.mul(v[0], v[1])),
        case("scale", one, |g, v| Ok(g.scale(v[0], -1.7))),
        case("add_scalar", one, |g, v| Ok(g.add_scalar(v[0], 0.3))),
        case("relu", one, |g, v| Ok(g.relu(v[0]))),
        case("leaky_relu", one, |g, v| Ok(g.leaky_relu(v[0], 0.2))),
        case("tanh", one, |g, v| Ok(g.tanh(v[0]))),
        case("sigmoid", one, |g, v| Ok(g.sigmoid(v[0]))),
        case("sum", one, |g, v| Ok(g.sum(v[0]))),
        case("mean", one, |g, v| Ok(g.mean(v[0]))),
        case(
            "l1",
            |rng| {
                // Differences kept away from zero as well.
                let a = uniform(&S, -1.0, 1.0, rng);
                let d = away_from_zero(&S, rng);
                let b = Tensor::from_fn(S.to_vec(), |i| a.data()[i] + d.data()[i]);
                vec![a, b]
            },
            |g, v| g.l1(v[0], v[1]),
        ),
        case("mse", two, |g, v| g.mse(v[0], v[1])),
        case(
            "bce",
            |rng| vec![uniform(&S, 0.05, 0.95, rng), uniform(&S, 0.0, 1.0, rng)],
            |g, v| g.bce(v[0], v[1]),
        ),
        case(
            "conv2d",
            |rng| {
                vec![
                    uniform(&[2, 2, 5, 5], -1.0, 1.0, rng),
                    uniform(&[3, 2, 3, 3], -1.0, 1.0, rng),
                    uniform(&[3], -1.0, 1.0, rng),
                ]
            },
            |g, v| {
                let a = g.conv2d(v[0], v[1], Some(v[2]), 1, 1)?;
                let b = g.conv2d(v[0], v[1], None, 2, 0)?;
                let (sa, sb) = (g.sum(a), g.sum(b));
                // Both stride/padding settings contribute to one scalar.
                let pa = g.mul(sa, sa)?;
                g.add(pa, sb)
            },
        ),
        case(
            "conv_transpose2d",
            |rng| {
                vec![
                    uniform(&[2, 3, 3, 3], -1.0, 1.0, rng),
                    uniform(&[3, 2, 4, 4], -1.0, 1.0, rng),
                    uniform(&[2], -1.0, 1.0, rng),
                ]
            },
            |g, v| {
                let a = g.conv_transpose2d(v[0], v[1], Some(v[2]), 2, 1)?;
                let b = g.conv_transpose2d(v[0], v[1], None, 1, 0)?;
                let (sa, sb) = (g.mean(a), g.sum(b));
                let pa = g.mul(sa, sa)?;
                g.add(pa, sb)
            },
        ),
        case(
            "instance_norm",
            |rng| {
                vec![
                    uniform(&[2, 3, 3, 4], -2.0, 2.0, rng),
                    uniform(&[3], 0.5, 1.5, rng),
                    uniform(&[3], -1.0, 1.0, rng),
                ]
            },
            |g, v| g.instance_norm(v[0], v[1], v[2], 1e-5),
        ),
        case(
            "concat_channels",
            |rng| vec![uniform(&[2, 1, 3, 3], -1.0, 1.0, rng), uniform(&[2, 2, 3, 3], -1.0, 1.0, rng)],
            |g, v| g.concat_channels(&[v[0], v[1], v[0]]),
        ),
    ]
}

/// Names of all operations covered by [`check_all_ops`].
pub fn covered_ops() -> Vec<&'static str> {
    cases().iter().map(|c| c.op).collect()
}

/// Runs `trials` random finite-difference checks for every operation.
pub fn check_all_ops(trials: usize, seed: u64) -> Result<Vec<OpReport>> {
    let mut rng = StdRng::seed_from_u64(seed);
    cases()
        .into_iter()
        .map(|c| {
            let mut worst = 0.0f64;
            for _ in 0..trials {
                let inputs = (c.inputs)(&mut rng);
                worst = worst.max(check_gradients(&*c.build, &inputs, &mut rng)?);
            }
            Ok(OpReport {
                op: c.op,
                trials,
                max_rel_error: worst,
            })
        })
        .collect()
}
