use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::{ParamSet, Result, Scalar, Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.5,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates for every parameter of one set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T: Scalar = f32> {
    pub step: u64,
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &ParamSet<T>) -> Self {
        let zeros: Vec<Vec<T>> = params.iter().map(|(_, t)| vec![T::zero(); t.numel()]).collect();
        AdamState {
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }
}

impl AdamState<f32> {
    pub fn export(&self, prefix: &str, ckpt: &mut Checkpoint) {
        let pack = |bufs: &[Vec<f32>]| {
            let flat: Vec<f32> = bufs.iter().flatten().copied().collect();
            Tensor::new([flat.len()], flat).expect("flat buffer")
        };
        ckpt.insert(format!("{prefix}.m"), pack(&self.m));
        ckpt.insert(format!("{prefix}.v"), pack(&self.v));
        ckpt.insert(format!("{prefix}.step"), Tensor::new([2], split_step(self.step)).expect("two words"));
    }

    pub fn import(&mut self, prefix: &str, ckpt: &Checkpoint) -> Result<()> {
        let fetch = |name: &str| {
            ckpt.get(&format!("{prefix}.{name}"))
                .ok_or_else(|| TensorError::Checkpoint(format!("missing tensor {prefix}.{name}")))
        };
        let step = fetch("step")?.data();
        if step.len() != 2 {
            return Err(TensorError::Checkpoint(format!("{prefix}.step must hold two words")));
        }
        let step = join_step(step[0], step[1]);
        let unpack = |flat: &Tensor<f32>, into: &mut Vec<Vec<f32>>| {
            let total: usize = into.iter().map(Vec::len).sum();
            if flat.numel() != total {
                return Err(TensorError::Checkpoint(format!(
                    "{prefix} moments hold {} values, expected {total}",
                    flat.numel()
                )));
            }
            let mut offset = 0;
            for buf in into.iter_mut() {
                let n = buf.len();
                buf.copy_from_slice(&flat.data()[offset..offset + n]);
                offset += n;
            }
            Ok(())
        };
        unpack(fetch("m")?, &mut self.m)?;
        unpack(fetch("v")?, &mut self.v)?;
        self.step = step;
        Ok(())
    }
}

// Step counts are stored as two exactly-representable 24-bit halves.
fn split_step(step: u64) -> Vec<f32> {
    vec![(step >> 24) as f32, (step & 0xff_ffff) as f32]
}

fn join_step(hi: f32, lo: f32) -> u64 {
    ((hi as u64) << 24) | lo as u64
}

/// One bias-corrected Adam update. Parameters without a gradient keep
/// their value and moments.
pub fn adam_step<T: Scalar>(
    params: &mut ParamSet<T>,
    grads: &[Option<Vec<T>>],
    state: &mut AdamState<T>,
    config: &AdamConfig,
    lr: f64,
) -> Result<()> {
    if grads.len() != params.len() || state.m.len() != params.len() {
        return Err(TensorError::invalid(
            "adam_step",
            format!(
                "{} parameters, {} gradients, {} moment buffers",
                params.len(),
                grads.len(),
                state.m.len()
            ),
        ));
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (i, g) in grads.iter().enumerate() {
        let Some(g) = g else { continue };
        let p = params.get_mut(i);
        if g.len() != p.numel() {
            return Err(TensorError::mismatch("adam_step", p.shape(), &[g.len()]));
        }
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for (k, w) in p.data_mut().iter_mut().enumerate() {
            let gk = g[k].as_f64();
            let mk = b1 * m[k].as_f64() + (1.0 - b1) * gk;
            let vk = b2 * v[k].as_f64() + (1.0 - b2) * gk * gk;
            m[k] = T::of_f64(mk);
            v[k] = T::of_f64(vk);
            let update = lr * (mk / c1) / ((vk / c2).sqrt() + config.eps);
            *w = T::of_f64(w.as_f64() - update);
        }
    }
    Ok(())
}
