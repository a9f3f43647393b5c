use rand::Rng;
use ringforge_autodiff::kernels::ConvGeometry;
use ringforge_autodiff::{Graph, ParamSet, Scalar, Tensor, Var};

use crate::config::DiscriminatorConfig;
use crate::layers::{Binding, Conv, ConvSpec, Norm};
use crate::{CycleGanError, Result};

const KERNEL: usize = 4;
const PADDING: usize = 1;
const SLOPE: f64 = 0.2;
/// Strides of the four feature layers followed by the 1-channel scorer.
const STRIDES: [usize; 5] = [2, 2, 2, 1, 1];

/// Side of the score map for a square input, or `None` if the input is too
/// small for every layer to produce at least one value (and for instance
/// normalization to see at least two).
pub fn patch_size(input: usize) -> Option<usize> {
    let mut s = input;
    for (i, &stride) in STRIDES.iter().enumerate() {
        s = ConvGeometry::output_extent(s, KERNEL, stride, PADDING)?;
        // Layers 1..=3 are normalized.
        if (1..=3).contains(&i) && s * s < 2 {
            return None;
        }
    }
    Some(s)
}

/// Convolutional patch classifier: one score in `(0, 1)` per overlapping
/// receptive field.
#[derive(Debug, Clone)]
pub struct Discriminator<T: Scalar = f32> {
    config: DiscriminatorConfig,
    params: ParamSet<T>,
    first: Conv,
    body: Vec<(Conv, Norm)>,
    head: Conv,
}

impl<T: Scalar> Discriminator<T> {
    pub fn new(config: DiscriminatorConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut p = ParamSet::new();
        let base = config.base_channels;
        let spec = |in_channels, out_channels, stride| ConvSpec {
            in_channels,
            out_channels,
            kernel: KERNEL,
            stride,
            padding: PADDING,
            transpose: false,
        };
        let first = Conv::new(&mut p, "c0", spec(config.in_channels, base, STRIDES[0]), rng);
        let mut ch = base;
        let mut body = Vec::new();
        for (i, &stride) in STRIDES[1..4].iter().enumerate() {
            let name = format!("c{}", i + 1);
            body.push((
                Conv::new(&mut p, &name, spec(ch, ch * 2, stride), rng),
                Norm::new(&mut p, &format!("{name}.norm"), ch * 2),
            ));
            ch *= 2;
        }
        let head = Conv::new(&mut p, "head", spec(ch, 1, STRIDES[4]), rng);
        Ok(Discriminator {
            config,
            params: p,
            first,
            body,
            head,
        })
    }

    pub fn config(&self) -> &DiscriminatorConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    /// Scores `[N, C, S, S]` images, returning `[N, 1, P, P]`.
    pub fn forward(&self, g: &mut Graph<T>, x: Var, b: Binding) -> Result<Var> {
        let shape = g.shape(x).to_vec();
        let &[_, c, h, w] = shape.as_slice() else {
            return Err(CycleGanError::Shape(format!("discriminator expects [N, C, H, W], got {shape:?}")));
        };
        if c != self.config.in_channels {
            return Err(CycleGanError::Shape(format!(
                "discriminator expects {} channels, got {c}",
                self.config.in_channels
            )));
        }
        if patch_size(h).is_none() || patch_size(w).is_none() {
            return Err(CycleGanError::Shape(format!("discriminator input {h}x{w} is too small")));
        }
        let p = &self.params;
        let mut y = self.first.apply(p, g, x, b)?;
        y = g.leaky_relu(y, SLOPE);
        for (conv, norm) in &self.body {
            y = conv.apply(p, g, y, b)?;
            y = norm.apply(p, g, y, b)?;
            y = g.leaky_relu(y, SLOPE);
        }
        y = self.head.apply(p, g, y, b)?;
        Ok(g.sigmoid(y))
    }

    pub fn score(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let y = self.forward(&mut g, xv, Binding::Frozen)?;
        Ok(g.value(y).clone())
    }
}
