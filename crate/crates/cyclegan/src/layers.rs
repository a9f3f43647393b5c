use rand::Rng;
use ringforge_autodiff::{Graph, ParamSet, Scalar, Tensor, Var};

use crate::Result;

/// Standard deviation of the Gaussian weight initialization.
pub const INIT_STD: f64 = 0.02;
pub const NORM_EPS: f64 = 1e-5;

/// Whether a network's parameters receive gradients on a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Binding {
    Trainable,
    Frozen,
}

pub(crate) fn bind<T: Scalar>(p: &ParamSet<T>, g: &mut Graph<T>, index: usize, binding: Binding) -> Var {
    match binding {
        Binding::Trainable => p.bind(g, index),
        Binding::Frozen => p.bind_frozen(g, index),
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Conv {
    weight: usize,
    bias: usize,
    stride: usize,
    padding: usize,
    transpose: bool,
}

pub(crate) struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub transpose: bool,
}

impl Conv {
    pub fn new<T: Scalar>(p: &mut ParamSet<T>, name: &str, s: ConvSpec, rng: &mut impl Rng) -> Self {
        let shape = if s.transpose {
            [s.in_channels, s.out_channels, s.kernel, s.kernel]
        } else {
            [s.out_channels, s.in_channels, s.kernel, s.kernel]
        };
        let weight = p.push(format!("{name}.weight"), Tensor::randn(shape, 0.0, INIT_STD, rng));
        let bias = p.push(format!("{name}.bias"), Tensor::zeros([s.out_channels]));
        Conv {
            weight,
            bias,
            stride: s.stride,
            padding: s.padding,
            transpose: s.transpose,
        }
    }

    pub fn apply<T: Scalar>(&self, p: &ParamSet<T>, g: &mut Graph<T>, x: Var, b: Binding) -> Result<Var> {
        let w = bind(p, g, self.weight, b);
        let bias = bind(p, g, self.bias, b);
        let y = if self.transpose {
            g.conv_transpose2d(x, w, Some(bias), self.stride, self.padding)?
        } else {
            g.conv2d(x, w, Some(bias), self.stride, self.padding)?
        };
        Ok(y)
    }

    pub fn weight_index(&self) -> usize {
        self.weight
    }

    pub fn bias_index(&self) -> usize {
        self.bias
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Norm {
    gamma: usize,
    beta: usize,
}

impl Norm {
    pub fn new<T: Scalar>(p: &mut ParamSet<T>, name: &str, channels: usize) -> Self {
        let gamma = p.push(format!("{name}.gamma"), Tensor::full([channels], T::one()));
        let beta = p.push(format!("{name}.beta"), Tensor::zeros([channels]));
        Norm { gamma, beta }
    }

    pub fn apply<T: Scalar>(&self, p: &ParamSet<T>, g: &mut Graph<T>, x: Var, b: Binding) -> Result<Var> {
        let gamma = bind(p, g, self.gamma, b);
        let beta = bind(p, g, self.beta, b);
        Ok(g.instance_norm(x, gamma, beta, NORM_EPS)?)
    }
}
