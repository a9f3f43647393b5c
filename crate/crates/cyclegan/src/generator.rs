use rand::Rng;
use ringforge_autodiff::{Graph, ParamSet, Scalar, Tensor, Var};

use crate::config::{GeneratorConfig, END_KERNEL, END_PADDING};
use crate::layers::{Binding, Conv, ConvSpec, Norm};
use crate::{CycleGanError, Result};

/// Downsampling/upsampling layers use 4x4 kernels at stride 2, padding 1,
/// which halves or doubles the spatial size exactly.
const RESAMPLE_KERNEL: usize = 4;

#[derive(Debug, Clone)]
struct ResBlock {
    conv1: Conv,
    norm1: Norm,
    conv2: Conv,
    norm2: Norm,
}

/// Encoder, residual transformer and decoder; maps `[N, C, S, S]` images in
/// `[-1, 1]` to images of the same size.
#[derive(Debug, Clone)]
pub struct Generator<T: Scalar = f32> {
    config: GeneratorConfig,
    params: ParamSet<T>,
    stem: (Conv, Norm),
    down: Vec<(Conv, Norm)>,
    blocks: Vec<ResBlock>,
    up: Vec<(Conv, Norm)>,
    head: Conv,
}

impl<T: Scalar> Generator<T> {
    pub fn new(config: GeneratorConfig, rng: &mut impl Rng) -> Result<Self> {
        config.validate()?;
        let mut p = ParamSet::new();
        let base = config.base_channels;
        let input = config.in_channels + usize::from(config.noise_channel);
        let conv = |in_channels, out_channels, kernel, stride, padding, transpose| ConvSpec {
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
            transpose,
        };

        let stem = (
            Conv::new(&mut p, "stem", conv(input, base, END_KERNEL, 1, END_PADDING, false), rng),
            Norm::new(&mut p, "stem.norm", base),
        );
        let mut ch = base;
        let mut down = Vec::new();
        for i in 0..config.n_downsample {
            let name = format!("down{i}");
            down.push((
                Conv::new(&mut p, &name, conv(ch, ch * 2, RESAMPLE_KERNEL, 2, 1, false), rng),
                Norm::new(&mut p, &format!("{name}.norm"), ch * 2),
            ));
            ch *= 2;
        }
        let blocks = (0..config.n_res_blocks)
            .map(|i| {
                let name = format!("res{i}");
                ResBlock {
                    conv1: Conv::new(&mut p, &format!("{name}.conv1"), conv(ch, ch, 3, 1, 1, false), rng),
                    norm1: Norm::new(&mut p, &format!("{name}.norm1"), ch),
                    conv2: Conv::new(&mut p, &format!("{name}.conv2"), conv(ch, ch, 3, 1, 1, false), rng),
                    norm2: Norm::new(&mut p, &format!("{name}.norm2"), ch),
                }
            })
            .collect();
        let mut up = Vec::new();
        for i in 0..config.n_downsample {
            let name = format!("up{i}");
            up.push((
                Conv::new(&mut p, &name, conv(ch, ch / 2, RESAMPLE_KERNEL, 2, 1, true), rng),
                Norm::new(&mut p, &format!("{name}.norm"), ch / 2),
            ));
            ch /= 2;
        }
        let head = Conv::new(
            &mut p,
            "head",
            conv(ch, config.out_channels, END_KERNEL, 1, END_PADDING, false),
            rng,
        );
        Ok(Generator {
            config,
            params: p,
            stem,
            down,
            blocks,
            up,
            head,
        })
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet<T> {
        &mut self.params
    }

    pub fn n_res_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Sets both convolutions of residual block `i` to zero, turning the
    /// block into the identity map.
    pub fn zero_res_block(&mut self, i: usize) {
        let b = &self.blocks[i];
        for idx in [
            b.conv1.weight_index(),
            b.conv1.bias_index(),
            b.conv2.weight_index(),
            b.conv2.bias_index(),
        ] {
            self.params.get_mut(idx).data_mut().iter_mut().for_each(|v| *v = T::zero());
        }
    }

    fn check_input(&self, shape: &[usize]) -> Result<()> {
        let &[_, c, h, w] = shape else {
            return Err(CycleGanError::Shape(format!("generator expects [N, C, H, W], got {shape:?}")));
        };
        let m = self.config.size_multiple();
        if c != self.config.in_channels {
            return Err(CycleGanError::Shape(format!(
                "generator expects {} channels, got {c}",
                self.config.in_channels
            )));
        }
        if h == 0 || w == 0 || h % m != 0 || w % m != 0 {
            return Err(CycleGanError::Shape(format!(
                "generator input {h}x{w} is not divisible by {m}"
            )));
        }
        if (h / m) * (w / m) < 2 {
            return Err(CycleGanError::Shape(format!(
                "generator input {h}x{w} leaves fewer than 2 values per channel at the bottleneck"
            )));
        }
        Ok(())
    }

    /// Forward pass. With the noise channel enabled, `noise` supplies it
    /// (`[N, 1, H, W]`); `None` means zeros.
    pub fn forward_with_noise(&self, g: &mut Graph<T>, x: Var, noise: Option<Var>, b: Binding) -> Result<Var> {
        self.check_input(g.shape(x))?;
        let p = &self.params;
        let mut h = x;
        if self.config.noise_channel {
            let noise = match noise {
                Some(n) => n,
                None => {
                    let s = g.shape(x);
                    let zeros = Tensor::zeros([s[0], 1, s[2], s[3]]);
                    g.constant(zeros)
                }
            };
            h = g.concat_channels(&[h, noise])?;
        }

        h = self.stem.0.apply(p, g, h, b)?;
        h = self.stem.1.apply(p, g, h, b)?;
        h = g.relu(h);
        for (conv, norm) in &self.down {
            h = conv.apply(p, g, h, b)?;
            h = norm.apply(p, g, h, b)?;
            h = g.relu(h);
        }
        for block in &self.blocks {
            let mut r = block.conv1.apply(p, g, h, b)?;
            r = block.norm1.apply(p, g, r, b)?;
            r = g.relu(r);
            r = block.conv2.apply(p, g, r, b)?;
            r = block.norm2.apply(p, g, r, b)?;
            h = g.add(h, r)?;
        }
        for (conv, norm) in &self.up {
            h = conv.apply(p, g, h, b)?;
            h = norm.apply(p, g, h, b)?;
            h = g.relu(h);
        }
        h = self.head.apply(p, g, h, b)?;
        Ok(g.tanh(h))
    }

    pub fn forward(&self, g: &mut Graph<T>, x: Var, b: Binding) -> Result<Var> {
        self.forward_with_noise(g, x, None, b)
    }

    /// Gradient-free evaluation on a fresh graph.
    pub fn translate(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let y = self.forward(&mut g, xv, Binding::Frozen)?;
        Ok(g.value(y).clone())
    }
}
