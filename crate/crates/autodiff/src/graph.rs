use std::collections::HashMap;

use crate::kernels::{col2im, im2col, instance_norm_stats, matmul, ConvGeometry};
use crate::{ParamKey, Result, Scalar, Tensor, TensorError, BCE_EPS};

/// Handle to a value recorded on a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

enum Op<T> {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, T),
    AddScalar(Var),
    Relu(Var),
    LeakyRelu(Var, T),
    Tanh(Var),
    Sigmoid(Var),
    Sum(Var),
    Mean(Var),
    L1(Var, Var),
    Mse(Var, Var),
    Bce(Var, Var),
    Conv2d {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        geom: ConvGeometry,
        batch: usize,
        filters: usize,
    },
    ConvTranspose2d {
        input: Var,
        weight: Var,
        bias: Option<Var>,
        // Geometry of the equivalent forward convolution, whose input is
        // this op's output.
        geom: ConvGeometry,
        batch: usize,
        in_channels: usize,
    },
    InstanceNorm {
        input: Var,
        gamma: Var,
        beta: Var,
        xhat: Vec<T>,
        inv_std: Vec<T>,
    },
    Concat {
        inputs: Vec<Var>,
        channels: Vec<usize>,
    },
}

struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    needs_grad: bool,
}

/// Append-only tape of tensor operations.
///
/// Leaves are created with [`Graph::leaf`], [`Graph::constant`] or
/// [`Graph::param`]; every operation appends one node whose inputs already
/// exist, so the tape is topologically ordered by construction.
pub struct Graph<T: Scalar = f32> {
    nodes: Vec<Node<T>>,
    grads: Vec<Option<Vec<T>>>,
    bound: HashMap<ParamKey, Var>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn zip_map<T: Scalar>(a: &[T], b: &[T], f: impl Fn(T, T) -> T) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph {
            nodes: Vec::new(),
            grads: Vec::new(),
            bound: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, needs_grad: bool) -> Var {
        // Nothing upstream needs a gradient: keep the value, drop saved state.
        let op = if needs_grad { op } else { Op::Leaf };
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    /// Records `tensor` as a leaf; gradients flow to it iff it requires grad.
    pub fn leaf(&mut self, tensor: Tensor<T>) -> Var {
        let needs_grad = tensor.requires_grad();
        self.push(tensor, Op::Leaf, needs_grad)
    }

    /// Records a leaf that never receives gradients.
    pub fn constant(&mut self, tensor: Tensor<T>) -> Var {
        self.push(tensor.with_requires_grad(false), Op::Leaf, false)
    }

    /// Leaf for a persistent parameter. Binding the same key twice returns
    /// the same variable, so a module applied several times accumulates
    /// all of its uses into one gradient.
    pub fn param(&mut self, key: ParamKey, tensor: &Tensor<T>) -> Var {
        if let Some(&v) = self.bound.get(&key) {
            return v;
        }
        let mut t = Tensor::new(tensor.shape().to_vec(), tensor.data().to_vec())
            .expect("parameter tensor is well formed");
        t.set_requires_grad(key.trainable && tensor.requires_grad());
        let v = self.leaf(t);
        self.bound.insert(key, v);
        v
    }

    pub fn bound_param(&self, key: &ParamKey) -> Option<Var> {
        self.bound.get(key).copied()
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    /// Accumulated gradient of the last loss(es) with respect to a leaf.
    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.grads[v.0].as_deref()
    }

    pub fn zero_grad(&mut self) {
        self.grads.iter_mut().for_each(|g| *g = None);
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(TensorError::mismatch(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn ng(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].needs_grad)
    }

    fn elementwise(&mut self, a: Var, b: Var, op: Op<T>, name: &'static str, f: impl Fn(T, T) -> T) -> Result<Var> {
        self.same_shape(name, a, b)?;
        let value = Tensor::new(
            self.shape(a).to_vec(),
            zip_map(self.value(a).data(), self.value(b).data(), f),
        )?;
        let ng = self.ng(&[a, b]);
        Ok(self.push(value, op, ng))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, Op::Add(a, b), "add", |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, Op::Sub(a, b), "sub", |x, y| x - y)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.elementwise(a, b, Op::Mul(a, b), "mul", |x, y| x * y)
    }

    fn unary(&mut self, a: Var, op: Op<T>, f: impl Fn(T) -> T) -> Var {
        let src = self.value(a);
        let value = Tensor::new(src.shape().to_vec(), src.data().iter().map(|&x| f(x)).collect())
            .expect("same shape");
        let ng = self.ng(&[a]);
        self.push(value, op, ng)
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let s = T::of_f64(s);
        self.unary(a, Op::Scale(a, s), |x| x * s)
    }

    pub fn add_scalar(&mut self, a: Var, s: f64) -> Var {
        let s = T::of_f64(s);
        self.unary(a, Op::AddScalar(a), |x| x + s)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Op::Relu(a), |x| if x > T::zero() { x } else { T::zero() })
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let s = T::of_f64(slope);
        self.unary(a, Op::LeakyRelu(a, s), |x| if x > T::zero() { x } else { x * s })
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Op::Tanh(a), |x| x.tanh())
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().copied().sum::<T>();
        let ng = self.ng(&[a]);
        self.push(Tensor::scalar(s), Op::Sum(a), ng)
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let src = self.value(a).data();
        let s = src.iter().copied().sum::<T>() / T::of_f64(src.len() as f64);
        let ng = self.ng(&[a]);
        self.push(Tensor::scalar(s), Op::Mean(a), ng)
    }

    fn reduce_pair(&mut self, name: &'static str, a: Var, b: Var, op: Op<T>, f: impl Fn(f64, f64) -> f64) -> Result<Var> {
        self.same_shape(name, a, b)?;
        let (x, y) = (self.value(a).data(), self.value(b).data());
        let total: f64 = x.iter().zip(y).map(|(&p, &q)| f(p.as_f64(), q.as_f64())).sum();
        let value = Tensor::scalar(T::of_f64(total / x.len() as f64));
        let ng = self.ng(&[a, b]);
        Ok(self.push(value, op, ng))
    }

    /// Mean absolute difference.
    pub fn l1(&mut self, a: Var, b: Var) -> Result<Var> {
        self.reduce_pair("l1", a, b, Op::L1(a, b), |p, q| (p - q).abs())
    }

    /// Mean squared difference.
    pub fn mse(&mut self, a: Var, b: Var) -> Result<Var> {
        self.reduce_pair("mse", a, b, Op::Mse(a, b), |p, q| (p - q) * (p - q))
    }

    /// Mean binary cross-entropy of probabilities `pred` against `target`,
    /// with `pred` clamped to `[BCE_EPS, 1 - BCE_EPS]`.
    pub fn bce(&mut self, pred: Var, target: Var) -> Result<Var> {
        self.reduce_pair("bce", pred, target, Op::Bce(pred, target), |p, t| {
            let p = p.clamp(BCE_EPS, 1.0 - BCE_EPS);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
    }

    fn check_4d(&self, op: &'static str, v: Var) -> Result<[usize; 4]> {
        let s = self.shape(v);
        <[usize; 4]>::try_from(s)
            .map_err(|_| TensorError::invalid(op, format!("expected a 4D tensor, got shape {s:?}")))
    }

    fn check_bias(&self, op: &'static str, bias: Option<Var>, channels: usize) -> Result<()> {
        if let Some(b) = bias {
            if self.shape(b) != [channels] {
                return Err(TensorError::mismatch(op, self.shape(b), &[channels]));
            }
        }
        Ok(())
    }

    /// Zero-padded strided cross-correlation.
    /// `input: [N, C, H, W]`, `weight: [F, C, kH, kW]`, `bias: [F]`.
    pub fn conv2d(&mut self, input: Var, weight: Var, bias: Option<Var>, stride: usize, padding: usize) -> Result<Var> {
        let [n, c, h, w] = self.check_4d("conv2d", input)?;
        let [f, wc, kh, kw] = self.check_4d("conv2d", weight)?;
        if wc != c {
            return Err(TensorError::mismatch("conv2d", self.shape(input), self.shape(weight)));
        }
        self.check_bias("conv2d", bias, f)?;
        let (Some(out_h), Some(out_w)) = (
            ConvGeometry::output_extent(h, kh, stride, padding),
            ConvGeometry::output_extent(w, kw, stride, padding),
        ) else {
            return Err(TensorError::invalid(
                "conv2d",
                format!("kernel {kh}x{kw} with stride {stride}, padding {padding} does not fit input {h}x{w}"),
            ));
        };
        let geom = ConvGeometry {
            channels: c,
            height: h,
            width: w,
            kernel_h: kh,
            kernel_w: kw,
            stride,
            padding,
            out_h,
            out_w,
        };
        let (plen, olen) = (geom.patch_len(), geom.out_len());
        let x = self.value(input).data();
        let wt = self.value(weight).data();
        let mut out = vec![T::zero(); n * f * olen];
        let mut cols = vec![T::zero(); plen * olen];
        for s in 0..n {
            im2col(&x[s * c * h * w..(s + 1) * c * h * w], &geom, &mut cols);
            matmul(f, plen, olen, wt, false, &cols, false, &mut out[s * f * olen..(s + 1) * f * olen], false);
        }
        if let Some(b) = bias {
            let bv = self.value(b).data();
            for (i, plane) in out.chunks_exact_mut(olen).enumerate() {
                let bias = bv[i % f];
                plane.iter_mut().for_each(|v| *v = *v + bias);
            }
        }
        let value = Tensor::new([n, f, out_h, out_w], out)?;
        let mut deps = vec![input, weight];
        deps.extend(bias);
        let ng = self.ng(&deps);
        Ok(self.push(
            value,
            Op::Conv2d {
                input,
                weight,
                bias,
                geom,
                batch: n,
                filters: f,
            },
            ng,
        ))
    }

    /// Transposed convolution: the adjoint of [`Graph::conv2d`] with the same
    /// weights. `input: [N, C, H, W]`, `weight: [C, F, kH, kW]`, `bias: [F]`;
    /// output spatial size is `(H - 1) * stride - 2 * padding + k`.
    pub fn conv_transpose2d(&mut self, input: Var, weight: Var, bias: Option<Var>, stride: usize, padding: usize) -> Result<Var> {
        let [n, c, h, w] = self.check_4d("conv_transpose2d", input)?;
        let [wc, f, kh, kw] = self.check_4d("conv_transpose2d", weight)?;
        if wc != c {
            return Err(TensorError::mismatch("conv_transpose2d", self.shape(input), self.shape(weight)));
        }
        self.check_bias("conv_transpose2d", bias, f)?;
        if stride == 0 {
            return Err(TensorError::invalid("conv_transpose2d", "stride must be positive"));
        }
        let out_h = ((h - 1) * stride + kh).checked_sub(2 * padding).filter(|&v| v > 0);
        let out_w = ((w - 1) * stride + kw).checked_sub(2 * padding).filter(|&v| v > 0);
        let (Some(out_h), Some(out_w)) = (out_h, out_w) else {
            return Err(TensorError::invalid(
                "conv_transpose2d",
                format!("padding {padding} too large for kernel {kh}x{kw} on input {h}x{w}"),
            ));
        };
        let geom = ConvGeometry {
            channels: f,
            height: out_h,
            width: out_w,
            kernel_h: kh,
            kernel_w: kw,
            stride,
            padding,
            out_h: h,
            out_w: w,
        };
        let (plen, ilen) = (geom.patch_len(), h * w);
        let oplane = f * out_h * out_w;
        let y = self.value(input).data();
        let wt = self.value(weight).data();
        let mut out = vec![T::zero(); n * oplane];
        let mut cols = vec![T::zero(); plen * ilen];
        for s in 0..n {
            matmul(plen, c, ilen, wt, true, &y[s * c * ilen..(s + 1) * c * ilen], false, &mut cols, false);
            col2im(&cols, &geom, &mut out[s * oplane..(s + 1) * oplane]);
        }
        if let Some(b) = bias {
            let bv = self.value(b).data();
            for (i, plane) in out.chunks_exact_mut(out_h * out_w).enumerate() {
                let bias = bv[i % f];
                plane.iter_mut().for_each(|v| *v = *v + bias);
            }
        }
        let value = Tensor::new([n, f, out_h, out_w], out)?;
        let mut deps = vec![input, weight];
        deps.extend(bias);
        let ng = self.ng(&deps);
        Ok(self.push(
            value,
            Op::ConvTranspose2d {
                input,
                weight,
                bias,
                geom,
                batch: n,
                in_channels: c,
            },
            ng,
        ))
    }

    /// Per-sample, per-channel normalization followed by a channel affine map.
    pub fn instance_norm(&mut self, input: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let [n, c, h, w] = self.check_4d("instance_norm", input)?;
        if h * w < 2 {
            return Err(TensorError::invalid("instance_norm", format!("needs at least 2 values per channel, got {h}x{w}")));
        }
        if self.shape(gamma) != [c] {
            return Err(TensorError::mismatch("instance_norm", self.shape(gamma), &[c]));
        }
        if self.shape(beta) != [c] {
            return Err(TensorError::mismatch("instance_norm", self.shape(beta), &[c]));
        }
        let plane = h * w;
        let (xhat, inv_std) = instance_norm_stats(self.value(input).data(), n * c, plane, eps);
        let g = self.value(gamma).data();
        let b = self.value(beta).data();
        let mut out = xhat.clone();
        for (p, chunk) in out.chunks_exact_mut(plane).enumerate() {
            let (gc, bc) = (g[p % c], b[p % c]);
            chunk.iter_mut().for_each(|v| *v = *v * gc + bc);
        }
        let value = Tensor::new([n, c, h, w], out)?;
        let ng = self.ng(&[input, gamma, beta]);
        Ok(self.push(
            value,
            Op::InstanceNorm {
                input,
                gamma,
                beta,
                xhat,
                inv_std,
            },
            ng,
        ))
    }

    /// Concatenates 4D tensors along the channel axis.
    pub fn concat_channels(&mut self, inputs: &[Var]) -> Result<Var> {
        let first = *inputs
            .first()
            .ok_or_else(|| TensorError::invalid("concat", "no inputs"))?;
        let [n, _, h, w] = self.check_4d("concat", first)?;
        let mut channels = Vec::with_capacity(inputs.len());
        for &v in inputs {
            let [vn, vc, vh, vw] = self.check_4d("concat", v)?;
            if (vn, vh, vw) != (n, h, w) {
                return Err(TensorError::mismatch("concat", self.shape(first), self.shape(v)));
            }
            channels.push(vc);
        }
        let total: usize = channels.iter().sum();
        let plane = h * w;
        let mut out = Vec::with_capacity(n * total * plane);
        for s in 0..n {
            for (&v, &vc) in inputs.iter().zip(&channels) {
                out.extend_from_slice(&self.value(v).data()[s * vc * plane..(s + 1) * vc * plane]);
            }
        }
        let value = Tensor::new([n, total, h, w], out)?;
        let ng = self.ng(inputs);
        Ok(self.push(
            value,
            Op::Concat {
                inputs: inputs.to_vec(),
                channels,
            },
            ng,
        ))
    }

    /// Reverse pass from a one-element `loss`. Gradients of leaves that
    /// require them are added to any gradient already stored, so repeated
    /// calls accumulate until [`Graph::zero_grad`].
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.value(loss).numel() != 1 {
            return Err(TensorError::NonScalarLoss(self.shape(loss).to_vec()));
        }
        if !self.nodes[loss.0].needs_grad {
            return Ok(());
        }
        let mut grads: Vec<Option<Vec<T>>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            let Some(gout) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            if !node.needs_grad {
                continue;
            }
            if let Op::Leaf = node.op {
                match &mut self.grads[i] {
                    Some(acc) => acc.iter_mut().zip(&gout).for_each(|(a, &g)| *a = *a + g),
                    slot @ None => *slot = Some(gout),
                }
                continue;
            }
            self.backward_node(i, &gout, &mut grads);
        }
        Ok(())
    }

    fn backward_node(&self, i: usize, gout: &[T], grads: &mut [Option<Vec<T>>]) {
        let nodes = &self.nodes;
        let needs = |v: Var| nodes[v.0].needs_grad;
        let len = |v: Var| nodes[v.0].value.numel();
        let val = |v: Var| nodes[v.0].value.data();
        // Runs `f` on the (zero-initialized on first use) gradient of `v`.
        let mut acc = |v: Var, f: &mut dyn FnMut(&mut [T])| {
            if !needs(v) {
                return;
            }
            let g = grads[v.0].get_or_insert_with(|| vec![T::zero(); len(v)]);
            f(g);
        };
        let out = nodes[i].value.data();

        match &nodes[i].op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                acc(*a, &mut |g| g.iter_mut().zip(gout).for_each(|(x, &y)| *x = *x + y));
                acc(*b, &mut |g| g.iter_mut().zip(gout).for_each(|(x, &y)| *x = *x + y));
            }
            Op::Sub(a, b) => {
                acc(*a, &mut |g| g.iter_mut().zip(gout).for_each(|(x, &y)| *x = *x + y));
                acc(*b, &mut |g| g.iter_mut().zip(gout).for_each(|(x, &y)| *x = *x - y));
            }
            Op::Mul(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                acc(*a, &mut |g| {
                    for k in 0..g.len() {
                        g[k] = g[k] + gout[k] * bv[k];
                    }
                });
                acc(*b, &mut |g| {
                    for k in 0..g.len() {
                        g[k] = g[k] + gout[k] * av[k];
                    }
                });
            }
            Op::Scale(a, s) => acc(*a, &mut |g| g.iter_mut().zip(gout).for_each(|(x, &y)| *x = *x + y * *s)),
            Op::AddScalar(a) => acc(*a, &mut |g| g.iter_mut().zip(gout).for_each(|(x, &y)| *x = *x + y)),
            Op::Relu(a) => {
                let av = val(*a);
                acc(*a, &mut |g| {
                    for k in 0..g.len() {
                        if av[k] > T::zero() {
                            g[k] = g[k] + gout[k];
                        }
                    }
                });
            }
            Op::LeakyRelu(a, s) => {
                let av = val(*a);
                acc(*a, &mut |g| {
                    for k in 0..g.len() {
                        let d = if av[k] > T::zero() { T::one() } else { *s };
                        g[k] = g[k] + gout[k] * d;
                    }
                });
            }
            Op::Tanh(a) => acc(*a, &mut |g| {
                for k in 0..g.len() {
                    g[k] = g[k] + gout[k] * (T::one() - out[k] * out[k]);
                }
            }),
            Op::Sigmoid(a) => acc(*a, &mut |g| {
                for k in 0..g.len() {
                    g[k] = g[k] + gout[k] * out[k] * (T::one() - out[k]);
                }
            }),
            Op::Sum(a) => acc(*a, &mut |g| g.iter_mut().for_each(|x| *x = *x + gout[0])),
            Op::Mean(a) => {
                let d = gout[0] / T::of_f64(len(*a) as f64);
                acc(*a, &mut |g| g.iter_mut().for_each(|x| *x = *x + d));
            }
            Op::L1(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                let d = gout[0] / T::of_f64(av.len() as f64);
                let sign = |k: usize| {
                    let diff = av[k] - bv[k];
                    if diff > T::zero() {
                        d
                    } else if diff < T::zero() {
                        -d
                    } else {
                        T::zero()
                    }
                };
                acc(*a, &mut |g| (0..g.len()).for_each(|k| g[k] = g[k] + sign(k)));
                acc(*b, &mut |g| (0..g.len()).for_each(|k| g[k] = g[k] - sign(k)));
            }
            Op::Mse(a, b) => {
                let (av, bv) = (val(*a), val(*b));
                let d = T::of_f64(2.0) * gout[0] / T::of_f64(av.len() as f64);
                acc(*a, &mut |g| (0..g.len()).for_each(|k| g[k] = g[k] + d * (av[k] - bv[k])));
                acc(*b, &mut |g| (0..g.len()).for_each(|k| g[k] = g[k] - d * (av[k] - bv[k])));
            }
            Op::Bce(p, t) => {
                let (pv, tv) = (val(*p), val(*t));
                let scale = gout[0].as_f64() / pv.len() as f64;
                acc(*p, &mut |g| {
                    for k in 0..g.len() {
                        let pk = pv[k].as_f64();
                        if pk > BCE_EPS && pk < 1.0 - BCE_EPS {
                            let tk = tv[k].as_f64();
                            let d = -(tk / pk - (1.0 - tk) / (1.0 - pk)) * scale;
                            g[k] = g[k] + T::of_f64(d);
                        }
                    }
                });
                acc(*t, &mut |g| {
                    for k in 0..g.len() {
                        let pk = pv[k].as_f64().clamp(BCE_EPS, 1.0 - BCE_EPS);
                        let d = -(pk.ln() - (1.0 - pk).ln()) * scale;
                        g[k] = g[k] + T::of_f64(d);
                    }
                });
            }
            Op::Conv2d {
                input,
                weight,
                bias,
                geom,
                batch,
                filters,
            } => {
                let (plen, olen) = (geom.patch_len(), geom.out_len());
                let in_len = geom.channels * geom.height * geom.width;
                let f = *filters;
                let x = val(*input);
                let wt = val(*weight);
                let mut cols = vec![T::zero(); plen * olen];
                if needs(*weight) {
                    acc(*weight, &mut |gw| {
                        for s in 0..*batch {
                            im2col(&x[s * in_len..(s + 1) * in_len], geom, &mut cols);
                            matmul(f, olen, plen, &gout[s * f * olen..(s + 1) * f * olen], false, &cols, true, gw, true);
                        }
                    });
                }
                if needs(*input) {
                    acc(*input, &mut |gx| {
                        for s in 0..*batch {
                            matmul(plen, f, olen, wt, true, &gout[s * f * olen..(s + 1) * f * olen], false, &mut cols, false);
                            col2im(&cols, geom, &mut gx[s * in_len..(s + 1) * in_len]);
                        }
                    });
                }
                if let Some(b) = bias {
                    acc(*b, &mut |gb| {
                        for (p, plane) in gout.chunks_exact(olen).enumerate() {
                            gb[p % f] = gb[p % f] + plane.iter().copied().sum::<T>();
                        }
                    });
                }
            }
            Op::ConvTranspose2d {
                input,
                weight,
                bias,
                geom,
                batch,
                in_channels,
            } => {
                let (plen, ilen) = (geom.patch_len(), geom.out_len());
                let c = *in_channels;
                let oplane = geom.channels * geom.height * geom.width;
                let y = val(*input);
                let wt = val(*weight);
                let mut gcols: Vec<Vec<T>> = Vec::with_capacity(*batch);
                for s in 0..*batch {
                    let mut cols = vec![T::zero(); plen * ilen];
                    im2col(&gout[s * oplane..(s + 1) * oplane], geom, &mut cols);
                    gcols.push(cols);
                }
                acc(*input, &mut |gy| {
                    for s in 0..*batch {
                        matmul(c, plen, ilen, wt, false, &gcols[s], false, &mut gy[s * c * ilen..(s + 1) * c * ilen], true);
                    }
                });
                acc(*weight, &mut |gw| {
                    for s in 0..*batch {
                        matmul(c, ilen, plen, &y[s * c * ilen..(s + 1) * c * ilen], false, &gcols[s], true, gw, true);
                    }
                });
                if let Some(b) = bias {
                    let f = geom.channels;
                    let plane = geom.height * geom.width;
                    acc(*b, &mut |gb| {
                        for (p, chunk) in gout.chunks_exact(plane).enumerate() {
                            gb[p % f] = gb[p % f] + chunk.iter().copied().sum::<T>();
                        }
                    });
                }
            }
            Op::InstanceNorm {
                input,
                gamma,
                beta,
                xhat,
                inv_std,
            } => {
                let c = val(*gamma).len();
                let plane = xhat.len() / inv_std.len();
                let gv = val(*gamma);
                acc(*gamma, &mut |gg| {
                    for (p, (go, xh)) in gout.chunks_exact(plane).zip(xhat.chunks_exact(plane)).enumerate() {
                        let s: f64 = go.iter().zip(xh).map(|(a, b)| a.as_f64() * b.as_f64()).sum();
                        gg[p % c] = gg[p % c] + T::of_f64(s);
                    }
                });
                acc(*beta, &mut |gb| {
                    for (p, go) in gout.chunks_exact(plane).enumerate() {
                        let s: f64 = go.iter().map(|a| a.as_f64()).sum();
                        gb[p % c] = gb[p % c] + T::of_f64(s);
                    }
                });
                acc(*input, &mut |gx| {
                    let m = plane as f64;
                    for p in 0..inv_std.len() {
                        let range = p * plane..(p + 1) * plane;
                        let (go, xh) = (&gout[range.clone()], &xhat[range.clone()]);
                        let gamma_c = gv[p % c].as_f64();
                        let inv = inv_std[p].as_f64();
                        let mut s1 = 0.0;
                        let mut s2 = 0.0;
                        for k in 0..plane {
                            let d = go[k].as_f64() * gamma_c;
                            s1 += d;
                            s2 += d * xh[k].as_f64();
                        }
                        for (k, slot) in gx[range].iter_mut().enumerate() {
                            let d = go[k].as_f64() * gamma_c;
                            let v = inv / m * (m * d - s1 - xh[k].as_f64() * s2);
                            *slot = *slot + T::of_f64(v);
                        }
                    }
                });
            }
            Op::Concat { inputs, channels } => {
                let total: usize = channels.iter().sum();
                let n = nodes[i].value.shape()[0];
                let plane = out.len() / (n * total);
                let mut offset = 0;
                for (&v, &vc) in inputs.iter().zip(channels) {
                    acc(v, &mut |g| {
                        for s in 0..n {
                            let src = &gout[(s * total + offset) * plane..(s * total + offset + vc) * plane];
                            let dst = &mut g[s * vc * plane..(s + 1) * vc * plane];
                            dst.iter_mut().zip(src).for_each(|(a, &b)| *a = *a + b);
                        }
                    });
                    offset += vc;
                }
            }
        }
    }
}
