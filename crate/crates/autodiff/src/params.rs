use std::sync::atomic::{AtomicU64, Ordering};

use crate::checkpoint::Checkpoint;
use crate::{Graph, Result, Scalar, Tensor, TensorError, Var};

static NEXT_SET: AtomicU64 = AtomicU64::new(1);

/// Identifies one parameter of one [`ParamSet`] when bound on a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamKey {
    pub set: u64,
    pub index: usize,
    pub trainable: bool,
}

/// Named, ordered collection of parameter tensors owned by a network.
///
/// Every set (including clones) gets a process-unique id so that two
/// networks bound on the same graph never alias each other's parameters.
#[derive(Debug)]
pub struct ParamSet<T: Scalar = f32> {
    uid: u64,
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> Default for ParamSet<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Clone for ParamSet<T> {
    fn clone(&self) -> Self {
        ParamSet {
            uid: NEXT_SET.fetch_add(1, Ordering::Relaxed),
            names: self.names.clone(),
            tensors: self.tensors.clone(),
        }
    }
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        ParamSet {
            uid: NEXT_SET.fetch_add(1, Ordering::Relaxed),
            names: Vec::new(),
            tensors: Vec::new(),
        }
    }

    /// Adds a trainable parameter and returns its index.
    pub fn push(&mut self, name: impl Into<String>, tensor: Tensor<T>) -> usize {
        self.names.push(name.into());
        self.tensors.push(tensor.with_requires_grad(true));
        self.tensors.len() - 1
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn get(&self, index: usize) -> &Tensor<T> {
        &self.tensors[index]
    }

    pub fn get_mut(&mut self, index: usize) -> &mut Tensor<T> {
        &mut self.tensors[index]
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn num_elements(&self) -> usize {
        self.tensors.iter().map(Tensor::numel).sum()
    }

    pub fn key(&self, index: usize, trainable: bool) -> ParamKey {
        ParamKey {
            set: self.uid,
            index,
            trainable,
        }
    }

    /// Binds a parameter as a gradient-receiving leaf.
    pub fn bind(&self, graph: &mut Graph<T>, index: usize) -> Var {
        graph.param(self.key(index, true), &self.tensors[index])
    }

    /// Binds a parameter as a constant: gradients flow through it to
    /// upstream values but it never accumulates a gradient of its own.
    pub fn bind_frozen(&self, graph: &mut Graph<T>, index: usize) -> Var {
        graph.param(self.key(index, false), &self.tensors[index])
    }

    /// Gradients accumulated on `graph` for each trainable binding, in
    /// parameter order; `None` for parameters that were not used.
    pub fn grads(&self, graph: &Graph<T>) -> Vec<Option<Vec<T>>> {
        (0..self.len())
            .map(|i| {
                graph
                    .bound_param(&self.key(i, true))
                    .and_then(|v| graph.grad(v))
                    .map(<[T]>::to_vec)
            })
            .collect()
    }
}

impl ParamSet<f32> {
    /// Stores every parameter in `ckpt` under `prefix.name`.
    pub fn export(&self, prefix: &str, ckpt: &mut Checkpoint) {
        for (name, t) in self.iter() {
            ckpt.insert(format!("{prefix}.{name}"), t.clone());
        }
    }

    /// Overwrites every parameter from `ckpt`; the set of names and their
    /// shapes must match exactly.
    pub fn import(&mut self, prefix: &str, ckpt: &Checkpoint) -> Result<()> {
        for i in 0..self.len() {
            let key = format!("{prefix}.{}", self.names[i]);
            let src = ckpt
                .get(&key)
                .ok_or_else(|| TensorError::Checkpoint(format!("missing tensor {key}")))?;
            if src.shape() != self.tensors[i].shape() {
                return Err(TensorError::Checkpoint(format!(
                    "tensor {key} has shape {:?}, expected {:?}",
                    src.shape(),
                    self.tensors[i].shape()
                )));
            }
            self.tensors[i].data_mut().copy_from_slice(src.data());
        }
        Ok(())
    }
}
