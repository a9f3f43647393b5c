//! Checkpoint container: one line of compact JSON describing the tensors,
//! followed by their contents as little-endian `f32`, in manifest order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{Result, Tensor, TensorError};

const FORMAT: &str = "ringforge-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    metadata: Value,
    tensors: Vec<Entry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    /// Byte offset into the data section.
    offset: usize,
}

/// Ordered set of named `f32` tensors plus free-form JSON metadata.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    pub metadata: Value,
    tensors: Vec<(String, Tensor<f32>)>,
}

impl Checkpoint {
    pub fn new(metadata: Value) -> Self {
        Checkpoint {
            metadata,
            tensors: Vec::new(),
        }
    }

    /// Adds or replaces a tensor.
    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor<f32>) {
        let name = name.into();
        let tensor = tensor.with_requires_grad(false);
        match self.tensors.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = tensor,
            None => self.tensors.push((name, tensor)),
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<f32>> {
        self.tensors.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.tensors.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut offset = 0;
        let entries = self
            .tensors
            .iter()
            .map(|(name, t)| {
                let e = Entry {
                    name: name.clone(),
                    shape: t.shape().to_vec(),
                    offset,
                };
                offset += t.numel() * 4;
                e
            })
            .collect();
        let manifest = Manifest {
            format: FORMAT.into(),
            version: VERSION,
            metadata: self.metadata.clone(),
            tensors: entries,
        };
        let mut out = serde_json::to_vec(&manifest)?;
        out.push(b'\n');
        out.reserve(offset);
        for (_, t) in &self.tensors {
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| TensorError::Checkpoint("missing manifest line".into()))?;
        let manifest: Manifest = serde_json::from_slice(&bytes[..newline])?;
        if manifest.format != FORMAT {
            return Err(TensorError::Checkpoint(format!("unknown format {:?}", manifest.format)));
        }
        if manifest.version != VERSION {
            return Err(TensorError::Checkpoint(format!("unsupported version {}", manifest.version)));
        }
        let data = &bytes[newline + 1..];
        let mut tensors = Vec::with_capacity(manifest.tensors.len());
        for e in manifest.tensors {
            let len: usize = e.shape.iter().product::<usize>() * 4;
            let chunk = e
                .offset
                .checked_add(len)
                .and_then(|end| data.get(e.offset..end))
                .ok_or_else(|| TensorError::Checkpoint(format!("tensor {} runs past end of file", e.name)))?;
            let values = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            tensors.push((e.name, Tensor::new(e.shape, values)?));
        }
        Ok(Checkpoint {
            metadata: manifest.metadata,
            tensors,
        })
    }

    /// Writes atomically: the file is staged next to `path` and renamed.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.to_bytes()?;
        let tmp = path.with_extension("partial");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}
