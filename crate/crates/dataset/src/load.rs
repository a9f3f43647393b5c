use std::path::Path;

use image::imageops::{self, FilterType};
use ringforge_autodiff::Tensor;

use crate::error::{DatasetError, Result};
use crate::manifest::{DatasetManifest, Domain};

/// One decoded training image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSample {
    /// `[3, S, S]`, values in `[-1, 1]`.
    pub pixels: Tensor,
    pub domain: Domain,
    pub index: usize,
}

/// Decodes a PNG or JPEG, resizes it bilinearly to `size`x`size` if needed
/// and maps channels from `[0, 255]` to `[-1, 1]`, as a `[3, S, S]` tensor.
pub fn load_image(path: &Path, size: u32) -> Result<Tensor> {
    let img = image::open(path)
        .map_err(|source| DatasetError::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_rgb8();
    let img = if img.dimensions() == (size, size) {
        img
    } else {
        imageops::resize(&img, size, size, FilterType::Triangle)
    };
    let s = size as usize;
    let plane = s * s;
    let mut data = vec![0.0f32; 3 * plane];
    for (i, px) in img.pixels().enumerate() {
        for c in 0..3 {
            data[c * plane + i] = px.0[c] as f32 / 127.5 - 1.0;
        }
    }
    Ok(Tensor::new([3, s, s], data).expect("buffer sized from image"))
}

pub fn load_sample(root: &Path, m: &DatasetManifest, index: usize, size: u32) -> Result<ImageSample> {
    let e = m.entries.get(index).ok_or(DatasetError::NoSuchEntry {
        index,
        len: m.entries.len(),
    })?;
    Ok(ImageSample {
        pixels: load_image(&root.join(&e.file), size)?,
        domain: m.domain,
        index,
    })
}

/// Both domains decoded into memory.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub a: Vec<Tensor>,
    pub b: Vec<Tensor>,
    pub image_size: u32,
}

impl Corpus {
    pub fn load(root: &Path, size: u32) -> Result<Self> {
        let load = |domain| -> Result<Vec<Tensor>> {
            let m = DatasetManifest::load(root, domain)?;
            if m.is_empty() {
                return Err(DatasetError::Empty(domain.label()));
            }
            (0..m.len()).map(|i| Ok(load_sample(root, &m, i, size)?.pixels)).collect()
        };
        Ok(Corpus {
            a: load(Domain::A)?,
            b: load(Domain::B)?,
            image_size: size,
        })
    }

    /// Stacks the chosen images into a `[N, 3, S, S]` batch.
    pub fn batch(&self, domain: Domain, indices: &[usize]) -> Tensor {
        let pool = match domain {
            Domain::A => &self.a,
            Domain::B => &self.b,
        };
        let items: Vec<Tensor> = indices.iter().map(|&i| pool[i].clone()).collect();
        Tensor::stack(&items).expect("corpus images share one shape")
    }
}
