use ringforge_autodiff::Tensor;
use ringforge_geometry::Image;

use crate::{CycleGanError, Result};

/// `[1, 3, H, W]` tensor with channels mapped from `[0, 1]` to `[-1, 1]`.
pub fn image_to_tensor(img: &Image) -> Tensor {
    let (w, h) = (img.width as usize, img.height as usize);
    let plane = w * h;
    let mut data = vec![0.0f32; 3 * plane];
    for (i, px) in img.pixels.chunks_exact(3).enumerate() {
        for c in 0..3 {
            data[c * plane + i] = px[c] * 2.0 - 1.0;
        }
    }
    Tensor::new([1, 3, h, w], data).expect("buffer sized from image")
}

/// Inverse of [`image_to_tensor`] for sample `index` of a batch, clamped
/// to the unit interval.
pub fn tensor_to_image(t: &Tensor, index: usize) -> Result<Image> {
    let &[n, 3, h, w] = t.shape() else {
        return Err(CycleGanError::Shape(format!("expected [N, 3, H, W], got {:?}", t.shape())));
    };
    if index >= n {
        return Err(CycleGanError::Shape(format!("sample {index} out of a batch of {n}")));
    }
    let plane = h * w;
    let src = &t.data()[index * 3 * plane..(index + 1) * 3 * plane];
    let mut pixels = vec![0.0f32; 3 * plane];
    for i in 0..plane {
        for c in 0..3 {
            pixels[3 * i + c] = ((src[c * plane + i] + 1.0) * 0.5).clamp(0.0, 1.0);
        }
    }
    Ok(Image {
        width: w as u32,
        height: h as u32,
        pixels,
    })
}
