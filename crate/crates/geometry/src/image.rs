use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbImage};
use serde::{Deserialize, Serialize};

use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rgb {
    pub r: f32,
    pub g: f32,
    pub b: f32,
}

impl Rgb {
    pub const WHITE: Rgb = Rgb::new(1.0, 1.0, 1.0);
    pub const BLACK: Rgb = Rgb::new(0.0, 0.0, 0.0);

    pub const fn new(r: f32, g: f32, b: f32) -> Self {
        Rgb { r, g, b }
    }

    pub fn from_u8(r: u8, g: u8, b: u8) -> Self {
        Rgb::new(r as f32 / 255.0, g as f32 / 255.0, b as f32 / 255.0)
    }

    pub fn to_u8(self) -> [u8; 3] {
        [self.r, self.g, self.b].map(quantize)
    }

    pub fn to_array(self) -> [f32; 3] {
        [self.r, self.g, self.b]
    }

    pub fn from_array(c: [f32; 3]) -> Self {
        Rgb::new(c[0], c[1], c[2])
    }

    /// Parses `#RRGGBB` (the leading `#` is optional).
    pub fn from_hex(s: &str) -> Option<Rgb> {
        let s = s.strip_prefix('#').unwrap_or(s);
        if s.len() != 6 {
            return None;
        }
        let byte = |i: usize| u8::from_str_radix(&s[i..i + 2], 16).ok();
        Some(Rgb::from_u8(byte(0)?, byte(2)?, byte(4)?))
    }
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Row-major RGB image with unit-interval float channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<f32>,
}

impl Image {
    pub fn filled(width: u32, height: u32, color: Rgb) -> Image {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for _ in 0..width as usize * height as usize {
            pixels.extend_from_slice(&color.to_array());
        }
        Image {
            width,
            height,
            pixels,
        }
    }

    fn offset(&self, x: u32, y: u32) -> usize {
        3 * (y as usize * self.width as usize + x as usize)
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let o = self.offset(x, y);
        Rgb::new(self.pixels[o], self.pixels[o + 1], self.pixels[o + 2])
    }

    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        let o = self.offset(x, y);
        self.pixels[o..o + 3].copy_from_slice(&c.to_array());
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn to_rgb8(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| quantize(v)).collect()
    }

    pub fn from_rgb8(width: u32, height: u32, bytes: &[u8]) -> Image {
        assert_eq!(bytes.len(), width as usize * height as usize * 3);
        Image {
            width,
            height,
            pixels: bytes.iter().map(|&b| b as f32 / 255.0).collect(),
        }
    }

    /// The image as stored on disk: every channel rounded to 8 bits.
    pub fn quantized(&self) -> Image {
        Image::from_rgb8(self.width, self.height, &self.to_rgb8())
    }

    pub fn to_rgb_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.to_rgb8())
            .expect("pixel buffer matches dimensions")
    }

    pub fn from_rgb_image(img: &RgbImage) -> Image {
        Image::from_rgb8(img.width(), img.height(), img.as_raw())
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Cursor::new(Vec::new());
        self.to_rgb_image().write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    /// Decodes PNG or JPEG bytes to RGB.
    pub fn decode(bytes: &[u8]) -> Result<Image> {
        let img = image::load_from_memory(bytes)?;
        Ok(Image::from_rgb_image(&img.to_rgb8()))
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.encode_png()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Image> {
        let bytes = std::fs::read(path)?;
        Image::decode(&bytes)
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().map(|&v| v as f64).sum::<f64>() / self.pixels.len().max(1) as f64
    }

    /// Replaces the contents with the average of `factor`×`factor` blocks.
    pub fn box_downsample(&self, factor: u32) -> Image {
        if factor <= 1 {
            return self.clone();
        }
        let (w, h) = (self.width / factor, self.height / factor);
        let mut out = Image::filled(w, h, Rgb::BLACK);
        let norm = 1.0 / (factor * factor) as f32;
        for y in 0..h {
            for x in 0..w {
                let mut acc = [0f32; 3];
                for dy in 0..factor {
                    for dx in 0..factor {
                        let o = self.offset(x * factor + dx, y * factor + dy);
                        for c in 0..3 {
                            acc[c] += self.pixels[o + c];
                        }
                    }
                }
                out.set(x, y, Rgb::from_array(acc.map(|v| v * norm)));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_parsing() {
        assert_eq!(Rgb::from_hex("#B9E2EA").unwrap().to_u8(), [185, 226, 234]);
        assert!(Rgb::from_hex("#B9E2").is_none());
    }

    #[test]
    fn png_round_trip() {
        let mut img = Image::filled(5, 3, Rgb::from_u8(10, 20, 30));
        img.set(4, 2, Rgb::WHITE);
        let back = Image::decode(&img.encode_png().unwrap()).unwrap();
        assert_eq!(back, img.quantized());
        assert_eq!(back.get(4, 2).to_u8(), [255, 255, 255]);
    }

    #[test]
    fn downsample_averages_blocks() {
        let mut img = Image::filled(2, 2, Rgb::BLACK);
        img.set(0, 0, Rgb::WHITE);
        let small = img.box_downsample(2);
        assert_eq!((small.width, small.height), (1, 1));
        assert!((small.get(0, 0).r - 0.25).abs() < 1e-7);
    }
}
