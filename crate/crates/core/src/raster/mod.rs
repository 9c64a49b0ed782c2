//! Grayscale image primitives.

mod components;
mod hash;
mod io;
mod resize;
mod threshold;

pub use components::{connected_components, label_components, Component, PixelRect};
pub use hash::{dhash, hamming, Hash64};
pub use io::{decode_image, encode_png, load_image, save_image};
pub use resize::{box_blur3, resize_bilinear};
pub use threshold::{binarize_otsu, otsu_threshold, Polarity};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("cannot decode image: {0}")]
    DecodeError(String),
    #[error("cannot encode image: {0}")]
    EncodeError(String),
    #[error("invalid dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("pixel buffer has {actual} values, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
}

/// 8-bit luminance image, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::InvalidDimensions { width, height });
        }
        if pixels.len() != width * height {
            return Err(RasterError::BufferSize { expected: width * height, actual: pixels.len() });
        }
        Ok(Self { width, height, pixels })
    }

    /// Image filled with a single value.
    ///
    /// # Panics
    /// If either dimension is zero.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        Self { width, height, pixels: vec![value; width * height] }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut img = Self::filled(width, height, 0);
        for y in 0..height {
            for x in 0..width {
                img.pixels[y * width + x] = f(x, y);
            }
        }
        img
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    /// Copies the pixel rectangle `[x0, x0+w) x [y0, y0+h)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<GrayImage, RasterError> {
        if w == 0 || h == 0 || x0 + w > self.width || y0 + h > self.height {
            return Err(RasterError::InvalidDimensions { width: w, height: h });
        }
        let mut out = Vec::with_capacity(w * h);
        for y in y0..y0 + h {
            out.extend_from_slice(&self.pixels[y * self.width + x0..y * self.width + x0 + w]);
        }
        Ok(GrayImage { width: w, height: h, pixels: out })
    }
}

/// Binary ink mask, row-major, `true` = ink.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinImage {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinImage {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, RasterError> {
        if bits.len() != width * height {
            return Err(RasterError::BufferSize { expected: width * height, actual: bits.len() });
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self { width, height, bits: vec![false; width * height] }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ink: bool) {
        self.bits[y * self.width + x] = ink;
    }

    pub fn ink_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Renders ink as black (0) on white (255).
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width.max(1),
            height: self.height.max(1),
            pixels: if self.bits.is_empty() {
                vec![255]
            } else {
                self.bits.iter().map(|&b| if b { 0 } else { 255 }).collect()
            },
        }
    }
}
