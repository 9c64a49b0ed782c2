use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use super::{GrayImage, RasterError};

/// Reads a PNG or binary PGM file as 8-bit luminance.
///
/// Color sources are reduced with ITU-R 601 luma weights, rounded to nearest.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage, RasterError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => RasterError::FileNotFound(path.display().to_string()),
        _ => RasterError::DecodeError(format!("{}: {e}", path.display())),
    })?;
    decode_image(&bytes)
}

/// Decodes PNG or PGM bytes held in memory.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage, RasterError> {
    let reader = image::ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| RasterError::DecodeError(e.to_string()))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        other => return Err(RasterError::DecodeError(format!("unsupported format {other:?}"))),
    }
    let dynamic = reader.decode().map_err(|e| RasterError::DecodeError(e.to_string()))?;
    to_luma(dynamic)
}

fn to_luma(img: DynamicImage) -> Result<GrayImage, RasterError> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        DynamicImage::ImageLuma16(buf) => buf.pixels().map(|p| (p.0[0] as f64 / 257.0).round() as u8).collect(),
        other => other.to_rgb8().pixels().map(|p| luma601(p.0)).collect(),
    };
    GrayImage::new(w, h, pixels)
}

#[inline]
fn luma601([r, g, b]: [u8; 3]) -> u8 {
    (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round().clamp(0.0, 255.0) as u8
}

/// Encodes as an 8-bit grayscale PNG.
pub fn encode_png(img: &GrayImage) -> Result<Vec<u8>, RasterError> {
    let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.pixels().to_vec())
        .ok_or_else(|| RasterError::EncodeError("buffer size".into()))?;
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png).map_err(|e| RasterError::EncodeError(e.to_string()))?;
    Ok(out.into_inner())
}

/// Writes PNG, or binary PGM when the extension is `.pgm`. Missing parent
/// directories are created.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let path = path.as_ref();
    let io_err = |e: std::io::Error| RasterError::EncodeError(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io_err)?;
    }
    let is_pgm = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let bytes = if is_pgm {
        let mut b = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
        b.extend_from_slice(img.pixels());
        b
    } else {
        encode_png(img)?
    };
    std::fs::write(path, bytes).map_err(io_err)
}
