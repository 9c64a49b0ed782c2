use super::{GrayImage, RasterError};

/// Bilinear resampling with pixel-center alignment and edge clamping.
pub fn resize_bilinear(img: &GrayImage, w: usize, h: usize) -> Result<GrayImage, RasterError> {
    if w == 0 || h == 0 {
        return Err(RasterError::InvalidDimensions { width: w, height: h });
    }
    let (sw, sh) = (img.width(), img.height());
    if (sw, sh) == (w, h) {
        return Ok(img.clone());
    }
    let taps_x: Vec<(usize, usize, f64)> = (0..w).map(|x| taps(x, sw, w)).collect();
    let taps_y: Vec<(usize, usize, f64)> = (0..h).map(|y| taps(y, sh, h)).collect();
    let src = img.pixels();
    let mut out = Vec::with_capacity(w * h);
    for &(y0, y1, fy) in &taps_y {
        for &(x0, x1, fx) in &taps_x {
            let p00 = src[y0 * sw + x0] as f64;
            let p01 = src[y0 * sw + x1] as f64;
            let p10 = src[y1 * sw + x0] as f64;
            let p11 = src[y1 * sw + x1] as f64;
            let top = p00 + (p01 - p00) * fx;
            let bot = p10 + (p11 - p10) * fx;
            out.push((top + (bot - top) * fy).round().clamp(0.0, 255.0) as u8);
        }
    }
    GrayImage::new(w, h, out)
}

/// Source sample pair and blend weight for destination index `d`.
fn taps(d: usize, src_len: usize, dst_len: usize) -> (usize, usize, f64) {
    let pos = ((d as f64 + 0.5) * src_len as f64 / dst_len as f64 - 0.5).clamp(0.0, (src_len - 1) as f64);
    let i0 = pos.floor() as usize;
    let i1 = (i0 + 1).min(src_len - 1);
    (i0, i1, pos - i0 as f64)
}

/// 3x3 box filter with replicated borders; integer mean rounded to nearest.
pub fn box_blur3(img: &GrayImage) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let src = img.pixels();
    let clampi = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let mut out = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0u32;
            for dy in -1..=1isize {
                let yy = clampi(y as isize + dy, h);
                for dx in -1..=1isize {
                    sum += src[yy * w + clampi(x as isize + dx, w)] as u32;
                }
            }
            out[y * w + x] = ((sum + 4) / 9) as u8;
        }
    }
    GrayImage::new(w, h, out).expect("same dimensions")
}
