use super::{BinImage, GrayImage};

/// Which side of the threshold counts as ink.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Pixels at or below the threshold are ink (dark strokes on light paper).
    InkDarker,
    /// Pixels above the threshold are ink.
    InkLighter,
}

/// Otsu's threshold over the 256-bin histogram.
///
/// Class 0 is `value <= t`. Returns `None` when fewer than two gray levels
/// occur. Ties go to the smallest threshold.
pub fn otsu_threshold(img: &GrayImage) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let total_n = img.pixels().len() as u64;
    let total_s: u64 = hist.iter().enumerate().map(|(v, &c)| v as u64 * c).sum();
    let (mut n0, mut s0) = (0u64, 0u64);
    let mut best: Option<(u8, f64)> = None;
    for t in 0..255usize {
        n0 += hist[t];
        s0 += t as u64 * hist[t];
        let n1 = total_n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let score = between_class_score(n0, s0, n1, total_s - s0);
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((t as u8, score));
        }
    }
    best.map(|(t, _)| t)
}

/// Between-class variance up to the constant factor `1 / N^2`, evaluated from
/// exact integer class sums so equal sums give bit-equal scores.
#[inline]
pub(crate) fn between_class_score(n0: u64, s0: u64, n1: u64, s1: u64) -> f64 {
    let d = (s0 as i128) * (n1 as i128) - (s1 as i128) * (n0 as i128);
    let d = d as f64;
    d * d / (n0 as f64 * n1 as f64)
}

/// Global Otsu binarization. A single-level image yields an empty mask.
pub fn binarize_otsu(img: &GrayImage, polarity: Polarity) -> BinImage {
    let (w, h) = (img.width(), img.height());
    let Some(t) = otsu_threshold(img) else {
        return BinImage::empty(w, h);
    };
    let bits = img
        .pixels()
        .iter()
        .map(|&p| match polarity {
            Polarity::InkDarker => p <= t,
            Polarity::InkLighter => p > t,
        })
        .collect();
    BinImage::new(w, h, bits).expect("same dimensions")
}
