use super::IngestError;
use crate::par;
use crate::raster::{dhash, hamming, GrayImage, Hash64};

/// Default change threshold in differing hash bits (of 64).
pub const DEFAULT_HASH_THRESHOLD: u32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedSlide {
    pub frame_index: usize,
    pub slide: GrayImage,
}

/// Deduplicates a frame sequence into slides.
///
/// The first frame is always emitted; a later frame is emitted when its hash
/// differs from the last emitted slide by more than `threshold` bits.
pub fn extract_slides(frames: &[GrayImage], threshold: u32) -> Result<Vec<ExtractedSlide>, IngestError> {
    let hashes = par::map_slice(frames, dhash);
    let picked = select_slides(&hashes, threshold)?;
    Ok(picked.into_iter().map(|i| ExtractedSlide { frame_index: i, slide: frames[i].clone() }).collect())
}

/// Emission decision over precomputed frame hashes; returns frame indices.
pub fn select_slides(hashes: &[Hash64], threshold: u32) -> Result<Vec<usize>, IngestError> {
    if threshold > 64 {
        return Err(IngestError::InvalidThreshold(threshold));
    }
    let Some(&first) = hashes.first() else {
        return Err(IngestError::EmptyInput);
    };
    let mut anchor = first;
    let mut out = vec![0];
    for (i, &h) in hashes.iter().enumerate().skip(1) {
        if hamming(h, anchor) > threshold {
            out.push(i);
            anchor = h;
        }
    }
    Ok(out)
}
