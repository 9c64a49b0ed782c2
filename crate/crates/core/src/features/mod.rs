//! Oriented FAST keypoints with rotated BRIEF descriptors.
//!
//! Single scale: inputs are resampled so their longer side is
//! [`NORMALIZED_DIM`] pixels before detection, and keypoint coordinates are
//! reported in that normalized frame.

mod brief;
mod cache;
mod fast;
mod orient;

pub use brief::{brief_descriptor, Descriptor256, SamplingPattern, DEFAULT_PATTERN_SEED, PATCH_RADIUS};
pub use cache::{read_feature_cache, write_feature_cache, CacheError, FeatureCache};
pub use fast::{detect_fast, fast_corner_scores, FastError, BORDER_MARGIN, RING};
pub use orient::orientation_ic;

use crate::raster::{box_blur3, resize_bilinear, GrayImage};

/// Longer image side after normalization.
pub const NORMALIZED_DIM: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f32,
    pub y: f32,
    /// Radians in `(-pi, pi]`, image frame with y pointing down.
    pub angle: f32,
    pub score: f32,
}

/// Keypoints with parallel descriptors for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointSet {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor256>,
    /// Dimensions of the image the set was extracted from, before normalization.
    pub source_dims: (usize, usize),
}

impl KeypointSet {
    pub fn empty(source_dims: (usize, usize)) -> Self {
        Self { keypoints: Vec::new(), descriptors: Vec::new(), source_dims }
    }

    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct FeatureConfig {
    pub fast_threshold: u8,
    pub max_keypoints: usize,
    pub pattern_seed: u64,
    /// Longer side after resampling; `None` keeps the input size.
    pub normalize_dim: Option<usize>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            fast_threshold: 20,
            max_keypoints: 500,
            pattern_seed: DEFAULT_PATTERN_SEED,
            normalize_dim: Some(NORMALIZED_DIM),
        }
    }
}

/// Config plus its materialized sampling pattern, reusable across images.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    config: FeatureConfig,
    pattern: SamplingPattern,
}

impl FeatureExtractor {
    pub fn new(config: FeatureConfig) -> Self {
        Self { pattern: SamplingPattern::generate(config.pattern_seed), config }
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    pub fn pattern(&self) -> &SamplingPattern {
        &self.pattern
    }

    pub fn extract(&self, img: &GrayImage) -> KeypointSet {
        let source_dims = (img.width(), img.height());
        let normalized = match self.config.normalize_dim {
            Some(dim) => normalize(img, dim),
            None => img.clone(),
        };
        let smooth = box_blur3(&normalized);
        let Ok(mut keypoints) = detect_fast(&smooth, self.config.fast_threshold.max(1)) else {
            return KeypointSet::empty(source_dims);
        };
        // Strongest first; detect_fast yields raster order, so the stable sort
        // breaks score ties by position.
        keypoints.sort_by(|a, b| b.score.total_cmp(&a.score));
        keypoints.truncate(self.config.max_keypoints);
        let descriptors = keypoints
            .iter_mut()
            .map(|kp| {
                kp.angle = orientation_ic(&smooth, kp, PATCH_RADIUS);
                brief_descriptor(&smooth, kp, &self.pattern)
            })
            .collect();
        KeypointSet { keypoints, descriptors, source_dims }
    }
}

/// Blur, detect, keep the strongest `max_keypoints`, orient, describe.
pub fn extract_features(img: &GrayImage, config: &FeatureConfig) -> KeypointSet {
    FeatureExtractor::new(*config).extract(img)
}

/// Resamples so the longer side equals `dim`, preserving aspect ratio.
pub fn normalize(img: &GrayImage, dim: usize) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let long = w.max(h);
    if long == dim {
        return img.clone();
    }
    let scale = dim as f64 / long as f64;
    let nw = ((w as f64 * scale).round() as usize).clamp(1, dim);
    let nh = ((h as f64 * scale).round() as usize).clamp(1, dim);
    resize_bilinear(img, nw, nh).expect("positive target")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blank_image_has_no_features() {
        let set = extract_features(&GrayImage::filled(300, 200, 255), &FeatureConfig::default());
        assert!(set.is_empty());
        assert_eq!(set.source_dims, (300, 200));
    }

    #[test]
    fn normalization_keeps_aspect() {
        let img = GrayImage::filled(1024, 256, 0);
        let n = normalize(&img, 512);
        assert_eq!((n.width(), n.height()), (512, 128));
        let small = normalize(&GrayImage::filled(100, 200, 0), 512);
        assert_eq!((small.width(), small.height()), (256, 512));
    }

    #[test]
    fn extraction_is_deterministic_and_bounded() {
        let img = crate::synth::box_diagram(512, 384, 3, 7);
        let cfg = FeatureConfig { max_keypoints: 25, ..FeatureConfig::default() };
        let a = extract_features(&img, &cfg);
        let b = extract_features(&img, &cfg);
        assert_eq!(a, b);
        assert!(a.len() <= 25 && !a.is_empty());
        assert_eq!(a.keypoints.len(), a.descriptors.len());
        assert!(a.keypoints.windows(2).all(|w| w[0].score >= w[1].score));
    }
}
