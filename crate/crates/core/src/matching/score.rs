use super::knn::{knn2_descriptors, passes_ratio};
use super::{MatchPair, MatcherConfig};
use crate::features::{Descriptor256, FeatureExtractor, KeypointSet};
use crate::raster::GrayImage;

/// Good matches with their cosine similarities and the averaged score.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub good: Vec<MatchPair>,
    pub sims: Vec<f64>,
    /// Mean of `sims`, 0 when there are no good matches.
    pub score: f64,
}

impl MatchResult {
    fn from_good(good: Vec<MatchPair>, sims: Vec<f64>) -> Self {
        let score = if sims.is_empty() { 0.0 } else { sims.iter().sum::<f64>() / sims.len() as f64 };
        Self { good, sims, score }
    }

    pub fn empty() -> Self {
        Self { good: Vec::new(), sims: Vec::new(), score: 0.0 }
    }
}

/// Cosine of two descriptors as 0/1 vectors:
/// `|a AND b| / sqrt(|a| * |b|)`, and 0 if either has no set bit.
#[inline]
pub fn cosine_sim(a: &Descriptor256, b: &Descriptor256) -> f64 {
    let (na, nb) = (a.count_ones(), b.count_ones());
    if na == 0 || nb == 0 {
        return 0.0;
    }
    a.and_count(b) as f64 / ((na as u64 * nb as u64) as f64).sqrt()
}

/// Similarity of two keypoint sets (query first).
pub fn image_similarity(a: &KeypointSet, b: &KeypointSet, cfg: &MatcherConfig) -> MatchResult {
    let pairs = knn2_descriptors(&a.descriptors, &b.descriptors);
    let mut good = Vec::new();
    let mut sims = Vec::new();
    for p in pairs.into_iter().filter(|p| passes_ratio(p, cfg.ratio)) {
        let sim = cosine_sim(&a.descriptors[p.query], &b.descriptors[p.candidate]);
        if cfg.sim_floor.is_some_and(|t| sim <= t) {
            continue;
        }
        good.push(p);
        sims.push(sim);
    }
    MatchResult::from_good(good, sims)
}

/// [`image_similarity`] on raw images, extracting features first.
pub fn image_similarity_raw(
    a: &GrayImage,
    b: &GrayImage,
    cfg: &MatcherConfig,
    extractor: &FeatureExtractor,
) -> MatchResult {
    image_similarity(&extractor.extract(a), &extractor.extract(b), cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Keypoint;

    fn set(ds: &[Descriptor256]) -> KeypointSet {
        KeypointSet {
            keypoints: vec![Keypoint { x: 0.0, y: 0.0, angle: 0.0, score: 0.0 }; ds.len()],
            descriptors: ds.to_vec(),
            source_dims: (1, 1),
        }
    }

    #[test]
    fn cosine_examples() {
        let d = Descriptor256([0xF0F0, 3, 0, 1]);
        assert_eq!(cosine_sim(&d, &d), 1.0);
        assert_eq!(cosine_sim(&Descriptor256([0b11, 0, 0, 0]), &Descriptor256([0b101, 0, 0, 0])), 0.5);
        assert_eq!(cosine_sim(&Descriptor256::default(), &d), 0.0);
    }

    #[test]
    fn empty_query_scores_zero() {
        let b = set(&[Descriptor256([1, 2, 3, 4]), Descriptor256([9, 9, 9, 9])]);
        let r = image_similarity(&set(&[]), &b, &MatcherConfig::default());
        assert_eq!(r, MatchResult::empty());
    }

    #[test]
    fn self_similarity_is_one() {
        let a = set(&[Descriptor256([1, 2, 3, 4]), Descriptor256([9, 9, 9, 9]), Descriptor256([u64::MAX, 0, 0, 5])]);
        let r = image_similarity(&a, &a, &MatcherConfig::default());
        assert_eq!(r.good.len(), 3);
        assert_eq!(r.score, 1.0);
    }

    #[test]
    fn floor_drops_weak_pairs() {
        // Query 0b11 matches 0b111 (distance 1) over 0xFF00 (distance 10).
        let q = set(&[Descriptor256([0b11, 0, 0, 0])]);
        let c = set(&[Descriptor256([0b111, 0, 0, 0]), Descriptor256([0xFF00, 0, 0, 0])]);
        let plain = image_similarity(&q, &c, &MatcherConfig::default());
        let sim = 2.0 / 6f64.sqrt();
        assert_eq!(plain.sims, vec![sim]);
        let floored = image_similarity(&q, &c, &MatcherConfig::new(0.75, Some(0.9)).unwrap());
        assert!(floored.good.is_empty());
        assert_eq!(floored.score, 0.0);
    }
}
