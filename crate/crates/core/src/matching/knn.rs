use crate::features::{Descriptor256, KeypointSet};

/// Best and second-best candidate for one query descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchPair {
    /// Query keypoint index.
    pub query: usize,
    /// Best candidate keypoint index.
    pub candidate: usize,
    pub dist_best: u32,
    /// Absent when the candidate set holds a single descriptor.
    pub dist_second: Option<u32>,
}

/// Exhaustive 2-NN under Hamming distance; distance ties go to the lower
/// candidate index.
pub fn knn2_match(q: &KeypointSet, c: &KeypointSet) -> Vec<MatchPair> {
    knn2_descriptors(&q.descriptors, &c.descriptors)
}

pub(crate) fn knn2_descriptors(q: &[Descriptor256], c: &[Descriptor256]) -> Vec<MatchPair> {
    if c.is_empty() {
        return Vec::new();
    }
    q.iter()
        .enumerate()
        .map(|(qi, d)| {
            let (mut best, mut best_j, mut second) = (u32::MAX, 0usize, u32::MAX);
            for (j, e) in c.iter().enumerate() {
                let dist = d.hamming(e);
                if dist < best {
                    second = best;
                    best = dist;
                    best_j = j;
                } else if dist < second {
                    second = dist;
                }
            }
            MatchPair { query: qi, candidate: best_j, dist_best: best, dist_second: (c.len() > 1).then_some(second) }
        })
        .collect()
}

/// Keeps pairs with `dist_best < ratio * dist_second`; pairs without a
/// second neighbour are dropped. Order is preserved.
pub fn ratio_filter(pairs: &[MatchPair], ratio: f64) -> Vec<MatchPair> {
    pairs.iter().copied().filter(|p| passes_ratio(p, ratio)).collect()
}

#[inline]
pub(crate) fn passes_ratio(p: &MatchPair, ratio: f64) -> bool {
    p.dist_second.is_some_and(|s| (p.dist_best as f64) < ratio * s as f64)
}
