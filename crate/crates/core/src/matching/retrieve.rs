use serde::Serialize;

use super::{image_similarity, MatcherConfig};
use crate::corpus::{Corpus, DiagramEntry};
use crate::features::KeypointSet;
use crate::par;
use crate::raster::GrayImage;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagramHit {
    pub diagram_id: String,
    pub score: f64,
    pub good_matches: usize,
}

/// Ranks every corpus diagram against a sketch. The head of the list is the
/// default shadow-guidance candidate.
pub fn retrieve_diagrams(sketch: &GrayImage, corpus: &Corpus, k: usize, cfg: &MatcherConfig) -> Vec<DiagramHit> {
    let query = corpus.extractor().extract(sketch);
    score_diagrams(&query, corpus.diagrams(), k, cfg)
}

/// Scores precomputed diagram features against a query set: score
/// descending, then good-match count descending, then id ascending.
pub fn score_diagrams(
    query: &KeypointSet,
    diagrams: &[DiagramEntry],
    k: usize,
    cfg: &MatcherConfig,
) -> Vec<DiagramHit> {
    let mut hits = par::map_slice(diagrams, |d| {
        let r = image_similarity(query, &d.features, cfg);
        DiagramHit { diagram_id: d.diagram_id.clone(), score: r.score, good_matches: r.good.len() }
    });
    par::sort_by(&mut hits, |a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| b.good_matches.cmp(&a.good_matches))
            .then_with(|| a.diagram_id.cmp(&b.diagram_id))
    });
    hits.truncate(k);
    hits
}
