use serde::Serialize;

use super::{layout_feature, layout_similarity, FeatureGrid};
use crate::corpus::{Corpus, SlideEntry};
use crate::ingest::SlideLayout;
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedSlide {
    pub slide_id: String,
    pub score: f64,
}

/// Slides ordered by descending score, ties by ascending id.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct LayoutRanking {
    pub entries: Vec<RankedSlide>,
}

impl LayoutRanking {
    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.slide_id.as_str()).collect()
    }
}

/// Top-`k` corpus slides by occupancy-grid cosine similarity to `query`.
pub fn retrieve_layouts(query: &SlideLayout, corpus: &Corpus, k: usize) -> LayoutRanking {
    let (gw, gh) = corpus.grid();
    rank_layouts(&layout_feature(query, gw, gh), corpus.slides(), k)
}

/// Ranks precomputed entries against a query feature.
pub fn rank_layouts(query: &FeatureGrid, entries: &[SlideEntry], k: usize) -> LayoutRanking {
    let scores = par::map_slice(entries, |e| layout_similarity(query, &e.feature).unwrap_or(0.0));
    let mut order: Vec<usize> = (0..entries.len()).collect();
    par::sort_by(&mut order, |&a, &b| {
        scores[b].total_cmp(&scores[a]).then_with(|| entries[a].slide_id.cmp(&entries[b].slide_id))
    });
    LayoutRanking {
        entries: order
            .into_iter()
            .take(k)
            .map(|i| RankedSlide { slide_id: entries[i].slide_id.clone(), score: scores[i] })
            .collect(),
    }
}
