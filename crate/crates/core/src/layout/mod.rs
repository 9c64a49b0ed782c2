//! Global design stage: layout features, ranking, and heat maps.

mod feature;
mod heatmap;
mod retrieval;

pub use feature::{layout_feature, layout_similarity, FeatureGrid, DEFAULT_GRID_H, DEFAULT_GRID_W};
pub use heatmap::{heatmap, heatmap_for_sketch, render_heatmap, ClassFilter, HeatMap, DEFAULT_HEATMAP_K};
pub use retrieval::{rank_layouts, retrieve_layouts, LayoutRanking, RankedSlide};

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("feature grids differ: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
}
