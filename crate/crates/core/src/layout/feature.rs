use super::LayoutError;
use crate::ingest::{LayoutClass, SlideLayout};

/// 16:9 slides map onto square cells at 32x18.
pub const DEFAULT_GRID_W: usize = 32;
pub const DEFAULT_GRID_H: usize = 18;

/// Per-class cell coverage, channel-major `[class][row][col]`, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureGrid {
    pub grid_w: usize,
    pub grid_h: usize,
    pub values: Vec<f64>,
}

impl FeatureGrid {
    pub fn zeros(grid_w: usize, grid_h: usize) -> Self {
        Self { grid_w, grid_h, values: vec![0.0; 3 * grid_w * grid_h] }
    }

    #[inline]
    pub fn at(&self, class: LayoutClass, col: usize, row: usize) -> f64 {
        self.values[(class.index() * self.grid_h + row) * self.grid_w + col]
    }

    pub fn channel(&self, class: LayoutClass) -> &[f64] {
        let n = self.grid_w * self.grid_h;
        &self.values[class.index() * n..(class.index() + 1) * n]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// Occupancy grid: each region adds its exact area overlap with every cell
/// (as a fraction of the cell) to its class channel, clamped to 1.
///
/// # Panics
/// If either grid dimension is zero.
pub fn layout_feature(layout: &SlideLayout, grid_w: usize, grid_h: usize) -> FeatureGrid {
    assert!(grid_w >= 1 && grid_h >= 1, "grid dimensions must be positive");
    let mut grid = FeatureGrid::zeros(grid_w, grid_h);
    let (gw, gh) = (grid_w as f64, grid_h as f64);
    for region in &layout.regions {
        let b = region.bbox;
        let c0 = ((b.x0 * gw).floor() as usize).min(grid_w - 1);
        let c1 = ((b.x1 * gw).ceil() as usize).min(grid_w);
        let r0 = ((b.y0 * gh).floor() as usize).min(grid_h - 1);
        let r1 = ((b.y1 * gh).ceil() as usize).min(grid_h);
        let base = region.class.index() * grid_w * grid_h;
        for row in r0..r1 {
            // Work in cell units so fully covered cells give exactly 1.
            let fy = overlap(b.y0 * gh, b.y1 * gh, row as f64, (row + 1) as f64);
            if fy <= 0.0 {
                continue;
            }
            for col in c0..c1 {
                let fx = overlap(b.x0 * gw, b.x1 * gw, col as f64, (col + 1) as f64);
                if fx <= 0.0 {
                    continue;
                }
                let v = &mut grid.values[base + row * grid_w + col];
                *v = (*v + fx * fy).min(1.0);
            }
        }
    }
    grid
}

#[inline]
fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

/// Cosine similarity of the flattened grids; 0 when either grid is all zero.
pub fn layout_similarity(a: &FeatureGrid, b: &FeatureGrid) -> Result<f64, LayoutError> {
    if (a.grid_w, a.grid_h) != (b.grid_w, b.grid_h) {
        return Err(LayoutError::DimensionMismatch(a.grid_w, a.grid_h, b.grid_w, b.grid_h));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.values.iter().zip(&b.values) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (na * nb).sqrt()).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{LayoutRegion, NormRect};

    fn layout(regions: &[(LayoutClass, [f64; 4])]) -> SlideLayout {
        SlideLayout::new(
            "t",
            regions
                .iter()
                .map(|&(class, b)| LayoutRegion { class, bbox: NormRect::new(b[0], b[1], b[2], b[3]).unwrap() })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn empty_layout_is_zero() {
        assert!(layout_feature(&layout(&[]), 32, 18).is_zero());
    }

    #[test]
    fn full_figure_fills_channel() {
        let g = layout_feature(&layout(&[(LayoutClass::Figure, [0.0, 0.0, 1.0, 1.0])]), 32, 18);
        assert!(g.channel(LayoutClass::Figure).iter().all(|&v| v == 1.0));
        assert!(g.channel(LayoutClass::Title).iter().all(|&v| v == 0.0));
        assert!(g.channel(LayoutClass::Text).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn aligned_region_on_4x1() {
        let g = layout_feature(&layout(&[(LayoutClass::Figure, [0.25, 0.0, 0.75, 1.0])]), 4, 1);
        assert_eq!(g.channel(LayoutClass::Figure), &[0.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn partial_cells_and_clamping() {
        let g = layout_feature(&layout(&[(LayoutClass::Text, [0.0, 0.0, 0.375, 0.5])]), 4, 2);
        assert_eq!(g.channel(LayoutClass::Text), &[1.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let twice = layout(&[(LayoutClass::Text, [0.0, 0.0, 1.0, 1.0]), (LayoutClass::Text, [0.0, 0.0, 0.5, 1.0])]);
        assert!(layout_feature(&twice, 4, 2).values.iter().all(|&v| v <= 1.0));
    }

    #[test]
    fn similarity_identity_and_orthogonality() {
        let t = layout_feature(&layout(&[(LayoutClass::Title, [0.1, 0.0, 0.9, 0.2])]), 32, 18);
        let f = layout_feature(&layout(&[(LayoutClass::Figure, [0.1, 0.0, 0.9, 0.2])]), 32, 18);
        assert_eq!(layout_similarity(&t, &t).unwrap(), 1.0);
        assert_eq!(layout_similarity(&t, &f).unwrap(), 0.0);
        assert_eq!(layout_similarity(&t, &FeatureGrid::zeros(32, 18)).unwrap(), 0.0);
        assert!(matches!(layout_similarity(&t, &FeatureGrid::zeros(4, 4)), Err(LayoutError::DimensionMismatch(..))));
    }
}
