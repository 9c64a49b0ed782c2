use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::retrieve_layouts;
use crate::corpus::Corpus;
use crate::ingest::{IngestError, LayoutClass, SlideLayout};
use crate::raster::GrayImage;

/// Size of the retrieved subset that drives sketch-conditioned heat maps.
pub const DEFAULT_HEATMAP_K: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassFilter {
    Only(LayoutClass),
    All,
}

impl ClassFilter {
    pub fn accepts(self, class: LayoutClass) -> bool {
        match self {
            ClassFilter::All => true,
            ClassFilter::Only(c) => c == class,
        }
    }
}

impl fmt::Display for ClassFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassFilter::All => f.write_str("all"),
            ClassFilter::Only(c) => c.fmt(f),
        }
    }
}

impl Serialize for ClassFilter {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for ClassFilter {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("all") {
            Ok(ClassFilter::All)
        } else {
            s.parse().map(ClassFilter::Only)
        }
    }
}

/// Per-cell region counts over a set of layouts.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatMap {
    pub grid_w: usize,
    pub grid_h: usize,
    pub class_filter: ClassFilter,
    /// Row-major.
    pub counts: Vec<u32>,
    /// `counts / max(counts)`, or all zero for an empty map.
    pub intensities: Vec<f64>,
}

impl HeatMap {
    fn from_counts(grid_w: usize, grid_h: usize, class_filter: ClassFilter, counts: Vec<u32>) -> Self {
        let max = counts.iter().copied().max().unwrap_or(0);
        let intensities =
            if max == 0 { vec![0.0; counts.len()] } else { counts.iter().map(|&c| c as f64 / max as f64).collect() };
        Self { grid_w, grid_h, class_filter, counts, intensities }
    }
}

/// Counts, per cell, the regions of the filtered class whose box contains
/// the cell center.
///
/// # Panics
/// If either grid dimension is zero.
pub fn heatmap<'a>(
    layouts: impl IntoIterator<Item = &'a SlideLayout>,
    class_filter: ClassFilter,
    grid_w: usize,
    grid_h: usize,
) -> HeatMap {
    assert!(grid_w >= 1 && grid_h >= 1, "grid dimensions must be positive");
    let mut counts = vec![0u32; grid_w * grid_h];
    for layout in layouts {
        for region in layout.regions.iter().filter(|r| class_filter.accepts(r.class)) {
            let b = region.bbox;
            // Candidate rows/cols whose centers can fall inside the box, padded
            // by one cell so rounding at the edges never drops a center.
            let c0 = ((b.x0 * grid_w as f64).floor() as usize).saturating_sub(1);
            let c1 = ((b.x1 * grid_w as f64).ceil() as usize + 1).min(grid_w);
            let r0 = ((b.y0 * grid_h as f64).floor() as usize).saturating_sub(1);
            let r1 = ((b.y1 * grid_h as f64).ceil() as usize + 1).min(grid_h);
            for row in r0..r1 {
                let cy = (row as f64 + 0.5) / grid_h as f64;
                for col in c0..c1 {
                    let cx = (col as f64 + 0.5) / grid_w as f64;
                    if b.contains(cx, cy) {
                        counts[row * grid_w + col] += 1;
                    }
                }
            }
        }
    }
    HeatMap::from_counts(grid_w, grid_h, class_filter, counts)
}

/// Heat map that follows the sketch: the whole corpus when there is no
/// query (or it is empty), otherwise the top-`k` retrieved layouts.
pub fn heatmap_for_sketch(
    query: Option<&SlideLayout>,
    corpus: &Corpus,
    class_filter: ClassFilter,
    k: usize,
) -> HeatMap {
    let (gw, gh) = corpus.grid();
    match query {
        Some(q) if !q.is_empty() => {
            let ranking = retrieve_layouts(q, corpus, k.max(1));
            let subset = ranking.entries.iter().filter_map(|e| corpus.layout(&e.slide_id));
            heatmap(subset, class_filter, gw, gh)
        }
        _ => heatmap(corpus.slides().iter().map(|s| &s.layout), class_filter, gw, gh),
    }
}

/// Renders darker-is-denser: `round(255 * (1 - intensity))`, nearest-neighbor
/// scaled to `width x height`.
pub fn render_heatmap(h: &HeatMap, width: usize, height: usize) -> GrayImage {
    let shade: Vec<u8> = h.intensities.iter().map(|&v| (255.0 * (1.0 - v)).round().clamp(0.0, 255.0) as u8).collect();
    GrayImage::from_fn(width, height, |x, y| {
        let col = x * h.grid_w / width;
        let row = y * h.grid_h / height;
        shade[row * h.grid_w + col]
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{LayoutRegion, NormRect};

    fn title_slide(id: &str) -> SlideLayout {
        let bbox = NormRect::new(0.0, 0.0, 1.0, 0.2).unwrap();
        SlideLayout::new(id, vec![LayoutRegion { class: LayoutClass::Title, bbox }]).unwrap()
    }

    #[test]
    fn empty_subset_is_zero() {
        let h = heatmap(std::iter::empty(), ClassFilter::All, 8, 4);
        assert!(h.counts.iter().all(|&c| c == 0));
        assert!(h.intensities.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_title_slides_fill_top_row() {
        let slides = [title_slide("a"), title_slide("b")];
        let h = heatmap(&slides, ClassFilter::Only(LayoutClass::Title), 4, 5);
        for row in 0..5 {
            for col in 0..4 {
                let i = row * 4 + col;
                if row == 0 {
                    assert_eq!((h.counts[i], h.intensities[i]), (2, 1.0));
                } else {
                    assert_eq!((h.counts[i], h.intensities[i]), (0, 0.0));
                }
            }
        }
        let text = heatmap(&slides, ClassFilter::Only(LayoutClass::Text), 4, 5);
        assert!(text.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn render_extremes() {
        let zero = heatmap(std::iter::empty(), ClassFilter::All, 4, 2);
        assert!(render_heatmap(&zero, 40, 20).pixels().iter().all(|&p| p == 255));
        let one = heatmap(&[title_slide("a")], ClassFilter::All, 4, 5);
        let img = render_heatmap(&one, 8, 10);
        assert_eq!(img.get(0, 0), 0);
        assert_eq!(img.get(7, 1), 0);
        assert_eq!(img.get(0, 2), 255);
    }

    #[test]
    fn filter_parsing() {
        assert_eq!("ALL".parse::<ClassFilter>().unwrap(), ClassFilter::All);
        assert_eq!("text".parse::<ClassFilter>().unwrap(), ClassFilter::Only(LayoutClass::Text));
        assert!("tables".parse::<ClassFilter>().is_err());
        assert_eq!(ClassFilter::Only(LayoutClass::Figure).to_string(), "figure");
    }
}
