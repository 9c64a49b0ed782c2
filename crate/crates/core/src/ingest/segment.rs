use super::{LayoutClass, LayoutRegion, NormRect, SlideLayout};
use crate::raster::{binarize_otsu, connected_components, GrayImage, PixelRect, Polarity};

/// Components closer than this fraction of the slide extent are merged.
const MERGE_GAP: f64 = 0.02;
/// Title candidates lie entirely within this top fraction of the slide...
const TITLE_BAND: f64 = 0.25;
/// ...and span at least this fraction of its width.
const TITLE_MIN_WIDTH: f64 = 0.30;
/// Regions sparser than this are figures (line art, diagrams).
const FIGURE_MAX_DENSITY: f64 = 0.25;
/// Regions covering at least this fraction of the slide are figures.
const FIGURE_MIN_AREA: f64 = 0.20;

struct Blob {
    rect: PixelRect,
    ink: usize,
}

/// Rule-based layout labeling for slides without an annotation file.
///
/// The slide id of the returned layout is empty; callers assign it.
pub fn segment_layout_heuristic(slide: &GrayImage) -> SlideLayout {
    let (w, h) = (slide.width(), slide.height());
    let mask = binarize_otsu(slide, Polarity::InkDarker);
    let mut blobs: Vec<Blob> =
        connected_components(&mask).into_iter().map(|c| Blob { rect: c.bbox, ink: c.area }).collect();

    let gap_x = MERGE_GAP * w as f64;
    let gap_y = MERGE_GAP * h as f64;
    merge_close(&mut blobs, gap_x, gap_y);
    blobs.sort_by_key(|b| (b.rect.y, b.rect.x));

    let slide_area = (w * h) as f64;
    let norm = |r: &PixelRect| {
        NormRect::new(r.x as f64 / w as f64, r.y as f64 / h as f64, r.x1() as f64 / w as f64, r.y1() as f64 / h as f64)
            .expect("component boxes are non-empty and inside the slide")
    };

    let is_title =
        |b: &Blob| b.rect.y1() as f64 <= TITLE_BAND * h as f64 && b.rect.width as f64 >= TITLE_MIN_WIDTH * w as f64;
    // Widest title candidate wins; ties go to the topmost (first after sorting).
    let title = blobs
        .iter()
        .enumerate()
        .filter(|(_, b)| is_title(b))
        .fold(None::<(usize, usize)>, |best, (i, b)| match best {
            Some((_, bw)) if bw >= b.rect.width => best,
            _ => Some((i, b.rect.width)),
        })
        .map(|(i, _)| i);

    let regions = blobs
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let density = b.ink as f64 / b.rect.area() as f64;
            let class = if Some(i) == title {
                LayoutClass::Title
            } else if density < FIGURE_MAX_DENSITY || b.rect.area() as f64 >= FIGURE_MIN_AREA * slide_area {
                LayoutClass::Figure
            } else {
                LayoutClass::Text
            };
            LayoutRegion { class, bbox: norm(&b.rect) }
        })
        .collect();
    SlideLayout::new(String::new(), regions).expect("at most one title by construction")
}

/// Separation between two intervals; 0 when they touch or overlap.
fn gap(a0: usize, a1: usize, b0: usize, b1: usize) -> f64 {
    if a1 <= b0 {
        (b0 - a1) as f64
    } else if b1 <= a0 {
        (a0 - b1) as f64
    } else {
        0.0
    }
}

fn merge_close(blobs: &mut Vec<Blob>, gap_x: f64, gap_y: f64) {
    loop {
        let mut merged = false;
        let mut i = 0;
        while i < blobs.len() {
            let mut j = i + 1;
            while j < blobs.len() {
                let (a, b) = (&blobs[i].rect, &blobs[j].rect);
                if gap(a.x, a.x1(), b.x, b.x1()) < gap_x && gap(a.y, a.y1(), b.y, b.y1()) < gap_y {
                    let other = blobs.swap_remove(j);
                    blobs[i].rect = blobs[i].rect.union(&other.rect);
                    blobs[i].ink += other.ink;
                    merged = true;
                } else {
                    j += 1;
                }
            }
            i += 1;
        }
        if !merged {
            break;
        }
    }
}
