use super::{LayoutClass, NormRect, SlideLayout};
use crate::raster::{binarize_otsu, BinImage, GrayImage, PixelRect, Polarity};

/// A binarized figure crop with provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagram {
    pub diagram_id: String,
    pub slide_id: String,
    pub mask: BinImage,
}

/// Pixel rectangle covered by a normalized box: outward rounding, clamped,
/// never empty.
pub fn region_pixel_rect(bbox: &NormRect, width: usize, height: usize) -> PixelRect {
    let x0 = ((bbox.x0 * width as f64).floor() as usize).min(width - 1);
    let y0 = ((bbox.y0 * height as f64).floor() as usize).min(height - 1);
    let x1 = ((bbox.x1 * width as f64).ceil() as usize).clamp(x0 + 1, width);
    let y1 = ((bbox.y1 * height as f64).ceil() as usize).clamp(y0 + 1, height);
    PixelRect { x: x0, y: y0, width: x1 - x0, height: y1 - y0 }
}

/// One binarized crop per figure region, id `<slide_id>_<region index>`.
pub fn extract_diagrams(slide: &GrayImage, layout: &SlideLayout) -> Vec<Diagram> {
    layout
        .regions
        .iter()
        .enumerate()
        .filter(|(_, r)| r.class == LayoutClass::Figure)
        .map(|(i, r)| {
            let rect = region_pixel_rect(&r.bbox, slide.width(), slide.height());
            let crop = slide.crop(rect.x, rect.y, rect.width, rect.height).expect("rect clamped to slide");
            Diagram {
                diagram_id: format!("{}_{}", layout.slide_id, i),
                slide_id: layout.slide_id.clone(),
                mask: binarize_otsu(&crop, Polarity::InkDarker),
            }
        })
        .collect()
}
