//! Seeded synthetic data: diagrams, slide decks, layouts, and annotated
//! slides. Used by tests, benchmarks, and the demo CLI; every generator is a
//! pure function of its arguments.

use std::fs;
use std::io;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::features::{FeatureExtractor, KeypointSet};
use crate::ingest::{layout_to_json, LayoutClass, LayoutRegion, NormRect, SlideLayout};
use crate::raster::{encode_png, GrayImage};

pub const INK: u8 = 0;
pub const PAPER: u8 = 255;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Drawing primitives (clipped to the canvas).

pub fn fill_rect(img: &mut GrayImage, x0: i64, y0: i64, x1: i64, y1: i64, v: u8) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    for y in y0.max(0)..y1.min(h) {
        for x in x0.max(0)..x1.min(w) {
            img.set(x as usize, y as usize, v);
        }
    }
}

/// Rectangle outline whose outer edge is `[x0,x1) × [y0,y1)`.
pub fn stroke_rect(img: &mut GrayImage, x0: i64, y0: i64, x1: i64, y1: i64, thickness: i64, v: u8) {
    fill_rect(img, x0, y0, x1, y0 + thickness, v);
    fill_rect(img, x0, y1 - thickness, x1, y1, v);
    fill_rect(img, x0, y0, x0 + thickness, y1, v);
    fill_rect(img, x1 - thickness, y0, x1, y1, v);
}

/// Line of square pen dots from `a` to `b`.
pub fn draw_line(img: &mut GrayImage, a: (i64, i64), b: (i64, i64), thickness: i64, v: u8) {
    let steps = (b.0 - a.0).abs().max((b.1 - a.1).abs()).max(1);
    let r0 = thickness / 2;
    for s in 0..=steps {
        let x = a.0 + ((b.0 - a.0) * s + steps / 2 * (b.0 - a.0).signum()) / steps;
        let y = a.1 + ((b.1 - a.1) * s + steps / 2 * (b.1 - a.1).signum()) / steps;
        fill_rect(img, x - r0, y - r0, x - r0 + thickness, y - r0 + thickness, v);
    }
}

pub fn fill_disc(img: &mut GrayImage, cx: i64, cy: i64, r: i64, v: u8) {
    let (w, h) = (img.width() as i64, img.height() as i64);
    for y in (cy - r).max(0)..=(cy + r).min(h - 1) {
        for x in (cx - r).max(0)..=(cx + r).min(w - 1) {
            if (x - cx).pow(2) + (y - cy).pow(2) <= r * r {
                img.set(x as usize, y as usize, v);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Diagrams.

/// A box-and-arrow diagram plus the outer corners of every box.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDiagram {
    pub image: GrayImage,
    pub corners: Vec<(usize, usize)>,
}

const BOX_STROKE: i64 = 3;
const BOX_MARGIN: i64 = 28;

/// Non-overlapping outlined boxes joined in sequence by arrows.
pub fn box_diagram_planted(width: usize, height: usize, n_boxes: usize, seed: u64) -> BoxDiagram {
    let mut rng = rng(seed);
    let mut image = GrayImage::filled(width, height, PAPER);
    let (w, h) = (width as i64, height as i64);
    let min_side = 24.max((w.min(h) / 8).min(60));
    let max_side = (w.min(h) / 3).max(min_side + 1);
    let mut boxes: Vec<[i64; 4]> = Vec::new();
    for _ in 0..n_boxes * 200 {
        if boxes.len() == n_boxes {
            break;
        }
        let bw = rng.random_range(min_side..=max_side);
        let bh = rng.random_range(min_side..=max_side);
        if w - 2 * BOX_MARGIN <= bw || h - 2 * BOX_MARGIN <= bh {
            break;
        }
        let x0 = rng.random_range(BOX_MARGIN..w - BOX_MARGIN - bw);
        let y0 = rng.random_range(BOX_MARGIN..h - BOX_MARGIN - bh);
        let cand = [x0, y0, x0 + bw, y0 + bh];
        // Keep a clear gap so corners stay isolated.
        let gap = 16;
        if boxes
            .iter()
            .all(|b| cand[0] >= b[2] + gap || b[0] >= cand[2] + gap || cand[1] >= b[3] + gap || b[1] >= cand[3] + gap)
        {
            boxes.push(cand);
        }
    }
    let mut corners = Vec::new();
    for b in &boxes {
        stroke_rect(&mut image, b[0], b[1], b[2], b[3], BOX_STROKE, INK);
        corners.extend([
            (b[0] as usize, b[1] as usize),
            ((b[2] - 1) as usize, b[1] as usize),
            (b[0] as usize, (b[3] - 1) as usize),
            ((b[2] - 1) as usize, (b[3] - 1) as usize),
        ]);
    }
    for pair in boxes.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let from = edge_toward(a, center(b));
        let to = edge_toward(b, center(a));
        draw_line(&mut image, from, to, 2, INK);
        arrow_head(&mut image, from, to);
    }
    BoxDiagram { image, corners }
}

pub fn box_diagram(width: usize, height: usize, n_boxes: usize, seed: u64) -> GrayImage {
    box_diagram_planted(width, height, n_boxes, seed).image
}

fn center(b: [i64; 4]) -> (i64, i64) {
    ((b[0] + b[2]) / 2, (b[1] + b[3]) / 2)
}

/// Midpoint of the box edge facing `target`, pushed just outside the stroke.
fn edge_toward(b: [i64; 4], target: (i64, i64)) -> (i64, i64) {
    let c = center(b);
    let (dx, dy) = (target.0 - c.0, target.1 - c.1);
    if dx.abs() >= dy.abs() {
        if dx >= 0 {
            (b[2] + 2, c.1)
        } else {
            (b[0] - 3, c.1)
        }
    } else if dy >= 0 {
        (c.0, b[3] + 2)
    } else {
        (c.0, b[1] - 3)
    }
}

fn arrow_head(img: &mut GrayImage, from: (i64, i64), to: (i64, i64)) {
    let (dx, dy) = ((to.0 - from.0) as f64, (to.1 - from.1) as f64);
    let len = dx.hypot(dy);
    if len < 12.0 {
        return;
    }
    let (ux, uy) = (dx / len, dy / len);
    for sign in [-1.0, 1.0] {
        let (c, s) = (0.5f64.cos(), sign * 0.5f64.sin());
        let (rx, ry) = (ux * c - uy * s, ux * s + uy * c);
        let tail = ((to.0 as f64 - 10.0 * rx).round() as i64, (to.1 as f64 - 10.0 * ry).round() as i64);
        draw_line(img, tail, to, 2, INK);
    }
}

/// Filled dots scattered uniformly; structurally unlike box diagrams.
pub fn scatter_diagram(width: usize, height: usize, n_points: usize, seed: u64) -> GrayImage {
    let mut rng = rng(seed);
    let mut img = GrayImage::filled(width, height, PAPER);
    let (w, h) = (width as i64, height as i64);
    for _ in 0..n_points {
        let r = rng.random_range(3..=7);
        let cx = rng.random_range(r..(w - r).max(r + 1));
        let cy = rng.random_range(r..(h - r).max(r + 1));
        fill_disc(&mut img, cx, cy, r, INK);
    }
    img
}

/// Mixed content (boxes, dots, strokes) with varied size; rich in corners.
pub fn random_diagram(seed: u64) -> GrayImage {
    let mut rng = rng(seed ^ 0xD1A6_0000);
    let width = rng.random_range(320..=512usize);
    let height = rng.random_range(240..=384usize);
    let n_boxes = rng.random_range(2..=5);
    let mut img = box_diagram(width, height, n_boxes, rng.random());
    let (w, h) = (width as i64, height as i64);
    for _ in 0..rng.random_range(4..=12) {
        let r = rng.random_range(3..=6);
        fill_disc(&mut img, rng.random_range(20..w - 20), rng.random_range(20..h - 20), r, INK);
    }
    for _ in 0..rng.random_range(2..=5) {
        let a = (rng.random_range(20..w - 20), rng.random_range(20..h - 20));
        let b = (rng.random_range(20..w - 20), rng.random_range(20..h - 20));
        draw_line(&mut img, a, b, 2, rng.random_range(0..=80));
    }
    img
}

/// True when the set has at least two keypoints and its descriptors are
/// nonzero and pairwise distinct — the precondition for S(x, x) = 1.
pub fn has_distinct_descriptors(set: &KeypointSet) -> bool {
    if set.len() < 2 || set.descriptors.iter().any(|d| d.count_ones() == 0) {
        return false;
    }
    let mut sorted: Vec<_> = set.descriptors.iter().map(|d| d.0).collect();
    sorted.sort_unstable();
    sorted.windows(2).all(|w| w[0] != w[1])
}

/// `n` random diagrams whose descriptor sets satisfy
/// [`has_distinct_descriptors`]; candidates failing it are skipped.
pub fn distinct_diagrams(n: usize, seed: u64, extractor: &FeatureExtractor) -> Vec<(GrayImage, KeypointSet)> {
    let mut out = Vec::with_capacity(n);
    let mut sub = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    while out.len() < n {
        let img = random_diagram(sub);
        sub = sub.wrapping_add(1);
        let set = extractor.extract(&img);
        if has_distinct_descriptors(&set) {
            out.push((img, set));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Frame sequences.

/// Side of one hash block; a 9×8 grid of blocks maps exactly onto the 9×8
/// hash thumbnail.
pub const DECK_BLOCK: usize = 32;
pub const DECK_WIDTH: usize = 9 * DECK_BLOCK;
pub const DECK_HEIGHT: usize = 8 * DECK_BLOCK;

/// Frames of a recorded talk: `n_slides` distinct slides, each shown for
/// `frames_per_slide` frames with ±2 pixel noise and up to two flipped hash
/// bits per frame. Distinct slides differ in at least 24 hash bits.
pub fn noisy_deck(n_slides: usize, frames_per_slide: usize, seed: u64) -> Vec<GrayImage> {
    let mut rng = rng(seed);
    let mut patterns: Vec<u64> = Vec::new();
    while patterns.len() < n_slides {
        let p: u64 = rng.random();
        if patterns.iter().all(|q| (p ^ q).count_ones() >= 24) {
            patterns.push(p);
        }
    }
    let mut frames = Vec::with_capacity(n_slides * frames_per_slide);
    for &pattern in &patterns {
        let levels = block_levels(pattern, &mut rng);
        for _ in 0..frames_per_slide {
            let mut lv = levels;
            let flips = rng.random_range(0..=2usize);
            for _ in 0..flips {
                // Column 8 only feeds bit (r, 7): reversing that comparison
                // flips exactly one hash bit.
                let r = rng.random_range(0..8);
                let d = lv[r][8] as i32 - lv[r][7] as i32;
                lv[r][8] = (lv[r][7] as i32 - d) as u8;
            }
            frames.push(GrayImage::from_fn(DECK_WIDTH, DECK_HEIGHT, |x, y| {
                let base = lv[y / DECK_BLOCK][x / DECK_BLOCK] as i32;
                (base + rng.random_range(-2..=2)).clamp(0, 255) as u8
            }));
        }
    }
    frames
}

/// Block levels whose horizontal comparisons spell `pattern`, with every
/// adjacent gap at least 12 so pixel noise cannot reverse one.
fn block_levels(pattern: u64, rng: &mut ChaCha8Rng) -> [[u8; 9]; 8] {
    let mut levels = [[0u8; 9]; 8];
    for (r, row) in levels.iter_mut().enumerate() {
        let mut v: i32 = 128;
        row[0] = v as u8;
        for c in 0..8 {
            let step = rng.random_range(12..=14);
            v += if pattern >> (r * 8 + c) & 1 == 1 { step } else { -step };
            row[c + 1] = v as u8;
        }
    }
    levels
}

// ---------------------------------------------------------------------------
// Layouts and slides.

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> NormRect {
    NormRect::new(x0, y0, x1, y1).expect("generator produces valid rects")
}

fn quant(v: f64) -> f64 {
    (v * 1000.0).round() / 1000.0
}

/// Random layout: at most one title, up to three text blocks, up to two
/// figures. Coordinates are multiples of 0.001.
pub fn random_layout(slide_id: impl Into<String>, rng: &mut impl Rng) -> SlideLayout {
    let mut regions = Vec::new();
    if rng.random_bool(0.7) {
        let x0 = quant(rng.random_range(0.0..0.2));
        let y0 = quant(rng.random_range(0.0..0.08));
        regions.push(LayoutRegion {
            class: LayoutClass::Title,
            bbox: rect(x0, y0, quant(rng.random_range(x0 + 0.3..1.0)), quant(rng.random_range(y0 + 0.05..0.25))),
        });
    }
    for class in [LayoutClass::Text, LayoutClass::Figure] {
        let n = rng.random_range(0..=if class == LayoutClass::Text { 3 } else { 2 });
        for _ in 0..n {
            let x0 = quant(rng.random_range(0.0..0.8));
            let y0 = quant(rng.random_range(0.2..0.85));
            let x1 = quant(rng.random_range(x0 + 0.05..=1.0));
            let y1 = quant(rng.random_range(y0 + 0.05..=1.0));
            regions.push(LayoutRegion { class, bbox: rect(x0, y0, x1, y1) });
        }
    }
    SlideLayout::new(slide_id, regions).expect("one title at most")
}

/// `n` random layouts with ids `slide_0000`, `slide_0001`, ….
pub fn random_layouts(n: usize, seed: u64) -> Vec<SlideLayout> {
    let mut rng = rng(seed);
    (0..n).map(|i| random_layout(format!("slide_{i:04}"), &mut rng)).collect()
}

pub const SLIDE_WIDTH: usize = 640;
pub const SLIDE_HEIGHT: usize = 360;

/// Draws a slide for `layout`: solid title bar, striped text blocks, and a
/// box diagram inside each figure.
pub fn render_slide(layout: &SlideLayout, width: usize, height: usize, seed: u64) -> GrayImage {
    let mut img = GrayImage::filled(width, height, PAPER);
    let (w, h) = (width as f64, height as f64);
    for (i, region) in layout.regions.iter().enumerate() {
        let b = region.bbox;
        let (x0, y0) = ((b.x0 * w).round() as i64, (b.y0 * h).round() as i64);
        let (x1, y1) = ((b.x1 * w).round() as i64, (b.y1 * h).round() as i64);
        match region.class {
            LayoutClass::Title => fill_rect(&mut img, x0, y0, x1, y1, 30),
            LayoutClass::Text => {
                let mut y = y0;
                while y < y1 {
                    fill_rect(&mut img, x0, y, x1, (y + 6).min(y1), 40);
                    y += 10;
                }
            }
            LayoutClass::Figure => {
                let (fw, fh) = ((x1 - x0).max(1) as usize, (y1 - y0).max(1) as usize);
                let fig = figure_content(fw, fh, seed.wrapping_add(i as u64));
                for fy in 0..fh {
                    for fx in 0..fw {
                        let (px, py) = (x0 as usize + fx, y0 as usize + fy);
                        if px < width && py < height {
                            img.set(px, py, fig.get(fx, fy));
                        }
                    }
                }
            }
        }
    }
    img
}

/// Outlined frame with a few inner boxes and dots — sparse ink.
fn figure_content(w: usize, h: usize, seed: u64) -> GrayImage {
    let mut img = if w >= 96 && h >= 96 { box_diagram(w, h, 3, seed) } else { GrayImage::filled(w, h, PAPER) };
    stroke_rect(&mut img, 0, 0, w as i64, h as i64, 2, INK);
    img
}

/// A slide with planted, well-separated regions whose ink matches the
/// segmenter's class rules; returns the image and its ground-truth layout.
pub fn planted_slide(slide_id: impl Into<String>, seed: u64) -> (GrayImage, SlideLayout) {
    let mut rng = rng(seed);
    let mut regions = Vec::new();
    // Title band in the top quarter, at least 40% wide.
    let tx0 = quant(rng.random_range(0.05..0.15));
    let ty0 = quant(rng.random_range(0.03..0.08));
    regions.push(LayoutRegion {
        class: LayoutClass::Title,
        bbox: rect(tx0, ty0, quant(rng.random_range(tx0 + 0.4..0.9)), quant(ty0 + rng.random_range(0.06..0.1))),
    });
    // Left column: text blocks; right column: one figure.
    let split = quant(rng.random_range(0.5..0.6));
    let n_text = rng.random_range(1..=2);
    let top = 0.3;
    let band = (0.95 - top) / n_text as f64;
    for i in 0..n_text {
        let y0 = quant(top + band * i as f64);
        let y1 = quant(y0 + band * rng.random_range(0.45..0.75));
        let x1 = quant(rng.random_range(0.3..split - 0.06));
        regions.push(LayoutRegion { class: LayoutClass::Text, bbox: rect(0.05, y0, x1, y1) });
    }
    let fy0 = quant(rng.random_range(0.3..0.4));
    regions.push(LayoutRegion {
        class: LayoutClass::Figure,
        bbox: rect(split, fy0, quant(rng.random_range(0.88..0.95)), quant(rng.random_range(0.85..0.95))),
    });
    let layout = SlideLayout::new(slide_id, regions).expect("one title");
    let img = render_slide(&layout, SLIDE_WIDTH, SLIDE_HEIGHT, seed);
    (img, layout)
}

/// Writes `n` planted slides to `<dir>/slides/<id>.png` and their layouts to
/// `<dir>/annotations/<id>.layout.json`.
pub fn write_annotated_slides(dir: &Path, n: usize, seed: u64) -> io::Result<()> {
    let slides = dir.join("slides");
    let annotations = dir.join("annotations");
    fs::create_dir_all(&slides)?;
    fs::create_dir_all(&annotations)?;
    for i in 0..n {
        let id = format!("s{i:03}");
        let (img, layout) = planted_slide(&id, seed.wrapping_add(i as u64));
        let png = encode_png(&img).map_err(io::Error::other)?;
        fs::write(slides.join(format!("{id}.png")), png)?;
        fs::write(annotations.join(format!("{id}.layout.json")), layout_to_json(&layout))?;
    }
    Ok(())
}

/// Writes a frame sequence as `<dir>/frame_00000.png`, ….
pub fn write_frames(dir: &Path, frames: &[GrayImage]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    for (i, f) in frames.iter().enumerate() {
        let png = encode_png(f).map_err(io::Error::other)?;
        fs::write(dir.join(format!("frame_{i:05}.png")), png)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{dhash, hamming};

    #[test]
    fn deck_hash_noise_is_bounded() {
        let frames = noisy_deck(3, 10, 1);
        for slide in frames.chunks(10) {
            let h0 = dhash(&slide[0]);
            assert!(slide.iter().all(|f| hamming(dhash(f), h0) <= 4));
        }
        assert!(hamming(dhash(&frames[0]), dhash(&frames[10])) > 16);
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(random_diagram(4), random_diagram(4));
        assert_eq!(random_layouts(5, 2), random_layouts(5, 2));
        assert_eq!(planted_slide("a", 9), planted_slide("a", 9));
    }

    #[test]
    fn boxes_are_planted_as_requested() {
        let d = box_diagram_planted(512, 384, 3, 7);
        assert_eq!(d.corners.len(), 12);
        for &(x, y) in &d.corners {
            assert_eq!(d.image.get(x, y), INK);
        }
    }
}
