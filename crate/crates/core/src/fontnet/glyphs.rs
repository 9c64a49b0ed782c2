//! Five synthetic typefaces derived from one 8×8 bitmap font, and the seeded
//! word-image dataset used to train the classifier.

use font8x8::{UnicodeFonts, BASIC_FONTS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::raster::GrayImage;

pub const GLYPH_H: usize = 32;
pub const GLYPH_W: usize = 96;

pub const FONT_NAMES: [&str; 5] = ["serif", "sans", "bold", "condensed", "mono"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FontStyle {
    /// Thin strokes with feet and caps on vertical stems.
    Serif,
    /// Double-size glyphs, proportional spacing.
    Sans,
    /// Double-size glyphs dilated sideways.
    Bold,
    /// Single-width, double-height glyphs, tight spacing.
    Condensed,
    /// Double-size glyphs on a wide fixed pitch.
    Mono,
}

impl FontStyle {
    pub const ALL: [FontStyle; 5] =
        [FontStyle::Serif, FontStyle::Sans, FontStyle::Bold, FontStyle::Condensed, FontStyle::Mono];

    pub fn label(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        FONT_NAMES[self.label()]
    }

    pub fn from_label(label: usize) -> Option<Self> {
        Self::ALL.get(label).copied()
    }
}

/// One normalized training image: `pixels` in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f32>,
    pub label: usize,
}

impl GlyphImage {
    pub fn from_gray(img: &GrayImage, label: usize) -> Self {
        Self {
            height: img.height(),
            width: img.width(),
            pixels: img.pixels().iter().map(|&v| v as f32 / 255.0).collect(),
            label,
        }
    }
}

type Bitmap = [[bool; 8]; 8];

fn bitmap(ch: char) -> Bitmap {
    let rows = BASIC_FONTS.get(ch).unwrap_or([0; 8]);
    let mut out = [[false; 8]; 8];
    for (r, bits) in rows.iter().enumerate() {
        for (c, cell) in out[r].iter_mut().enumerate() {
            *cell = bits >> c & 1 == 1;
        }
    }
    out
}

/// Inked column span `[lo, hi)`, or `None` for an empty glyph.
fn ink_span(b: &Bitmap) -> Option<(usize, usize)> {
    let inked = |c: usize| (0..8).any(|r| b[r][c]);
    let lo = (0..8).find(|&c| inked(c))?;
    let hi = (0..8).rev().find(|&c| inked(c))? + 1;
    Some((lo, hi))
}

struct Canvas {
    ink: Vec<bool>,
}

impl Canvas {
    fn new() -> Self {
        Self { ink: vec![false; GLYPH_W * GLYPH_H] }
    }

    fn dot(&mut self, x: i64, y: i64) {
        if (0..GLYPH_W as i64).contains(&x) && (0..GLYPH_H as i64).contains(&y) {
            self.ink[y as usize * GLYPH_W + x as usize] = true;
        }
    }
}

const BASELINE_TOP: i64 = 8;

/// Draws one glyph with its left edge at `x`; returns the advance.
fn draw_glyph(canvas: &mut Canvas, style: FontStyle, b: &Bitmap, x: i64) -> i64 {
    let y0 = BASELINE_TOP;
    let span = ink_span(b);
    match style {
        FontStyle::Serif => {
            for r in 0..8 {
                for c in 0..8 {
                    if !b[r][c] {
                        continue;
                    }
                    let (px, py) = (x + 2 * c as i64, y0 + 2 * r as i64);
                    canvas.dot(px, py);
                    canvas.dot(px, py + 1);
                    if c + 1 < 8 && b[r][c + 1] {
                        canvas.dot(px + 1, py);
                        canvas.dot(px + 1, py + 1);
                    }
                    let above = r > 0 && b[r - 1][c];
                    let below = r < 7 && b[r + 1][c];
                    if above && !below {
                        (-2..=2).for_each(|d| canvas.dot(px + d, py + 1));
                    }
                    if below && !above {
                        (-2..=2).for_each(|d| canvas.dot(px + d, py));
                    }
                }
            }
            16
        }
        FontStyle::Sans | FontStyle::Mono | FontStyle::Bold => {
            let (lo, hi) = match (style, span) {
                (FontStyle::Sans, Some(s)) => s,
                _ => (0, 8),
            };
            let extra = if style == FontStyle::Bold { 2 } else { 0 };
            for r in 0..8 {
                for c in lo..hi {
                    if b[r][c] {
                        let px = x + 2 * (c - lo) as i64;
                        let py = y0 + 2 * r as i64;
                        for dx in 0..2 + extra {
                            canvas.dot(px + dx, py);
                            canvas.dot(px + dx, py + 1);
                        }
                    }
                }
            }
            match style {
                FontStyle::Sans => 2 * (hi - lo) as i64 + 2,
                FontStyle::Bold => 18,
                _ => 22,
            }
        }
        FontStyle::Condensed => {
            let (lo, hi) = span.unwrap_or((0, 4));
            for r in 0..8 {
                for c in lo..hi {
                    if b[r][c] {
                        let px = x + (c - lo) as i64;
                        let py = y0 + 2 * r as i64;
                        canvas.dot(px, py);
                        canvas.dot(px, py + 1);
                    }
                }
            }
            (hi - lo) as i64 + 1
        }
    }
}

/// Renders `word` in `style` starting at `4 + offset` pixels from the left;
/// text past the right edge is clipped. `brightness` shifts every pixel by
/// that fraction of full scale.
pub fn render_word(word: &str, style: FontStyle, offset: i64, brightness: f64) -> GrayImage {
    let mut canvas = Canvas::new();
    let mut x = 4 + offset;
    for ch in word.chars() {
        if x >= GLYPH_W as i64 {
            break;
        }
        x += draw_glyph(&mut canvas, style, &bitmap(ch), x);
    }
    let shift = brightness * 255.0;
    let pixels = canvas
        .ink
        .iter()
        .map(|&ink| ((if ink { 0.0 } else { 255.0 }) + shift).round().clamp(0.0, 255.0) as u8)
        .collect();
    GrayImage::new(GLYPH_W, GLYPH_H, pixels).expect("canvas size")
}

fn random_word(rng: &mut ChaCha8Rng) -> String {
    let len = rng.random_range(4..=10);
    (0..len)
        .map(|i| {
            let base = if i == 0 && rng.random_bool(0.3) { b'A' } else { b'a' };
            (base + rng.random_range(0..26u8)) as char
        })
        .collect()
}

/// `per_font` random words per typeface, interleaved by class (so any prefix
/// of `5·k` images is balanced). Offsets are uniform in ±4 px and brightness
/// in ±10 %.
pub fn render_synthetic_dataset(per_font: usize, seed: u64) -> Vec<GlyphImage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(per_font * FontStyle::ALL.len());
    for _ in 0..per_font {
        for style in FontStyle::ALL {
            let word = random_word(&mut rng);
            let offset = rng.random_range(-4..=4);
            let brightness = rng.random_range(-0.1..=0.1);
            out.push(GlyphImage::from_gray(&render_word(&word, style, offset, brightness), style.label()));
        }
    }
    out
}
