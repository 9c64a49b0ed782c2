//! From frames and slides to layouts and diagram crops.

mod annotation;
mod diagrams;
mod segment;
mod slides;

pub use annotation::{layout_to_json, parse_layout_annotation};
pub use diagrams::{extract_diagrams, region_pixel_rect, Diagram};
pub use segment::segment_layout_heuristic;
pub use slides::{extract_slides, select_slides, ExtractedSlide, DEFAULT_HASH_THRESHOLD};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("no frames to process")]
    EmptyInput,
    #[error("hash threshold {0} outside 0..=64")]
    InvalidThreshold(u32),
    #[error("annotation schema error: {0}")]
    SchemaError(String),
    #[error("annotation range error: {0}")]
    RangeError(String),
}

/// The three region categories a slide layout is made of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayoutClass {
    Title,
    Text,
    Figure,
}

impl LayoutClass {
    pub const ALL: [LayoutClass; 3] = [LayoutClass::Title, LayoutClass::Text, LayoutClass::Figure];

    /// Channel index used by feature grids and heat maps.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LayoutClass::Title => "title",
            LayoutClass::Text => "text",
            LayoutClass::Figure => "figure",
        }
    }
}

impl fmt::Display for LayoutClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LayoutClass {
    type Err = IngestError;

    /// Case-insensitive.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "title" => Ok(LayoutClass::Title),
            "text" => Ok(LayoutClass::Text),
            "figure" => Ok(LayoutClass::Figure),
            _ => Err(IngestError::SchemaError(format!("unknown layout class {s:?}"))),
        }
    }
}

/// Rectangle in normalized slide coordinates, origin top-left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl NormRect {
    /// Validates `0 <= x0 < x1 <= 1` and `0 <= y0 < y1 <= 1`.
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, IngestError> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if ![x0, y0, x1, y1].into_iter().all(in_unit) {
            return Err(IngestError::RangeError(format!("bbox [{x0}, {y0}, {x1}, {y1}] outside [0, 1]")));
        }
        if x0 >= x1 || y0 >= y1 {
            return Err(IngestError::RangeError(format!("bbox [{x0}, {y0}, {x1}, {y1}] is empty or inverted")));
        }
        Ok(Self { x0, y0, x1, y1 })
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Half-open containment `[x0, x1) x [y0, y1)`.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.x0, self.y0, self.x1, self.y1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutRegion {
    pub class: LayoutClass,
    pub bbox: NormRect,
}

/// Labeled regions of one slide. Holds at most one title region.
#[derive(Debug, Clone, PartialEq)]
pub struct SlideLayout {
    pub slide_id: String,
    pub regions: Vec<LayoutRegion>,
}

impl SlideLayout {
    pub fn new(slide_id: impl Into<String>, regions: Vec<LayoutRegion>) -> Result<Self, IngestError> {
        let titles = regions.iter().filter(|r| r.class == LayoutClass::Title).count();
        if titles > 1 {
            return Err(IngestError::SchemaError(format!("{titles} title regions; at most one allowed")));
        }
        Ok(Self { slide_id: slide_id.into(), regions })
    }

    pub fn is_empty(&self) -> bool {
        self.regions.is_empty()
    }

    pub fn count(&self, class: LayoutClass) -> usize {
        self.regions.iter().filter(|r| r.class == class).count()
    }
}
