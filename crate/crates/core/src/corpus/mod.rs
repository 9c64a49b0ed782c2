//! On-disk corpus: slides, layouts, diagram masks, and cached descriptors.
//!
//! ```text
//! <dir>/index.json
//! <dir>/slides/<slide_id>.png
//! <dir>/layouts/<slide_id>.layout.json
//! <dir>/diagrams/<diagram_id>.png
//! <dir>/features/<diagram_id>.sgfd
//! <dir>/fonts/model.sgfm            (written by font training)
//! ```
//!
//! A loaded [`Corpus`] is immutable and can be shared across threads.

mod build;
mod load;

pub use build::{build_corpus, BuildConfig, BuildInput, SlideSource};
pub use load::load_corpus;

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{FeatureConfig, FeatureExtractor, KeypointSet};
use crate::ingest::{IngestError, SlideLayout};
use crate::layout::{layout_feature, FeatureGrid};
use crate::raster::RasterError;

pub const INDEX_VERSION: u32 = 1;
pub const INDEX_FILE: &str = "index.json";
pub const FONT_MODEL_PATH: &str = "fonts/model.sgfm";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("I/O error at {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("annotation for slide {0:?} has no matching slide")]
    AnnotationMismatch(String),
    #[error("bad annotation {path}: {source}")]
    Annotation { path: PathBuf, source: IngestError },
    #[error("index version {found} is not supported (expected {INDEX_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error("missing artifact {0}")]
    MissingArtifact(PathBuf),
    #[error(transparent)]
    Raster(#[from] RasterError),
}

impl CorpusError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CorpusError::Io { path: path.into(), source }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlideRecord {
    pub slide_id: String,
    pub slide_path: String,
    pub layout_path: String,
    pub diagram_ids: Vec<String>,
    /// Source frame ordinal when the slide came from a frame sequence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramRecord {
    pub diagram_id: String,
    pub slide_id: String,
    pub mask_path: String,
    pub feature_cache_path: String,
    pub width: usize,
    pub height: usize,
}

/// Contents of `index.json`. Paths are relative to the corpus directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusIndex {
    pub version: u32,
    pub pattern_seed: u64,
    pub grid_w: usize,
    pub grid_h: usize,
    pub features: FeatureConfig,
    pub slides: Vec<SlideRecord>,
    pub diagrams: Vec<DiagramRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlideEntry {
    pub slide_id: String,
    pub layout: SlideLayout,
    pub feature: FeatureGrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagramEntry {
    pub diagram_id: String,
    pub slide_id: String,
    pub features: KeypointSet,
}

/// Immutable in-memory corpus. Slides and diagrams are sorted by id.
#[derive(Debug, Clone)]
pub struct Corpus {
    index: CorpusIndex,
    root: Option<PathBuf>,
    slides: Vec<SlideEntry>,
    diagrams: Vec<DiagramEntry>,
    slide_pos: HashMap<String, usize>,
    diagram_pos: HashMap<String, usize>,
    extractor: FeatureExtractor,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.index == other.index && self.slides == other.slides && self.diagrams == other.diagrams
    }
}

impl Corpus {
    fn assemble(
        index: CorpusIndex,
        root: Option<PathBuf>,
        mut slides: Vec<SlideEntry>,
        mut diagrams: Vec<DiagramEntry>,
    ) -> Self {
        slides.sort_by(|a, b| a.slide_id.cmp(&b.slide_id));
        diagrams.sort_by(|a, b| a.diagram_id.cmp(&b.diagram_id));
        let slide_pos = slides.iter().enumerate().map(|(i, s)| (s.slide_id.clone(), i)).collect();
        let diagram_pos = diagrams.iter().enumerate().map(|(i, d)| (d.diagram_id.clone(), i)).collect();
        let extractor = FeatureExtractor::new(index.features);
        Self { index, root, slides, diagrams, slide_pos, diagram_pos, extractor }
    }

    /// Corpus held only in memory (no artifact paths), for synthetic data and
    /// tests. Diagrams are `(diagram_id, slide_id, features)`.
    pub fn from_parts(
        layouts: Vec<SlideLayout>,
        diagrams: Vec<(String, String, KeypointSet)>,
        grid: (usize, usize),
        features: FeatureConfig,
    ) -> Self {
        let (grid_w, grid_h) = grid;
        let slides: Vec<SlideEntry> = layouts
            .into_iter()
            .map(|layout| SlideEntry {
                slide_id: layout.slide_id.clone(),
                feature: layout_feature(&layout, grid_w, grid_h),
                layout,
            })
            .collect();
        let diagrams: Vec<DiagramEntry> = diagrams
            .into_iter()
            .map(|(diagram_id, slide_id, features)| DiagramEntry { diagram_id, slide_id, features })
            .collect();
        let index = CorpusIndex {
            version: INDEX_VERSION,
            pattern_seed: features.pattern_seed,
            grid_w,
            grid_h,
            features,
            slides: slides
                .iter()
                .map(|s| SlideRecord {
                    slide_id: s.slide_id.clone(),
                    slide_path: String::new(),
                    layout_path: String::new(),
                    diagram_ids: diagrams
                        .iter()
                        .filter(|d| d.slide_id == s.slide_id)
                        .map(|d| d.diagram_id.clone())
                        .collect(),
                    frame_index: None,
                })
                .collect(),
            diagrams: diagrams
                .iter()
                .map(|d| DiagramRecord {
                    diagram_id: d.diagram_id.clone(),
                    slide_id: d.slide_id.clone(),
                    mask_path: String::new(),
                    feature_cache_path: String::new(),
                    width: d.features.source_dims.0,
                    height: d.features.source_dims.1,
                })
                .collect(),
        };
        Self::assemble(index, None, slides, diagrams)
    }

    pub fn index(&self) -> &CorpusIndex {
        &self.index
    }

    /// Directory the corpus was loaded from or built into.
    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.index.grid_w, self.index.grid_h)
    }

    pub fn slides(&self) -> &[SlideEntry] {
        &self.slides
    }

    pub fn diagrams(&self) -> &[DiagramEntry] {
        &self.diagrams
    }

    pub fn layout(&self, slide_id: &str) -> Option<&SlideLayout> {
        self.slide_pos.get(slide_id).map(|&i| &self.slides[i].layout)
    }

    pub fn diagram(&self, diagram_id: &str) -> Option<&DiagramEntry> {
        self.diagram_pos.get(diagram_id).map(|&i| &self.diagrams[i])
    }

    /// Feature extractor configured with the corpus pattern seed.
    pub fn extractor(&self) -> &FeatureExtractor {
        &self.extractor
    }

    pub fn slide_image_path(&self, slide_id: &str) -> Option<PathBuf> {
        let root = self.root.as_ref()?;
        let rec = self.index.slides.iter().find(|s| s.slide_id == slide_id)?;
        Some(root.join(&rec.slide_path))
    }

    pub fn diagram_image_path(&self, diagram_id: &str) -> Option<PathBuf> {
        let root = self.root.as_ref()?;
        let rec = self.index.diagrams.iter().find(|d| d.diagram_id == diagram_id)?;
        Some(root.join(&rec.mask_path))
    }

    pub fn font_model_path(&self) -> Option<PathBuf> {
        self.root.as_ref().map(|r| r.join(FONT_MODEL_PATH))
    }
}
