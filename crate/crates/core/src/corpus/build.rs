use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{
    Corpus, CorpusError, CorpusIndex, DiagramEntry, DiagramRecord, SlideEntry, SlideRecord, INDEX_FILE, INDEX_VERSION,
};
use crate::features::{write_feature_cache, FeatureConfig, FeatureExtractor};
use crate::ingest::{
    extract_diagrams, layout_to_json, parse_layout_annotation, segment_layout_heuristic, select_slides, SlideLayout,
    DEFAULT_HASH_THRESHOLD,
};
use crate::layout::{layout_feature, DEFAULT_GRID_H, DEFAULT_GRID_W};
use crate::par;
use crate::raster::{dhash, encode_png, load_image, GrayImage};

#[derive(Debug, Clone, PartialEq)]
pub enum SlideSource {
    /// Ordered video frames (sorted by file name) to deduplicate into slides.
    Frames(PathBuf),
    /// One image per slide; the file stem is the slide id.
    Slides(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildInput {
    pub source: SlideSource,
    /// Directory of `<anything>.layout.json` files; slides without one are
    /// labeled by the heuristic segmenter.
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildConfig {
    pub hash_threshold: u32,
    pub grid_w: usize,
    pub grid_h: usize,
    pub features: FeatureConfig,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            hash_threshold: DEFAULT_HASH_THRESHOLD,
            grid_w: DEFAULT_GRID_W,
            grid_h: DEFAULT_GRID_H,
            features: FeatureConfig::default(),
        }
    }
}

struct SourceSlide {
    id: String,
    image: GrayImage,
    frame_index: Option<usize>,
}

/// Image files (`.png`, `.pgm`) in a directory, sorted by file name.
pub(crate) fn list_images(dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
    list_with(dir, |name| {
        let lower = name.to_ascii_lowercase();
        lower.ends_with(".png") || lower.ends_with(".pgm")
    })
}

fn list_with(dir: &Path, keep: impl Fn(&str) -> bool) -> Result<Vec<PathBuf>, CorpusError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CorpusError::io(dir, e))? {
        let path = entry.map_err(|e| CorpusError::io(dir, e))?.path();
        if path.is_file() && path.file_name().and_then(|n| n.to_str()).is_some_and(&keep) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

fn gather_slides(source: &SlideSource, threshold: u32) -> Result<Vec<SourceSlide>, CorpusError> {
    match source {
        SlideSource::Slides(dir) => list_images(dir)?
            .into_iter()
            .map(|p| {
                let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
                Ok(SourceSlide { id, image: load_image(&p)?, frame_index: None })
            })
            .collect(),
        SlideSource::Frames(dir) => {
            let frames = list_images(dir)?;
            if frames.is_empty() {
                return Ok(Vec::new());
            }
            // Hash in parallel without holding every frame in memory.
            let hashes = par::map_slice(&frames, |p| load_image(p).map(|img| dhash(&img)));
            let hashes = hashes.into_iter().collect::<Result<Vec<_>, _>>()?;
            let picked = select_slides(&hashes, threshold).map_err(|e| CorpusError::CorruptIndex(e.to_string()))?;
            picked
                .into_iter()
                .map(|i| {
                    Ok(SourceSlide {
                        id: format!("frame_{i:06}"),
                        image: load_image(&frames[i])?,
                        frame_index: Some(i),
                    })
                })
                .collect()
        }
    }
}

fn read_annotations(dir: &Path) -> Result<BTreeMap<String, SlideLayout>, CorpusError> {
    let mut out = BTreeMap::new();
    for path in list_with(dir, |n| n.ends_with(".layout.json"))? {
        let text = fs::read_to_string(&path).map_err(|e| CorpusError::io(&path, e))?;
        let layout =
            parse_layout_annotation(&text).map_err(|source| CorpusError::Annotation { path: path.clone(), source })?;
        out.insert(layout.slide_id.clone(), layout);
    }
    Ok(out)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CorpusError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CorpusError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CorpusError::io(path, e))
}

/// Builds a corpus directory from slides or frames and returns the loaded view.
///
/// Output is a pure function of the inputs and config: rebuilding produces
/// byte-identical files.
pub fn build_corpus(input: &BuildInput, out_dir: &Path, config: &BuildConfig) -> Result<Corpus, CorpusError> {
    let mut slides = gather_slides(&input.source, config.hash_threshold)?;
    slides.sort_by(|a, b| a.id.cmp(&b.id));
    if let Some(w) = slides.windows(2).find(|w| w[0].id == w[1].id) {
        return Err(CorpusError::CorruptIndex(format!("duplicate slide id {:?}", w[0].id)));
    }

    let mut annotations = match &input.annotations {
        Some(dir) => read_annotations(dir)?,
        None => BTreeMap::new(),
    };
    if let Some(orphan) = annotations.keys().find(|id| !slides.iter().any(|s| &s.id == *id)) {
        return Err(CorpusError::AnnotationMismatch(orphan.clone()));
    }

    let layouts: Vec<SlideLayout> = slides
        .iter()
        .map(|s| {
            annotations.remove(&s.id).unwrap_or_else(|| {
                let mut l = segment_layout_heuristic(&s.image);
                l.slide_id = s.id.clone();
                l
            })
        })
        .collect();

    let extractor = FeatureExtractor::new(config.features);
    let processed = par::map_range(slides.len(), |i| {
        let diagrams = extract_diagrams(&slides[i].image, &layouts[i]);
        diagrams
            .into_iter()
            .map(|d| {
                let gray = d.mask.to_gray();
                let features = extractor.extract(&gray);
                (d, gray, features)
            })
            .collect::<Vec<_>>()
    });

    fs::create_dir_all(out_dir).map_err(|e| CorpusError::io(out_dir, e))?;
    let mut slide_records = Vec::new();
    let mut diagram_records = Vec::new();
    let mut slide_entries = Vec::new();
    let mut diagram_entries = Vec::new();
    for ((src, layout), diagrams) in slides.iter().zip(layouts).zip(processed) {
        let slide_path = format!("slides/{}.png", src.id);
        let layout_path = format!("layouts/{}.layout.json", src.id);
        write(&out_dir.join(&slide_path), &encode_png(&src.image)?)?;
        write(&out_dir.join(&layout_path), layout_to_json(&layout).as_bytes())?;

        let mut diagram_ids = Vec::new();
        for (d, gray, features) in diagrams {
            let mask_path = format!("diagrams/{}.png", d.diagram_id);
            let feature_cache_path = format!("features/{}.sgfd", d.diagram_id);
            write(&out_dir.join(&mask_path), &encode_png(&gray)?)?;
            write(&out_dir.join(&feature_cache_path), &write_feature_cache(&features, config.features.pattern_seed))?;
            diagram_ids.push(d.diagram_id.clone());
            diagram_records.push(DiagramRecord {
                diagram_id: d.diagram_id.clone(),
                slide_id: d.slide_id.clone(),
                mask_path,
                feature_cache_path,
                width: d.mask.width(),
                height: d.mask.height(),
            });
            diagram_entries.push(DiagramEntry { diagram_id: d.diagram_id, slide_id: d.slide_id, features });
        }
        slide_records.push(SlideRecord {
            slide_id: src.id.clone(),
            slide_path,
            layout_path,
            diagram_ids,
            frame_index: src.frame_index,
        });
        slide_entries.push(SlideEntry {
            slide_id: src.id.clone(),
            feature: layout_feature(&layout, config.grid_w, config.grid_h),
            layout,
        });
    }
    diagram_records.sort_by(|a, b| a.diagram_id.cmp(&b.diagram_id));

    let index = CorpusIndex {
        version: INDEX_VERSION,
        pattern_seed: config.features.pattern_seed,
        grid_w: config.grid_w,
        grid_h: config.grid_h,
        features: config.features,
        slides: slide_records,
        diagrams: diagram_records,
    };
    let mut json = serde_json::to_string_pretty(&index).expect("index serializes");
    json.push('\n');
    write(&out_dir.join(INDEX_FILE), json.as_bytes())?;
    Ok(Corpus::assemble(index, Some(out_dir.to_path_buf()), slide_entries, diagram_entries))
}
