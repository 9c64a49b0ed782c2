use std::collections::HashSet;
use std::fs;
use std::path::Path;

use log::warn;

use super::{Corpus, CorpusError, CorpusIndex, DiagramEntry, SlideEntry, INDEX_FILE, INDEX_VERSION};
use crate::features::{read_feature_cache, FeatureExtractor};
use crate::ingest::parse_layout_annotation;
use crate::layout::layout_feature;
use crate::par;
use crate::raster::load_image;

/// Loads and validates a corpus directory eagerly.
///
/// A missing or stale descriptor cache is recomputed from its diagram mask
/// (with a warning); nothing is written back.
pub fn load_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    let index_path = dir.join(INDEX_FILE);
    if !index_path.is_file() {
        return Err(CorpusError::MissingArtifact(index_path));
    }
    let text = fs::read_to_string(&index_path).map_err(|e| CorpusError::io(&index_path, e))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CorpusError::CorruptIndex(format!("{}: {e}", index_path.display())))?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == INDEX_VERSION as u64 => {}
        Some(v) => return Err(CorpusError::VersionMismatch { found: v as u32 }),
        None => return Err(CorpusError::CorruptIndex("missing version".into())),
    }
    let index: CorpusIndex = serde_json::from_value(value).map_err(|e| CorpusError::CorruptIndex(e.to_string()))?;
    validate(&index)?;

    let slides = index
        .slides
        .iter()
        .map(|rec| {
            let slide_path = dir.join(&rec.slide_path);
            if !slide_path.is_file() {
                return Err(CorpusError::MissingArtifact(slide_path));
            }
            let layout_path = dir.join(&rec.layout_path);
            let text =
                fs::read_to_string(&layout_path).map_err(|_| CorpusError::MissingArtifact(layout_path.clone()))?;
            let layout = parse_layout_annotation(&text)
                .map_err(|source| CorpusError::Annotation { path: layout_path.clone(), source })?;
            if layout.slide_id != rec.slide_id {
                return Err(CorpusError::CorruptIndex(format!(
                    "{} describes slide {:?}, index says {:?}",
                    layout_path.display(),
                    layout.slide_id,
                    rec.slide_id
                )));
            }
            Ok(SlideEntry {
                slide_id: rec.slide_id.clone(),
                feature: layout_feature(&layout, index.grid_w, index.grid_h),
                layout,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let extractor = FeatureExtractor::new(index.features);
    let diagrams = par::map_slice(&index.diagrams, |rec| {
        let mask_path = dir.join(&rec.mask_path);
        if !mask_path.is_file() {
            return Err(CorpusError::MissingArtifact(mask_path));
        }
        let cache_path = dir.join(&rec.feature_cache_path);
        let cached = fs::read(&cache_path).ok().and_then(|bytes| match read_feature_cache(&bytes) {
            Ok(c) if c.pattern_seed == index.pattern_seed => Some(c),
            Ok(c) => {
                warn!(
                    "{}: pattern seed {} differs from corpus seed {}",
                    cache_path.display(),
                    c.pattern_seed,
                    index.pattern_seed
                );
                None
            }
            Err(e) => {
                warn!("{}: {e}", cache_path.display());
                None
            }
        });
        let features = match cached {
            Some(c) => c.into_set((rec.width, rec.height)),
            None => {
                warn!("recomputing descriptors for diagram {} from {}", rec.diagram_id, mask_path.display());
                extractor.extract(&load_image(&mask_path)?)
            }
        };
        Ok(DiagramEntry { diagram_id: rec.diagram_id.clone(), slide_id: rec.slide_id.clone(), features })
    })
    .into_iter()
    .collect::<Result<Vec<_>, CorpusError>>()?;

    Ok(Corpus::assemble(index, Some(dir.to_path_buf()), slides, diagrams))
}

fn validate(index: &CorpusIndex) -> Result<(), CorpusError> {
    if index.features.pattern_seed != index.pattern_seed {
        return Err(CorpusError::CorruptIndex("pattern seed disagrees with feature config".into()));
    }
    if index.grid_w == 0 || index.grid_h == 0 {
        return Err(CorpusError::CorruptIndex("grid dimensions must be positive".into()));
    }
    let mut seen = HashSet::new();
    for s in &index.slides {
        if !seen.insert(s.slide_id.as_str()) {
            return Err(CorpusError::CorruptIndex(format!("duplicate slide id {:?}", s.slide_id)));
        }
    }
    let mut dseen = HashSet::new();
    for d in &index.diagrams {
        if !dseen.insert(d.diagram_id.as_str()) {
            return Err(CorpusError::CorruptIndex(format!("duplicate diagram id {:?}", d.diagram_id)));
        }
        if !seen.contains(d.slide_id.as_str()) {
            return Err(CorpusError::CorruptIndex(format!("diagram {:?} references unknown slide", d.diagram_id)));
        }
    }
    Ok(())
}
