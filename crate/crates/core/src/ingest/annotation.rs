use serde::{Deserialize, Serialize};

use super::{IngestError, LayoutClass, LayoutRegion, NormRect, SlideLayout};

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawLayout {
    slide_id: String,
    regions: Vec<RawRegion>,
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    class: String,
    bbox: [f64; 4],
}

/// Parses one `.layout.json` document.
pub fn parse_layout_annotation(doc: &str) -> Result<SlideLayout, IngestError> {
    let raw: RawLayout = serde_json::from_str(doc).map_err(|e| IngestError::SchemaError(e.to_string()))?;
    let regions = raw
        .regions
        .into_iter()
        .map(|r| {
            let class: LayoutClass = r.class.parse()?;
            let [x0, y0, x1, y1] = r.bbox;
            Ok(LayoutRegion { class, bbox: NormRect::new(x0, y0, x1, y1)? })
        })
        .collect::<Result<Vec<_>, IngestError>>()?;
    SlideLayout::new(raw.slide_id, regions)
}

/// Serializes in the annotation schema; reparsing yields an equal layout.
pub fn layout_to_json(layout: &SlideLayout) -> String {
    let raw = RawLayout {
        slide_id: layout.slide_id.clone(),
        regions: layout
            .regions
            .iter()
            .map(|r| RawRegion { class: r.class.as_str().to_string(), bbox: r.bbox.as_array() })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("plain data serializes")
}
