mod common;

use common::*;
use slideguide_core::ingest::*;
use slideguide_core::raster::{dhash, hamming, GrayImage, Hash64};
use slideguide_core::synth::{noisy_deck, planted_slide, SLIDE_HEIGHT, SLIDE_WIDTH};

#[test]
fn noisy_deck_yields_one_slide_per_scene() {
    let frames = noisy_deck(5, 30, 7);
    assert_eq!(frames.len(), 150);
    let slides = extract_slides(&frames, DEFAULT_HASH_THRESHOLD).unwrap();
    assert_eq!(slides.iter().map(|s| s.frame_index).collect::<Vec<_>>(), vec![0, 30, 60, 90, 120]);
}

#[test]
fn deck_noise_stays_below_threshold() {
    for seed in 0..5 {
        let frames = noisy_deck(5, 30, seed);
        let hashes: Vec<Hash64> = frames.iter().map(dhash).collect();
        for scene in hashes.chunks(30) {
            assert!(scene.iter().all(|&h| hamming(h, scene[0]) <= DEFAULT_HASH_THRESHOLD));
        }
        for pair in hashes.chunks(30).collect::<Vec<_>>().windows(2) {
            assert!(hamming(pair[0][0], pair[1][0]) > DEFAULT_HASH_THRESHOLD);
        }
        assert_eq!(extract_slides(&frames, DEFAULT_HASH_THRESHOLD).unwrap().len(), 5, "seed {seed}");
    }
}

#[test]
fn selection_compares_against_last_emitted_slide() {
    // Drift of 6 bits per frame: each step is small but the third frame is
    // 12 bits from the anchor.
    let h = [Hash64(0), Hash64(0b11_1111), Hash64(0b1111_1111_1111)];
    assert_eq!(select_slides(&h, 10).unwrap(), vec![0, 2]);
    assert_eq!(select_slides(&h, 64).unwrap(), vec![0]);
    assert_eq!(select_slides(&h, 0).unwrap(), vec![0, 1, 2]);
    assert!(matches!(select_slides(&h, 65), Err(IngestError::InvalidThreshold(65))));
    assert!(matches!(select_slides(&[], 10), Err(IngestError::EmptyInput)));
}

#[test]
fn annotation_round_trip() {
    for seed in 0..20 {
        let (_, layout) = planted_slide(format!("s{seed}"), seed);
        assert_eq!(parse_layout_annotation(&layout_to_json(&layout)).unwrap(), layout);
    }
}

#[test]
fn annotation_errors() {
    let parse = |s: &str| parse_layout_annotation(s);
    assert!(matches!(parse("{"), Err(IngestError::SchemaError(_))));
    assert!(matches!(parse(r#"{"slide_id":"a","regions":[],"extra":1}"#), Err(IngestError::SchemaError(_))));
    assert!(matches!(
        parse(r#"{"slide_id":"a","regions":[{"class":"chart","bbox":[0,0,1,1]}]}"#),
        Err(IngestError::SchemaError(_))
    ));
    assert!(matches!(
        parse(r#"{"slide_id":"a","regions":[{"class":"text","bbox":[0.5,0,0.4,1]}]}"#),
        Err(IngestError::RangeError(_))
    ));
    assert!(matches!(
        parse(r#"{"slide_id":"a","regions":[{"class":"text","bbox":[0,0,1.2,1]}]}"#),
        Err(IngestError::RangeError(_))
    ));
    let two_titles =
        r#"{"slide_id":"a","regions":[{"class":"title","bbox":[0,0,1,0.1]},{"class":"title","bbox":[0,0.2,1,0.3]}]}"#;
    assert!(matches!(parse(two_titles), Err(IngestError::SchemaError(_))));
    assert!(parse(r#"{"slide_id":"a","regions":[]}"#).unwrap().is_empty());
}

#[test]
fn pixel_rect_rounds_outward() {
    let b = NormRect::new(0.101, 0.2, 0.5, 0.999).unwrap();
    let r = region_pixel_rect(&b, 100, 10);
    assert_eq!((r.x, r.y, r.width, r.height), (10, 2, 40, 8));
    let thin = NormRect::new(0.0, 0.0, 0.001, 0.001).unwrap();
    let r = region_pixel_rect(&thin, 100, 10);
    assert_eq!((r.width, r.height), (1, 1));
}

#[test]
fn diagrams_come_from_figure_regions() {
    let (img, layout) = planted_slide("deck", 3);
    let diagrams = extract_diagrams(&img, &layout);
    let figures: Vec<usize> =
        layout.regions.iter().enumerate().filter(|(_, r)| r.class == LayoutClass::Figure).map(|(i, _)| i).collect();
    assert_eq!(diagrams.len(), figures.len());
    for (d, i) in diagrams.iter().zip(figures) {
        assert_eq!(d.diagram_id, format!("deck_{i}"));
        assert_eq!(d.slide_id, "deck");
        let rect = region_pixel_rect(&layout.regions[i].bbox, img.width(), img.height());
        assert_eq!((d.mask.width(), d.mask.height()), (rect.width, rect.height));
        assert!(d.mask.ink_count() > 0);
    }
}

fn iou(a: &NormRect, b: &NormRect) -> f64 {
    let ix = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
    let iy = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
    let inter = ix * iy;
    inter / (a.area() + b.area() - inter)
}

#[test]
fn heuristic_segmenter_recovers_planted_regions() {
    let (mut found, mut total) = (0, 0);
    for seed in 0..20 {
        let (img, truth) = planted_slide("p", 500 + seed);
        assert_eq!((img.width(), img.height()), (SLIDE_WIDTH, SLIDE_HEIGHT));
        let got = segment_layout_heuristic(&img);
        assert!(got.count(LayoutClass::Title) <= 1);
        for t in &truth.regions {
            total += 1;
            if got.regions.iter().any(|g| g.class == t.class && iou(&g.bbox, &t.bbox) >= 0.5) {
                found += 1;
            }
        }
    }
    let recall = found as f64 / total as f64;
    assert!(recall >= 0.9, "recall {recall:.3}");
}

#[test]
fn blank_slide_has_no_regions() {
    assert!(segment_layout_heuristic(&GrayImage::filled(320, 180, 255)).is_empty());
    let img = random_gray(&mut rng(1), 5, 5, 2);
    let _ = segment_layout_heuristic(&img);
}
