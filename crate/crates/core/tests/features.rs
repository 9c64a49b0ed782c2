mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use slideguide_core::features::*;
use slideguide_core::raster::{box_blur3, GrayImage};
use slideguide_core::synth::{box_diagram_planted, fill_rect, random_diagram};

/// Piecewise-constant blocks with a little texture: plenty of corners.
fn blocky(r: &mut impl Rng, w: usize, h: usize) -> GrayImage {
    let mut img = GrayImage::filled(w, h, r.random_range(0..=255));
    for _ in 0..r.random_range(3..12) {
        let (x0, y0) = (r.random_range(0..w as i64), r.random_range(0..h as i64));
        let (bw, bh) = (r.random_range(3..30), r.random_range(3..30));
        fill_rect(&mut img, x0, y0, x0 + bw, y0 + bh, r.random_range(0..=255));
    }
    img
}

#[test]
fn fast_matches_ring_scan() {
    let mut r = rng(10);
    let mut total = 0;
    for i in 0..60 {
        let (w, h) = (r.random_range(40..90), r.random_range(40..90));
        let img = if i % 2 == 0 { blocky(&mut r, w, h) } else { random_gray(&mut r, w, h, 4) };
        let t = [1, 10, 20, 40][i % 4];
        let got: Vec<_> =
            detect_fast(&img, t).unwrap().iter().map(|k| (k.x as usize, k.y as usize, k.score as u32)).collect();
        let want = fast_ref(&img, t, BORDER_MARGIN);
        assert_eq!(got, want, "instance {i}");
        total += want.len();
    }
    assert!(total > 100, "oracle instances should contain corners ({total})");
}

#[test]
fn raw_scores_match_ring_scan() {
    let mut r = rng(11);
    for _ in 0..50 {
        let img = random_gray(&mut r, 48, 48, 3);
        for (x, y, s) in fast_corner_scores(&img, 20).unwrap() {
            assert_eq!(fast_score_ref(&img, x, y, 20), Some(s));
        }
    }
}

#[test]
fn tiny_images_are_rejected() {
    assert!(matches!(detect_fast(&GrayImage::filled(6, 40, 0), 10), Err(FastError::ImageTooSmall(6, 40))));
    assert!(detect_fast(&GrayImage::filled(30, 30, 0), 10).unwrap().is_empty());
}

#[test]
fn planted_box_corners_are_detected() {
    let ex = FeatureExtractor::new(FeatureConfig::default());
    for seed in 0..10 {
        let d = box_diagram_planted(512, 384, 4, seed);
        let set = ex.extract(&d.image);
        assert_eq!(set.source_dims, (512, 384));
        for &(cx, cy) in &d.corners {
            let hit = set.keypoints.iter().any(|k| (k.x - cx as f32).abs() <= 2.0 && (k.y - cy as f32).abs() <= 2.0);
            assert!(hit, "seed {seed}: corner ({cx}, {cy}) missed");
        }
    }
}

fn orientation_ref(img: &GrayImage, x: i64, y: i64, r: i64) -> f32 {
    let (mut m10, mut m01) = (0i64, 0i64);
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                let v = img.get((x + dx) as usize, (y + dy) as usize) as i64;
                m10 += dx * v;
                m01 += dy * v;
            }
        }
    }
    if m10 == 0 && m01 == 0 {
        0.0
    } else {
        (m01 as f64).atan2(m10 as f64) as f32
    }
}

#[test]
fn orientation_matches_moment_sums() {
    let mut r = rng(12);
    for _ in 0..60 {
        let img = random_gray(&mut r, 64, 64, 256);
        let (x, y) = (r.random_range(16..48), r.random_range(16..48));
        let kp = Keypoint { x: x as f32, y: y as f32, angle: 0.0, score: 0.0 };
        assert_eq!(orientation_ic(&img, &kp, PATCH_RADIUS), orientation_ref(&img, x, y, PATCH_RADIUS as i64));
    }
}

#[test]
fn brief_matches_direct_sampling() {
    let mut r = rng(13);
    let pattern = SamplingPattern::generate(DEFAULT_PATTERN_SEED);
    for _ in 0..80 {
        let img = random_gray(&mut r, 70, 70, 256);
        let kp = Keypoint {
            x: r.random_range(20..50) as f32,
            y: r.random_range(20..50) as f32,
            angle: r.random_range(-std::f32::consts::PI..std::f32::consts::PI),
            score: 1.0,
        };
        assert_eq!(brief_descriptor(&img, &kp, &pattern), brief_ref(&img, &kp, &pattern));
    }
}

#[test]
fn swapped_pattern_inverts_strict_tests() {
    let mut r = rng(14);
    let p = SamplingPattern::generate(7);
    let s = p.swapped();
    let img = random_gray(&mut r, 64, 64, 256);
    let kp = Keypoint { x: 32.0, y: 32.0, angle: 0.3, score: 0.0 };
    let (a, b) = (brief_descriptor(&img, &kp, &p), brief_descriptor(&img, &kp, &s));
    for i in 0..256 {
        assert!(!(a.bit(i) && b.bit(i)), "bit {i} set in both");
    }
}

#[test]
fn pattern_depends_on_seed() {
    let a = SamplingPattern::generate(1);
    assert_eq!(a.pairs.len(), 256);
    assert_ne!(a, SamplingPattern::generate(2));
    for [p, q] in &a.pairs {
        assert_ne!(p, q);
        for (x, y) in [p, q] {
            assert!(x * x + y * y <= (PATCH_RADIUS * PATCH_RADIUS) as i32);
        }
    }
}

#[test]
fn extraction_is_deterministic_and_bounded() {
    let img = random_diagram(3);
    let cfg = FeatureConfig { max_keypoints: 50, ..FeatureConfig::default() };
    let a = extract_features(&img, &cfg);
    assert_eq!(a, extract_features(&img, &cfg));
    assert!(a.len() <= 50 && a.len() == a.descriptors.len());
    assert!(a.keypoints.windows(2).all(|w| w[0].score >= w[1].score));
}

#[test]
fn extraction_keeps_strongest_corners_of_the_blurred_image() {
    let img = random_diagram(4);
    let cfg = FeatureConfig { max_keypoints: 40, normalize_dim: None, ..FeatureConfig::default() };
    let set = extract_features(&img, &cfg);
    let mut all = detect_fast(&box_blur3(&img), cfg.fast_threshold).unwrap();
    all.sort_by(|a, b| b.score.total_cmp(&a.score));
    let expect: Vec<_> = all.iter().take(40).map(|k| (k.x, k.y)).collect();
    assert_eq!(set.keypoints.iter().map(|k| (k.x, k.y)).collect::<Vec<_>>(), expect);
}

#[test]
fn blank_image_has_no_features() {
    let set = extract_features(&GrayImage::filled(300, 200, 255), &FeatureConfig::default());
    assert!(set.is_empty());
    assert_eq!(set.source_dims, (300, 200));
    assert!(extract_features(&GrayImage::filled(3, 3, 0), &FeatureConfig::default()).is_empty());
}

#[test]
fn normalization_scales_longer_side() {
    let img = GrayImage::filled(1024, 300, 10);
    let n = normalize(&img, 512);
    assert_eq!((n.width(), n.height()), (512, 150));
}

#[test]
fn cache_round_trip_and_errors() {
    let set = extract_features(&random_diagram(5), &FeatureConfig::default());
    let bytes = write_feature_cache(&set, 99);
    let back = read_feature_cache(&bytes).unwrap();
    assert_eq!(back.pattern_seed, 99);
    assert_eq!(back.into_set(set.source_dims), set);
    assert_eq!(read_feature_cache(b"XXXX\x01\x00").unwrap_err(), CacheError::Truncated { expected: 18, actual: 6 });
    let mut bad = bytes.clone();
    bad[0] = b'Z';
    assert_eq!(read_feature_cache(&bad).unwrap_err(), CacheError::BadMagic);
    assert!(matches!(read_feature_cache(&bytes[..bytes.len() - 1]), Err(CacheError::Truncated { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn descriptor_byte_round_trip(a: u64, b: u64, c: u64, d: u64) {
        let desc = Descriptor256([a, b, c, d]);
        prop_assert_eq!(Descriptor256::from_bytes(&desc.to_bytes()), desc);
        prop_assert_eq!(desc.hamming(&desc), 0);
        prop_assert_eq!(desc.count_ones(), bits(&desc).iter().filter(|&&x| x).count() as u32);
    }

    #[test]
    fn corners_stay_inside_margin(seed: u64) {
        let img = blocky(&mut rng(seed), 64, 64);
        for k in detect_fast(&img, 10).unwrap() {
            let (x, y) = (k.x as usize, k.y as usize);
            prop_assert!((BORDER_MARGIN..64 - BORDER_MARGIN).contains(&x));
            prop_assert!((BORDER_MARGIN..64 - BORDER_MARGIN).contains(&y));
        }
    }
}
