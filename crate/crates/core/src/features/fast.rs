use thiserror::Error;

use super::Keypoint;
use crate::raster::GrayImage;

/// Bresenham circle of radius 3, clockwise from 12 o'clock (y down).
pub const RING: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Minimum contiguous arc length.
const ARC: usize = 9;

/// Keypoints keep this distance from every border: descriptor patch radius
/// plus ring radius.
pub const BORDER_MARGIN: usize = 18;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FastError {
    #[error("image {0}x{1} is smaller than 7x7")]
    ImageTooSmall(usize, usize),
}

/// Corner response at `(x, y)`: sum of `|ring - center|` over the longest
/// qualifying arc, or `None` when no arc of 9 brighter or darker pixels exists.
#[inline]
fn corner_score(img: &GrayImage, x: usize, y: usize, t: i32) -> Option<u32> {
    let w = img.width() as isize;
    let px = img.pixels();
    let base = y as isize * w + x as isize;
    let center = px[base as usize] as i32;
    let ring = RING.map(|(dx, dy)| px[(base + dy as isize * w + dx as isize) as usize] as i32);

    // Compass test: any 9-arc covers at least two of the four compass points.
    let (hi, lo) = (center + t, center - t);
    let bright = [0, 4, 8, 12].iter().filter(|&&i| ring[i] > hi).count();
    let dark = [0, 4, 8, 12].iter().filter(|&&i| ring[i] < lo).count();
    if bright < 2 && dark < 2 {
        return None;
    }

    let sign = ring.map(|v| {
        if v > hi {
            1i8
        } else if v < lo {
            -1
        } else {
            0
        }
    });
    let (mut best_len, mut best_start) = (0usize, 0usize);
    let (mut run, mut run_sign, mut run_start) = (0usize, 0i8, 0usize);
    for k in 0..32 {
        let s = sign[k % 16];
        if s != 0 && s == run_sign {
            run += 1;
        } else {
            run_sign = s;
            run = usize::from(s != 0);
            run_start = k;
        }
        if run > best_len {
            best_len = run.min(16);
            best_start = run_start;
        }
    }
    if best_len < ARC {
        return None;
    }
    Some((0..best_len).map(|i| (ring[(best_start + i) % 16] - center).unsigned_abs()).sum())
}

/// Raw FAST-9 corners inside the border margin, before suppression, in
/// raster order: `(x, y, score)`.
pub fn fast_corner_scores(img: &GrayImage, t: u8) -> Result<Vec<(usize, usize, u32)>, FastError> {
    let (w, h) = (img.width(), img.height());
    if w < 7 || h < 7 {
        return Err(FastError::ImageTooSmall(w, h));
    }
    let mut out = Vec::new();
    if w <= 2 * BORDER_MARGIN || h <= 2 * BORDER_MARGIN {
        return Ok(out);
    }
    let t = t.max(1) as i32;
    for y in BORDER_MARGIN..h - BORDER_MARGIN {
        for x in BORDER_MARGIN..w - BORDER_MARGIN {
            if let Some(s) = corner_score(img, x, y, t) {
                out.push((x, y, s));
            }
        }
    }
    Ok(out)
}

/// FAST-9 with 3x3 non-maximum suppression. Equal scores keep the earlier
/// pixel in raster order. Angles are left at 0.
pub fn detect_fast(img: &GrayImage, t: u8) -> Result<Vec<Keypoint>, FastError> {
    let raw = fast_corner_scores(img, t)?;
    let w = img.width();
    let mut score = vec![0u32; w * img.height()];
    for &(x, y, s) in &raw {
        score[y * w + x] = s;
    }
    let keep = |x: usize, y: usize, s: u32| {
        let idx = y * w + x;
        for dy in -1isize..=1 {
            for dx in -1isize..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let n = ((y as isize + dy) as usize) * w + (x as isize + dx) as usize;
                let sn = score[n];
                if sn > s || (sn == s && n < idx) {
                    return false;
                }
            }
        }
        true
    };
    Ok(raw
        .into_iter()
        .filter(|&(x, y, s)| keep(x, y, s))
        .map(|(x, y, s)| Keypoint { x: x as f32, y: y as f32, angle: 0.0, score: s as f32 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_image_has_no_corners() {
        assert!(detect_fast(&GrayImage::filled(64, 64, 100), 10).unwrap().is_empty());
    }

    #[test]
    fn isolated_bright_pixel() {
        let mut img = GrayImage::filled(64, 64, 0);
        img.set(32, 32, 255);
        let kps = detect_fast(&img, 20).unwrap();
        assert_eq!(kps.len(), 1);
        assert_eq!((kps[0].x, kps[0].y), (32.0, 32.0));
        assert_eq!(kps[0].score, 16.0 * 255.0);
    }

    #[test]
    fn too_small_is_an_error() {
        assert_eq!(detect_fast(&GrayImage::filled(6, 9, 0), 10), Err(FastError::ImageTooSmall(6, 9)));
        assert!(detect_fast(&GrayImage::filled(7, 7, 0), 10).unwrap().is_empty());
    }

    #[test]
    fn no_keypoint_inside_margin() {
        let img = GrayImage::from_fn(80, 60, |x, y| if (x / 5 + y / 5) % 2 == 0 { 0 } else { 255 });
        for kp in detect_fast(&img, 20).unwrap() {
            let (x, y) = (kp.x as usize, kp.y as usize);
            assert!(x >= BORDER_MARGIN && x + BORDER_MARGIN < 80 && y >= BORDER_MARGIN && y + BORDER_MARGIN < 60);
        }
    }

    #[test]
    fn ring_has_radius_three() {
        for (dx, dy) in RING {
            let r2 = dx * dx + dy * dy;
            assert!((8..=10).contains(&r2), "{dx},{dy}");
        }
    }
}
