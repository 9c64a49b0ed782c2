use super::Keypoint;
use crate::raster::GrayImage;

/// Intensity-centroid orientation over a disc of `radius` around `kp`.
///
/// Returns `atan2(m01, m10)` with offsets relative to the keypoint and y down,
/// or 0 when both moments vanish. The disc must lie inside the image.
pub fn orientation_ic(img: &GrayImage, kp: &Keypoint, radius: usize) -> f32 {
    let (cx, cy) = (kp.x as isize, kp.y as isize);
    let r = radius as isize;
    let (mut m10, mut m01) = (0i64, 0i64);
    for dy in -r..=r {
        // Half-width of the disc on this row.
        let half = ((r * r - dy * dy) as f64).sqrt().floor() as isize;
        for dx in -half..=half {
            let v = img.get((cx + dx) as usize, (cy + dy) as usize) as i64;
            m10 += dx as i64 * v;
            m01 += dy as i64 * v;
        }
    }
    if m10 == 0 && m01 == 0 {
        return 0.0;
    }
    (m01 as f64).atan2(m10 as f64) as f32
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f32::consts::FRAC_PI_2;

    fn kp(x: f32, y: f32) -> Keypoint {
        Keypoint { x, y, angle: 0.0, score: 0.0 }
    }

    #[test]
    fn uniform_disc_points_right() {
        assert_eq!(orientation_ic(&GrayImage::filled(40, 40, 90), &kp(20.0, 20.0), 15), 0.0);
    }

    #[test]
    fn mass_to_the_right() {
        let img = GrayImage::from_fn(40, 40, |x, _| if x > 20 { 200 } else { 0 });
        assert_eq!(orientation_ic(&img, &kp(20.0, 20.0), 15), 0.0);
    }

    #[test]
    fn mass_below_is_plus_half_pi() {
        let img = GrayImage::from_fn(40, 40, |_, y| if y > 20 { 200 } else { 0 });
        assert_eq!(orientation_ic(&img, &kp(20.0, 20.0), 15), FRAC_PI_2);
    }

    #[test]
    fn mass_to_the_left_is_pi() {
        let img = GrayImage::from_fn(40, 40, |x, _| if x < 20 { 200 } else { 0 });
        assert_eq!(orientation_ic(&img, &kp(20.0, 20.0), 15), std::f32::consts::PI);
    }
}
