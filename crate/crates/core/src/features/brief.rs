use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Keypoint;
use crate::raster::GrayImage;

/// Seed of the default sampling pattern; persisted with every corpus.
pub const DEFAULT_PATTERN_SEED: u64 = 0x5EED;

/// Sampling offsets lie within this radius (31x31 patch).
pub const PATCH_RADIUS: usize = 15;

/// 256-bit binary descriptor; bit `i` lives in word `i / 64`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Descriptor256(pub [u64; 4]);

impl Descriptor256 {
    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        (self.0[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set_bit(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn count_ones(&self) -> u32 {
        self.0.iter().map(|w| w.count_ones()).sum()
    }

    #[inline]
    pub fn hamming(&self, other: &Descriptor256) -> u32 {
        (0..4).map(|i| (self.0[i] ^ other.0[i]).count_ones()).sum()
    }

    #[inline]
    pub fn and_count(&self, other: &Descriptor256) -> u32 {
        (0..4).map(|i| (self.0[i] & other.0[i]).count_ones()).sum()
    }

    /// Little-endian words, 32 bytes.
    pub fn to_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (i, w) in self.0.iter().enumerate() {
            out[i * 8..i * 8 + 8].copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8; 32]) -> Self {
        let mut words = [0u64; 4];
        for (i, w) in words.iter_mut().enumerate() {
            *w = u64::from_le_bytes(bytes[i * 8..i * 8 + 8].try_into().expect("8 bytes"));
        }
        Self(words)
    }
}

impl fmt::Debug for Descriptor256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Descriptor256({:016x}{:016x}{:016x}{:016x})", self.0[3], self.0[2], self.0[1], self.0[0])
    }
}

/// 256 point-pair tests inside the patch disc.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPattern {
    pub seed: u64,
    pub pairs: Vec<[(i32, i32); 2]>,
}

impl SamplingPattern {
    /// Uniform samples over the radius-15 disc from a seeded ChaCha8 stream;
    /// the two points of a pair never coincide.
    pub fn generate(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = PATCH_RADIUS as i32;
        let point = move |rng: &mut ChaCha8Rng| loop {
            let x = rng.random_range(-r..=r);
            let y = rng.random_range(-r..=r);
            if x * x + y * y <= r * r {
                return (x, y);
            }
        };
        let pairs = (0..256)
            .map(|_| {
                let p = point(&mut rng);
                loop {
                    let q = point(&mut rng);
                    if q != p {
                        return [p, q];
                    }
                }
            })
            .collect();
        Self { seed, pairs }
    }

    /// The same tests with each pair's points swapped.
    pub fn swapped(&self) -> Self {
        Self { seed: self.seed, pairs: self.pairs.iter().map(|&[p, q]| [q, p]).collect() }
    }
}

#[inline]
fn rotate((x, y): (i32, i32), cos: f64, sin: f64) -> (isize, isize) {
    let (x, y) = (x as f64, y as f64);
    ((cos * x - sin * y).round() as isize, (sin * x + cos * y).round() as isize)
}

/// Rotated BRIEF: bit `i` is set iff `I(p_i') < I(q_i')`, where the offsets
/// are rotated by the keypoint angle and rounded to the nearest pixel.
pub fn brief_descriptor(img: &GrayImage, kp: &Keypoint, pattern: &SamplingPattern) -> Descriptor256 {
    let (sin, cos) = (kp.angle as f64).sin_cos();
    let (cx, cy) = (kp.x as isize, kp.y as isize);
    let sample = |o: (i32, i32)| {
        let (dx, dy) = rotate(o, cos, sin);
        img.get((cx + dx) as usize, (cy + dy) as usize)
    };
    let mut d = Descriptor256::default();
    for (i, &[p, q]) in pattern.pairs.iter().enumerate() {
        if sample(p) < sample(q) {
            d.set_bit(i);
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_is_deterministic_and_in_disc() {
        let a = SamplingPattern::generate(DEFAULT_PATTERN_SEED);
        assert_eq!(a, SamplingPattern::generate(DEFAULT_PATTERN_SEED));
        assert_ne!(a, SamplingPattern::generate(1));
        assert_eq!(a.pairs.len(), 256);
        for [p, q] in &a.pairs {
            assert_ne!(p, q);
            for (x, y) in [p, q] {
                assert!(x * x + y * y <= 225);
            }
        }
    }

    #[test]
    fn uniform_patch_gives_zero_descriptor() {
        let img = GrayImage::filled(64, 64, 128);
        let kp = Keypoint { x: 32.0, y: 32.0, angle: 0.7, score: 1.0 };
        assert_eq!(brief_descriptor(&img, &kp, &SamplingPattern::generate(3)), Descriptor256::default());
    }

    #[test]
    fn zero_angle_samples_raw_offsets() {
        let img = GrayImage::from_fn(64, 64, |x, y| ((x * 13 + y * 7) % 251) as u8);
        let pattern = SamplingPattern::generate(9);
        let kp = Keypoint { x: 30.0, y: 33.0, angle: 0.0, score: 1.0 };
        let d = brief_descriptor(&img, &kp, &pattern);
        for (i, &[p, q]) in pattern.pairs.iter().enumerate() {
            let ip = img.get((30 + p.0) as usize, (33 + p.1) as usize);
            let iq = img.get((30 + q.0) as usize, (33 + q.1) as usize);
            assert_eq!(d.bit(i), ip < iq);
        }
    }

    #[test]
    fn bytes_round_trip_and_counts() {
        let d = Descriptor256([1, u64::MAX, 0, 1 << 63]);
        assert_eq!(Descriptor256::from_bytes(&d.to_bytes()), d);
        assert_eq!(d.count_ones(), 66);
        assert_eq!(d.hamming(&Descriptor256::default()), 66);
        assert_eq!(d.and_count(&Descriptor256([1, 0, 0, 0])), 1);
    }
}
