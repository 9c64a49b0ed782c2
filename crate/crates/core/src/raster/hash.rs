use std::fmt;

use super::{resize_bilinear, GrayImage};

/// 64-bit perceptual hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Hash64(pub u64);

impl Hash64 {
    #[inline]
    pub fn bit(self, i: usize) -> bool {
        (self.0 >> i) & 1 == 1
    }
}

impl fmt::Display for Hash64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

/// Difference hash on a 9x8 bilinear thumbnail.
///
/// Bit `r * 8 + c` is set iff thumbnail pixel `(c + 1, r)` is strictly
/// brighter than `(c, r)`.
pub fn dhash(img: &GrayImage) -> Hash64 {
    let thumb = resize_bilinear(img, 9, 8).expect("non-zero target");
    let mut bits = 0u64;
    for r in 0..8 {
        for c in 0..8 {
            if thumb.get(c + 1, r) > thumb.get(c, r) {
                bits |= 1 << (r * 8 + c);
            }
        }
    }
    Hash64(bits)
}

#[inline]
pub fn hamming(a: Hash64, b: Hash64) -> u32 {
    (a.0 ^ b.0).count_ones()
}
