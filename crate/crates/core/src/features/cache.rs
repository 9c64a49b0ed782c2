//! Binary descriptor cache (`.sgfd`).
//!
//! ```text
//! "SGFD" | version u16 | pattern seed u64 | count u32
//! count x { x f32 | y f32 | angle f32 | score f32 | descriptor [u8; 32] }
//! ```
//! All integers and floats little-endian.

use thiserror::Error;

use super::{Descriptor256, Keypoint, KeypointSet};

const MAGIC: &[u8; 4] = b"SGFD";
const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 8 + 4;
const RECORD_LEN: usize = 16 + 32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CacheError {
    #[error("not a descriptor cache (bad magic)")]
    BadMagic,
    #[error("unsupported cache version {0}")]
    Version(u16),
    #[error("cache truncated: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
}

/// Decoded cache contents.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCache {
    pub pattern_seed: u64,
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor256>,
}

impl FeatureCache {
    pub fn into_set(self, source_dims: (usize, usize)) -> KeypointSet {
        KeypointSet { keypoints: self.keypoints, descriptors: self.descriptors, source_dims }
    }
}

pub fn write_feature_cache(set: &KeypointSet, pattern_seed: u64) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + set.len() * RECORD_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&pattern_seed.to_le_bytes());
    out.extend_from_slice(&(set.len() as u32).to_le_bytes());
    for (kp, d) in set.keypoints.iter().zip(&set.descriptors) {
        for v in [kp.x, kp.y, kp.angle, kp.score] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&d.to_bytes());
    }
    out
}

pub fn read_feature_cache(bytes: &[u8]) -> Result<FeatureCache, CacheError> {
    if bytes.len() < HEADER_LEN {
        return Err(CacheError::Truncated { expected: HEADER_LEN, actual: bytes.len() });
    }
    if &bytes[..4] != MAGIC {
        return Err(CacheError::BadMagic);
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(CacheError::Version(version));
    }
    let pattern_seed = u64::from_le_bytes(bytes[6..14].try_into().expect("8 bytes"));
    let count = u32::from_le_bytes(bytes[14..18].try_into().expect("4 bytes")) as usize;
    let expected = HEADER_LEN + count * RECORD_LEN;
    if bytes.len() != expected {
        return Err(CacheError::Truncated { expected, actual: bytes.len() });
    }
    let f32_at = |o: usize| f32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let mut keypoints = Vec::with_capacity(count);
    let mut descriptors = Vec::with_capacity(count);
    for rec in bytes[HEADER_LEN..].chunks_exact(RECORD_LEN) {
        let o = rec.as_ptr() as usize - bytes.as_ptr() as usize;
        keypoints.push(Keypoint { x: f32_at(o), y: f32_at(o + 4), angle: f32_at(o + 8), score: f32_at(o + 12) });
        descriptors.push(Descriptor256::from_bytes(rec[16..48].try_into().expect("32 bytes")));
    }
    Ok(FeatureCache { pattern_seed, keypoints, descriptors })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_set() -> KeypointSet {
        KeypointSet {
            keypoints: vec![
                Keypoint { x: 20.0, y: 31.0, angle: -1.25, score: 900.0 },
                Keypoint { x: 100.0, y: 44.0, angle: std::f32::consts::PI, score: 120.0 },
            ],
            descriptors: vec![Descriptor256([1, 2, 3, 4]), Descriptor256([u64::MAX, 0, 7, 1 << 40])],
            source_dims: (300, 200),
        }
    }

    #[test]
    fn layout_is_little_endian() {
        let bytes = write_feature_cache(&sample_set(), 0x5EED);
        assert_eq!(&bytes[..4], b"SGFD");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..14], &0x5EEDu64.to_le_bytes());
        assert_eq!(&bytes[14..18], &[2, 0, 0, 0]);
        assert_eq!(&bytes[18..22], &20.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 18 + 2 * 48);
    }

    #[test]
    fn round_trip() {
        let set = sample_set();
        let back = read_feature_cache(&write_feature_cache(&set, 77)).unwrap();
        assert_eq!(back.pattern_seed, 77);
        assert_eq!(back.into_set(set.source_dims), set);
    }

    #[test]
    fn corrupt_inputs() {
        let bytes = write_feature_cache(&sample_set(), 1);
        assert!(matches!(read_feature_cache(&bytes[..30]), Err(CacheError::Truncated { .. })));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(read_feature_cache(&bad), Err(CacheError::BadMagic));
        let mut v2 = bytes;
        v2[4] = 2;
        assert_eq!(read_feature_cache(&v2), Err(CacheError::Version(2)));
    }
}
