//! Local design stage: descriptor matching and diagram retrieval.
//!
//! Pipeline for a query/candidate pair:
//! 1. brute-force 2-nearest-neighbour search under Hamming distance;
//! 2. distance-ratio test (`best < ratio * second`) selects the good matches;
//! 3. each good match is scored by the cosine of its two descriptors viewed
//!    as 0/1 vectors;
//! 4. the image score is the mean of those cosines, or 0 without good matches.

mod knn;
mod retrieve;
mod score;

pub use knn::{knn2_match, ratio_filter, MatchPair};
pub use retrieve::{retrieve_diagrams, score_diagrams, DiagramHit};
pub use score::{cosine_sim, image_similarity, image_similarity_raw, MatchResult};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MatcherConfigError {
    #[error("ratio {0} outside (0, 1]")]
    Ratio(f64),
    #[error("similarity floor {0} outside [0, 1]")]
    Floor(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatcherConfig {
    /// Distance-ratio test factor.
    pub ratio: f64,
    /// Optional extra filter: drop good matches whose cosine is `<= floor`.
    pub sim_floor: Option<f64>,
}

impl Default for MatcherConfig {
    fn default() -> Self {
        Self { ratio: 0.75, sim_floor: None }
    }
}

impl MatcherConfig {
    pub fn new(ratio: f64, sim_floor: Option<f64>) -> Result<Self, MatcherConfigError> {
        if !(ratio > 0.0 && ratio <= 1.0) {
            return Err(MatcherConfigError::Ratio(ratio));
        }
        if let Some(t) = sim_floor {
            if !(0.0..=1.0).contains(&t) {
                return Err(MatcherConfigError::Floor(t));
            }
        }
        Ok(Self { ratio, sim_floor })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(MatcherConfig::new(0.75, None).is_ok());
        assert!(MatcherConfig::new(1.0, Some(0.0)).is_ok());
        assert_eq!(MatcherConfig::new(0.0, None), Err(MatcherConfigError::Ratio(0.0)));
        assert_eq!(MatcherConfig::new(1.5, None), Err(MatcherConfigError::Ratio(1.5)));
        assert_eq!(MatcherConfig::new(0.7, Some(1.2)), Err(MatcherConfigError::Floor(1.2)));
        assert!(MatcherConfig::new(f64::NAN, None).is_err());
    }
}
