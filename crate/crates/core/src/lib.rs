//! Sketch-driven slide design guidance.
//!
//! The crate builds a corpus of slide layouts and binarized diagrams, then
//! serves two retrieval stages over it:
//!
//! * the global stage ranks whole-slide layouts against a sketched set of
//!   class-tagged regions and aggregates layout heat maps ([`layout`]);
//! * the local stage matches freehand diagram sketches against corpus
//!   diagrams using oriented FAST corners and rotated binary descriptors
//!   ([`features`], [`matching`]).
//!
//! A small convolutional autoencoder with a classifier head recognizes the
//! font of text crops ([`fontnet`]).
//!
//! Data-parallel loops (corpus scoring, frame hashing, per-example network
//! passes) run on rayon when the default `parallel` feature is enabled and
//! fall back to plain iterators otherwise. Results are identical either way.

pub mod corpus;
pub mod features;
pub mod fontnet;
pub mod ingest;
pub mod layout;
pub mod matching;
pub mod par;
pub mod raster;
pub mod synth;

pub use corpus::{build_corpus, load_corpus, BuildConfig, BuildInput, Corpus, CorpusError, CorpusIndex};
pub use features::{extract_features, Descriptor256, FeatureConfig, Keypoint, KeypointSet, SamplingPattern};
pub use ingest::{LayoutClass, LayoutRegion, NormRect, SlideLayout};
pub use layout::{ClassFilter, FeatureGrid, HeatMap, LayoutRanking};
pub use matching::{image_similarity, retrieve_diagrams, MatchResult, MatcherConfig};
pub use raster::{BinImage, GrayImage, Hash64};
