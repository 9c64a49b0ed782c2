//! Font recognition: a convolutional autoencoder whose latent maps feed a
//! small classifier over five synthetic typefaces.
//!
//! ```text
//! encoder  conv k×k (1→64) · batch-norm · ReLU · max-pool 2 · conv 3×3 (64→128) · ReLU  = latent
//! decoder  conv-transpose 3×3 (128→64) · batch-norm · ReLU · upsample ×2 · conv-transpose k×k (64→1) · sigmoid
//! head     flatten · linear 256 · ReLU · dropout · linear 5
//! ```
//!
//! The network is generic over [`Scalar`]; [`FontModel`] (f32) is what gets
//! trained and shipped, f64 instances serve numerical checks.

mod glyphs;
mod io;
mod model;
pub mod ops;
mod train;

pub use glyphs::{render_synthetic_dataset, render_word, FontStyle, GlyphImage, FONT_NAMES, GLYPH_H, GLYPH_W};
pub use io::{decode_model, encode_model, load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use model::{BnStats, FontModel, FontNet, FontNetArch, LossWeights, Losses, Mode, Weights, WEIGHT_NAMES};
pub use ops::Scalar;
pub use train::{
    evaluate, stratified_split, train, train_with_progress, write_training_log, EpochStats, TrainConfig, TrainOutcome,
    TRAIN_FRACTION,
};

use thiserror::Error;

use crate::raster::{binarize_otsu, resize_bilinear, GrayImage, Polarity};

pub const NUM_FONTS: usize = 5;

/// Minimum share of ink pixels for a crop to count as text.
pub const MIN_INK_FRACTION: f64 = 0.01;

#[derive(Debug, Error)]
pub enum FontError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("insufficient training data: {0}")]
    InsufficientData(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training diverged (non-finite weights) in epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("crop contains no text (ink below 1%)")]
    EmptyGlyph,
    #[error("font model has not been trained")]
    ModelUntrained,
    #[error("bad model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Eval-mode autoencoder outputs for a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct CaeOutput<T> {
    /// `n × latent_maps × (h/2) × (w/2)`.
    pub latent: Vec<T>,
    /// Same layout as the input, values in (0, 1).
    pub reconstruction: Vec<T>,
}

/// Runs encoder and decoder in eval mode over `n` images laid end to end.
pub fn cae_forward<T: Scalar>(x: &[T], model: &FontNet<T>) -> Result<CaeOutput<T>, FontError> {
    let trace = model.forward(x, Mode::Eval)?;
    Ok(CaeOutput { latent: trace.latent().to_vec(), reconstruction: trace.reconstruction })
}

/// Eval-mode classifier head over latents of `n` examples: `n × classes`
/// logits.
pub fn classifier_forward<T: Scalar>(latent: &[T], model: &FontNet<T>) -> Result<Vec<T>, FontError> {
    let a = model.arch;
    let d = a.latent_len();
    if latent.is_empty() || !latent.len().is_multiple_of(d) {
        return Err(FontError::DimensionMismatch { expected: d, actual: latent.len() });
    }
    let n = latent.len() / d;
    let w = &model.weights;
    let mut h = ops::linear(latent, n, d, &w.fc1_w, &w.fc1_b, a.hidden);
    ops::relu(&mut h);
    Ok(ops::linear(&h, n, a.hidden, &w.fc2_w, &w.fc2_b, a.classes))
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct FontPrediction {
    pub label: usize,
    pub font_name: &'static str,
    /// Max softmax probability; at least `1/5`.
    pub confidence: f64,
    pub probabilities: Vec<f64>,
}

/// Labels the font of a text crop. The crop is resized to the model input,
/// scaled to `[0, 1]`, and run in eval mode.
pub fn classify_font(crop: &GrayImage, model: &FontModel) -> Result<FontPrediction, FontError> {
    if !model.trained {
        return Err(FontError::ModelUntrained);
    }
    let ink = binarize_otsu(crop, Polarity::InkDarker).ink_count();
    if (ink as f64) < MIN_INK_FRACTION * (crop.width() * crop.height()) as f64 {
        return Err(FontError::EmptyGlyph);
    }
    let a = model.arch;
    let resized = resize_bilinear(crop, a.input_w, a.input_h)
        .map_err(|_| FontError::DimensionMismatch { expected: a.input_len(), actual: 0 })?;
    let x: Vec<f32> = resized.pixels().iter().map(|&v| v as f32 / 255.0).collect();
    let trace = model.forward(&x, Mode::Eval)?;
    let probs: Vec<f64> = ops::softmax(&trace.logits.iter().map(|&v| v as f64).collect::<Vec<_>>());
    let label = train::argmax(&probs);
    Ok(FontPrediction { label, font_name: FONT_NAMES[label], confidence: probs[label], probabilities: probs })
}
