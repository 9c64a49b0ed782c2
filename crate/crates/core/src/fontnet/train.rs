use std::io::{self, Write};

use log::info;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::glyphs::GlyphImage;
use super::model::{FontNet, FontNetArch, LossWeights, Mode, Weights};
use super::ops::Scalar;
use super::FontError;

/// Share of every class used for training; the rest is validation.
pub const TRAIN_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub seed: u64,
    pub loss_weights: LossWeights,
    pub arch: FontNetArch,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3,
            batch_size: 32,
            learning_rate: 0.01,
            momentum: 0.9,
            seed: 0,
            loss_weights: LossWeights::default(),
            arch: FontNetArch::default(),
        }
    }
}

/// One row of the training log. Row 0 describes the untrained model.
/// Train losses are means over the epoch's batches (train mode); validation
/// figures come from an eval-mode pass after the epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_mse: f64,
    pub train_ce: f64,
    pub val_mse: f64,
    pub val_ce: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T> {
    /// Weights from the epoch with the best validation accuracy (earliest on
    /// ties; epoch 0 is the initial model).
    pub model: FontNet<T>,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub train_indices: Vec<usize>,
    pub val_indices: Vec<usize>,
}

/// Per class, a seeded shuffle of its examples; the first
/// `round(0.75·n)` (at least one, leaving at least one) train, the rest
/// validate. Both outputs are sorted.
pub fn stratified_split(labels: &[usize], classes: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for class in 0..classes {
        let mut idx: Vec<usize> = labels.iter().enumerate().filter(|(_, &l)| l == class).map(|(i, _)| i).collect();
        idx.shuffle(&mut rng);
        let n = idx.len();
        if n == 0 {
            continue;
        }
        let cut = ((n as f64 * TRAIN_FRACTION).round() as usize).clamp(1.min(n), n.saturating_sub(1).max(1));
        train.extend_from_slice(&idx[..cut]);
        val.extend_from_slice(&idx[cut..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

fn gather<T: Scalar>(data: &[GlyphImage], idx: &[usize]) -> (Vec<T>, Vec<usize>) {
    let mut x = Vec::with_capacity(idx.iter().map(|&i| data[i].pixels.len()).sum());
    let mut labels = Vec::with_capacity(idx.len());
    for &i in idx {
        x.extend(data[i].pixels.iter().map(|&v| T::lit(v as f64)));
        labels.push(data[i].label);
    }
    (x, labels)
}

/// Eval-mode `(mse, ce, accuracy)` over `idx`, batched.
pub fn evaluate<T: Scalar>(
    model: &FontNet<T>,
    data: &[GlyphImage],
    idx: &[usize],
) -> Result<(f64, f64, f64), FontError> {
    if idx.is_empty() {
        return Ok((0.0, 0.0, 0.0));
    }
    let (mut mse, mut ce, mut correct) = (0.0, 0.0, 0usize);
    let c = model.arch.classes;
    for chunk in idx.chunks(64) {
        let (x, labels) = gather::<T>(data, chunk);
        let trace = model.forward(&x, Mode::Eval)?;
        let l = model.losses(&trace, &labels);
        let n = chunk.len() as f64;
        mse += l.mse.to_f64().unwrap_or(f64::NAN) * n;
        ce += l.ce.to_f64().unwrap_or(f64::NAN) * n;
        for (i, &label) in labels.iter().enumerate() {
            if argmax(&trace.logits[i * c..(i + 1) * c]) == label {
                correct += 1;
            }
        }
    }
    let n = idx.len() as f64;
    Ok((mse / n, ce / n, correct as f64 / n))
}

pub(crate) fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn validate_dataset(data: &[GlyphImage], arch: &FontNetArch) -> Result<(), FontError> {
    for g in data {
        if g.pixels.len() != arch.input_len() || (g.height, g.width) != (arch.input_h, arch.input_w) {
            return Err(FontError::DimensionMismatch { expected: arch.input_len(), actual: g.pixels.len() });
        }
        if g.label >= arch.classes {
            return Err(FontError::InsufficientData(format!("label {} outside {} classes", g.label, arch.classes)));
        }
    }
    for class in 0..arch.classes {
        let n = data.iter().filter(|g| g.label == class).count();
        if n < 2 {
            return Err(FontError::InsufficientData(format!("class {class} has {n} examples; need at least 2")));
        }
    }
    Ok(())
}

/// Batches of `size` in the given order; a trailing singleton joins the
/// previous batch so batch statistics always see two examples.
fn batches(order: &[usize], size: usize) -> Vec<&[usize]> {
    let mut out: Vec<&[usize]> = order.chunks(size.max(2)).collect();
    if out.len() > 1 && out.last().is_some_and(|b| b.len() == 1) {
        out.pop();
        let start = (out.len() - 1) * size.max(2);
        *out.last_mut().expect("non-empty") = &order[start..];
    }
    out
}

pub fn train<T: Scalar>(data: &[GlyphImage], cfg: &TrainConfig) -> Result<TrainOutcome<T>, FontError> {
    train_with_progress(data, cfg, |_| {})
}

/// SGD with momentum (`v ← μ·v + g`, `p ← p − lr·v`) on the joint
/// reconstruction + classification loss; `on_epoch` sees every log row.
pub fn train_with_progress<T: Scalar>(
    data: &[GlyphImage],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<TrainOutcome<T>, FontError> {
    validate_dataset(data, &cfg.arch)?;
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0) || !(0.0..1.0).contains(&cfg.momentum) {
        return Err(FontError::InvalidConfig(format!(
            "batch {} lr {} momentum {}",
            cfg.batch_size, cfg.learning_rate, cfg.momentum
        )));
    }
    let labels: Vec<usize> = data.iter().map(|g| g.label).collect();
    let (train_idx, val_idx) = stratified_split(&labels, cfg.arch.classes, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut model = FontNet::<T>::new(cfg.arch, cfg.seed.wrapping_add(2))?;
    let mut velocity = Weights::<T>::zeros(&cfg.arch);

    let (val_mse, val_ce, val_accuracy) = evaluate(&model, data, &val_idx)?;
    let initial = EpochStats { epoch: 0, train_mse: f64::NAN, train_ce: f64::NAN, val_mse, val_ce, val_accuracy };
    on_epoch(&initial);
    let mut history = vec![initial];
    let mut best = (model.clone(), 0usize, val_accuracy);

    let (lr, mu) = (T::lit(cfg.learning_rate), T::lit(cfg.momentum));
    let plane = cfg.arch.input_len();
    let (ph, pw) = cfg.arch.pooled();
    let mut order = train_idx.clone();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum_mse, mut sum_ce) = (0.0, 0.0);
        for batch in batches(&order, cfg.batch_size) {
            let (x, y) = gather::<T>(data, batch);
            let trace = model.forward(&x, Mode::Train { dropout_seed: rng.random() })?;
            let losses = model.losses(&trace, &y);
            let grads = model.backward(&trace, &y, cfg.loss_weights);
            let n = batch.len();
            if let (Some(c1), Some(c2)) = trace.batch_stats() {
                model.bn1.update(c1, n * plane);
                model.bn2.update(c2, n * ph * pw);
            }
            for (p, (v, g)) in
                model.weights.tensors_mut().into_iter().zip(velocity.tensors_mut().into_iter().zip(grads.tensors()))
            {
                for ((pi, vi), &gi) in p.iter_mut().zip(v.iter_mut()).zip(g.iter()) {
                    *vi = mu * *vi + gi;
                    *pi = *pi - lr * *vi;
                }
            }
            sum_mse += losses.mse.to_f64().unwrap_or(f64::NAN) * n as f64;
            sum_ce += losses.ce.to_f64().unwrap_or(f64::NAN) * n as f64;
        }
        if !model.weights.tensors().iter().all(|t| t.iter().all(|v| v.is_finite())) {
            return Err(FontError::Diverged { epoch });
        }
        let (val_mse, val_ce, val_accuracy) = evaluate(&model, data, &val_idx)?;
        let nt = order.len() as f64;
        let stats = EpochStats { epoch, train_mse: sum_mse / nt, train_ce: sum_ce / nt, val_mse, val_ce, val_accuracy };
        info!(
            "epoch {epoch}: train mse {:.5} ce {:.4}; val mse {val_mse:.5} ce {val_ce:.4} acc {val_accuracy:.4}",
            stats.train_mse, stats.train_ce
        );
        on_epoch(&stats);
        history.push(stats);
        if val_accuracy > best.2 {
            best = (model.clone(), epoch, val_accuracy);
        }
    }
    let (mut best_model, best_epoch, _) = best;
    best_model.trained = cfg.epochs > 0;
    Ok(TrainOutcome { model: best_model, history, best_epoch, train_indices: train_idx, val_indices: val_idx })
}

/// CSV log with header `epoch,mse,ce,val_accuracy`; losses are the
/// validation-set figures so row 0 is comparable with the rest.
pub fn write_training_log(history: &[EpochStats], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "epoch,mse,ce,val_accuracy")?;
    for s in history {
        writeln!(out, "{},{:.8},{:.8},{:.6}", s.epoch, s.val_mse, s.val_ce, s.val_accuracy)?;
    }
    Ok(())
}
