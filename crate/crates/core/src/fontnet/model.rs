use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ops::{self, BnCache, ConvShape, Scalar};
use super::{FontError, NUM_FONTS};
use crate::par;

/// Network geometry. The encoder keeps the spatial size through its
/// convolutions and halves it once with max pooling, so both input sides
/// must be even.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FontNetArch {
    pub input_h: usize,
    pub input_w: usize,
    /// First encoder / last decoder kernel (odd).
    pub kernel: usize,
    pub enc_maps: usize,
    pub latent_maps: usize,
    pub hidden: usize,
    pub classes: usize,
    pub dropout: f64,
}

impl Default for FontNetArch {
    fn default() -> Self {
        Self {
            input_h: 32,
            input_w: 96,
            kernel: 5,
            enc_maps: 64,
            latent_maps: 128,
            hidden: 256,
            classes: NUM_FONTS,
            dropout: 0.5,
        }
    }
}

impl FontNetArch {
    /// Tiny variant for finite-difference checks: 8×8 input, 4 and 8 maps,
    /// no dropout.
    pub fn miniature() -> Self {
        Self {
            input_h: 8,
            input_w: 8,
            kernel: 5,
            enc_maps: 4,
            latent_maps: 8,
            hidden: 16,
            classes: NUM_FONTS,
            dropout: 0.0,
        }
    }

    pub fn input_len(&self) -> usize {
        self.input_h * self.input_w
    }

    pub fn pooled(&self) -> (usize, usize) {
        (self.input_h / 2, self.input_w / 2)
    }

    pub fn latent_len(&self) -> usize {
        let (h, w) = self.pooled();
        self.latent_maps * h * w
    }

    fn validate(&self) -> Result<(), FontError> {
        let ok = self.input_h >= 2
            && self.input_w >= 2
            && self.input_h.is_multiple_of(2)
            && self.input_w.is_multiple_of(2)
            && self.kernel % 2 == 1
            && self.enc_maps > 0
            && self.latent_maps > 0
            && self.hidden > 0
            && self.classes >= 2
            && (0.0..1.0).contains(&self.dropout);
        if ok {
            Ok(())
        } else {
            Err(FontError::ModelFormat(format!("invalid architecture {self:?}")))
        }
    }

    fn enc1(&self) -> ConvShape {
        ConvShape { c_in: 1, c_out: self.enc_maps, h: self.input_h, w: self.input_w, k: self.kernel }
    }
    fn enc2(&self) -> ConvShape {
        let (h, w) = self.pooled();
        ConvShape { c_in: self.enc_maps, c_out: self.latent_maps, h, w, k: 3 }
    }
    fn dec1(&self) -> ConvShape {
        let (h, w) = self.pooled();
        ConvShape { c_in: self.latent_maps, c_out: self.enc_maps, h, w, k: 3 }
    }
    fn dec2(&self) -> ConvShape {
        ConvShape { c_in: self.enc_maps, c_out: 1, h: self.input_h, w: self.input_w, k: self.kernel }
    }
}

/// Learnable parameters (and, with the same shape, their gradients).
#[derive(Debug, Clone, PartialEq)]
pub struct Weights<T> {
    pub enc1_w: Vec<T>,
    pub enc1_b: Vec<T>,
    pub bn1_gamma: Vec<T>,
    pub bn1_beta: Vec<T>,
    pub enc2_w: Vec<T>,
    pub enc2_b: Vec<T>,
    pub dec1_w: Vec<T>,
    pub dec1_b: Vec<T>,
    pub bn2_gamma: Vec<T>,
    pub bn2_beta: Vec<T>,
    pub dec2_w: Vec<T>,
    pub dec2_b: Vec<T>,
    pub fc1_w: Vec<T>,
    pub fc1_b: Vec<T>,
    pub fc2_w: Vec<T>,
    pub fc2_b: Vec<T>,
}

pub const WEIGHT_NAMES: [&str; 16] = [
    "enc1.weight",
    "enc1.bias",
    "bn1.gamma",
    "bn1.beta",
    "enc2.weight",
    "enc2.bias",
    "dec1.weight",
    "dec1.bias",
    "bn2.gamma",
    "bn2.beta",
    "dec2.weight",
    "dec2.bias",
    "fc1.weight",
    "fc1.bias",
    "fc2.weight",
    "fc2.bias",
];

impl<T: Scalar> Weights<T> {
    /// Tensor shapes in [`WEIGHT_NAMES`] order.
    pub fn shapes(arch: &FontNetArch) -> [Vec<usize>; 16] {
        let (k, c1, c2) = (arch.kernel, arch.enc_maps, arch.latent_maps);
        [
            vec![c1, 1, k, k],
            vec![c1],
            vec![c1],
            vec![c1],
            vec![c2, c1, 3, 3],
            vec![c2],
            vec![c2, c1, 3, 3],
            vec![c1],
            vec![c1],
            vec![c1],
            vec![c1, 1, k, k],
            vec![1],
            vec![arch.hidden, arch.latent_len()],
            vec![arch.hidden],
            vec![arch.classes, arch.hidden],
            vec![arch.classes],
        ]
    }

    pub fn zeros(arch: &FontNetArch) -> Self {
        let shapes = Self::shapes(arch);
        let t = |i: usize| vec![T::zero(); shapes[i].iter().product()];
        Self {
            enc1_w: t(0),
            enc1_b: t(1),
            bn1_gamma: t(2),
            bn1_beta: t(3),
            enc2_w: t(4),
            enc2_b: t(5),
            dec1_w: t(6),
            dec1_b: t(7),
            bn2_gamma: t(8),
            bn2_beta: t(9),
            dec2_w: t(10),
            dec2_b: t(11),
            fc1_w: t(12),
            fc1_b: t(13),
            fc2_w: t(14),
            fc2_b: t(15),
        }
    }

    pub fn tensors(&self) -> [&Vec<T>; 16] {
        [
            &self.enc1_w,
            &self.enc1_b,
            &self.bn1_gamma,
            &self.bn1_beta,
            &self.enc2_w,
            &self.enc2_b,
            &self.dec1_w,
            &self.dec1_b,
            &self.bn2_gamma,
            &self.bn2_beta,
            &self.dec2_w,
            &self.dec2_b,
            &self.fc1_w,
            &self.fc1_b,
            &self.fc2_w,
            &self.fc2_b,
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<T>; 16] {
        [
            &mut self.enc1_w,
            &mut self.enc1_b,
            &mut self.bn1_gamma,
            &mut self.bn1_beta,
            &mut self.enc2_w,
            &mut self.enc2_b,
            &mut self.dec1_w,
            &mut self.dec1_b,
            &mut self.bn2_gamma,
            &mut self.bn2_beta,
            &mut self.dec2_w,
            &mut self.dec2_b,
            &mut self.fc1_w,
            &mut self.fc1_b,
            &mut self.fc2_w,
            &mut self.fc2_b,
        ]
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Running batch-norm statistics, used in eval mode.
#[derive(Debug, Clone, PartialEq)]
pub struct BnStats<T> {
    pub mean: Vec<T>,
    pub var: Vec<T>,
}

impl<T: Scalar> BnStats<T> {
    fn new(c: usize) -> Self {
        Self { mean: vec![T::zero(); c], var: vec![T::one(); c] }
    }

    /// Exponential update with momentum 0.1; the batch variance is converted
    /// to its unbiased estimate over `m` samples.
    pub(crate) fn update(&mut self, cache: &BnCache<T>, m: usize) {
        let mom = T::lit(BN_MOMENTUM);
        let unbias = if m > 1 { T::lit(m as f64 / (m - 1) as f64) } else { T::one() };
        for c in 0..self.mean.len() {
            self.mean[c] = (T::one() - mom) * self.mean[c] + mom * cache.mean[c];
            self.var[c] = (T::one() - mom) * self.var[c] + mom * cache.var[c] * unbias;
        }
    }
}

pub const BN_MOMENTUM: f64 = 0.1;

/// Convolutional autoencoder with a classifier head on its latent maps.
#[derive(Debug, Clone, PartialEq)]
pub struct FontNet<T> {
    pub arch: FontNetArch,
    pub weights: Weights<T>,
    pub bn1: BnStats<T>,
    pub bn2: BnStats<T>,
    /// Set once training has run at least one epoch (or the model was loaded
    /// from a trained file).
    pub trained: bool,
}

/// The deployed model precision.
pub type FontModel = FontNet<f32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics, dropout drawn from the seed.
    Train { dropout_seed: u64 },
    /// Running statistics, no dropout.
    Eval,
}

/// Per-batch loss components (batch means).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Losses<T> {
    pub mse: T,
    pub ce: T,
}

/// Relative weights of the two loss terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub mse: f64,
    pub ce: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { mse: 1.0, ce: 1.0 }
    }
}

impl<T: Scalar> Losses<T> {
    pub fn total(&self, w: LossWeights) -> T {
        T::lit(w.mse) * self.mse + T::lit(w.ce) * self.ce
    }
}

/// Everything the backward pass needs from a forward pass.
pub(crate) struct Trace<T> {
    n: usize,
    x: Vec<T>,
    a1: Vec<T>,
    bn1: Option<BnCache<T>>,
    r1: Vec<T>,
    pool_arg: Vec<u32>,
    p1: Vec<T>,
    latent: Vec<T>,
    d1: Vec<T>,
    bn2: Option<BnCache<T>>,
    r2: Vec<T>,
    u: Vec<T>,
    pub(crate) reconstruction: Vec<T>,
    h1: Vec<T>,
    drop_mask: Vec<T>,
    hd: Vec<T>,
    pub(crate) logits: Vec<T>,
}

impl<T> Trace<T> {
    pub(crate) fn latent(&self) -> &[T] {
        &self.latent
    }

    pub(crate) fn batch_stats(&self) -> (Option<&BnCache<T>>, Option<&BnCache<T>>) {
        (self.bn1.as_ref(), self.bn2.as_ref())
    }
}

fn per_example<T: Scalar>(n: usize, f: impl Fn(usize) -> Vec<T> + Sync + Send) -> Vec<T> {
    par::map_range(n, f).concat()
}

/// Sums per-example gradient triples in example order, so the result does
/// not depend on how the examples were scheduled.
fn sum_grads<T: Scalar>(parts: Vec<(Vec<T>, Vec<T>, Option<Vec<T>>)>, dw: &mut [T], db: &mut [T]) -> Vec<T> {
    let mut dx = Vec::new();
    for (pw, pb, px) in parts {
        dw.iter_mut().zip(&pw).for_each(|(a, &b)| *a = *a + b);
        db.iter_mut().zip(&pb).for_each(|(a, &b)| *a = *a + b);
        if let Some(px) = px {
            dx.extend(px);
        }
    }
    dx
}

impl<T: Scalar> FontNet<T> {
    /// Seeded initialization: convolutions and the first linear layer draw
    /// from U(−1/√fan_in, 1/√fan_in); biases start at zero, batch-norm at the
    /// identity, and the output layer at exactly zero.
    pub fn new(arch: FontNetArch, seed: u64) -> Result<Self, FontError> {
        arch.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = Weights::<T>::zeros(&arch);
        let mut fill = |t: &mut Vec<T>, fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            t.iter_mut().for_each(|v| *v = T::lit(rng.random_range(-bound..bound)));
        };
        let (k, c1, c2) = (arch.kernel, arch.enc_maps, arch.latent_maps);
        fill(&mut w.enc1_w, k * k);
        fill(&mut w.enc2_w, c1 * 9);
        fill(&mut w.dec1_w, c2 * 9);
        fill(&mut w.dec2_w, c1 * k * k);
        fill(&mut w.fc1_w, arch.latent_len());
        w.bn1_gamma.fill(T::one());
        w.bn2_gamma.fill(T::one());
        Ok(Self { arch, weights: w, bn1: BnStats::new(c1), bn2: BnStats::new(c1), trained: false })
    }

    pub(crate) fn check_input(&self, x: &[T]) -> Result<usize, FontError> {
        let len = self.arch.input_len();
        if x.is_empty() || !x.len().is_multiple_of(len) {
            return Err(FontError::DimensionMismatch { expected: len, actual: x.len() });
        }
        Ok(x.len() / len)
    }

    /// Full forward pass over a batch of `n` images laid out back to back.
    pub(crate) fn forward(&self, x: &[T], mode: Mode) -> Result<Trace<T>, FontError> {
        self.forward_probe(x, mode, &mut None)
    }

    /// Which side of every kink this input sits on: one entry per ReLU
    /// (active or not) and per max-pool window (winning offset). Two points
    /// with equal patterns lie on the same smooth piece of the network, which
    /// is what a central finite difference between them needs.
    pub fn activation_pattern(&self, x: &[T], mode: Mode) -> Result<Vec<u32>, FontError> {
        let mut pattern = Some(Vec::new());
        let trace = self.forward_probe(x, mode, &mut pattern)?;
        let mut pattern = pattern.unwrap_or_default();
        pattern.extend_from_slice(&trace.pool_arg);
        Ok(pattern)
    }

    fn forward_probe(&self, x: &[T], mode: Mode, pattern: &mut Option<Vec<u32>>) -> Result<Trace<T>, FontError> {
        let n = self.check_input(x)?;
        let mut probe = |v: &[T]| {
            if let Some(p) = pattern.as_mut() {
                p.extend(v.iter().map(|&t| u32::from(t > T::zero())));
            }
        };
        let a = self.arch;
        let w = &self.weights;
        let (s1, s2, s3, s4) = (a.enc1(), a.enc2(), a.dec1(), a.dec2());
        let (ph, pw) = a.pooled();

        let a1 = per_example(n, |i| ops::conv2d(&x[i * s1.in_len()..][..s1.in_len()], &w.enc1_w, &w.enc1_b, s1));
        let (mut r1, bn1) = match mode {
            Mode::Train { .. } => {
                let (y, c) = ops::batch_norm_train(&a1, n, a.enc_maps, s1.plane(), &w.bn1_gamma, &w.bn1_beta);
                (y, Some(c))
            }
            Mode::Eval => (
                ops::batch_norm_eval(
                    &a1,
                    n,
                    a.enc_maps,
                    s1.plane(),
                    &w.bn1_gamma,
                    &w.bn1_beta,
                    &self.bn1.mean,
                    &self.bn1.var,
                ),
                None,
            ),
        };
        probe(&r1);
        ops::relu(&mut r1);
        let (p1, pool_arg) = ops::max_pool2(&r1, n * a.enc_maps, a.input_h, a.input_w);
        let mut latent =
            per_example(n, |i| ops::conv2d(&p1[i * s2.in_len()..][..s2.in_len()], &w.enc2_w, &w.enc2_b, s2));
        probe(&latent);
        ops::relu(&mut latent);

        let d1 = per_example(n, |i| {
            ops::conv_transpose2d(&latent[i * s3.in_len()..][..s3.in_len()], &w.dec1_w, &w.dec1_b, s3)
        });
        let (mut r2, bn2) = match mode {
            Mode::Train { .. } => {
                let (y, c) = ops::batch_norm_train(&d1, n, a.enc_maps, s3.plane(), &w.bn2_gamma, &w.bn2_beta);
                (y, Some(c))
            }
            Mode::Eval => (
                ops::batch_norm_eval(
                    &d1,
                    n,
                    a.enc_maps,
                    s3.plane(),
                    &w.bn2_gamma,
                    &w.bn2_beta,
                    &self.bn2.mean,
                    &self.bn2.var,
                ),
                None,
            ),
        };
        probe(&r2);
        ops::relu(&mut r2);
        let u = ops::upsample2(&r2, n * a.enc_maps, ph, pw);
        let mut reconstruction =
            per_example(n, |i| ops::conv_transpose2d(&u[i * s4.in_len()..][..s4.in_len()], &w.dec2_w, &w.dec2_b, s4));
        reconstruction.iter_mut().for_each(|v| *v = ops::sigmoid(*v));

        let d = a.latent_len();
        let mut h1 = ops::linear(&latent, n, d, &w.fc1_w, &w.fc1_b, a.hidden);
        probe(&h1);
        ops::relu(&mut h1);
        let drop_mask = match mode {
            Mode::Train { dropout_seed } if a.dropout > 0.0 => {
                let mut rng = ChaCha8Rng::seed_from_u64(dropout_seed);
                let keep = T::lit(1.0 / (1.0 - a.dropout));
                (0..h1.len()).map(|_| if rng.random::<f64>() < a.dropout { T::zero() } else { keep }).collect()
            }
            _ => Vec::new(),
        };
        let hd =
            if drop_mask.is_empty() { h1.clone() } else { h1.iter().zip(&drop_mask).map(|(&h, &m)| h * m).collect() };
        let logits = ops::linear(&hd, n, a.hidden, &w.fc2_w, &w.fc2_b, a.classes);

        Ok(Trace {
            n,
            x: x.to_vec(),
            a1,
            bn1,
            r1,
            pool_arg,
            p1,
            latent,
            d1,
            bn2,
            r2,
            u,
            reconstruction,
            h1,
            drop_mask,
            hd,
            logits,
        })
    }

    pub(crate) fn losses(&self, trace: &Trace<T>, labels: &[usize]) -> Losses<T> {
        let n = trace.n;
        let sq = trace.x.iter().zip(&trace.reconstruction).fold(T::zero(), |acc, (&x, &r)| acc + (r - x) * (r - x));
        let mse = sq / T::lit(trace.x.len() as f64);
        let c = self.arch.classes;
        let ce = labels
            .iter()
            .enumerate()
            .fold(T::zero(), |acc, (i, &l)| acc + ops::cross_entropy(&trace.logits[i * c..(i + 1) * c], l))
            / T::lit(n as f64);
        Losses { mse, ce }
    }

    /// Loss of a batch under `mode`; labels must be `< classes`.
    pub fn loss(&self, x: &[T], labels: &[usize], mode: Mode) -> Result<Losses<T>, FontError> {
        let trace = self.forward(x, mode)?;
        self.check_labels(trace.n, labels)?;
        Ok(self.losses(&trace, labels))
    }

    fn check_labels(&self, n: usize, labels: &[usize]) -> Result<(), FontError> {
        if labels.len() != n {
            return Err(FontError::DimensionMismatch { expected: n, actual: labels.len() });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.arch.classes) {
            return Err(FontError::DimensionMismatch { expected: self.arch.classes, actual: bad });
        }
        Ok(())
    }

    /// Loss and its gradient with respect to every weight, for the batch
    /// objective `w_mse·MSE + w_ce·CE`.
    pub fn loss_and_grad(
        &self,
        x: &[T],
        labels: &[usize],
        mode: Mode,
        lw: LossWeights,
    ) -> Result<(Losses<T>, Weights<T>), FontError> {
        let trace = self.forward(x, mode)?;
        self.check_labels(trace.n, labels)?;
        let losses = self.losses(&trace, labels);
        let grads = self.backward(&trace, labels, lw);
        Ok((losses, grads))
    }

    pub(crate) fn backward(&self, t: &Trace<T>, labels: &[usize], lw: LossWeights) -> Weights<T> {
        let a = self.arch;
        let w = &self.weights;
        let n = t.n;
        let mut g = Weights::<T>::zeros(&a);
        let (s1, s2, s3, s4) = (a.enc1(), a.enc2(), a.dec1(), a.dec2());
        let (ph, pw) = a.pooled();

        // Classifier head.
        let c = a.classes;
        let ce_scale = T::lit(lw.ce / n as f64);
        let mut dlogits = vec![T::zero(); n * c];
        for i in 0..n {
            let probs = ops::softmax(&t.logits[i * c..(i + 1) * c]);
            for (j, p) in probs.into_iter().enumerate() {
                let target = if j == labels[i] { T::one() } else { T::zero() };
                dlogits[i * c + j] = (p - target) * ce_scale;
            }
        }
        let (dw, db, dhd) = ops::linear_backward(&t.hd, n, a.hidden, &w.fc2_w, &dlogits, c, true);
        g.fc2_w = dw;
        g.fc2_b = db;
        let mut dh1 = dhd.expect("requested");
        if !t.drop_mask.is_empty() {
            dh1.iter_mut().zip(&t.drop_mask).for_each(|(d, &m)| *d = *d * m);
        }
        ops::relu_backward(&t.h1, &mut dh1);
        let d = a.latent_len();
        let (dw, db, dlat) = ops::linear_backward(&t.latent, n, d, &w.fc1_w, &dh1, a.hidden, true);
        g.fc1_w = dw;
        g.fc1_b = db;
        let mut dlatent = dlat.expect("requested");

        // Decoder.
        let mse_scale = T::lit(2.0 * lw.mse / t.x.len() as f64);
        let dd2: Vec<T> =
            t.reconstruction.iter().zip(&t.x).map(|(&r, &x)| (r - x) * mse_scale * r * (T::one() - r)).collect();
        let parts = par::map_range(n, |i| {
            ops::conv_transpose2d_backward(
                &t.u[i * s4.in_len()..][..s4.in_len()],
                &w.dec2_w,
                &dd2[i * s4.out_len()..][..s4.out_len()],
                s4,
                true,
            )
        });
        let du = sum_grads(parts, &mut g.dec2_w, &mut g.dec2_b);
        let mut dr2 = ops::upsample2_backward(&du, n * a.enc_maps, ph, pw);
        ops::relu_backward(&t.r2, &mut dr2);
        let dd1 = match &t.bn2 {
            Some(cache) => ops::batch_norm_backward(
                &dr2,
                cache,
                n,
                a.enc_maps,
                s3.plane(),
                &w.bn2_gamma,
                &mut g.bn2_gamma,
                &mut g.bn2_beta,
            ),
            None => self.bn_eval_backward(&dr2, &t.d1, n, s3.plane(), false, &mut g),
        };
        let parts = par::map_range(n, |i| {
            ops::conv_transpose2d_backward(
                &t.latent[i * s3.in_len()..][..s3.in_len()],
                &w.dec1_w,
                &dd1[i * s3.out_len()..][..s3.out_len()],
                s3,
                true,
            )
        });
        let dlat_dec = sum_grads(parts, &mut g.dec1_w, &mut g.dec1_b);
        dlatent.iter_mut().zip(&dlat_dec).for_each(|(a, &b)| *a = *a + b);

        // Encoder.
        ops::relu_backward(&t.latent, &mut dlatent);
        let parts = par::map_range(n, |i| {
            ops::conv2d_backward(
                &t.p1[i * s2.in_len()..][..s2.in_len()],
                &w.enc2_w,
                &dlatent[i * s2.out_len()..][..s2.out_len()],
                s2,
                true,
            )
        });
        let dp1 = sum_grads(parts, &mut g.enc2_w, &mut g.enc2_b);
        let mut dr1 = ops::max_pool2_backward(&dp1, &t.pool_arg, n * a.enc_maps, a.input_h, a.input_w);
        ops::relu_backward(&t.r1, &mut dr1);
        let da1 = match &t.bn1 {
            Some(cache) => ops::batch_norm_backward(
                &dr1,
                cache,
                n,
                a.enc_maps,
                s1.plane(),
                &w.bn1_gamma,
                &mut g.bn1_gamma,
                &mut g.bn1_beta,
            ),
            None => self.bn_eval_backward(&dr1, &t.a1, n, s1.plane(), true, &mut g),
        };
        let parts = par::map_range(n, |i| {
            ops::conv2d_backward(
                &t.x[i * s1.in_len()..][..s1.in_len()],
                &w.enc1_w,
                &da1[i * s1.out_len()..][..s1.out_len()],
                s1,
                false,
            )
        });
        sum_grads(parts, &mut g.enc1_w, &mut g.enc1_b);
        g
    }

    /// Backward through eval-mode batch norm, a fixed per-channel affine map
    /// of its input `x`.
    fn bn_eval_backward(&self, dy: &[T], x: &[T], n: usize, p: usize, first: bool, g: &mut Weights<T>) -> Vec<T> {
        let c = self.arch.enc_maps;
        let (gamma, stats, dgamma, dbeta) = if first {
            (&self.weights.bn1_gamma, &self.bn1, &mut g.bn1_gamma, &mut g.bn1_beta)
        } else {
            (&self.weights.bn2_gamma, &self.bn2, &mut g.bn2_gamma, &mut g.bn2_beta)
        };
        let mut dx = vec![T::zero(); dy.len()];
        for ch in 0..c {
            let inv_std = T::one() / (stats.var[ch] + T::lit(ops::BN_EPS)).sqrt();
            for i in 0..n {
                let off = (i * c + ch) * p;
                for j in off..off + p {
                    dgamma[ch] = dgamma[ch] + dy[j] * (x[j] - stats.mean[ch]) * inv_std;
                    dbeta[ch] = dbeta[ch] + dy[j];
                    dx[j] = dy[j] * gamma[ch] * inv_std;
                }
            }
        }
        dx
    }
}
