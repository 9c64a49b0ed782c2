//! Brute-force reference implementations shared by the integration tests.
//! Each one is written directly from the definition, with no shared code
//! path into the library beyond the plain data types.
#![allow(dead_code)]

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slideguide_core::features::{Descriptor256, Keypoint, SamplingPattern};
use slideguide_core::fontnet::{FontNet, FontNetArch, LossWeights, Mode, WEIGHT_NAMES};
use slideguide_core::ingest::{LayoutClass, SlideLayout};
use slideguide_core::raster::{BinImage, GrayImage};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_gray(rng: &mut impl Rng, w: usize, h: usize, levels: u32) -> GrayImage {
    let step = 255 / (levels.max(2) - 1);
    GrayImage::from_fn(w, h, |_, _| (rng.random_range(0..levels) * step) as u8)
}

pub fn random_bin(rng: &mut impl Rng, w: usize, h: usize, density: f64) -> BinImage {
    let bits = (0..w * h).map(|_| rng.random_bool(density)).collect();
    BinImage::new(w, h, bits).unwrap()
}

pub fn random_descriptor(rng: &mut impl Rng) -> Descriptor256 {
    Descriptor256([rng.random(), rng.random(), rng.random(), rng.random()])
}

// ---------------------------------------------------------------- raster

/// Bilinear sample of pixel center `(d + 0.5)` mapped back into the source.
fn bilinear_ref(img: &GrayImage, w: usize, h: usize, x: usize, y: usize) -> u8 {
    let (sw, sh) = (img.width() as f64, img.height() as f64);
    let sx = ((x as f64 + 0.5) * sw / w as f64 - 0.5).max(0.0).min(sw - 1.0);
    let sy = ((y as f64 + 0.5) * sh / h as f64 - 0.5).max(0.0).min(sh - 1.0);
    let (x0, y0) = (sx.floor(), sy.floor());
    let x1 = (x0 + 1.0).min(sw - 1.0);
    let y1 = (y0 + 1.0).min(sh - 1.0);
    let at = |xx: f64, yy: f64| img.get(xx as usize, yy as usize) as f64;
    let (fx, fy) = (sx - x0, sy - y0);
    let top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * fx;
    let bot = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * fx;
    (top + (bot - top) * fy).round().clamp(0.0, 255.0) as u8
}

pub fn resize_ref(img: &GrayImage, w: usize, h: usize) -> GrayImage {
    GrayImage::from_fn(w, h, |x, y| bilinear_ref(img, w, h, x, y))
}

pub fn dhash_ref(img: &GrayImage) -> u64 {
    let t = resize_ref(img, 9, 8);
    let mut bits = 0u64;
    for r in 0..8 {
        for c in 0..8 {
            if t.get(c + 1, r) > t.get(c, r) {
                bits |= 1u64 << (r * 8 + c);
            }
        }
    }
    bits
}

/// Exhaustive Otsu with exact rational comparison of between-class variance.
pub fn otsu_ref(img: &GrayImage) -> Option<u8> {
    let px = img.pixels();
    let distinct = {
        let mut seen = [false; 256];
        px.iter().for_each(|&p| seen[p as usize] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return None;
    }
    // score(t) = (s0·n1 − s1·n0)² / (n0·n1), compared by cross-multiplying.
    let mut best: Option<(u8, u128, u128)> = None;
    for t in 0..255u32 {
        let (mut n0, mut s0, mut n1, mut s1) = (0u128, 0u128, 0u128, 0u128);
        for &p in px {
            if p as u32 <= t {
                n0 += 1;
                s0 += p as u128;
            } else {
                n1 += 1;
                s1 += p as u128;
            }
        }
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let d = (s0 * n1).abs_diff(s1 * n0);
        let (num, den) = (d * d, n0 * n1);
        let better = match best {
            None => true,
            Some((_, bn, bd)) => num * bd > bn * den,
        };
        if better {
            best = Some((t as u8, num, den));
        }
    }
    best.map(|(t, _, _)| t)
}

/// `(x, y, width, height, area)` of each 8-connected component, ordered by
/// first pixel in raster order, via breadth-first flood fill.
pub fn components_ref(bin: &BinImage) -> Vec<(usize, usize, usize, usize, usize)> {
    let (w, h) = (bin.width(), bin.height());
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    for start in 0..w * h {
        if seen[start] || !bin.get(start % w, start / w) {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let (mut x0, mut y0, mut x1, mut y1, mut area) = (w, h, 0, 0, 0);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            area += 1;
            x0 = x0.min(x);
            y0 = y0.min(y);
            x1 = x1.max(x);
            y1 = y1.max(y);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] && bin.get(nx as usize, ny as usize) {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        out.push((x0, y0, x1 - x0 + 1, y1 - y0 + 1, area));
    }
    out
}

// -------------------------------------------------------------- features

/// The 16 Bresenham circle offsets, clockwise from 12 o'clock with y down.
pub const CIRCLE: [(i64, i64); 16] = [
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

/// FAST-9 score by direct ring scan: the longest circular run of pixels all
/// brighter than `c + t` or all darker than `c − t`; if it spans at least 9,
/// the score is the sum of `|ring − c|` over that run.
pub fn fast_score_ref(img: &GrayImage, x: usize, y: usize, t: i64) -> Option<u32> {
    let c = img.get(x, y) as i64;
    let ring: Vec<i64> =
        CIRCLE.iter().map(|&(dx, dy)| img.get((x as i64 + dx) as usize, (y as i64 + dy) as usize) as i64).collect();
    let class = |v: i64| {
        if v > c + t {
            1
        } else if v < c - t {
            -1
        } else {
            0
        }
    };
    let mut best: Option<(usize, usize)> = None;
    for start in 0..16 {
        let s = class(ring[start]);
        if s == 0 {
            continue;
        }
        let mut len = 0;
        while len < 16 && class(ring[(start + len) % 16]) == s {
            len += 1;
        }
        if best.is_none_or(|(_, l)| len > l) {
            best = Some((start, len));
        }
    }
    let (start, len) = best?;
    (len >= 9).then(|| (0..len).map(|i| (ring[(start + i) % 16] - c).unsigned_abs() as u32).sum())
}

/// Corners inside an 18-px border with 3×3 non-maximum suppression; equal
/// neighbors defer to the earlier pixel in raster order.
pub fn fast_ref(img: &GrayImage, t: u8, margin: usize) -> Vec<(usize, usize, u32)> {
    let (w, h) = (img.width(), img.height());
    let t = t.max(1) as i64;
    let mut score = vec![0u32; w * h];
    if w <= 2 * margin || h <= 2 * margin {
        return Vec::new();
    }
    for y in margin..h - margin {
        for x in margin..w - margin {
            score[y * w + x] = fast_score_ref(img, x, y, t).unwrap_or(0);
        }
    }
    let mut out = Vec::new();
    for y in margin..h - margin {
        for x in margin..w - margin {
            let s = score[y * w + x];
            if s == 0 {
                continue;
            }
            let mut is_max = true;
            for ny in y - 1..=y + 1 {
                for nx in x - 1..=x + 1 {
                    let n = score[ny * w + nx];
                    let earlier = (ny, nx) < (y, x);
                    if (ny, nx) != (y, x) && (n > s || (n == s && earlier)) {
                        is_max = false;
                    }
                }
            }
            if is_max {
                out.push((x, y, s));
            }
        }
    }
    out
}

pub fn brief_ref(img: &GrayImage, kp: &Keypoint, pattern: &SamplingPattern) -> Descriptor256 {
    let a = kp.angle as f64;
    let (cx, cy) = (kp.x as i64, kp.y as i64);
    let at = |(ox, oy): (i32, i32)| {
        let rx = (a.cos() * ox as f64 - a.sin() * oy as f64).round() as i64;
        let ry = (a.sin() * ox as f64 + a.cos() * oy as f64).round() as i64;
        img.get((cx + rx) as usize, (cy + ry) as usize)
    };
    let mut words = [0u64; 4];
    for (i, &[p, q]) in pattern.pairs.iter().enumerate() {
        if at(p) < at(q) {
            words[i / 64] |= 1 << (i % 64);
        }
    }
    Descriptor256(words)
}

// -------------------------------------------------------------- matching

pub fn bits(d: &Descriptor256) -> Vec<bool> {
    (0..256).map(|i| (d.0[i / 64] >> (i % 64)) & 1 == 1).collect()
}

pub fn hamming_ref(a: &Descriptor256, b: &Descriptor256) -> u32 {
    bits(a).iter().zip(bits(b)).filter(|(x, y)| **x != *y).count() as u32
}

/// Cosine of two 0/1 vectors computed as a float dot product.
pub fn cosine_ref(a: &Descriptor256, b: &Descriptor256) -> f64 {
    let (va, vb) = (bits(a), bits(b));
    let f = |v: bool| if v { 1.0 } else { 0.0 };
    let dot: f64 = va.iter().zip(&vb).map(|(&x, &y)| f(x) * f(y)).sum();
    let na: f64 = va.iter().map(|&x| f(x)).sum::<f64>().sqrt();
    let nb: f64 = vb.iter().map(|&x| f(x)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// `(best index, best distance, second distance)` per query by sorting all
/// candidate distances (stable, so equal distances keep index order).
pub fn knn2_ref(q: &[Descriptor256], c: &[Descriptor256]) -> Vec<(usize, u32, Option<u32>)> {
    if c.is_empty() {
        return Vec::new();
    }
    q.iter()
        .map(|d| {
            let mut all: Vec<(u32, usize)> = c.iter().enumerate().map(|(j, e)| (hamming_ref(d, e), j)).collect();
            all.sort();
            (all[0].1, all[0].0, all.get(1).map(|x| x.0))
        })
        .collect()
}

// --------------------------------------------------------------- layout

pub fn coverage_ref(layout: &SlideLayout, class: LayoutClass, gw: usize, gh: usize, col: usize, row: usize) -> f64 {
    let (cx0, cx1) = (col as f64 / gw as f64, (col + 1) as f64 / gw as f64);
    let (cy0, cy1) = (row as f64 / gh as f64, (row + 1) as f64 / gh as f64);
    let cell = (cx1 - cx0) * (cy1 - cy0);
    let mut total = 0.0;
    for r in layout.regions.iter().filter(|r| r.class == class) {
        let ix = (r.bbox.x1.min(cx1) - r.bbox.x0.max(cx0)).max(0.0);
        let iy = (r.bbox.y1.min(cy1) - r.bbox.y0.max(cy0)).max(0.0);
        total = (total + ix * iy / cell).min(1.0);
    }
    total
}

/// Layout similarity recomputed cell by cell from region geometry.
pub fn layout_cosine_ref(a: &SlideLayout, b: &SlideLayout, gw: usize, gh: usize) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for class in LayoutClass::ALL {
        for row in 0..gh {
            for col in 0..gw {
                let va = coverage_ref(a, class, gw, gh, col, row);
                let vb = coverage_ref(b, class, gw, gh, col, row);
                dot += va * vb;
                na += va * va;
                nb += vb * vb;
            }
        }
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na.sqrt() * nb.sqrt())
    }
}

/// Cell counts by checking every cell center against every region; boxes
/// are half-open so abutting regions never share a center.
pub fn heatmap_ref<'a>(
    layouts: impl IntoIterator<Item = &'a SlideLayout>,
    class: Option<LayoutClass>,
    gw: usize,
    gh: usize,
) -> Vec<u32> {
    let mut counts = vec![0u32; gw * gh];
    for l in layouts {
        for r in &l.regions {
            if class.is_some_and(|c| c != r.class) {
                continue;
            }
            for (i, count) in counts.iter_mut().enumerate() {
                let cx = ((i % gw) as f64 + 0.5) / gw as f64;
                let cy = ((i / gw) as f64 + 0.5) / gh as f64;
                if r.bbox.x0 <= cx && cx < r.bbox.x1 && r.bbox.y0 <= cy && cy < r.bbox.y1 {
                    *count += 1;
                }
            }
        }
    }
    counts
}

// ---------------------------------------------------------------- fontnet

/// Same-padded 2-D cross-correlation by nested loops; weight `[co][ci][k][k]`.
pub fn conv2d_ref(x: &[f64], w: &[f64], b: &[f64], ci: usize, co: usize, h: usize, wd: usize, k: usize) -> Vec<f64> {
    let p = (k / 2) as i64;
    let mut out = vec![0.0; co * h * wd];
    for o in 0..co {
        for y in 0..h {
            for xx in 0..wd {
                let mut acc = b[o];
                for c in 0..ci {
                    for ky in 0..k {
                        for kx in 0..k {
                            let (sy, sx) = (y as i64 + ky as i64 - p, xx as i64 + kx as i64 - p);
                            if sy < 0 || sx < 0 || sy >= h as i64 || sx >= wd as i64 {
                                continue;
                            }
                            acc += w[((o * ci + c) * k + ky) * k + kx] * x[(c * h + sy as usize) * wd + sx as usize];
                        }
                    }
                }
                out[(o * h + y) * wd + xx] = acc;
            }
        }
    }
    out
}

/// Transposed convolution by scattering every input sample to
/// `position + k − k/2`; weight `[ci][co][k][k]`.
pub fn conv_transpose2d_ref(
    x: &[f64],
    w: &[f64],
    b: &[f64],
    ci: usize,
    co: usize,
    h: usize,
    wd: usize,
    k: usize,
) -> Vec<f64> {
    let p = (k / 2) as i64;
    let mut out = vec![0.0; co * h * wd];
    for (o, chunk) in out.chunks_mut(h * wd).enumerate() {
        chunk.iter_mut().for_each(|v| *v = b[o]);
    }
    for c in 0..ci {
        for y in 0..h {
            for xx in 0..wd {
                let v = x[(c * h + y) * wd + xx];
                for o in 0..co {
                    for ky in 0..k {
                        for kx in 0..k {
                            let (ty, tx) = (y as i64 + ky as i64 - p, xx as i64 + kx as i64 - p);
                            if ty < 0 || tx < 0 || ty >= h as i64 || tx >= wd as i64 {
                                continue;
                            }
                            out[(o * h + ty as usize) * wd + tx as usize] += w[((c * co + o) * k + ky) * k + kx] * v;
                        }
                    }
                }
            }
        }
    }
    out
}

pub struct GradCheck {
    pub instance_seed: u64,
    pub worst_rel: f64,
    pub worst_param: String,
    pub checked: usize,
}

pub const GRAD_EPS: f64 = 1e-4;
pub const GRAD_TOL: f64 = 1e-4;

/// A miniature network with every tensor randomized (so no gradient is
/// trivially zero) plus a random 3-example batch.
pub fn grad_instance(seed: u64) -> (FontNet<f64>, Vec<f64>, Vec<usize>) {
    let arch = FontNetArch::miniature();
    let mut model = FontNet::<f64>::new(arch, seed).unwrap();
    let mut r = rng(seed + 100);
    for t in model.weights.tensors_mut() {
        for v in t.iter_mut() {
            if *v == 0.0 {
                *v = r.random_range(-0.3..0.3);
            }
        }
    }
    for v in model.weights.bn1_gamma.iter_mut().chain(model.weights.bn2_gamma.iter_mut()) {
        *v = r.random_range(0.5..1.5);
    }
    let x: Vec<f64> = (0..3 * arch.input_len()).map(|_| r.random_range(0.0..1.0)).collect();
    (model, x, vec![0, 2, 4])
}

/// Central-difference check of every parameter of one instance.
///
/// Returns `None` when some `±ε` perturbation flips a ReLU or changes a
/// max-pool winner: there the loss is not differentiable on the stencil and
/// the difference quotient measures the kink, not the gradient.
pub fn grad_check_instance(seed: u64) -> Option<GradCheck> {
    let (mut model, x, labels) = grad_instance(seed);
    let mode = Mode::Train { dropout_seed: 0 };
    let lw = LossWeights::default();
    let base = model.activation_pattern(&x, mode).unwrap();
    let (_, grads) = model.loss_and_grad(&x, &labels, mode, lw).unwrap();
    let mut worst = (0.0f64, 0usize);
    let mut checked = 0;
    for ti in 0..WEIGHT_NAMES.len() {
        for j in 0..grads.tensors()[ti].len() {
            let orig = model.weights.tensors()[ti][j];
            let mut probe = |v: f64| {
                model.weights.tensors_mut()[ti][j] = v;
                let loss = model.loss(&x, &labels, mode).unwrap().total(lw);
                (loss, model.activation_pattern(&x, mode).unwrap())
            };
            let (lp, pp) = probe(orig + GRAD_EPS);
            let (lm, pm) = probe(orig - GRAD_EPS);
            model.weights.tensors_mut()[ti][j] = orig;
            if pp != base || pm != base {
                return None;
            }
            let num = (lp - lm) / (2.0 * GRAD_EPS);
            let ana = grads.tensors()[ti][j];
            let rel = (num - ana).abs() / num.abs().max(ana.abs()).max(1e-6);
            if rel > worst.0 {
                worst = (rel, ti);
            }
            checked += 1;
        }
    }
    Some(GradCheck { instance_seed: seed, worst_rel: worst.0, worst_param: WEIGHT_NAMES[worst.1].to_string(), checked })
}

/// The first instance seed (from `from`) whose stencils avoid every kink.
pub fn grad_check(from: u64) -> GradCheck {
    (from..from + 64).find_map(grad_check_instance).expect("a kink-free instance within 64 seeds")
}
