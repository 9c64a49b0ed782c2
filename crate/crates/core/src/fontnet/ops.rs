//! Layer kernels on flat NCHW buffers. Convolutions are stride 1 with "same"
//! padding (`pad = k / 2`, `k` odd) and lower to GEMM through im2col.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

/// Floating-point element type of a network (f32 for training, f64 for
/// numerical checks).
pub trait Scalar: Float + FromPrimitive + Default + Debug + Send + Sync + 'static {
    /// Raw strided GEMM: `C = alpha·A·B + beta·C`.
    ///
    /// # Safety
    /// Pointers and strides must describe valid `m×k`, `k×n`, `m×n` views.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );

    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("representable")
    }
}

impl Scalar for f32 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

impl Scalar for f64 {
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc)
    }
}

/// Row-major `C (m×n) = op(A)·op(B)`, added onto `C` when `accumulate`.
/// `a_t`: A is stored `k×m`; `b_t`: B is stored `n×k`.
#[allow(clippy::too_many_arguments)]
pub fn gemm<T: Scalar>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    a_t: bool,
    b: &[T],
    b_t: bool,
    c: &mut [T],
    accumulate: bool,
) {
    assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n, "gemm operand too small");
    let (rsa, csa) = if a_t { (1, m as isize) } else { (k as isize, 1) };
    let (rsb, csb) = if b_t { (1, k as isize) } else { (n as isize, 1) };
    let beta = if accumulate { T::one() } else { T::zero() };
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: lengths checked above; strides describe row-major views of them.
    unsafe {
        T::gemm_raw(m, k, n, T::one(), a.as_ptr(), rsa, csa, b.as_ptr(), rsb, csb, beta, c.as_mut_ptr(), n as isize, 1);
    }
}

/// Source column range `[lo, hi)` of output columns whose shifted input
/// index `ox + shift` lies inside `[0, w)`.
#[inline]
fn valid_span(w: usize, shift: isize) -> (usize, usize) {
    let lo = (-shift).clamp(0, w as isize) as usize;
    let hi = (w as isize - shift).clamp(0, w as isize) as usize;
    (lo, hi.max(lo))
}

/// `cols[(ci·k + ky)·k + kx][oy·w + ox] = x[ci][oy + ky − pad][ox + kx − pad]`
/// (zero outside the image).
pub fn im2col<T: Scalar>(x: &[T], c: usize, h: usize, w: usize, k: usize, cols: &mut [T]) {
    let (p, pad) = (h * w, (k / 2) as isize);
    debug_assert_eq!(cols.len(), c * k * k * p);
    for ci in 0..c {
        let plane = &x[ci * p..(ci + 1) * p];
        for ky in 0..k {
            for kx in 0..k {
                let row = &mut cols[((ci * k + ky) * k + kx) * p..][..p];
                let shift = kx as isize - pad;
                let (lo, hi) = valid_span(w, shift);
                for oy in 0..h {
                    let dst = &mut row[oy * w..(oy + 1) * w];
                    let iy = oy as isize + ky as isize - pad;
                    if iy < 0 || iy >= h as isize || lo == hi {
                        dst.fill(T::zero());
                        continue;
                    }
                    let src = &plane[iy as usize * w..][..w];
                    dst[..lo].fill(T::zero());
                    dst[hi..].fill(T::zero());
                    dst[lo..hi].copy_from_slice(&src[(lo as isize + shift) as usize..(hi as isize + shift) as usize]);
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatters columns back, adding onto `x`.
pub fn col2im_add<T: Scalar>(cols: &[T], c: usize, h: usize, w: usize, k: usize, x: &mut [T]) {
    let (p, pad) = (h * w, (k / 2) as isize);
    for ci in 0..c {
        let plane = &mut x[ci * p..(ci + 1) * p];
        for ky in 0..k {
            for kx in 0..k {
                let row = &cols[((ci * k + ky) * k + kx) * p..][..p];
                let shift = kx as isize - pad;
                let (lo, hi) = valid_span(w, shift);
                for oy in 0..h {
                    let iy = oy as isize + ky as isize - pad;
                    if iy < 0 || iy >= h as isize || lo == hi {
                        continue;
                    }
                    let src = &row[oy * w..(oy + 1) * w];
                    let dst = &mut plane[iy as usize * w..][..w];
                    let off = (lo as isize + shift) as usize;
                    for (d, &s) in dst[off..off + (hi - lo)].iter_mut().zip(&src[lo..hi]) {
                        *d = *d + s;
                    }
                }
            }
        }
    }
}

/// Geometry of one convolution: input maps, output maps, spatial size, kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvShape {
    pub c_in: usize,
    pub c_out: usize,
    pub h: usize,
    pub w: usize,
    pub k: usize,
}

impl ConvShape {
    pub fn plane(&self) -> usize {
        self.h * self.w
    }
    pub fn in_len(&self) -> usize {
        self.c_in * self.plane()
    }
    pub fn out_len(&self) -> usize {
        self.c_out * self.plane()
    }
    pub fn weight_len(&self) -> usize {
        self.c_in * self.c_out * self.k * self.k
    }
}

fn add_bias<T: Scalar>(out: &mut [T], bias: &[T], plane: usize) {
    for (chunk, &b) in out.chunks_mut(plane).zip(bias) {
        chunk.iter_mut().for_each(|v| *v = *v + b);
    }
}

fn bias_grad<T: Scalar>(dy: &[T], plane: usize, db: &mut [T]) {
    for (chunk, g) in dy.chunks(plane).zip(db.iter_mut()) {
        *g = chunk.iter().fold(*g, |acc, &v| acc + v);
    }
}

/// Convolution of one example; weight layout `[c_out][c_in][k][k]`.
pub fn conv2d<T: Scalar>(x: &[T], weight: &[T], bias: &[T], s: ConvShape) -> Vec<T> {
    let p = s.plane();
    let kk = s.c_in * s.k * s.k;
    let mut cols = vec![T::zero(); kk * p];
    im2col(x, s.c_in, s.h, s.w, s.k, &mut cols);
    let mut out = vec![T::zero(); s.out_len()];
    gemm(s.c_out, kk, p, weight, false, &cols, false, &mut out, false);
    add_bias(&mut out, bias, p);
    out
}

/// Gradients of [`conv2d`] for one example: `(dweight, dbias, dx)`; `dx` is
/// skipped when not needed.
pub fn conv2d_backward<T: Scalar>(
    x: &[T],
    weight: &[T],
    dy: &[T],
    s: ConvShape,
    need_dx: bool,
) -> (Vec<T>, Vec<T>, Option<Vec<T>>) {
    let p = s.plane();
    let kk = s.c_in * s.k * s.k;
    let mut cols = vec![T::zero(); kk * p];
    im2col(x, s.c_in, s.h, s.w, s.k, &mut cols);
    let mut dw = vec![T::zero(); s.weight_len()];
    gemm(s.c_out, p, kk, dy, false, &cols, true, &mut dw, false);
    let mut db = vec![T::zero(); s.c_out];
    bias_grad(dy, p, &mut db);
    let dx = need_dx.then(|| {
        gemm(kk, s.c_out, p, weight, true, dy, false, &mut cols, false);
        let mut dx = vec![T::zero(); s.in_len()];
        col2im_add(&cols, s.c_in, s.h, s.w, s.k, &mut dx);
        dx
    });
    (dw, db, dx)
}

/// Transposed convolution (the adjoint of [`conv2d`] in its input) of one
/// example; weight layout `[c_in][c_out][k][k]`.
pub fn conv_transpose2d<T: Scalar>(x: &[T], weight: &[T], bias: &[T], s: ConvShape) -> Vec<T> {
    let p = s.plane();
    let kk = s.c_out * s.k * s.k;
    let mut cols = vec![T::zero(); kk * p];
    gemm(kk, s.c_in, p, weight, true, x, false, &mut cols, false);
    let mut out = vec![T::zero(); s.out_len()];
    col2im_add(&cols, s.c_out, s.h, s.w, s.k, &mut out);
    add_bias(&mut out, bias, p);
    out
}

pub fn conv_transpose2d_backward<T: Scalar>(
    x: &[T],
    weight: &[T],
    dy: &[T],
    s: ConvShape,
    need_dx: bool,
) -> (Vec<T>, Vec<T>, Option<Vec<T>>) {
    let p = s.plane();
    let kk = s.c_out * s.k * s.k;
    let mut cols = vec![T::zero(); kk * p];
    im2col(dy, s.c_out, s.h, s.w, s.k, &mut cols);
    let mut dw = vec![T::zero(); s.weight_len()];
    gemm(s.c_in, p, kk, x, false, &cols, true, &mut dw, false);
    let mut db = vec![T::zero(); s.c_out];
    bias_grad(dy, p, &mut db);
    let dx = need_dx.then(|| {
        let mut dx = vec![T::zero(); s.in_len()];
        gemm(s.c_in, kk, p, weight, false, &cols, false, &mut dx, false);
        dx
    });
    (dw, db, dx)
}

/// Fully connected layer over a batch: `y[n][o] = Σ_i x[n][i]·w[o][i] + b[o]`.
pub fn linear<T: Scalar>(x: &[T], n: usize, d_in: usize, weight: &[T], bias: &[T], d_out: usize) -> Vec<T> {
    let mut y = vec![T::zero(); n * d_out];
    for row in y.chunks_mut(d_out) {
        row.copy_from_slice(bias);
    }
    gemm(n, d_in, d_out, x, false, weight, true, &mut y, true);
    y
}

/// `(dweight, dbias, dx)` for [`linear`].
pub fn linear_backward<T: Scalar>(
    x: &[T],
    n: usize,
    d_in: usize,
    weight: &[T],
    dy: &[T],
    d_out: usize,
    need_dx: bool,
) -> (Vec<T>, Vec<T>, Option<Vec<T>>) {
    let mut dw = vec![T::zero(); d_out * d_in];
    gemm(d_out, n, d_in, dy, true, x, false, &mut dw, false);
    let mut db = vec![T::zero(); d_out];
    for row in dy.chunks(d_out) {
        for (g, &v) in db.iter_mut().zip(row) {
            *g = *g + v;
        }
    }
    let dx = need_dx.then(|| {
        let mut dx = vec![T::zero(); n * d_in];
        gemm(n, d_out, d_in, dy, false, weight, false, &mut dx, false);
        dx
    });
    (dw, db, dx)
}

pub fn relu<T: Scalar>(x: &mut [T]) {
    x.iter_mut().for_each(|v| *v = v.max(T::zero()));
}

/// Zeroes gradient entries where the activation output was not positive.
pub fn relu_backward<T: Scalar>(out: &[T], dy: &mut [T]) {
    for (g, &o) in dy.iter_mut().zip(out) {
        if o <= T::zero() {
            *g = T::zero();
        }
    }
}

pub fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

/// Per-channel batch statistics over `n` examples of `c` planes of size `p`.
#[derive(Debug, Clone)]
pub struct BnCache<T> {
    pub xhat: Vec<T>,
    pub inv_std: Vec<T>,
    pub mean: Vec<T>,
    /// Biased batch variance.
    pub var: Vec<T>,
}

pub const BN_EPS: f64 = 1e-5;

pub fn batch_norm_train<T: Scalar>(
    x: &[T],
    n: usize,
    c: usize,
    p: usize,
    gamma: &[T],
    beta: &[T],
) -> (Vec<T>, BnCache<T>) {
    let m = (n * p) as f64;
    let mut mean = vec![T::zero(); c];
    let mut var = vec![T::zero(); c];
    let mut inv_std = vec![T::zero(); c];
    for ch in 0..c {
        let planes = (0..n).map(|i| &x[(i * c + ch) * p..][..p]);
        let sum: f64 = planes.clone().flat_map(|pl| pl.iter()).map(|v| v.to_f64().unwrap_or(0.0)).sum();
        let mu = sum / m;
        let ss: f64 = planes.flat_map(|pl| pl.iter()).map(|v| (v.to_f64().unwrap_or(0.0) - mu).powi(2)).sum();
        let v = ss / m;
        mean[ch] = T::lit(mu);
        var[ch] = T::lit(v);
        inv_std[ch] = T::lit(1.0 / (v + BN_EPS).sqrt());
    }
    let mut xhat = vec![T::zero(); x.len()];
    let mut y = vec![T::zero(); x.len()];
    for i in 0..n {
        for ch in 0..c {
            let off = (i * c + ch) * p;
            for j in off..off + p {
                let xh = (x[j] - mean[ch]) * inv_std[ch];
                xhat[j] = xh;
                y[j] = gamma[ch] * xh + beta[ch];
            }
        }
    }
    (y, BnCache { xhat, inv_std, mean, var })
}

#[allow(clippy::too_many_arguments)]
pub fn batch_norm_eval<T: Scalar>(
    x: &[T],
    n: usize,
    c: usize,
    p: usize,
    gamma: &[T],
    beta: &[T],
    running_mean: &[T],
    running_var: &[T],
) -> Vec<T> {
    let mut y = vec![T::zero(); x.len()];
    for ch in 0..c {
        let scale = gamma[ch] / (running_var[ch] + T::lit(BN_EPS)).sqrt();
        let shift = beta[ch] - running_mean[ch] * scale;
        for i in 0..n {
            let off = (i * c + ch) * p;
            for j in off..off + p {
                y[j] = x[j] * scale + shift;
            }
        }
    }
    y
}

/// Returns `dx`; accumulates into `dgamma` and `dbeta`.
#[allow(clippy::too_many_arguments)]
pub fn batch_norm_backward<T: Scalar>(
    dy: &[T],
    cache: &BnCache<T>,
    n: usize,
    c: usize,
    p: usize,
    gamma: &[T],
    dgamma: &mut [T],
    dbeta: &mut [T],
) -> Vec<T> {
    let m = T::lit((n * p) as f64);
    let mut dx = vec![T::zero(); dy.len()];
    for ch in 0..c {
        let (mut sum_dy, mut sum_dy_xhat) = (T::zero(), T::zero());
        for i in 0..n {
            let off = (i * c + ch) * p;
            for j in off..off + p {
                sum_dy = sum_dy + dy[j];
                sum_dy_xhat = sum_dy_xhat + dy[j] * cache.xhat[j];
            }
        }
        dgamma[ch] = dgamma[ch] + sum_dy_xhat;
        dbeta[ch] = dbeta[ch] + sum_dy;
        let k = gamma[ch] * cache.inv_std[ch] / m;
        for i in 0..n {
            let off = (i * c + ch) * p;
            for j in off..off + p {
                dx[j] = k * (m * dy[j] - sum_dy - cache.xhat[j] * sum_dy_xhat);
            }
        }
    }
    dx
}

/// 2×2 max pooling, stride 2, on `planes` planes of `h×w` (both even).
/// Returns the pooled planes and, per output, the winning input offset;
/// ties go to the first position in raster order.
pub fn max_pool2<T: Scalar>(x: &[T], planes: usize, h: usize, w: usize) -> (Vec<T>, Vec<u32>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![T::zero(); planes * oh * ow];
    let mut arg = vec![0u32; planes * oh * ow];
    for pl in 0..planes {
        let src = &x[pl * h * w..][..h * w];
        for oy in 0..oh {
            for ox in 0..ow {
                let base = 2 * oy * w + 2 * ox;
                let mut best = base;
                for cand in [base + 1, base + w, base + w + 1] {
                    if src[cand] > src[best] {
                        best = cand;
                    }
                }
                let o = (pl * oh + oy) * ow + ox;
                out[o] = src[best];
                arg[o] = best as u32;
            }
        }
    }
    (out, arg)
}

pub fn max_pool2_backward<T: Scalar>(dy: &[T], arg: &[u32], planes: usize, h: usize, w: usize) -> Vec<T> {
    let per_out = (h / 2) * (w / 2);
    let mut dx = vec![T::zero(); planes * h * w];
    for pl in 0..planes {
        let plane = &mut dx[pl * h * w..][..h * w];
        for o in 0..per_out {
            let idx = pl * per_out + o;
            plane[arg[idx] as usize] = plane[arg[idx] as usize] + dy[idx];
        }
    }
    dx
}

/// Nearest-neighbor ×2 upsampling of `h×w` planes.
pub fn upsample2<T: Scalar>(x: &[T], planes: usize, h: usize, w: usize) -> Vec<T> {
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = vec![T::zero(); planes * oh * ow];
    for pl in 0..planes {
        for oy in 0..oh {
            let src = &x[(pl * h + oy / 2) * w..][..w];
            let dst = &mut out[(pl * oh + oy) * ow..][..ow];
            for (ox, d) in dst.iter_mut().enumerate() {
                *d = src[ox / 2];
            }
        }
    }
    out
}

pub fn upsample2_backward<T: Scalar>(dy: &[T], planes: usize, h: usize, w: usize) -> Vec<T> {
    let (oh, ow) = (2 * h, 2 * w);
    let mut dx = vec![T::zero(); planes * h * w];
    for pl in 0..planes {
        for oy in 0..oh {
            let src = &dy[(pl * oh + oy) * ow..][..ow];
            let dst = &mut dx[(pl * h + oy / 2) * w..][..w];
            for (ox, &g) in src.iter().enumerate() {
                dst[ox / 2] = dst[ox / 2] + g;
            }
        }
    }
    dx
}

/// Numerically stable softmax of one logit row.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let exps: Vec<T> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum = exps.iter().fold(T::zero(), |a, &b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// `−log softmax(logits)[label]` via log-sum-exp.
pub fn cross_entropy<T: Scalar>(logits: &[T], label: usize) -> T {
    let max = logits.iter().fold(T::neg_infinity(), |m, &v| m.max(v));
    let lse = logits.iter().fold(T::zero(), |a, &v| a + (v - max).exp()).ln() + max;
    lse - logits[label]
}
