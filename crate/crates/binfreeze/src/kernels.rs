//! Numeric kernels behind the tape ops.
//!
//! Kernels take raw slices plus dimensions; shape validation happens in the
//! tape layer. Loop nests are arranged so each output element accumulates its
//! contributions in a fixed ascending order: the hot kernels then produce
//! bit-identical results to the naive reference loops used as test oracles
//! (auto-vectorization keeps per-element order; Rust never fuses mul+add).

/// C[m,n] = A[m,k] * B[k,n]. Accumulation over k in ascending order.
pub fn matmul(a: &[f32], b: &[f32], m: usize, k: usize, n: usize, out: &mut [f32]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    out.fill(0.0);
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for l in 0..k {
            let ail = a[i * k + l];
            if ail == 0.0 {
                continue;
            }
            let brow = &b[l * n..(l + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += ail * bv;
            }
        }
    }
}

/// C[m,k] = A[m,n] * B[k,n]^T, i.e. C[i,l] = sum_j A[i,j] B[l,j].
pub fn matmul_nt(a: &[f32], b: &[f32], m: usize, n: usize, k: usize, out: &mut [f32]) {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * k);
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        for l in 0..k {
            let brow = &b[l * n..(l + 1) * n];
            let mut acc = 0.0f32;
            for (&av, &bv) in arow.iter().zip(brow) {
                acc += av * bv;
            }
            out[i * k + l] = acc;
        }
    }
}

/// C[k,n] = A[m,k]^T * B[m,n], i.e. C[l,j] = sum_i A[i,l] B[i,j].
pub fn matmul_tn(a: &[f32], b: &[f32], m: usize, k: usize, n: usize, out: &mut [f32]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(out.len(), k * n);
    out.fill(0.0);
    for i in 0..m {
        let brow = &b[i * n..(i + 1) * n];
        for l in 0..k {
            let ail = a[i * k + l];
            if ail == 0.0 {
                continue;
            }
            let crow = &mut out[l * n..(l + 1) * n];
            for (o, &bv) in crow.iter_mut().zip(brow) {
                *o += ail * bv;
            }
        }
    }
}

/// Output spatial extent of a convolution (floor semantics).
pub fn conv_out_dim(input: usize, kernel: usize, stride: usize, pad: usize) -> usize {
    (input + 2 * pad - kernel) / stride + 1
}

/// Direct 2-D convolution. x: [n,c,h,w], k: [o,c,kh,kw], y: [n,o,oh,ow].
/// Per output element the (c,kh,kw) contributions accumulate in ascending order.
#[allow(clippy::too_many_arguments)]
pub fn conv2d(
    x: &[f32],
    ker: &[f32],
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    oc: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    out: &mut [f32],
) {
    let oh = conv_out_dim(h, kh, stride, pad);
    let ow = conv_out_dim(w, kw, stride, pad);
    debug_assert_eq!(out.len(), n * oc * oh * ow);
    out.fill(0.0);
    for ni in 0..n {
        for oi in 0..oc {
            let yplane = ni * oc * oh * ow + oi * oh * ow;
            for ci in 0..c {
                let xplane = ni * c * h * w + ci * h * w;
                for khi in 0..kh {
                    for kwi in 0..kw {
                        let kval = ker[oi * c * kh * kw + ci * kh * kw + khi * kw + kwi];
                        if kval == 0.0 {
                            continue;
                        }
                        for ohi in 0..oh {
                            let ih = (ohi * stride + khi) as isize - pad as isize;
                            if ih < 0 || ih as usize >= h {
                                continue;
                            }
                            let xrow = xplane + ih as usize * w;
                            let yrow = yplane + ohi * ow;
                            // valid ow range so that 0 <= ow*stride + kwi - pad < w
                            let lo = pad.saturating_sub(kwi).div_ceil(stride);
                            let hi_excl = {
                                let top = w + pad - kwi; // exclusive bound on ow*stride
                                ((top - 1) / stride + 1).min(ow)
                            };
                            if kwi >= w + pad {
                                continue;
                            }
                            for owi in lo..hi_excl {
                                let iw = owi * stride + kwi - pad;
                                out[yrow + owi] += kval * x[xrow + iw];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Gradient of conv2d w.r.t. the input. g: [n,oc,oh,ow] upstream gradient.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_grad_x(
    g: &[f32],
    ker: &[f32],
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    oc: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    dx: &mut [f32],
) {
    let oh = conv_out_dim(h, kh, stride, pad);
    let ow = conv_out_dim(w, kw, stride, pad);
    debug_assert_eq!(dx.len(), n * c * h * w);
    for ni in 0..n {
        for oi in 0..oc {
            let gplane = ni * oc * oh * ow + oi * oh * ow;
            for ci in 0..c {
                let xplane = ni * c * h * w + ci * h * w;
                for khi in 0..kh {
                    for kwi in 0..kw {
                        let kval = ker[oi * c * kh * kw + ci * kh * kw + khi * kw + kwi];
                        if kval == 0.0 {
                            continue;
                        }
                        for ohi in 0..oh {
                            let ih = (ohi * stride + khi) as isize - pad as isize;
                            if ih < 0 || ih as usize >= h {
                                continue;
                            }
                            let xrow = xplane + ih as usize * w;
                            let grow = gplane + ohi * ow;
                            for owi in 0..ow {
                                let iw = (owi * stride + kwi) as isize - pad as isize;
                                if iw < 0 || iw as usize >= w {
                                    continue;
                                }
                                dx[xrow + iw as usize] += kval * g[grow + owi];
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Gradient of conv2d w.r.t. the kernel.
#[allow(clippy::too_many_arguments)]
pub fn conv2d_grad_k(
    g: &[f32],
    x: &[f32],
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    oc: usize,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    dk: &mut [f32],
) {
    let oh = conv_out_dim(h, kh, stride, pad);
    let ow = conv_out_dim(w, kw, stride, pad);
    debug_assert_eq!(dk.len(), oc * c * kh * kw);
    for ni in 0..n {
        for oi in 0..oc {
            let gplane = ni * oc * oh * ow + oi * oh * ow;
            for ci in 0..c {
                let xplane = ni * c * h * w + ci * h * w;
                for khi in 0..kh {
                    for kwi in 0..kw {
                        let mut acc = 0.0f32;
                        for ohi in 0..oh {
                            let ih = (ohi * stride + khi) as isize - pad as isize;
                            if ih < 0 || ih as usize >= h {
                                continue;
                            }
                            let xrow = xplane + ih as usize * w;
                            let grow = gplane + ohi * ow;
                            for owi in 0..ow {
                                let iw = (owi * stride + kwi) as isize - pad as isize;
                                if iw < 0 || iw as usize >= w {
                                    continue;
                                }
                                acc += g[grow + owi] * x[xrow + iw as usize];
                            }
                        }
                        dk[oi * c * kh * kw + ci * kh * kw + khi * kw + kwi] += acc;
                    }
                }
            }
        }
    }
}

/// Per-channel batch statistics for a [n,c,s] view (s = spatial extent, 1 for 2-D
/// input). Returns (mean, biased variance) per channel.
pub fn batch_stats(x: &[f32], n: usize, c: usize, s: usize) -> (Vec<f32>, Vec<f32>) {
    let m = (n * s) as f64;
    let mut mean = vec![0.0f32; c];
    let mut var = vec![0.0f32; c];
    for ci in 0..c {
        let mut acc = 0.0f64;
        for ni in 0..n {
            let base = ni * c * s + ci * s;
            for si in 0..s {
                acc += x[base + si] as f64;
            }
        }
        let mu = acc / m;
        let mut vacc = 0.0f64;
        for ni in 0..n {
            let base = ni * c * s + ci * s;
            for si in 0..s {
                let d = x[base + si] as f64 - mu;
                vacc += d * d;
            }
        }
        mean[ci] = mu as f32;
        var[ci] = (vacc / m) as f32;
    }
    (mean, var)
}

/// Batch-norm forward: y = gamma * (x - mean) / sqrt(var + eps) + beta,
/// normalizing per channel with the supplied statistics.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_forward(
    x: &[f32],
    gamma: &[f32],
    beta: &[f32],
    mean: &[f32],
    var: &[f32],
    eps: f32,
    n: usize,
    c: usize,
    s: usize,
    out: &mut [f32],
) {
    for ci in 0..c {
        let inv = 1.0 / (var[ci] + eps).sqrt();
        let g = gamma[ci];
        let b = beta[ci];
        let mu = mean[ci];
        for ni in 0..n {
            let base = ni * c * s + ci * s;
            for si in 0..s {
                out[base + si] = g * (x[base + si] - mu) * inv + b;
            }
        }
    }
}

/// Batch-norm backward for training mode (statistics computed from the batch).
/// Standard three-term formula with biased variance.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_backward_train(
    g: &[f32],
    x: &[f32],
    gamma: &[f32],
    mean: &[f32],
    var: &[f32],
    eps: f32,
    n: usize,
    c: usize,
    s: usize,
    dx: &mut [f32],
    dgamma: &mut [f32],
    dbeta: &mut [f32],
) {
    let m = (n * s) as f64;
    for ci in 0..c {
        let inv = 1.0f64 / ((var[ci] + eps) as f64).sqrt();
        let mu = mean[ci] as f64;
        let mut sum_g = 0.0f64;
        let mut sum_gx = 0.0f64;
        for ni in 0..n {
            let base = ni * c * s + ci * s;
            for si in 0..s {
                let gi = g[base + si] as f64;
                let xh = (x[base + si] as f64 - mu) * inv;
                sum_g += gi;
                sum_gx += gi * xh;
            }
        }
        dgamma[ci] += sum_gx as f32;
        dbeta[ci] += sum_g as f32;
        let gam = gamma[ci] as f64;
        let mean_g = sum_g / m;
        let mean_gx = sum_gx / m;
        for ni in 0..n {
            let base = ni * c * s + ci * s;
            for si in 0..s {
                let gi = g[base + si] as f64;
                let xh = (x[base + si] as f64 - mu) * inv;
                dx[base + si] += (gam * inv * (gi - mean_g - xh * mean_gx)) as f32;
            }
        }
    }
}

/// Batch-norm backward for eval mode (fixed statistics: an affine map per channel).
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_backward_eval(
    g: &[f32],
    x: &[f32],
    gamma: &[f32],
    mean: &[f32],
    var: &[f32],
    eps: f32,
    n: usize,
    c: usize,
    s: usize,
    dx: &mut [f32],
    dgamma: &mut [f32],
    dbeta: &mut [f32],
) {
    for ci in 0..c {
        let inv = 1.0 / (var[ci] + eps).sqrt();
        let gam = gamma[ci];
        let mu = mean[ci];
        let mut sum_g = 0.0f64;
        let mut sum_gx = 0.0f64;
        for ni in 0..n {
            let base = ni * c * s + ci * s;
            for si in 0..s {
                let gi = g[base + si];
                sum_g += gi as f64;
                sum_gx += (gi * (x[base + si] - mu) * inv) as f64;
                dx[base + si] += gi * gam * inv;
            }
        }
        dgamma[ci] += sum_gx as f32;
        dbeta[ci] += sum_g as f32;
    }
}

/// Softmax cross-entropy over rows, mean-reduced over the batch, stabilized by
/// row-max subtraction. Returns the loss and keeps the softmax for backward.
pub fn softmax_cross_entropy(logits: &[f32], labels: &[u32], n: usize, k: usize) -> (f32, Vec<f32>) {
    debug_assert_eq!(logits.len(), n * k);
    debug_assert_eq!(labels.len(), n);
    let mut probs = vec![0.0f32; n * k];
    let mut loss = 0.0f64;
    for i in 0..n {
        let row = &logits[i * k..(i + 1) * k];
        let mx = row.iter().fold(f32::NEG_INFINITY, |a, &b| a.max(b));
        let mut denom = 0.0f32;
        for j in 0..k {
            let e = (row[j] - mx).exp();
            probs[i * k + j] = e;
            denom += e;
        }
        let inv = 1.0 / denom;
        for j in 0..k {
            probs[i * k + j] *= inv;
        }
        let p = probs[i * k + labels[i] as usize];
        // the underflow floor must not swallow NaN: float max drops NaN
        // operands, and a non-finite loss is the training loop's abort signal
        loss -= if p.is_nan() {
            f64::NAN
        } else {
            (p.max(f32::MIN_POSITIVE) as f64).ln()
        };
    }
    ((loss / n as f64) as f32, probs)
}

/// Gradient of the mean cross-entropy w.r.t. logits: (softmax - onehot) / n,
/// scaled by the upstream scalar gradient.
pub fn softmax_cross_entropy_backward(
    probs: &[f32],
    labels: &[u32],
    n: usize,
    k: usize,
    upstream: f32,
    dlogits: &mut [f32],
) {
    let scale = upstream / n as f32;
    for i in 0..n {
        for j in 0..k {
            let onehot = if labels[i] as usize == j { 1.0 } else { 0.0 };
            dlogits[i * k + j] += scale * (probs[i * k + j] - onehot);
        }
    }
}
