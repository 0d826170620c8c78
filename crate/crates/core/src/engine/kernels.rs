//! Raw loops behind the layer implementations. All routines take flat
//! row-major planes and explicit geometry so the same code serves the
//! forward pass, the gradient pass and the LRP rules (which reuse the
//! convolutions with sign-split weights).

use super::layer::Conv2d;

/// Geometry of one convolution application.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvGeometry {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub in_h: usize,
    pub in_w: usize,
    pub out_h: usize,
    pub out_w: usize,
}

impl ConvGeometry {
    pub fn new(conv: &Conv2d, in_h: usize, in_w: usize) -> Self {
        ConvGeometry {
            in_channels: conv.in_channels,
            out_channels: conv.out_channels,
            kernel: conv.kernel_size,
            stride: conv.stride,
            padding: conv.padding,
            in_h,
            in_w,
            out_h: conv.output_side(in_h).expect("validated geometry"),
            out_w: conv.output_side(in_w).expect("validated geometry"),
        }
    }

    fn padded(&self) -> (usize, usize) {
        (self.in_h + 2 * self.padding, self.in_w + 2 * self.padding)
    }
}

const LANES: usize = 8;
const BLOCK: usize = 4;

#[inline]
fn axpy(dst: &mut [f64], alpha: f64, src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += alpha * s;
    }
}

/// Copies the channel planes into a zero-padded buffer with `slack` extra
/// trailing zeros so vector loads may run past the last plane.
fn pad_planes(input: &[f64], g: &ConvGeometry, slack: usize) -> Vec<f64> {
    let (ph, pw) = g.padded();
    let p = g.padding;
    let mut padded = vec![0.0; g.in_channels * ph * pw + slack];
    for c in 0..g.in_channels {
        for y in 0..g.in_h {
            let src = &input[(c * g.in_h + y) * g.in_w..][..g.in_w];
            let dst = &mut padded[(c * ph + y + p) * pw + p..][..g.in_w];
            dst.copy_from_slice(src);
        }
    }
    padded
}

/// `out[o][i] = sum_t weights[o][t] * src[taps[t] + i]` for `i < len`.
///
/// Accumulates `BLOCK` outputs x `LANES` positions in registers across all
/// taps. `src` must extend `LANES` past the largest `taps[t] + len`.
fn tap_accumulate(src: &[f64], taps: &[usize], weights: &[f64], n_out: usize, len: usize) -> Vec<f64> {
    let n_taps = taps.len();
    debug_assert_eq!(weights.len(), n_out * n_taps);
    let mut out = vec![0.0; n_out * len];
    let mut wblk = vec![0.0; n_taps * BLOCK];
    let mut o0 = 0;
    while o0 < n_out {
        let block = (n_out - o0).min(BLOCK);
        wblk.iter_mut().for_each(|w| *w = 0.0);
        for t in 0..n_taps {
            for b in 0..block {
                wblk[t * BLOCK + b] = weights[(o0 + b) * n_taps + t];
            }
        }
        let mut start = 0;
        while start < len {
            let mut acc = [[0.0f64; LANES]; BLOCK];
            for (t, &off) in taps.iter().enumerate() {
                let v: &[f64; LANES] = src[off + start..off + start + LANES].try_into().unwrap();
                let w: &[f64; BLOCK] = wblk[t * BLOCK..t * BLOCK + BLOCK].try_into().unwrap();
                for b in 0..BLOCK {
                    for l in 0..LANES {
                        acc[b][l] = w[b].mul_add(v[l], acc[b][l]);
                    }
                }
            }
            let n = (len - start).min(LANES);
            // Constant-bound loop keeps `acc` in registers.
            for (b, row) in acc.iter().enumerate() {
                if b < block {
                    out[(o0 + b) * len + start..][..n].copy_from_slice(&row[..n]);
                }
            }
            start += LANES;
        }
        o0 += block;
    }
    out
}

/// `out[oc] = bias[oc] + sum_{ic,ky,kx} w * in`, zero padding.
pub(crate) fn conv2d(g: &ConvGeometry, weights: &[f64], bias: Option<&[f64]>, input: &[f64], out: &mut [f64]) {
    let plane = g.out_h * g.out_w;
    debug_assert_eq!(out.len(), g.out_channels * plane);
    if g.stride != 1 {
        conv2d_strided(g, weights, bias, input, out);
        return;
    }
    let k = g.kernel;
    let (ph, pw) = g.padded();
    let src = pad_planes(input, g, LANES);
    // Output rows are laid out with the padded input width so that every
    // kernel tap is one contiguous shifted read; junk columns are dropped.
    let len = (g.out_h - 1) * pw + g.out_w;
    let mut taps = Vec::with_capacity(g.in_channels * k * k);
    for ic in 0..g.in_channels {
        for ky in 0..k {
            for kx in 0..k {
                taps.push(ic * ph * pw + ky * pw + kx);
            }
        }
    }
    let wide = tap_accumulate(&src, &taps, weights, g.out_channels, len);
    for oc in 0..g.out_channels {
        let base = bias.map_or(0.0, |b| b[oc]);
        for oy in 0..g.out_h {
            let from = &wide[oc * len + oy * pw..][..g.out_w];
            let dst = &mut out[oc * plane + oy * g.out_w..][..g.out_w];
            for (d, s) in dst.iter_mut().zip(from) {
                *d = base + s;
            }
        }
    }
}

fn conv2d_strided(g: &ConvGeometry, weights: &[f64], bias: Option<&[f64]>, input: &[f64], out: &mut [f64]) {
    let k = g.kernel;
    let p = g.padding as isize;
    for oc in 0..g.out_channels {
        let base = bias.map_or(0.0, |b| b[oc]);
        for oy in 0..g.out_h {
            for ox in 0..g.out_w {
                let mut acc = 0.0;
                for ic in 0..g.in_channels {
                    for ky in 0..k {
                        let iy = (oy * g.stride + ky) as isize - p;
                        if iy < 0 || iy >= g.in_h as isize {
                            continue;
                        }
                        for kx in 0..k {
                            let ix = (ox * g.stride + kx) as isize - p;
                            if ix < 0 || ix >= g.in_w as isize {
                                continue;
                            }
                            let w = weights[((oc * g.in_channels + ic) * k + ky) * k + kx];
                            acc += w * input[(ic * g.in_h + iy as usize) * g.in_w + ix as usize];
                        }
                    }
                }
                out[(oc * g.out_h + oy) * g.out_w + ox] = base + acc;
            }
        }
    }
}

/// Adjoint of [`conv2d`] with respect to its input:
/// `grad_in[ic] = sum_{oc,ky,kx} w * grad_out`.
pub(crate) fn conv2d_transpose(g: &ConvGeometry, weights: &[f64], grad_out: &[f64]) -> Vec<f64> {
    if g.stride != 1 {
        return conv2d_transpose_strided(g, weights, grad_out);
    }
    let k = g.kernel;
    let (ph, pw) = g.padded();
    let plane = g.out_h * g.out_w;
    // grad_pad[ic][q] = sum w[oc][ic][ky][kx] * wide[oc][q - ky*pw - kx]; each
    // output-gradient plane carries a front margin so shifted reads stay
    // in bounds.
    let front = (k - 1) * pw + (k - 1);
    let ext = front + ph * pw;
    let mut src = vec![0.0; g.out_channels * ext + LANES];
    for oc in 0..g.out_channels {
        for oy in 0..g.out_h {
            let from = &grad_out[oc * plane + oy * g.out_w..][..g.out_w];
            src[oc * ext + front + oy * pw..][..g.out_w].copy_from_slice(from);
        }
    }
    let n_taps = g.out_channels * k * k;
    let mut taps = Vec::with_capacity(n_taps);
    for oc in 0..g.out_channels {
        for ky in 0..k {
            for kx in 0..k {
                taps.push(oc * ext + (k - 1 - ky) * pw + (k - 1 - kx));
            }
        }
    }
    let mut wt = vec![0.0; g.in_channels * n_taps];
    for ic in 0..g.in_channels {
        for oc in 0..g.out_channels {
            for ky in 0..k {
                for kx in 0..k {
                    wt[ic * n_taps + (oc * k + ky) * k + kx] = weights[((oc * g.in_channels + ic) * k + ky) * k + kx];
                }
            }
        }
    }
    let grad_pad = tap_accumulate(&src, &taps, &wt, g.in_channels, ph * pw);
    let p = g.padding;
    let mut grad_in = vec![0.0; g.in_channels * g.in_h * g.in_w];
    for ic in 0..g.in_channels {
        for y in 0..g.in_h {
            let from = &grad_pad[(ic * ph + y + p) * pw + p..][..g.in_w];
            grad_in[(ic * g.in_h + y) * g.in_w..][..g.in_w].copy_from_slice(from);
        }
    }
    grad_in
}

fn conv2d_transpose_strided(g: &ConvGeometry, weights: &[f64], grad_out: &[f64]) -> Vec<f64> {
    let k = g.kernel;
    let p = g.padding as isize;
    let mut grad_in = vec![0.0; g.in_channels * g.in_h * g.in_w];
    for oc in 0..g.out_channels {
        for oy in 0..g.out_h {
            for ox in 0..g.out_w {
                let go = grad_out[(oc * g.out_h + oy) * g.out_w + ox];
                if go == 0.0 {
                    continue;
                }
                for ic in 0..g.in_channels {
                    for ky in 0..k {
                        let iy = (oy * g.stride + ky) as isize - p;
                        if iy < 0 || iy >= g.in_h as isize {
                            continue;
                        }
                        for kx in 0..k {
                            let ix = (ox * g.stride + kx) as isize - p;
                            if ix < 0 || ix >= g.in_w as isize {
                                continue;
                            }
                            let w = weights[((oc * g.in_channels + ic) * k + ky) * k + kx];
                            grad_in[(ic * g.in_h + iy as usize) * g.in_w + ix as usize] += w * go;
                        }
                    }
                }
            }
        }
    }
    grad_in
}

/// Windowed max pool. Returns outputs and, per output, the flat input index
/// of the winner (ties go to the lowest row-major index).
pub(crate) fn max_pool(
    input: &[f64],
    (c, h, w): (usize, usize, usize),
    kernel: usize,
    stride: usize,
) -> (Vec<f64>, Vec<usize>) {
    let oh = (h - kernel) / stride + 1;
    let ow = (w - kernel) / stride + 1;
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best_idx = (ch * h + oy * stride) * w + ox * stride;
                let mut best = input[best_idx];
                for ky in 0..kernel {
                    let row = (ch * h + oy * stride + ky) * w + ox * stride;
                    for kx in 0..kernel {
                        let v = input[row + kx];
                        if v > best {
                            best = v;
                            best_idx = row + kx;
                        }
                    }
                }
                out.push(best);
                argmax.push(best_idx);
            }
        }
    }
    (out, argmax)
}

pub(crate) fn global_max_pool(input: &[f64], (c, h, w): (usize, usize, usize)) -> (Vec<f64>, Vec<usize>) {
    let plane = h * w;
    let mut out = Vec::with_capacity(c);
    let mut argmax = Vec::with_capacity(c);
    for ch in 0..c {
        let values = &input[ch * plane..][..plane];
        let mut best_idx = 0;
        let mut best = values[0];
        for (i, &v) in values.iter().enumerate().skip(1) {
            if v > best {
                best = v;
                best_idx = i;
            }
        }
        out.push(best);
        argmax.push(ch * plane + best_idx);
    }
    (out, argmax)
}

pub(crate) fn global_avg_pool(input: &[f64], (c, h, w): (usize, usize, usize)) -> Vec<f64> {
    let plane = h * w;
    (0..c)
        .map(|ch| input[ch * plane..][..plane].iter().sum::<f64>() / plane as f64)
        .collect()
}

pub(crate) fn dense(
    in_features: usize,
    out_features: usize,
    weights: &[f64],
    bias: Option<&[f64]>,
    input: &[f64],
) -> Vec<f64> {
    (0..out_features)
        .map(|j| {
            let row = &weights[j * in_features..][..in_features];
            let dot: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum();
            bias.map_or(0.0, |b| b[j]) + dot
        })
        .collect()
}

/// `grad_in[i] = sum_j w[j][i] * grad_out[j]`.
pub(crate) fn dense_transpose(in_features: usize, out_features: usize, weights: &[f64], grad_out: &[f64]) -> Vec<f64> {
    let mut grad_in = vec![0.0; in_features];
    for j in 0..out_features {
        let row = &weights[j * in_features..][..in_features];
        axpy(&mut grad_in, grad_out[j], row);
    }
    grad_in
}
