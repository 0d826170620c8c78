//! Oracles and model generators shared by the integration tests and the
//! acceptance runner.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use saliency_bench::engine::{Conv2d, Dense, Layer, ModelSpec, Tensor};
use saliency_bench::mask::PixelMask;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(shape: &[usize], rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

fn conv(rng: &mut ChaCha8Rng, cin: usize, cout: usize, k: usize, stride: usize, pad: usize, bias: bool) -> Layer {
    let mut c = Conv2d::zeros(cin, cout, k, stride, pad);
    let scale = 1.0 / ((cin * k * k) as f64).sqrt();
    c.weights
        .iter_mut()
        .for_each(|w| *w = rng.gen_range(-1.0..1.0) * scale * 1.7);
    if bias {
        c.bias.iter_mut().for_each(|b| *b = rng.gen_range(-0.1..0.1));
    }
    Layer::Conv2d(c)
}

fn dense(rng: &mut ChaCha8Rng, fin: usize, fout: usize, bias: bool) -> Layer {
    let w = (0..fin * fout)
        .map(|_| rng.gen_range(-1.0..1.0) / (fin as f64).sqrt())
        .collect();
    let b = (0..fout)
        .map(|_| if bias { rng.gen_range(-0.1..0.1) } else { 0.0 })
        .collect();
    Layer::Dense(Dense::new(fin, fout, w, b))
}

/// A small random network over a 1×side×side input. The architecture family
/// cycles with `seed`: conv stacks ending in max or average global pooling,
/// strided convolutions with a flattening dense head, and max-pooled stacks.
pub fn random_model(seed: u64, side: usize, bias: bool) -> ModelSpec {
    let mut r = rng(seed.wrapping_mul(0x9e37_79b9) ^ 0xabc);
    let c1 = r.gen_range(2..=4);
    let c2 = r.gen_range(2..=5);
    let classes = r.gen_range(2..=3);
    let layers = match seed % 4 {
        0 => vec![
            conv(&mut r, 1, c1, 3, 1, 1, bias),
            Layer::Relu,
            Layer::MaxPool2d {
                kernel_size: 2,
                stride: 2,
            },
            conv(&mut r, c1, c2, 3, 1, 1, bias),
            Layer::Relu,
            Layer::GlobalMaxPool,
            dense(&mut r, c2, classes, bias),
        ],
        1 => vec![
            conv(&mut r, 1, c1, 3, 1, 1, bias),
            Layer::Relu,
            conv(&mut r, c1, c2, 3, 1, 0, bias),
            Layer::Relu,
            Layer::GlobalAvgPool,
            dense(&mut r, c2, classes, bias),
        ],
        2 => {
            let s = (side + 2 - 3) / 2 + 1;
            vec![
                conv(&mut r, 1, c1, 3, 2, 1, bias),
                Layer::Relu,
                dense(&mut r, c1 * s * s, classes, bias),
            ]
        }
        _ => vec![
            conv(&mut r, 1, c1, 5, 1, 2, bias),
            Layer::Relu,
            Layer::MaxPool2d {
                kernel_size: 3,
                stride: 2,
            },
            conv(&mut r, c1, c2, 1, 1, 0, bias),
            Layer::Relu,
            Layer::GlobalMaxPool,
            dense(&mut r, c2, classes, bias),
        ],
    };
    ModelSpec::new([1, side, side], layers).unwrap()
}

pub struct FdReport {
    pub checked: usize,
    pub failures: usize,
    pub worst_rel: f64,
}

/// Compares the input gradient of `class` with central differences (step
/// `h`) for every input entry. An entry passes when the relative error is
/// at most `rel` or the absolute error is at most `abs`.
pub fn fd_check_input(model: &ModelSpec, x: &Tensor, class: usize, h: f64, rel: f64, abs: f64) -> FdReport {
    let trace = model.forward(x).unwrap();
    let grads = model.backward(&trace, class).unwrap();
    let g = grads.wrt_input();
    let mut report = FdReport {
        checked: 0,
        failures: 0,
        worst_rel: 0.0,
    };
    for i in 0..x.len() {
        let mut plus = x.clone();
        plus.data_mut()[i] += h;
        let mut minus = x.clone();
        minus.data_mut()[i] -= h;
        let fp = model.forward(&plus).unwrap().logits()[class];
        let fm = model.forward(&minus).unwrap().logits()[class];
        let fd = (fp - fm) / (2.0 * h);
        let err = (fd - g.data()[i]).abs();
        let scale = fd.abs().max(g.data()[i].abs());
        let r = if scale > 0.0 { err / scale } else { 0.0 };
        report.checked += 1;
        if !(r <= rel || err <= abs) {
            report.failures += 1;
        }
        if err > abs {
            report.worst_rel = report.worst_rel.max(r);
        }
    }
    report
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

fn neighbours(p: usize, w: usize, h: usize) -> Vec<usize> {
    let (x, y) = (p % w, p / w);
    let mut n = Vec::new();
    if x > 0 {
        n.push(p - 1);
    }
    if x + 1 < w {
        n.push(p + 1);
    }
    if y > 0 {
        n.push(p - w);
    }
    if y + 1 < h {
        n.push(p + w);
    }
    n
}

/// Dense reference for single-channel imputation: builds the full
/// neighbour-average system over the removed pixels and solves it directly.
pub fn dense_impute(image: &[f64], w: usize, h: usize, mask: &PixelMask) -> Vec<f64> {
    let unknowns: Vec<usize> = (0..w * h).filter(|&p| mask.bits()[p]).collect();
    let index = |p: usize| unknowns.iter().position(|&u| u == p);
    let n = unknowns.len();
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    for (i, &p) in unknowns.iter().enumerate() {
        let nb = neighbours(p, w, h);
        a[i][i] = nb.len() as f64;
        for q in nb {
            match index(q) {
                Some(j) => a[i][j] -= 1.0,
                None => b[i] += image[q],
            }
        }
    }
    let x = dense_solve(a, b);
    let mut out = image.to_vec();
    for (i, &p) in unknowns.iter().enumerate() {
        out[p] = x[i];
    }
    out
}

/// Largest |value - mean of 4-neighbours| over removed pixels.
pub fn neighbour_residual(values: &[f64], w: usize, h: usize, mask: &PixelMask) -> f64 {
    (0..w * h)
        .filter(|&p| mask.bits()[p])
        .map(|p| {
            let nb = neighbours(p, w, h);
            let mean = nb.iter().map(|&q| values[q]).sum::<f64>() / nb.len() as f64;
            (values[p] - mean).abs()
        })
        .fold(0.0, f64::max)
}

/// A random mask removing between `lo` and `hi` (fractions) of the pixels.
pub fn random_mask(w: usize, h: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> PixelMask {
    let frac = rng.gen_range(lo..=hi);
    let k = ((w * h) as f64 * frac).round() as usize;
    let mut order: Vec<usize> = (0..w * h).collect();
    for i in 0..order.len() {
        let j = rng.gen_range(i..order.len());
        order.swap(i, j);
    }
    let mut bits = vec![false; w * h];
    for &p in &order[..k] {
        bits[p] = true;
    }
    PixelMask::new(w, h, bits).unwrap()
}
