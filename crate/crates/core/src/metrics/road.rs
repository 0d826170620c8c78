//! Remove-and-debias perturbation: the most salient pixels are replaced by
//! the harmonic interpolation of their 4-connected neighbours plus noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::curve::{check_percent, check_percentiles, MetricCurve, MetricId};
use crate::engine::{ModelSpec, Tensor};
use crate::error::{Error, Result};
use crate::mask::RemovalMask;
use crate::saliency::SaliencyMap;

pub const ROAD_PERCENTILES: [f64; 5] = [10.0, 20.0, 30.0, 40.0, 50.0];
pub const DEFAULT_NOISE_SIGMA: f64 = 0.01;

/// Pixel indices ordered most salient first, ties by lowest index.
pub(crate) fn ranking(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// `floor(p/100 * n)`, computed so that integer percentages are exact.
pub(crate) fn selected_count(p: f64, n: usize) -> usize {
    let k = (p * n as f64 / 100.0 + 1e-9).floor() as usize;
    k.min(n)
}

pub fn top_percent_mask(saliency: &SaliencyMap, p: f64) -> Result<RemovalMask> {
    check_percent(p)?;
    let (w, h) = saliency.dims();
    let order = ranking(saliency.values());
    let mut bits = vec![false; w * h];
    for &i in &order[..selected_count(p, w * h)] {
        bits[i] = true;
    }
    RemovalMask::new(w, h, bits)
}

/// Fills every removed pixel, channel by channel, with the solution of
/// "value = mean of in-image 4-neighbours", then adds N(0, sigma^2) noise to
/// the filled pixels only.
pub fn road_impute(image: &Tensor, mask: &RemovalMask, noise_sigma: f64, seed: u64) -> Result<Tensor> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    impute_with(image, mask, noise_sigma, &mut rng)
}

fn impute_with(image: &Tensor, mask: &RemovalMask, noise_sigma: f64, rng: &mut ChaCha8Rng) -> Result<Tensor> {
    let (c, h, w) = image
        .dims3()
        .ok_or_else(|| Error::ShapeInvalid(format!("image must be [C,H,W], got {:?}", image.shape())))?;
    if mask.dims() != (w, h) {
        return Err(Error::DimMismatch(mask.dims(), (w, h)));
    }
    if !(noise_sigma >= 0.0 && noise_sigma.is_finite()) {
        return Err(Error::ParamInvalid(format!(
            "noise sigma must be >= 0, got {noise_sigma}"
        )));
    }
    let system = NeighbourSystem::new(mask)?;
    let mut out = image.clone();
    if system.unknowns.is_empty() {
        return Ok(out);
    }
    let noise = Normal::new(0.0, noise_sigma).expect("validated sigma");
    let plane = w * h;
    for ch in 0..c {
        let channel = &mut out.data_mut()[ch * plane..][..plane];
        let solution = system.solve(channel)?;
        for (&p, v) in system.unknowns.iter().zip(solution) {
            channel[p] = v;
        }
        if noise_sigma > 0.0 {
            for &p in &system.unknowns {
                channel[p] += noise.sample(rng);
            }
        }
    }
    Ok(out)
}

/// The sparse SPD system `deg(u) x_u - sum_{removed v ~ u} x_v = sum_{known v ~ u} value_v`.
struct NeighbourSystem {
    width: usize,
    height: usize,
    unknowns: Vec<usize>,
    slot: Vec<Option<usize>>,
    degree: Vec<f64>,
}

impl NeighbourSystem {
    fn new(mask: &RemovalMask) -> Result<Self> {
        let (width, height) = mask.dims();
        let mut slot = vec![None; width * height];
        let mut unknowns = Vec::new();
        for (p, &removed) in mask.bits().iter().enumerate() {
            if removed {
                slot[p] = Some(unknowns.len());
                unknowns.push(p);
            }
        }
        if !unknowns.is_empty() && unknowns.len() == width * height {
            // No known pixel anchors the system; the Laplacian is singular.
            return Err(Error::SingularSystem);
        }
        let mut system = NeighbourSystem {
            width,
            height,
            unknowns,
            slot,
            degree: Vec::new(),
        };
        system.degree = system
            .unknowns
            .iter()
            .map(|&p| system.neighbours(p).count() as f64)
            .collect();
        Ok(system)
    }

    fn neighbours(&self, p: usize) -> impl Iterator<Item = usize> {
        let (w, h) = (self.width, self.height);
        let (x, y) = (p % w, p / w);
        let left = (x > 0).then(|| p - 1);
        let right = (x + 1 < w).then(|| p + 1);
        let up = (y > 0).then(|| p - w);
        let down = (y + 1 < h).then(|| p + w);
        [left, right, up, down].into_iter().flatten()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (i, &p) in self.unknowns.iter().enumerate() {
            let mut acc = self.degree[i] * v[i];
            for q in self.neighbours(p) {
                if let Some(j) = self.slot[q] {
                    acc -= v[j];
                }
            }
            out[i] = acc;
        }
    }

    /// Jacobi-preconditioned conjugate gradients.
    fn solve(&self, channel: &[f64]) -> Result<Vec<f64>> {
        let n = self.unknowns.len();
        let b: Vec<f64> = self
            .unknowns
            .iter()
            .map(|&p| {
                self.neighbours(p)
                    .filter(|&q| self.slot[q].is_none())
                    .map(|q| channel[q])
                    .sum()
            })
            .collect();
        let b_norm = dot(&b, &b).sqrt();
        let tol = 1e-13 * b_norm.max(1.0);

        let mut x: Vec<f64> = b.iter().zip(&self.degree).map(|(bi, d)| bi / d).collect();
        let mut r = vec![0.0; n];
        self.apply(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(&b) {
            *ri = bi - *ri;
        }
        let mut z: Vec<f64> = r.iter().zip(&self.degree).map(|(ri, d)| ri / d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for _ in 0..(10 * n + 100) {
            if dot(&r, &r).sqrt() <= tol {
                return Ok(x);
            }
            self.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::SingularSystem);
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] / self.degree[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if dot(&r, &r).sqrt() <= 1e-9 * b_norm.max(1.0) {
            Ok(x)
        } else {
            Err(Error::SingularSystem)
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Softmax probability of `class_index`, or the sigmoid of a single logit.
pub fn confidence(logits: &[f64], class_index: usize) -> f64 {
    if logits.len() == 1 {
        return 1.0 / (1.0 + (-logits[0]).exp());
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let denom: f64 = logits.iter().map(|l| (l - max).exp()).sum();
    (logits[class_index] - max).exp() / denom
}

/// Mean confidence for `class_index` after removing the top-p% pixels of each
/// tile's saliency map. Tile `t` at percentile index `k` draws its noise from
/// stream `(t, k)` of the seeded generator, so results do not depend on
/// evaluation order.
pub fn road_curve(
    model: &ModelSpec,
    tiles: &[Tensor],
    saliencies: &[SaliencyMap],
    class_index: usize,
    percentiles: &[f64],
    noise_sigma: f64,
    seed: u64,
) -> Result<MetricCurve> {
    if tiles.len() != saliencies.len() {
        return Err(Error::LengthMismatch {
            left: tiles.len(),
            right: saliencies.len(),
        });
    }
    if tiles.is_empty() {
        return Err(Error::ConfigInvalid("ROAD needs at least one tile".into()));
    }
    check_percentiles(percentiles)?;
    model.check_class(class_index)?;

    let per_tile: Vec<Vec<f64>> = tiles
        .par_iter()
        .zip(saliencies)
        .enumerate()
        .map(|(t, (tile, saliency))| {
            percentiles
                .iter()
                .enumerate()
                .map(|(k, &p)| {
                    let mask = top_percent_mask(saliency, p)?;
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(((t as u64) << 32) | k as u64);
                    let perturbed = impute_with(tile, &mask, noise_sigma, &mut rng)?;
                    let trace = model.forward(&perturbed)?;
                    Ok(confidence(trace.logits(), class_index))
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;

    let mut values = vec![0.0; percentiles.len()];
    for row in &per_tile {
        for (acc, v) in values.iter_mut().zip(row) {
            *acc += v;
        }
    }
    let n = tiles.len() as f64;
    values.iter_mut().for_each(|v| *v /= n);
    MetricCurve::new(percentiles.to_vec(), values, MetricId::Road)
}
