//! Composite layer-wise relevance propagation.
//!
//! Rule assignment: epsilon-rule for dense layers, alpha-beta rule for every
//! convolution, identity through ReLU, winner-take-all through max pools,
//! contribution-proportional through global average pools.

use super::map::{MethodId, SaliencyMap};
use crate::engine::kernels::{self, ConvGeometry};
use crate::engine::{Conv2d, Dense, ForwardTrace, Layer, ModelSpec, PassCounter, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LrpParams {
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for LrpParams {
    fn default() -> Self {
        LrpParams {
            epsilon: 1e-6,
            alpha: 2.0,
            beta: 1.0,
        }
    }
}

impl LrpParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::ParamInvalid(format!(
                "LRP epsilon must be > 0, got {}",
                self.epsilon
            )));
        }
        if self.beta < 0.0 || ((self.alpha - self.beta) - 1.0).abs() > 1e-12 {
            return Err(Error::ParamInvalid(format!(
                "LRP requires alpha - beta = 1 with beta >= 0, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }
}

/// Relevance of every input element (all channels) for `class_index`.
pub fn lrp_relevance(
    model: &ModelSpec,
    trace: &ForwardTrace,
    class_index: usize,
    params: &LrpParams,
    passes: &PassCounter,
) -> Result<Tensor> {
    params.validate()?;
    trace.validate(model)?;
    model.check_class(class_index)?;
    passes.record_backward();

    let n = model.layers().len();
    let mut relevance = vec![0.0; model.class_count()];
    relevance[class_index] = trace.logits()[class_index];

    for index in (0..n).rev() {
        let x = trace.layer_input(index);
        relevance = match &model.layers()[index] {
            Layer::Dense(dense) => epsilon_rule(dense, x.data(), &relevance, params.epsilon),
            Layer::Conv2d(conv) => alpha_beta_rule(conv, x, &relevance, params),
            Layer::Relu => relevance,
            Layer::MaxPool2d { .. } | Layer::GlobalMaxPool => {
                let argmax = trace.pool_argmax[index].as_ref().expect("validated trace");
                let mut r = vec![0.0; x.len()];
                for (&src, &rel) in argmax.iter().zip(&relevance) {
                    r[src] += rel;
                }
                r
            }
            Layer::GlobalAvgPool => {
                let (c, h, w) = x.dims3().expect("validated rank");
                let plane = h * w;
                let mut r = vec![0.0; x.len()];
                for ch in 0..c {
                    let xs = &x.data()[ch * plane..][..plane];
                    let total: f64 = xs.iter().sum();
                    if total == 0.0 {
                        continue;
                    }
                    let scale = relevance[ch] / total;
                    for (ri, &xi) in r[ch * plane..][..plane].iter_mut().zip(xs) {
                        *ri = xi * scale;
                    }
                }
                r
            }
        };
    }
    Tensor::new(model.input_shape().to_vec(), relevance)
}

/// Pixel relevance map: [`lrp_relevance`] summed over input channels.
pub fn lrp_composite_map(
    model: &ModelSpec,
    trace: &ForwardTrace,
    class_index: usize,
    params: &LrpParams,
    passes: &PassCounter,
) -> Result<SaliencyMap> {
    let relevance = lrp_relevance(model, trace, class_index, params, passes)?;
    let (c, h, w) = relevance.dims3().expect("input is rank 3");
    let plane = h * w;
    let mut values = vec![0.0; plane];
    for ch in 0..c {
        for (v, &r) in values.iter_mut().zip(&relevance.data()[ch * plane..][..plane]) {
            *v += r;
        }
    }
    SaliencyMap::new(w, h, values, MethodId::CompositeLrp, class_index)
}

fn stabilize(z: f64, epsilon: f64) -> f64 {
    if z >= 0.0 {
        z + epsilon
    } else {
        z - epsilon
    }
}

fn epsilon_rule(dense: &Dense, x: &[f64], relevance: &[f64], epsilon: f64) -> Vec<f64> {
    let z = kernels::dense(
        dense.in_features,
        dense.out_features,
        &dense.weights,
        Some(&dense.bias),
        x,
    );
    let s: Vec<f64> = z
        .iter()
        .zip(relevance)
        .map(|(&zj, &rj)| rj / stabilize(zj, epsilon))
        .collect();
    let back = kernels::dense_transpose(dense.in_features, dense.out_features, &dense.weights, &s);
    x.iter().zip(back).map(|(xi, c)| xi * c).collect()
}

fn split(values: &[f64]) -> (Vec<f64>, Vec<f64>) {
    values.iter().map(|&v| (v.max(0.0), v.min(0.0))).unzip()
}

/// `R_i = sum_j (alpha z+_ij / Z+_j - beta z-_ij / Z-_j) R_j`, bias excluded.
///
/// When an output has contributions of only one sign, that side carries the
/// whole relevance (`alpha - beta = 1`), so totals are conserved.
fn alpha_beta_rule(conv: &Conv2d, x: &Tensor, relevance: &[f64], params: &LrpParams) -> Vec<f64> {
    let (_, h, w) = x.dims3().expect("validated rank");
    let g = ConvGeometry::new(conv, h, w);
    let (w_pos, w_neg) = split(&conv.weights);
    let (x_pos, x_neg) = split(x.data());
    let signed_input = x_neg.iter().any(|&v| v < 0.0);
    let out_len = relevance.len();

    let conv_sum = |weights: &[f64], input: &[f64]| {
        let mut out = vec![0.0; out_len];
        kernels::conv2d(&g, weights, None, input, &mut out);
        out
    };
    // z+ = x+ w+ + x- w-,  z- = x+ w- + x- w+
    let mut z_pos = conv_sum(&w_pos, &x_pos);
    let mut z_neg = conv_sum(&w_neg, &x_pos);
    if signed_input {
        for (z, v) in z_pos.iter_mut().zip(conv_sum(&w_neg, &x_neg)) {
            *z += v;
        }
        for (z, v) in z_neg.iter_mut().zip(conv_sum(&w_pos, &x_neg)) {
            *z += v;
        }
    }

    let mut s_pos = vec![0.0; out_len];
    let mut s_neg = vec![0.0; out_len];
    for j in 0..out_len {
        let (zp, zn, r) = (z_pos[j], z_neg[j], relevance[j]);
        match (zp > 0.0, zn < 0.0) {
            (true, true) => {
                s_pos[j] = params.alpha * r / zp;
                s_neg[j] = params.beta * r / zn;
            }
            (true, false) => s_pos[j] = r / zp,
            (false, true) => s_neg[j] = -r / zn,
            (false, false) => {}
        }
    }

    let t = |weights: &[f64], s: &[f64]| kernels::conv2d_transpose(&g, weights, s);
    let pos_side = t(&w_pos, &s_pos);
    let neg_side = t(&w_neg, &s_neg);
    let mut r: Vec<f64> = x_pos
        .iter()
        .zip(pos_side.iter().zip(&neg_side))
        .map(|(&xp, (&a, &b))| xp * (a - b))
        .collect();
    if signed_input {
        let pos_side = t(&w_neg, &s_pos);
        let neg_side = t(&w_pos, &s_neg);
        for (i, ri) in r.iter_mut().enumerate() {
            *ri += x_neg[i] * (pos_side[i] - neg_side[i]);
        }
    }
    r
}
