//! CAM, GradCAM++ and HiResCAM. All three read a spatial activation
//! `A` of shape `[channels, h, w]` from the trace and produce a map at the
//! feature resolution (`*_raw`), which `*_map` upsamples to the input size.

use super::map::{upsample_map, Interpolation, MethodId, SaliencyMap};
use crate::engine::{ForwardTrace, ModelSpec, PassCounter, Tensor};
use crate::error::{Error, Result};

/// Target layer and upsampling for the CAM family.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CamOptions {
    /// Layer whose output is explained; `None` picks the last spatial
    /// activation (the one feeding the global pool on CAM-eligible models).
    pub target_layer: Option<usize>,
    pub interpolation: Interpolation,
}

fn target_activation<'t>(
    model: &ModelSpec,
    trace: &'t ForwardTrace,
    target: Option<usize>,
) -> Result<(usize, &'t Tensor)> {
    let index = match target {
        Some(i) => i,
        None => model
            .default_target_layer()
            .ok_or_else(|| Error::TraceMismatch("model has no spatial activation to explain".into()))?,
    };
    let act = trace
        .activations
        .get(index)
        .ok_or_else(|| Error::TraceMismatch(format!("no layer {index} in trace")))?;
    if act.dims3().is_none() {
        return Err(Error::TraceMismatch(format!(
            "layer {index} output {:?} is not a spatial map",
            act.shape()
        )));
    }
    Ok((index, act))
}

fn weighted_channel_sum(act: &Tensor, weight: impl Fn(usize, usize) -> f64) -> Vec<f64> {
    let (c, h, w) = act.dims3().expect("checked rank");
    let plane = h * w;
    let mut out = vec![0.0; plane];
    for k in 0..c {
        let a = &act.data()[k * plane..][..plane];
        for (p, (o, &v)) in out.iter_mut().zip(a).enumerate() {
            *o += weight(k, p) * v;
        }
    }
    out
}

fn to_input_resolution(model: &ModelSpec, raw: SaliencyMap, interpolation: Interpolation) -> Result<SaliencyMap> {
    let [_, h, w] = model.input_shape();
    upsample_map(&raw, w, h, interpolation)
}

/// Class activation map: `sum_k w[class][k] * A_k` over the activation
/// feeding the global pool. Signed.
pub fn cam_raw(model: &ModelSpec, trace: &ForwardTrace, class_index: usize) -> Result<SaliencyMap> {
    let head = model.cam_head().ok_or(Error::NotCamEligible)?;
    trace.validate(model)?;
    model.check_class(class_index)?;
    let pool_index = model.layers().len() - 2;
    let act = trace.layer_input(pool_index);
    let (_, h, w) = act.dims3().expect("global pool input is spatial");
    let values = weighted_channel_sum(act, |k, _| head.weight(class_index, k));
    SaliencyMap::new(w, h, values, MethodId::Cam, class_index)
}

pub fn cam_map(
    model: &ModelSpec,
    trace: &ForwardTrace,
    class_index: usize,
    interpolation: Interpolation,
) -> Result<SaliencyMap> {
    let raw = cam_raw(model, trace, class_index)?;
    to_input_resolution(model, raw, interpolation)
}

/// GradCAM++ with second/third-order terms taken as powers of the first
/// gradient `g`:
///
/// `alpha = g^2 / (2 g^2 + sum_xy(A_k) g^3)` (0 where the denominator is 0),
/// `w_k = sum_xy alpha * relu(g)`, map `= relu(sum_k w_k A_k)`.
pub fn gradcampp_raw(
    model: &ModelSpec,
    trace: &ForwardTrace,
    class_index: usize,
    target_layer: Option<usize>,
    passes: &PassCounter,
) -> Result<SaliencyMap> {
    trace.validate(model)?;
    let (index, act) = target_activation(model, trace, target_layer)?;
    let grads = model.backward(trace, class_index)?;
    passes.record_backward();
    let g = grads.wrt_layer(index);
    let (c, h, w) = act.dims3().expect("checked rank");
    let plane = h * w;
    let channel_weights: Vec<f64> = (0..c)
        .map(|k| {
            let a = &act.data()[k * plane..][..plane];
            let gk = &g.data()[k * plane..][..plane];
            let activation_sum: f64 = a.iter().sum();
            gk.iter()
                .map(|&gv| {
                    let g2 = gv * gv;
                    let denom = 2.0 * g2 + activation_sum * g2 * gv;
                    let alpha = if denom == 0.0 { 0.0 } else { g2 / denom };
                    alpha * gv.max(0.0)
                })
                .sum()
        })
        .collect();
    let values = weighted_channel_sum(act, |k, _| channel_weights[k])
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    SaliencyMap::new(w, h, values, MethodId::GradCamPp, class_index)
}

pub fn gradcampp_map(
    model: &ModelSpec,
    trace: &ForwardTrace,
    class_index: usize,
    options: &CamOptions,
    passes: &PassCounter,
) -> Result<SaliencyMap> {
    let raw = gradcampp_raw(model, trace, class_index, options.target_layer, passes)?;
    to_input_resolution(model, raw, options.interpolation)
}

/// HiResCAM: `sum_k dlogit/dA_k(x, y) * A_k(x, y)`, no averaging, no
/// rectification.
pub fn hirescam_raw(
    model: &ModelSpec,
    trace: &ForwardTrace,
    class_index: usize,
    target_layer: Option<usize>,
    passes: &PassCounter,
) -> Result<SaliencyMap> {
    trace.validate(model)?;
    let (index, act) = target_activation(model, trace, target_layer)?;
    let grads = model.backward(trace, class_index)?;
    passes.record_backward();
    let g = grads.wrt_layer(index);
    let (_, h, w) = act.dims3().expect("checked rank");
    let plane = h * w;
    let values = weighted_channel_sum(act, |k, p| g.data()[k * plane + p]);
    SaliencyMap::new(w, h, values, MethodId::HiResCam, class_index)
}

pub fn hirescam_map(
    model: &ModelSpec,
    trace: &ForwardTrace,
    class_index: usize,
    options: &CamOptions,
    passes: &PassCounter,
) -> Result<SaliencyMap> {
    let raw = hirescam_raw(model, trace, class_index, options.target_layer, passes)?;
    to_input_resolution(model, raw, options.interpolation)
}
