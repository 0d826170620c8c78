use super::forward::ForwardTrace;
use super::kernels::{self, ConvGeometry};
use super::layer::Layer;
use super::model::ModelSpec;
use super::tensor::Tensor;
use crate::error::Result;

/// Gradients of one class score with respect to the model input and to
/// the output of every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    input: Tensor,
    layers: Vec<Tensor>,
}

impl Gradients {
    pub fn wrt_input(&self) -> &Tensor {
        &self.input
    }

    /// Gradient with respect to the output of layer `index`.
    pub fn wrt_layer(&self, index: usize) -> &Tensor {
        &self.layers[index]
    }

    /// `[input, layer 0, layer 1, ...]`.
    pub fn into_vec(self) -> Vec<Tensor> {
        let mut all = Vec::with_capacity(self.layers.len() + 1);
        all.push(self.input);
        all.extend(self.layers);
        all
    }
}

impl ModelSpec {
    /// Reverse-mode gradients of `logits[class_index]`.
    pub fn backward(&self, trace: &ForwardTrace, class_index: usize) -> Result<Gradients> {
        trace.validate(self)?;
        self.check_class(class_index)?;
        let n = self.layers().len();
        let mut grads: Vec<Tensor> = Vec::with_capacity(n);
        let mut upstream = Tensor::zeros(self.shapes()[n - 1].clone());
        upstream.data_mut()[class_index] = 1.0;

        for index in (0..n).rev() {
            let layer_input = trace.layer_input(index);
            let in_shape = layer_input.shape().to_vec();
            let grad_in = match &self.layers()[index] {
                Layer::Conv2d(conv) => {
                    let (_, h, w) = layer_input.dims3().expect("validated rank");
                    let g = ConvGeometry::new(conv, h, w);
                    kernels::conv2d_transpose(&g, &conv.weights, upstream.data())
                }
                Layer::Relu => layer_input
                    .data()
                    .iter()
                    .zip(upstream.data())
                    .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
                    .collect(),
                Layer::MaxPool2d { .. } | Layer::GlobalMaxPool => {
                    let argmax = trace.pool_argmax[index].as_ref().expect("validated trace");
                    let mut grad = vec![0.0; layer_input.len()];
                    for (&src, &g) in argmax.iter().zip(upstream.data()) {
                        grad[src] += g;
                    }
                    grad
                }
                Layer::GlobalAvgPool => {
                    let (c, h, w) = layer_input.dims3().expect("validated rank");
                    let plane = h * w;
                    let mut grad = vec![0.0; c * plane];
                    for ch in 0..c {
                        let v = upstream.data()[ch] / plane as f64;
                        grad[ch * plane..][..plane].iter_mut().for_each(|g| *g = v);
                    }
                    grad
                }
                Layer::Dense(dense) => {
                    kernels::dense_transpose(dense.in_features, dense.out_features, &dense.weights, upstream.data())
                }
            };
            grads.push(upstream);
            upstream = Tensor::from_parts(in_shape, grad_in);
        }
        grads.reverse();
        Ok(Gradients {
            input: upstream,
            layers: grads,
        })
    }
}
