use super::kernels::{self, ConvGeometry};
use super::layer::Layer;
use super::model::ModelSpec;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Everything one forward pass leaves behind for the explanation methods.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    /// The input the pass was run on.
    pub input: Tensor,
    /// Output of every layer, in order.
    pub activations: Vec<Tensor>,
    /// Winning flat input index per output element, for max-pool and
    /// global-max-pool layers; `None` for every other layer.
    pub pool_argmax: Vec<Option<Vec<usize>>>,
}

impl ForwardTrace {
    pub fn logits(&self) -> &[f64] {
        self.activations.last().map_or(&[], |t| t.data())
    }

    /// Input of layer `index` (the previous activation, or the model input).
    pub fn layer_input(&self, index: usize) -> &Tensor {
        if index == 0 {
            &self.input
        } else {
            &self.activations[index - 1]
        }
    }

    /// Structural check that this trace came from `model`.
    pub fn validate(&self, model: &ModelSpec) -> Result<()> {
        if self.input.shape() != model.input_shape() {
            return Err(Error::TraceMismatch(format!(
                "trace input {:?} vs model input {:?}",
                self.input.shape(),
                model.input_shape()
            )));
        }
        if self.activations.len() != model.layers().len() || self.pool_argmax.len() != model.layers().len() {
            return Err(Error::TraceMismatch(format!(
                "trace has {} activations for {} layers",
                self.activations.len(),
                model.layers().len()
            )));
        }
        for (i, (act, shape)) in self.activations.iter().zip(model.shapes()).enumerate() {
            if act.shape() != &shape[..] {
                return Err(Error::TraceMismatch(format!(
                    "layer {i} activation {:?} vs expected {shape:?}",
                    act.shape()
                )));
            }
            let is_pool = matches!(model.layers()[i], Layer::MaxPool2d { .. } | Layer::GlobalMaxPool);
            match (&self.pool_argmax[i], is_pool) {
                (Some(idx), true) => {
                    let bound = self.layer_input(i).len();
                    if idx.len() != act.len() || idx.iter().any(|&j| j >= bound) {
                        return Err(Error::TraceMismatch(format!("layer {i} argmax indices invalid")));
                    }
                }
                (None, false) => {}
                _ => {
                    return Err(Error::TraceMismatch(format!(
                        "layer {i} argmax presence does not match layer kind"
                    )))
                }
            }
        }
        Ok(())
    }
}

impl ModelSpec {
    pub fn forward(&self, input: &Tensor) -> Result<ForwardTrace> {
        if input.shape() != self.input_shape() {
            return Err(Error::ShapeMismatch {
                expected: self.input_shape().to_vec(),
                actual: input.shape().to_vec(),
            });
        }
        let mut activations = Vec::with_capacity(self.layers().len());
        let mut pool_argmax = Vec::with_capacity(self.layers().len());
        for index in 0..self.layers().len() {
            let layer_input = if index == 0 { input } else { &activations[index - 1] };
            let (out, argmax) = self.apply_layer(index, layer_input)?;
            activations.push(out);
            pool_argmax.push(argmax);
        }
        Ok(ForwardTrace {
            input: input.clone(),
            activations,
            pool_argmax,
        })
    }

    /// Scores obtained by feeding `activation` into layer `start` and running
    /// the rest of the stack. `start == layers().len()` returns the
    /// activation itself.
    pub fn forward_from(&self, start: usize, activation: &Tensor) -> Result<Vec<f64>> {
        let mut current = activation.clone();
        for index in start..self.layers().len() {
            current = self.apply_layer(index, &current)?.0;
        }
        Ok(current.into_data())
    }

    /// Runs a single layer. Returns its output and, for max pools, the
    /// winning input indices.
    pub fn apply_layer(&self, index: usize, input: &Tensor) -> Result<(Tensor, Option<Vec<usize>>)> {
        let layer = &self.layers()[index];
        let expected_in: &[usize] = if index == 0 {
            &self.input_shape()
        } else {
            &self.shapes()[index - 1]
        };
        if input.shape() != expected_in {
            return Err(Error::ShapeMismatch {
                expected: expected_in.to_vec(),
                actual: input.shape().to_vec(),
            });
        }
        let out_shape = self.shapes()[index].clone();
        let (data, argmax) = match layer {
            Layer::Conv2d(conv) => {
                let (_, h, w) = input.dims3().expect("validated rank");
                let g = ConvGeometry::new(conv, h, w);
                let mut out = vec![0.0; out_shape.iter().product()];
                kernels::conv2d(&g, &conv.weights, Some(&conv.bias), input.data(), &mut out);
                (out, None)
            }
            Layer::Relu => (input.data().iter().map(|&v| v.max(0.0)).collect(), None),
            Layer::MaxPool2d { kernel_size, stride } => {
                let dims = input.dims3().expect("validated rank");
                let (out, idx) = kernels::max_pool(input.data(), dims, *kernel_size, *stride);
                (out, Some(idx))
            }
            Layer::GlobalMaxPool => {
                let dims = input.dims3().expect("validated rank");
                let (out, idx) = kernels::global_max_pool(input.data(), dims);
                (out, Some(idx))
            }
            Layer::GlobalAvgPool => {
                let dims = input.dims3().expect("validated rank");
                (kernels::global_avg_pool(input.data(), dims), None)
            }
            Layer::Dense(dense) => (
                kernels::dense(
                    dense.in_features,
                    dense.out_features,
                    &dense.weights,
                    Some(&dense.bias),
                    input.data(),
                ),
                None,
            ),
        };
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { layer: index });
        }
        Ok((Tensor::from_parts(out_shape, data), argmax))
    }
}
