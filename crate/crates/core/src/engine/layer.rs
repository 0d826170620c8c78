use std::fmt;

/// 2-D convolution with zero padding. Weights are laid out
/// `[out_channels][in_channels][kernel][kernel]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    pub stride: usize,
    pub padding: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv2d {
    pub fn zeros(in_channels: usize, out_channels: usize, kernel_size: usize, stride: usize, padding: usize) -> Self {
        Conv2d {
            in_channels,
            out_channels,
            kernel_size,
            stride,
            padding,
            weights: vec![0.0; out_channels * in_channels * kernel_size * kernel_size],
            bias: vec![0.0; out_channels],
        }
    }

    pub fn weight_count(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel_size * self.kernel_size
    }

    #[inline]
    pub fn weight_index(&self, oc: usize, ic: usize, ky: usize, kx: usize) -> usize {
        ((oc * self.in_channels + ic) * self.kernel_size + ky) * self.kernel_size + kx
    }

    pub fn output_side(&self, side: usize) -> Option<usize> {
        let padded = side + 2 * self.padding;
        if self.stride == 0 || padded < self.kernel_size {
            return None;
        }
        Some((padded - self.kernel_size) / self.stride + 1)
    }
}

/// Fully connected layer; weights are `[out_features][in_features]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub in_features: usize,
    pub out_features: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn new(in_features: usize, out_features: usize, weights: Vec<f64>, bias: Vec<f64>) -> Self {
        Dense {
            in_features,
            out_features,
            weights,
            bias,
        }
    }

    pub fn weight(&self, out: usize, input: usize) -> f64 {
        self.weights[out * self.in_features + input]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv2d(Conv2d),
    Relu,
    MaxPool2d { kernel_size: usize, stride: usize },
    GlobalMaxPool,
    GlobalAvgPool,
    Dense(Dense),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Conv2d,
    Relu,
    MaxPool2d,
    GlobalMaxPool,
    GlobalAvgPool,
    Dense,
}

impl fmt::Display for LayerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            LayerKind::Conv2d => "Conv2D",
            LayerKind::Relu => "ReLU",
            LayerKind::MaxPool2d => "MaxPool2D",
            LayerKind::GlobalMaxPool => "GlobalMaxPool",
            LayerKind::GlobalAvgPool => "GlobalAvgPool",
            LayerKind::Dense => "Dense",
        };
        f.write_str(name)
    }
}

impl Layer {
    pub fn kind(&self) -> LayerKind {
        match self {
            Layer::Conv2d(_) => LayerKind::Conv2d,
            Layer::Relu => LayerKind::Relu,
            Layer::MaxPool2d { .. } => LayerKind::MaxPool2d,
            Layer::GlobalMaxPool => LayerKind::GlobalMaxPool,
            Layer::GlobalAvgPool => LayerKind::GlobalAvgPool,
            Layer::Dense(_) => LayerKind::Dense,
        }
    }

    pub fn is_global_pool(&self) -> bool {
        matches!(self, Layer::GlobalMaxPool | Layer::GlobalAvgPool)
    }

    /// Output shape for a given input shape, or a reason why the layer
    /// cannot accept it.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, String> {
        match self {
            Layer::Conv2d(conv) => {
                let [c, h, w] = rank3(input)?;
                if conv.kernel_size == 0 || conv.stride == 0 {
                    return Err("kernel_size and stride must be >= 1".into());
                }
                if c != conv.in_channels {
                    return Err(format!("expects {} input channels, got {c}", conv.in_channels));
                }
                if conv.weights.len() != conv.weight_count() {
                    return Err(format!(
                        "weights hold {} values, {} expected",
                        conv.weights.len(),
                        conv.weight_count()
                    ));
                }
                if conv.bias.len() != conv.out_channels {
                    return Err(format!(
                        "bias holds {} values, {} expected",
                        conv.bias.len(),
                        conv.out_channels
                    ));
                }
                let oh = conv.output_side(h).ok_or("kernel larger than padded input")?;
                let ow = conv.output_side(w).ok_or("kernel larger than padded input")?;
                Ok(vec![conv.out_channels, oh, ow])
            }
            Layer::Relu => Ok(input.to_vec()),
            Layer::MaxPool2d { kernel_size, stride } => {
                let [c, h, w] = rank3(input)?;
                if *kernel_size == 0 || *stride == 0 {
                    return Err("kernel_size and stride must be >= 1".into());
                }
                if h < *kernel_size || w < *kernel_size {
                    return Err(format!("pool window {kernel_size} exceeds {h}x{w} input"));
                }
                Ok(vec![c, (h - kernel_size) / stride + 1, (w - kernel_size) / stride + 1])
            }
            Layer::GlobalMaxPool | Layer::GlobalAvgPool => {
                let [c, _, _] = rank3(input)?;
                Ok(vec![c])
            }
            Layer::Dense(dense) => {
                let n: usize = input.iter().product();
                if n != dense.in_features {
                    return Err(format!("expects {} input features, got {n}", dense.in_features));
                }
                if dense.weights.len() != dense.in_features * dense.out_features {
                    return Err(format!(
                        "weights hold {} values, {} expected",
                        dense.weights.len(),
                        dense.in_features * dense.out_features
                    ));
                }
                if dense.bias.len() != dense.out_features {
                    return Err(format!(
                        "bias holds {} values, {} expected",
                        dense.bias.len(),
                        dense.out_features
                    ));
                }
                Ok(vec![dense.out_features])
            }
        }
    }
}

fn rank3(shape: &[usize]) -> Result<[usize; 3], String> {
    match shape {
        [c, h, w] => Ok([*c, *h, *w]),
        _ => Err(format!("expects a [channels, height, width] input, got {shape:?}")),
    }
}
