use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::layer::{Conv2d, Dense, Layer};
use super::model::ModelSpec;
use crate::error::Result;

/// Layer stack of the desk-scale VGG stand-in: three
/// `Conv3x3 -> ReLU -> MaxPool2` blocks (3→8→16→32 channels), a final
/// `Conv3x3(32→32) -> ReLU`, a global max pool and a 32→2 dense head.
/// Weights are zero; see [`init_uniform`].
pub fn mini_vgg_layers() -> Vec<Layer> {
    let mut layers = Vec::new();
    for (cin, cout) in [(3, 8), (8, 16), (16, 32)] {
        layers.push(Layer::Conv2d(Conv2d::zeros(cin, cout, 3, 1, 1)));
        layers.push(Layer::Relu);
        layers.push(Layer::MaxPool2d {
            kernel_size: 2,
            stride: 2,
        });
    }
    layers.push(Layer::Conv2d(Conv2d::zeros(32, 32, 3, 1, 1)));
    layers.push(Layer::Relu);
    layers.push(Layer::GlobalMaxPool);
    layers.push(Layer::Dense(Dense::new(32, 2, vec![0.0; 64], vec![0.0; 2])));
    layers
}

/// Seeded mini-VGG on a square RGB input of side `side` (canonically 64).
pub fn mini_vgg(side: usize, seed: u64) -> Result<ModelSpec> {
    let mut layers = mini_vgg_layers();
    init_uniform(&mut layers, seed);
    ModelSpec::new([3, side, side], layers)
}

/// Fills every weight with a seeded draw from U[-0.5, 0.5] and zeroes the
/// biases.
pub fn init_uniform(layers: &mut [Layer], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for layer in layers {
        let (weights, bias) = match layer {
            Layer::Conv2d(c) => (&mut c.weights, &mut c.bias),
            Layer::Dense(d) => (&mut d.weights, &mut d.bias),
            _ => continue,
        };
        weights.iter_mut().for_each(|w| *w = rng.gen_range(-0.5..=0.5));
        bias.iter_mut().for_each(|b| *b = 0.0);
    }
}
