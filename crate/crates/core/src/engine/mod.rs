//! Minimal deterministic CNN engine: forward pass with activation caching
//! and exact reverse-mode gradients for the six supported layer kinds.
//!
//! Everything is `f64`. Max-pool ties resolve to the lowest row-major
//! index so gradients and relevance routing are reproducible.

mod backward;
mod counter;
mod forward;
pub(crate) mod kernels;
mod layer;
mod model;
mod presets;
mod tensor;

pub use backward::Gradients;
pub use counter::{PassCount, PassCounter};
pub use forward::ForwardTrace;
pub use layer::{Conv2d, Dense, Layer, LayerKind};
pub use model::{shape_propagate, ModelSpec, Propagation};
pub use presets::{init_uniform, mini_vgg, mini_vgg_layers};
pub use tensor::Tensor;
