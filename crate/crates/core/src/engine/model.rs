use super::layer::{Dense, Layer};
use crate::error::{Error, Result};

/// Ordered layer stack with a fixed `[channels, height, width]` input.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    layers: Vec<Layer>,
    input_shape: [usize; 3],
    class_count: usize,
    shapes: Vec<Vec<usize>>,
}

/// Result of running shape arithmetic over every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    /// Output shape of each layer, in order.
    pub shapes: Vec<Vec<usize>>,
    /// The stack ends in a global pool followed by exactly one dense layer.
    pub cam_eligible: bool,
}

/// Shape arithmetic over a layer list without building a model.
pub fn shape_propagate(input_shape: [usize; 3], layers: &[Layer]) -> Result<Propagation> {
    if input_shape.contains(&0) {
        return Err(Error::ShapeInvalid(format!(
            "input shape must be positive, got {input_shape:?}"
        )));
    }
    let mut shapes = Vec::with_capacity(layers.len());
    let mut current = input_shape.to_vec();
    for (index, layer) in layers.iter().enumerate() {
        current = layer
            .output_shape(&current)
            .map_err(|reason| Error::InconsistentShapes {
                layer: index,
                reason: format!("{}: {reason}", layer.kind()),
            })?;
        shapes.push(current.clone());
    }
    let n = layers.len();
    let cam_eligible = n >= 2 && layers[n - 2].is_global_pool() && matches!(layers[n - 1], Layer::Dense(_));
    Ok(Propagation { shapes, cam_eligible })
}

impl ModelSpec {
    /// Validates the stack; the last layer must produce a vector of class
    /// scores.
    pub fn new(input_shape: [usize; 3], layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InconsistentShapes {
                layer: 0,
                reason: "model has no layers".into(),
            });
        }
        let propagation = shape_propagate(input_shape, &layers)?;
        let last = propagation.shapes.last().expect("non-empty");
        if last.len() != 1 {
            return Err(Error::InconsistentShapes {
                layer: layers.len() - 1,
                reason: format!("final output must be a score vector, got {last:?}"),
            });
        }
        Ok(ModelSpec {
            class_count: last[0],
            input_shape,
            shapes: propagation.shapes,
            layers,
        })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn input_shape(&self) -> [usize; 3] {
        self.input_shape
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Output shape of each layer.
    pub fn shapes(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    pub fn shape_propagate(&self) -> Propagation {
        Propagation {
            shapes: self.shapes.clone(),
            cam_eligible: self.cam_eligible(),
        }
    }

    pub fn cam_eligible(&self) -> bool {
        let n = self.layers.len();
        n >= 2 && self.layers[n - 2].is_global_pool() && matches!(self.layers[n - 1], Layer::Dense(_))
    }

    /// The final dense layer when the model is CAM-eligible.
    pub fn cam_head(&self) -> Option<&Dense> {
        if !self.cam_eligible() {
            return None;
        }
        match self.layers.last() {
            Some(Layer::Dense(dense)) => Some(dense),
            _ => None,
        }
    }

    /// Index of the last layer whose output is still a spatial map. For a
    /// CAM-eligible stack this is the activation feeding the global pool.
    pub fn default_target_layer(&self) -> Option<usize> {
        self.shapes.iter().rposition(|s| s.len() == 3)
    }

    pub fn check_class(&self, class_index: usize) -> Result<()> {
        if class_index >= self.class_count {
            return Err(Error::ClassOutOfRange {
                index: class_index,
                class_count: self.class_count,
            });
        }
        Ok(())
    }
}
