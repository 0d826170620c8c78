use super::map::{MethodId, SaliencyMap};
use crate::engine::{ModelSpec, PassCounter, Tensor};
use crate::error::{Error, Result};

/// Sliding-window occlusion settings, in tile pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionConfig {
    pub window: usize,
    pub stride: usize,
    /// Fill value per channel; a single value is broadcast to all channels.
    pub baseline: Vec<f64>,
}

impl Default for OcclusionConfig {
    /// Window 64, stride 32, zero fill: 225 windows on a 512-pixel tile.
    fn default() -> Self {
        OcclusionConfig {
            window: 64,
            stride: 32,
            baseline: vec![0.0],
        }
    }
}

impl OcclusionConfig {
    /// The default window/stride geometry rescaled to a tile of side
    /// `tile_side` (window = side/8, stride = side/16), which keeps the
    /// window count at 15 x 15 for any side divisible by 16.
    pub fn scaled_to(tile_side: usize) -> Self {
        OcclusionConfig {
            window: (tile_side / 8).max(1),
            stride: (tile_side / 16).max(1),
            baseline: vec![0.0],
        }
    }

    pub fn with_baseline(mut self, baseline: Vec<f64>) -> Self {
        self.baseline = baseline;
        self
    }

    pub fn validate(&self, channels: usize, height: usize, width: usize) -> Result<()> {
        let side = height.min(width);
        if self.stride == 0 || self.stride > self.window || self.window > side {
            return Err(Error::ConfigInvalid(format!(
                "occlusion requires 1 <= stride ({}) <= window ({}) <= tile side ({side})",
                self.stride, self.window
            )));
        }
        if self.baseline.len() != 1 && self.baseline.len() != channels {
            return Err(Error::ConfigInvalid(format!(
                "occlusion baseline has {} values for {channels} channels",
                self.baseline.len()
            )));
        }
        Ok(())
    }

    fn fill(&self, channel: usize) -> f64 {
        if self.baseline.len() == 1 {
            self.baseline[0]
        } else {
            self.baseline[channel]
        }
    }
}

/// Top-left offsets along one axis: multiples of `stride`, plus one final
/// window flush with the far edge when the side is not stride-aligned.
pub fn window_starts(side: usize, window: usize, stride: usize) -> Vec<usize> {
    let mut starts: Vec<usize> = (0..).map(|i| i * stride).take_while(|&s| s + window <= side).collect();
    if let Some(&last) = starts.last() {
        if last + window < side {
            starts.push(side - window);
        }
    }
    starts
}

/// Number of perturbed forwards occlusion makes on an `h x w` tile.
pub fn occlusion_window_count(height: usize, width: usize, cfg: &OcclusionConfig) -> usize {
    window_starts(height, cfg.window, cfg.stride).len() * window_starts(width, cfg.window, cfg.stride).len()
}

/// Occlusion saliency: each pixel gets the mean score drop over all windows
/// covering it. Positive values are evidence for `class_index`.
pub fn occlusion_map(
    model: &ModelSpec,
    tile: &Tensor,
    cfg: &OcclusionConfig,
    class_index: usize,
    passes: &PassCounter,
) -> Result<SaliencyMap> {
    if tile.shape() != model.input_shape() {
        return Err(Error::ShapeMismatch {
            expected: model.input_shape().to_vec(),
            actual: tile.shape().to_vec(),
        });
    }
    model.check_class(class_index)?;
    let (c, h, w) = tile.dims3().expect("model inputs are rank 3");
    cfg.validate(c, h, w)?;

    passes.record_forward();
    let base_score = model.forward(tile)?.logits()[class_index];

    let ys = window_starts(h, cfg.window, cfg.stride);
    let xs = window_starts(w, cfg.window, cfg.stride);
    let mut drop_sum = vec![0.0; h * w];
    let mut cover = vec![0u32; h * w];
    let mut perturbed = tile.clone();
    for &y0 in &ys {
        for &x0 in &xs {
            for ch in 0..c {
                let fill = cfg.fill(ch);
                for y in y0..y0 + cfg.window {
                    let row = &mut perturbed.data_mut()[(ch * h + y) * w + x0..][..cfg.window];
                    row.iter_mut().for_each(|v| *v = fill);
                }
            }
            passes.record_forward();
            let score = model.forward(&perturbed)?.logits()[class_index];
            let drop = base_score - score;
            for y in y0..y0 + cfg.window {
                for x in x0..x0 + cfg.window {
                    drop_sum[y * w + x] += drop;
                    cover[y * w + x] += 1;
                }
            }
            for ch in 0..c {
                for y in y0..y0 + cfg.window {
                    let at = (ch * h + y) * w + x0;
                    perturbed.data_mut()[at..at + cfg.window].copy_from_slice(&tile.data()[at..at + cfg.window]);
                }
            }
        }
    }
    let values = drop_sum
        .iter()
        .zip(&cover)
        .map(|(&s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
        .collect();
    SaliencyMap::new(w, h, values, MethodId::Occlusion, class_index)
}
