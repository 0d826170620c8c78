//! The five explanation methods. Each maps (model, tile, class) to a
//! signed per-pixel [`SaliencyMap`] at input resolution.
//!
//! | method       | model passes per tile                  |
//! |--------------|----------------------------------------|
//! | CAM          | 1 forward                              |
//! | GradCAM++    | 1 forward + 1 backward                 |
//! | HiResCAM     | 1 forward + 1 backward                 |
//! | LRP          | 1 forward + 1 relevance sweep          |
//! | occlusion    | 1 forward + one per window position    |

mod cam;
mod lrp;
mod map;
mod occlusion;

pub use cam::{cam_map, cam_raw, gradcampp_map, gradcampp_raw, hirescam_map, hirescam_raw, CamOptions};
pub use lrp::{lrp_composite_map, lrp_relevance, LrpParams};
pub use map::{upsample_map, Interpolation, MethodId, SaliencyMap};
pub use occlusion::{occlusion_map, occlusion_window_count, window_starts, OcclusionConfig};

use crate::engine::{ModelSpec, PassCounter, Tensor};
use crate::error::{Error, Result};

/// Per-method settings used by [`explain`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MethodConfig {
    pub occlusion: OcclusionConfig,
    pub lrp: LrpParams,
    pub cam: CamOptions,
}

/// Runs `method` on one tile, recording every model evaluation in `passes`.
pub fn explain(
    method: MethodId,
    model: &ModelSpec,
    tile: &Tensor,
    class_index: usize,
    config: &MethodConfig,
    passes: &PassCounter,
) -> Result<SaliencyMap> {
    if method == MethodId::Occlusion {
        return occlusion_map(model, tile, &config.occlusion, class_index, passes);
    }
    if method == MethodId::Cam && !model.cam_eligible() {
        return Err(Error::NotCamEligible);
    }
    passes.record_forward();
    let trace = model.forward(tile)?;
    match method {
        MethodId::Cam => cam_map(model, &trace, class_index, config.cam.interpolation),
        MethodId::GradCamPp => gradcampp_map(model, &trace, class_index, &config.cam, passes),
        MethodId::HiResCam => hirescam_map(model, &trace, class_index, &config.cam, passes),
        MethodId::CompositeLrp => lrp_composite_map(model, &trace, class_index, &config.lrp, passes),
        MethodId::Occlusion => unreachable!("handled above"),
    }
}

#[cfg(test)]
mod tests;
