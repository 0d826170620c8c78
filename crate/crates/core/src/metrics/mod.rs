//! Explanation quality metrics: ROAD faithfulness and Weighting-Game
//! localization against annotations or a reference map.

mod curve;
mod road;
mod weighting;

pub use curve::{MetricCurve, MetricId};
pub use road::{confidence, road_curve, road_impute, top_percent_mask, DEFAULT_NOISE_SIGMA, ROAD_PERCENTILES};
pub use weighting::{default_wg_percentiles, reference_agreement, reference_mask, weighting_game, DEFAULT_REFERENCE_Q};
