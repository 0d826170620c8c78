use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The explanation methods under comparison, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodId {
    Cam,
    GradCamPp,
    HiResCam,
    CompositeLrp,
    Occlusion,
}

impl MethodId {
    pub const ALL: [MethodId; 5] = [
        MethodId::Cam,
        MethodId::GradCamPp,
        MethodId::HiResCam,
        MethodId::CompositeLrp,
        MethodId::Occlusion,
    ];

    /// Short lowercase name used on the command line and in file names.
    pub fn name(self) -> &'static str {
        match self {
            MethodId::Cam => "cam",
            MethodId::GradCamPp => "gradcampp",
            MethodId::HiResCam => "hirescam",
            MethodId::CompositeLrp => "lrp",
            MethodId::Occlusion => "occlusion",
        }
    }

    /// Display label as used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            MethodId::Cam => "CAM",
            MethodId::GradCamPp => "GradCAM++",
            MethodId::HiResCam => "HiResCAM",
            MethodId::CompositeLrp => "Composite-LRP",
            MethodId::Occlusion => "Occlusion",
        }
    }

    /// Methods that explain from one forward (plus at most one backward).
    pub fn is_single_pass(self) -> bool {
        self != MethodId::Occlusion
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s) || m.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let valid: Vec<_> = MethodId::ALL.iter().map(|m| m.name()).collect();
                Error::ConfigInvalid(format!("unknown method `{s}`; valid methods: {}", valid.join(", ")))
            })
    }
}

/// Signed per-pixel importance grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    method: MethodId,
    class_index: usize,
}

impl SaliencyMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, method: MethodId, class_index: usize) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::ShapeInvalid(format!(
                "{width}x{height} map cannot hold {} values",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::ParamInvalid("saliency values must be finite".into()));
        }
        Ok(SaliencyMap {
            width,
            height,
            values,
            method,
            class_index,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn method(&self) -> MethodId {
        self.method
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    pub fn with_method(mut self, method: MethodId) -> Self {
        self.method = method;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Interpolation {
    /// Corner-aligned bilinear.
    #[default]
    Bilinear,
    /// Source pixel `floor(x * in / out)`; replicates blocks exactly when the
    /// target is an integer multiple of the source.
    Nearest,
}

/// Resizes a feature-resolution map to `target_w x target_h`.
pub fn upsample_map(
    raw: &SaliencyMap,
    target_w: usize,
    target_h: usize,
    interpolation: Interpolation,
) -> Result<SaliencyMap> {
    if target_w < raw.width || target_h < raw.height {
        return Err(Error::ShapeInvalid(format!(
            "cannot upsample {}x{} to smaller {target_w}x{target_h}",
            raw.width, raw.height
        )));
    }
    if target_w == raw.width && target_h == raw.height {
        return Ok(raw.clone());
    }
    let mut out = Vec::with_capacity(target_w * target_h);
    match interpolation {
        Interpolation::Bilinear => {
            let xs: Vec<(usize, usize, f64)> = axis_weights(raw.width, target_w);
            let ys: Vec<(usize, usize, f64)> = axis_weights(raw.height, target_h);
            for &(y0, y1, ty) in &ys {
                for &(x0, x1, tx) in &xs {
                    let top = raw.get(x0, y0) * (1.0 - tx) + raw.get(x1, y0) * tx;
                    let bottom = raw.get(x0, y1) * (1.0 - tx) + raw.get(x1, y1) * tx;
                    out.push(top * (1.0 - ty) + bottom * ty);
                }
            }
        }
        Interpolation::Nearest => {
            for y in 0..target_h {
                let sy = y * raw.height / target_h;
                for x in 0..target_w {
                    out.push(raw.get(x * raw.width / target_w, sy));
                }
            }
        }
    }
    SaliencyMap::new(target_w, target_h, out, raw.method, raw.class_index)
}

/// For each output coordinate: the two source samples and the fractional
/// weight of the second, with corner-aligned sampling.
fn axis_weights(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    (0..dst)
        .map(|i| {
            if src == 1 || dst == 1 {
                return (0, 0, 0.0);
            }
            let pos = i as f64 * (src - 1) as f64 / (dst - 1) as f64;
            let lo = (pos.floor() as usize).min(src - 1);
            let hi = (lo + 1).min(src - 1);
            (lo, hi, pos - lo as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(w: usize, h: usize, v: Vec<f64>) -> SaliencyMap {
        SaliencyMap::new(w, h, v, MethodId::Cam, 0).unwrap()
    }

    #[test]
    fn constant_and_single_pixel_maps_stay_constant() {
        let c = upsample_map(&map(3, 2, vec![1.5; 6]), 7, 9, Interpolation::Bilinear).unwrap();
        assert!(c.values().iter().all(|&v| v == 1.5));
        let one = upsample_map(&map(1, 1, vec![-2.0]), 4, 4, Interpolation::Bilinear).unwrap();
        assert_eq!(one.values(), &[-2.0; 16]);
    }

    #[test]
    fn two_by_two_corner_aligned_grid() {
        // value(x, y) = x + 2y at the corners; bilinear reproduces the plane.
        let up = upsample_map(&map(2, 2, vec![0.0, 1.0, 2.0, 3.0]), 4, 4, Interpolation::Bilinear).unwrap();
        for y in 0..4 {
            for x in 0..4 {
                let expected = x as f64 / 3.0 + 2.0 * y as f64 / 3.0;
                assert!((up.get(x, y) - expected).abs() < 1e-12);
            }
        }
        assert_eq!(up.get(0, 0), 0.0);
        assert_eq!(up.get(3, 3), 3.0);
    }

    #[test]
    fn nearest_replicates_blocks() {
        let up = upsample_map(&map(2, 1, vec![1.0, -1.0]), 4, 2, Interpolation::Nearest).unwrap();
        assert_eq!(up.values(), &[1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
    }

    #[test]
    fn rejects_downsampling() {
        assert!(matches!(
            upsample_map(&map(4, 4, vec![0.0; 16]), 2, 4, Interpolation::Bilinear),
            Err(Error::ShapeInvalid(_))
        ));
    }

    #[test]
    fn method_names_parse() {
        for m in MethodId::ALL {
            assert_eq!(m.name().parse::<MethodId>().unwrap(), m);
        }
        let err = "gradcam".parse::<MethodId>().unwrap_err().to_string();
        assert!(err.contains("hirescam"));
    }
}
