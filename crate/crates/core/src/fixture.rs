//! Seeded synthetic slides with planted lesions, and a hand-built detector
//! that recognises them.
//!
//! Tissue is pink with sparse purple nuclei; lesions are star-shaped blobs
//! where nuclei are dense. Averaged over a neighbourhood, lesion tissue is
//! darker in red and green than healthy tissue, which is what the detector
//! keys on.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::{Conv2d, Dense, Layer, ModelSpec};
use crate::error::{Error, Result};
use crate::mask::PixelMask;
use crate::slide::{point_in_polygon, Polygon, SlideImage};

pub const BACKGROUND: [u8; 3] = [255, 255, 255];
pub const TISSUE: [u8; 3] = [232, 160, 210];
pub const NUCLEUS: [u8; 3] = [90, 50, 160];

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureSpec {
    /// Slide side lengths; both must be positive multiples of 256.
    pub width: usize,
    pub height: usize,
    pub lesion_count: usize,
    /// Outer radius range of the lesion blobs, in pixels.
    pub lesion_radius: (f64, f64),
    pub tissue_blobs: usize,
    /// Chance that a tissue pixel is a nucleus, outside and inside lesions.
    pub nucleus_density: (f64, f64),
    pub microns_per_pixel: f64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            width: 768,
            height: 512,
            lesion_count: 8,
            lesion_radius: (14.0, 34.0),
            tissue_blobs: 5,
            nucleus_density: (0.03, 0.25),
            microns_per_pixel: 0.344,
        }
    }
}

impl FixtureSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::SpecInvalid(m));
        if self.width == 0 || self.height == 0 || !self.width.is_multiple_of(256) || !self.height.is_multiple_of(256) {
            return bad(format!(
                "slide dims must be positive multiples of 256, got {}x{}",
                self.width, self.height
            ));
        }
        let (rmin, rmax) = self.lesion_radius;
        if !(rmin > 1.0 && rmax >= rmin) || 2.0 * rmax >= self.width.min(self.height) as f64 {
            return bad(format!("lesion radius range {rmin}..{rmax} is invalid for this slide"));
        }
        let (lo, hi) = self.nucleus_density;
        if !((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi)) {
            return bad(format!("nucleus densities must be in [0, 1], got {lo}, {hi}"));
        }
        if self.tissue_blobs == 0 && self.lesion_count > 0 {
            return bad("lesions need at least one tissue blob".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub slide: SlideImage,
    pub polygons: Vec<Polygon>,
    /// Pixels whose centre lies inside a lesion polygon.
    pub lesion_mask: PixelMask,
    /// Pixels painted as tissue.
    pub tissue_mask: PixelMask,
}

struct Ellipse {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
}

impl Ellipse {
    fn contains(&self, x: f64, y: f64) -> bool {
        let (dx, dy) = ((x - self.cx) / self.rx, (y - self.cy) / self.ry);
        dx * dx + dy * dy <= 1.0
    }
}

fn jitter(rng: &mut ChaCha8Rng, rgb: [u8; 3]) -> [u8; 3] {
    rgb.map(|c| (c as i32 + rng.gen_range(-6..=6)).clamp(0, 255) as u8)
}

pub fn generate_fixture(seed: u64, spec: &FixtureSpec) -> Result<Fixture> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (spec.width as f64, spec.height as f64);

    let blobs: Vec<Ellipse> = (0..spec.tissue_blobs)
        .map(|_| Ellipse {
            cx: rng.gen_range(0.2..0.8) * w,
            cy: rng.gen_range(0.2..0.8) * h,
            rx: rng.gen_range(0.3..0.55) * w,
            ry: rng.gen_range(0.3..0.55) * h,
        })
        .collect();
    let tissue_mask = PixelMask::from_fn(spec.width, spec.height, |x, y| {
        blobs.iter().any(|e| e.contains(x as f64 + 0.5, y as f64 + 0.5))
    });

    let mut polygons: Vec<Polygon> = Vec::new();
    let mut placed: Vec<(f64, f64, f64)> = Vec::new();
    let mut attempts = 0;
    while polygons.len() < spec.lesion_count {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::SpecInvalid(format!(
                "could not place {} non-overlapping lesions inside tissue",
                spec.lesion_count
            )));
        }
        let r = rng.gen_range(spec.lesion_radius.0..=spec.lesion_radius.1);
        let cx = rng.gen_range(r..w - r);
        let cy = rng.gen_range(r..h - r);
        if placed
            .iter()
            .any(|&(px, py, pr)| (px - cx).hypot(py - cy) < pr + r + 2.0)
        {
            continue;
        }
        let vertices = rng.gen_range(9..=14);
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        let polygon: Polygon = (0..vertices)
            .map(|i| {
                let a = phase + std::f64::consts::TAU * i as f64 / vertices as f64;
                let radius = r * rng.gen_range(0.7..=1.0);
                [cx + radius * a.cos(), cy + radius * a.sin()]
            })
            .collect();
        let inside_tissue = polygon.iter().all(|&[x, y]| {
            let (xi, yi) = ((x as usize).min(spec.width - 1), (y as usize).min(spec.height - 1));
            tissue_mask.get(xi, yi)
        }) && tissue_mask.get(cx as usize, cy as usize);
        if !inside_tissue {
            continue;
        }
        placed.push((cx, cy, r));
        polygons.push(polygon);
    }

    let mut lesion_mask = PixelMask::empty(spec.width, spec.height);
    for polygon in &polygons {
        let (x0, x1) = bounds(polygon.iter().map(|v| v[0]), spec.width);
        let (y0, y1) = bounds(polygon.iter().map(|v| v[1]), spec.height);
        for y in y0..y1 {
            for x in x0..x1 {
                if point_in_polygon(polygon, x as f64 + 0.5, y as f64 + 0.5) {
                    lesion_mask.set(x, y, true);
                }
            }
        }
    }

    let mut slide =
        SlideImage::filled(spec.width, spec.height, BACKGROUND).with_microns_per_pixel(spec.microns_per_pixel);
    for y in 0..spec.height {
        for x in 0..spec.width {
            if !tissue_mask.get(x, y) {
                continue;
            }
            let density = if lesion_mask.get(x, y) {
                spec.nucleus_density.1
            } else {
                spec.nucleus_density.0
            };
            let base = if rng.gen_bool(density) { NUCLEUS } else { TISSUE };
            let rgb = jitter(&mut rng, base);
            slide.set_rgb(x, y, rgb);
        }
    }

    Ok(Fixture {
        slide,
        polygons,
        lesion_mask,
        tissue_mask,
    })
}

fn bounds(values: impl Iterator<Item = f64>, limit: usize) -> (usize, usize) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    ((lo.floor().max(0.0)) as usize, (hi.ceil() as usize + 1).min(limit))
}

/// Logit slope and decision point of the detector's head, in units of the
/// pooled lesion response.
pub const DETECTOR_GAIN: f64 = 20.0;
pub const DETECTOR_THRESHOLD: f64 = 0.03;

/// A fixed network that flags lesion texture on `side`×`side` tiles.
///
/// 1. `f = 4 - 2R - 2G` per pixel (0 on white, about 0.93 on healthy tissue,
///    about 2.9 on a nucleus);
/// 2. 9×9 box mean of `f` minus 1.2, rectified: positive where nuclei are
///    dense;
/// 3. global average pool and a two-logit head, class 1 = lesion.
pub fn lesion_detector(side: usize) -> Result<ModelSpec> {
    let mut colour = Conv2d::zeros(3, 1, 1, 1, 0);
    colour.weights = vec![-2.0, -2.0, 0.0];
    colour.bias = vec![4.0];
    let mut density = Conv2d::zeros(1, 1, 9, 1, 4);
    density.weights = vec![1.0 / 81.0; 81];
    density.bias = vec![-1.2];
    let a = DETECTOR_GAIN;
    let head = Dense::new(1, 2, vec![-a, a], vec![a * DETECTOR_THRESHOLD, -a * DETECTOR_THRESHOLD]);
    ModelSpec::new(
        [3, side, side],
        vec![
            Layer::Conv2d(colour),
            Layer::Conv2d(density),
            Layer::Relu,
            Layer::GlobalAvgPool,
            Layer::Dense(head),
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::slide::{detect_tissue, rasterize_annotation, DEFAULT_TISSUE_THRESHOLD};

    fn small() -> FixtureSpec {
        FixtureSpec {
            width: 256,
            height: 256,
            lesion_count: 3,
            lesion_radius: (10.0, 20.0),
            tissue_blobs: 2,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate_fixture(5, &small()).unwrap();
        assert_eq!(a, generate_fixture(5, &small()).unwrap());
        assert_ne!(a.slide, generate_fixture(6, &small()).unwrap().slide);
    }

    #[test]
    fn lesion_mask_matches_rasterized_polygons() {
        let f = generate_fixture(11, &small()).unwrap();
        assert_eq!(f.polygons.len(), 3);
        let raster = rasterize_annotation(&f.polygons, f.slide.dims()).unwrap();
        assert_eq!(raster.mask, f.lesion_mask);
    }

    #[test]
    fn tissue_is_detected_exactly() {
        let f = generate_fixture(12, &small()).unwrap();
        assert_eq!(detect_tissue(&f.slide, DEFAULT_TISSUE_THRESHOLD), f.tissue_mask);
    }

    #[test]
    fn spec_validation() {
        let mut s = small();
        s.width = 300;
        assert!(matches!(generate_fixture(0, &s), Err(Error::SpecInvalid(_))));
        let mut s = small();
        s.lesion_count = 0;
        assert!(generate_fixture(0, &s).unwrap().polygons.is_empty());
    }

    #[test]
    fn detector_separates_lesion_from_healthy_tiles() {
        let f = generate_fixture(13, &FixtureSpec::default()).unwrap();
        let model = lesion_detector(64).unwrap();
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for y in (0..f.slide.height() - 64).step_by(32) {
            for x in (0..f.slide.width() - 64).step_by(32) {
                let lesion = f.lesion_mask.crop(x, y, 64, 64).unwrap().count();
                let tissue = f.tissue_mask.crop(x, y, 64, 64).unwrap().count();
                let logits = model
                    .forward(&f.slide.extract_tile((x, y), 64).unwrap())
                    .unwrap()
                    .logits()
                    .to_vec();
                let lesion_vote = logits[1] > logits[0];
                if lesion > 1200 {
                    pos.push(lesion_vote);
                } else if lesion == 0 && tissue > 1000 {
                    neg.push(lesion_vote);
                }
            }
        }
        let tpr = pos.iter().filter(|&&v| v).count() as f64 / pos.len() as f64;
        let fpr = neg.iter().filter(|&&v| v).count() as f64 / neg.len() as f64;
        assert!(pos.len() > 5 && neg.len() > 20, "{} {}", pos.len(), neg.len());
        assert!(tpr > 0.9 && fpr < 0.05, "tpr {tpr} fpr {fpr}");
    }
}
