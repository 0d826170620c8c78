//! Slide plumbing: tissue detection, overlapping tiling, polygon annotations
//! and stitching tile maps back to slide resolution.

mod annotation;
mod tiling;

pub use annotation::{label_tile, point_in_polygon, rasterize_annotation, AnnotationMask, Polygon};
pub use tiling::{stitch_maps, tile_slide, TileGeometry, TileGrid, DEFAULT_TISSUE_FRACTION};

use crate::engine::Tensor;
use crate::error::{Error, Result};
use crate::mask::PixelMask;

pub const DEFAULT_TISSUE_THRESHOLD: f64 = 0.08;

/// 8-bit RGB raster, row-major and interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct SlideImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    microns_per_pixel: f64,
}

impl SlideImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>, microns_per_pixel: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::ShapeInvalid(format!(
                "slide must be non-empty, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height * 3 {
            return Err(Error::LengthMismatch {
                left: width * height * 3,
                right: pixels.len(),
            });
        }
        Ok(SlideImage {
            width,
            height,
            pixels,
            microns_per_pixel,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let pixels = rgb.iter().copied().cycle().take(width * height * 3).collect();
        SlideImage::new(width, height, pixels, 0.0).expect("consistent buffer")
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

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn microns_per_pixel(&self) -> f64 {
        self.microns_per_pixel
    }

    pub fn with_microns_per_pixel(mut self, mpp: f64) -> Self {
        self.microns_per_pixel = mpp;
        self
    }

    pub fn rgb(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_rgb(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    /// The `size`×`size` tile at `origin` as a `[3, size, size]` tensor in [0, 1].
    pub fn extract_tile(&self, origin: (usize, usize), size: usize) -> Result<Tensor> {
        let (x0, y0) = origin;
        if size == 0 || x0 + size > self.width || y0 + size > self.height {
            return Err(Error::OutOfBounds(format!(
                "tile {size} at ({x0},{y0}) outside {}x{} slide",
                self.width, self.height
            )));
        }
        let plane = size * size;
        let mut data = vec![0.0; 3 * plane];
        for y in 0..size {
            let row = &self.pixels[((y0 + y) * self.width + x0) * 3..][..size * 3];
            for (x, px) in row.chunks_exact(3).enumerate() {
                for c in 0..3 {
                    data[c * plane + y * size + x] = px[c] as f64 / 255.0;
                }
            }
        }
        Tensor::new(vec![3, size, size], data)
    }

    /// Mean RGB of the pixels flagged in `mask`, scaled to [0, 1].
    pub fn mean_color(&self, mask: &PixelMask) -> Option<[f64; 3]> {
        let mut sum = [0.0; 3];
        let mut n = 0usize;
        for (i, &inside) in mask.bits().iter().enumerate() {
            if inside {
                for c in 0..3 {
                    sum[c] += self.pixels[i * 3 + c] as f64;
                }
                n += 1;
            }
        }
        (n > 0).then(|| sum.map(|s| s / (n as f64 * 255.0)))
    }
}

/// A pixel is tissue when its chroma `(max - min) / 255` reaches `threshold`
/// or its mean intensity is below 200/255.
pub fn detect_tissue(slide: &SlideImage, threshold: f64) -> PixelMask {
    let bits = slide
        .pixels
        .chunks_exact(3)
        .map(|px| {
            let max = px.iter().copied().max().unwrap_or(0) as f64;
            let min = px.iter().copied().min().unwrap_or(0) as f64;
            let mean = px.iter().map(|&v| v as f64).sum::<f64>() / 3.0;
            (max - min) / 255.0 >= threshold || mean < 200.0
        })
        .collect();
    PixelMask::new(slide.width, slide.height, bits).expect("one flag per pixel")
}
