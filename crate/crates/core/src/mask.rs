use crate::error::{Error, Result};

/// A boolean per pixel, row-major. Used for removal sets, tissue masks and
/// rasterized annotations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

/// Pixels removed by a ROAD perturbation step.
pub type RemovalMask = PixelMask;

impl PixelMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::LengthMismatch {
                left: width * height,
                right: bits.len(),
            });
        }
        Ok(PixelMask { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        PixelMask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        PixelMask { width, height, bits }
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

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn any(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    /// Copy of the `w`×`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<PixelMask> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::OutOfBounds(format!(
                "crop {w}x{h} at ({x0},{y0}) exceeds {}x{} mask",
                self.width, self.height
            )));
        }
        Ok(PixelMask::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y)))
    }
}
