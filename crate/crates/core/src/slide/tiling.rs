use crate::error::{Error, Result};
use crate::mask::PixelMask;
use crate::saliency::SaliencyMap;

pub const DEFAULT_TISSUE_FRACTION: f64 = 0.05;

/// Tile side, tiling stride and the side of the central labelling region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TileGeometry {
    pub tile_size: usize,
    pub stride: usize,
    pub center: usize,
}

impl Default for TileGeometry {
    fn default() -> Self {
        TileGeometry {
            tile_size: 512,
            stride: 256,
            center: 256,
        }
    }
}

impl TileGeometry {
    /// Same proportions as the default (half overlap, central half labelled)
    /// at a different tile side.
    pub fn scaled(tile_size: usize) -> Self {
        TileGeometry {
            tile_size,
            stride: tile_size / 2,
            center: tile_size / 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tile_size == 0 || self.stride == 0 {
            return Err(Error::ConfigInvalid(format!(
                "tile size and stride must be positive, got {self:?}"
            )));
        }
        if self.center > self.tile_size || !(self.tile_size - self.center).is_multiple_of(2) {
            return Err(Error::ConfigInvalid(format!(
                "central region {} must fit symmetrically in tile {}",
                self.center, self.tile_size
            )));
        }
        Ok(())
    }

    pub fn center_offset(&self) -> usize {
        (self.tile_size - self.center) / 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TileGrid {
    pub slide_width: usize,
    pub slide_height: usize,
    pub tile_size: usize,
    pub stride: usize,
    /// Top-left corners in row-major order.
    pub origins: Vec<(usize, usize)>,
    pub tissue_flags: Vec<bool>,
}

impl TileGrid {
    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    pub fn tissue_origins(&self) -> Vec<(usize, usize)> {
        self.origins
            .iter()
            .zip(&self.tissue_flags)
            .filter_map(|(&o, &t)| t.then_some(o))
            .collect()
    }

    pub fn tissue_count(&self) -> usize {
        self.tissue_flags.iter().filter(|&&t| t).count()
    }
}

fn axis_origins(extent: usize, tile: usize, stride: usize) -> Vec<usize> {
    let mut origins: Vec<usize> = (0..).map(|i| i * stride).take_while(|&o| o + tile <= extent).collect();
    let last = *origins.last().expect("extent >= tile");
    if last + tile < extent {
        origins.push(extent - tile);
    }
    origins
}

/// Overlapping tiles over a `width`×`height` slide. Border tiles are clamped
/// flush to the edge. A tile carries tissue when at least `tissue_fraction`
/// of its pixels are flagged.
pub fn tile_slide(
    dims: (usize, usize),
    tissue: &PixelMask,
    tile_size: usize,
    stride: usize,
    tissue_fraction: f64,
) -> Result<TileGrid> {
    let (width, height) = dims;
    if tile_size == 0 || stride == 0 {
        return Err(Error::ConfigInvalid("tile size and stride must be positive".into()));
    }
    if width < tile_size || height < tile_size {
        return Err(Error::SlideTooSmall {
            width,
            height,
            tile_size,
        });
    }
    if tissue.dims() != dims {
        return Err(Error::DimMismatch(tissue.dims(), dims));
    }

    // Summed-area table with a zero border row and column.
    let sw = width + 1;
    let mut sat = vec![0u64; sw * (height + 1)];
    for y in 0..height {
        let mut row = 0u64;
        for x in 0..width {
            row += tissue.get(x, y) as u64;
            sat[(y + 1) * sw + x + 1] = sat[y * sw + x + 1] + row;
        }
    }
    let area_sum = |x0: usize, y0: usize| {
        let (x1, y1) = (x0 + tile_size, y0 + tile_size);
        sat[y1 * sw + x1] + sat[y0 * sw + x0] - sat[y0 * sw + x1] - sat[y1 * sw + x0]
    };

    let xs = axis_origins(width, tile_size, stride);
    let ys = axis_origins(height, tile_size, stride);
    let needed = tissue_fraction * (tile_size * tile_size) as f64;
    let mut origins = Vec::with_capacity(xs.len() * ys.len());
    let mut tissue_flags = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            origins.push((x, y));
            tissue_flags.push(area_sum(x, y) as f64 >= needed);
        }
    }
    Ok(TileGrid {
        slide_width: width,
        slide_height: height,
        tile_size,
        stride,
        origins,
        tissue_flags,
    })
}

/// Averages the tissue-tile maps into one slide-resolution map. Uncovered
/// pixels are 0. `tile_maps[i]` belongs to the i-th tissue tile.
pub fn stitch_maps(grid: &TileGrid, tile_maps: &[SaliencyMap]) -> Result<SaliencyMap> {
    let origins = grid.tissue_origins();
    if origins.len() != tile_maps.len() {
        return Err(Error::LengthMismatch {
            left: origins.len(),
            right: tile_maps.len(),
        });
    }
    let first = tile_maps
        .first()
        .ok_or_else(|| Error::ConfigInvalid("no tissue tiles to stitch".into()))?;
    let (w, h) = (grid.slide_width, grid.slide_height);
    let t = grid.tile_size;
    let mut sum = vec![0.0; w * h];
    let mut count = vec![0u32; w * h];
    for (&(x0, y0), map) in origins.iter().zip(tile_maps) {
        if map.dims() != (t, t) {
            return Err(Error::DimMismatch(map.dims(), (t, t)));
        }
        for y in 0..t {
            let base = (y0 + y) * w + x0;
            for (x, &v) in map.values()[y * t..][..t].iter().enumerate() {
                sum[base + x] += v;
                count[base + x] += 1;
            }
        }
    }
    let values = sum
        .iter()
        .zip(&count)
        .map(|(&s, &n)| if n == 0 { 0.0 } else { s / n as f64 })
        .collect();
    SaliencyMap::new(w, h, values, first.method(), first.class_index())
}
