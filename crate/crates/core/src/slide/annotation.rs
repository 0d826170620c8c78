use super::tiling::TileGeometry;
use crate::error::{Error, Result};
use crate::mask::PixelMask;

/// Vertices in slide pixel coordinates; the closing edge is implicit.
pub type Polygon = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationMask {
    pub mask: PixelMask,
    pub polygons: Vec<Polygon>,
}

impl AnnotationMask {
    pub fn dims(&self) -> (usize, usize) {
        self.mask.dims()
    }
}

/// Even-odd crossing test, the reference used to validate the rasterizer.
pub fn point_in_polygon(polygon: &[[f64; 2]], x: f64, y: f64) -> bool {
    let n = polygon.len();
    let mut inside = false;
    for i in 0..n {
        let [x1, y1] = polygon[i];
        let [x2, y2] = polygon[(i + 1) % n];
        if (y1 > y) != (y2 > y) && x < x1 + (y - y1) * (x2 - x1) / (y2 - y1) {
            inside = !inside;
        }
    }
    inside
}

/// Scanline rasterization: a pixel is inside when its centre lies inside any
/// polygon under the even-odd rule.
pub fn rasterize_annotation(polygons: &[Polygon], dims: (usize, usize)) -> Result<AnnotationMask> {
    let (width, height) = dims;
    for (index, polygon) in polygons.iter().enumerate() {
        if polygon.len() < 3 {
            return Err(Error::DegeneratePolygon(index));
        }
        for &[x, y] in polygon {
            let ok = x.is_finite()
                && y.is_finite()
                && (0.0..=width as f64).contains(&x)
                && (0.0..=height as f64).contains(&y);
            if !ok {
                return Err(Error::VertexOutOfBounds { polygon: index, x, y });
            }
        }
    }

    let mut mask = PixelMask::empty(width, height);
    let mut crossings = Vec::new();
    for polygon in polygons {
        let n = polygon.len();
        for row in 0..height {
            let yc = row as f64 + 0.5;
            crossings.clear();
            for i in 0..n {
                let [x1, y1] = polygon[i];
                let [x2, y2] = polygon[(i + 1) % n];
                if (y1 > yc) != (y2 > yc) {
                    crossings.push(x1 + (yc - y1) * (x2 - x1) / (y2 - y1));
                }
            }
            crossings.sort_by(f64::total_cmp);
            // Centre xc is inside iff crossings[2k] <= xc < crossings[2k+1].
            for span in crossings.chunks_exact(2) {
                let start = (span[0] - 0.5).ceil().max(0.0) as usize;
                let end = ((span[1] - 0.5).ceil().max(0.0) as usize).min(width);
                for x in start..end {
                    mask.set(x, row, true);
                }
            }
        }
    }
    Ok(AnnotationMask {
        mask,
        polygons: polygons.to_vec(),
    })
}

/// True when the tile's central region touches the annotation.
pub fn label_tile(origin: (usize, usize), mask: &PixelMask, geometry: &TileGeometry) -> Result<bool> {
    geometry.validate()?;
    let (x0, y0) = origin;
    let t = geometry.tile_size;
    if x0 + t > mask.width() || y0 + t > mask.height() {
        return Err(Error::OutOfBounds(format!(
            "tile {t} at ({x0},{y0}) outside {}x{} mask",
            mask.width(),
            mask.height()
        )));
    }
    let off = geometry.center_offset();
    let c = geometry.center;
    Ok((y0 + off..y0 + off + c).any(|y| (x0 + off..x0 + off + c).any(|x| mask.get(x, y))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(polygons: &[Polygon], w: usize, h: usize) -> PixelMask {
        PixelMask::from_fn(w, h, |x, y| {
            polygons
                .iter()
                .any(|p| point_in_polygon(p, x as f64 + 0.5, y as f64 + 0.5))
        })
    }

    #[test]
    fn rectangle_fill() {
        let rect = vec![[10.0, 10.0], [20.0, 10.0], [20.0, 20.0], [10.0, 20.0]];
        let a = rasterize_annotation(&[rect], (32, 32)).unwrap();
        let expected = PixelMask::from_fn(32, 32, |x, y| (10..20).contains(&x) && (10..20).contains(&y));
        assert_eq!(a.mask, expected);
        assert_eq!(a.mask.count(), 100);
    }

    #[test]
    fn empty_list_and_errors() {
        assert!(!rasterize_annotation(&[], (8, 8)).unwrap().mask.any());
        assert!(matches!(
            rasterize_annotation(&[vec![[0.0, 0.0], [1.0, 1.0]]], (8, 8)),
            Err(Error::DegeneratePolygon(0))
        ));
        assert!(matches!(
            rasterize_annotation(&[vec![[0.0, 0.0], [9.0, 1.0], [1.0, 1.0]]], (8, 8)),
            Err(Error::VertexOutOfBounds { polygon: 0, .. })
        ));
    }

    #[test]
    fn concave_shapes_match_brute_force() {
        let l_shape = vec![
            [2.0, 2.0],
            [14.3, 2.0],
            [14.3, 6.7],
            [6.1, 6.7],
            [6.1, 15.2],
            [2.0, 15.2],
        ];
        let star: Polygon = (0..10)
            .map(|i| {
                let a = i as f64 * std::f64::consts::PI / 5.0;
                let r = if i % 2 == 0 { 7.3 } else { 2.9 };
                [12.0 + r * a.cos(), 11.0 + r * a.sin()]
            })
            .collect();
        let polys = vec![l_shape, star];
        let a = rasterize_annotation(&polys, (24, 20)).unwrap();
        assert_eq!(a.mask, brute(&polys, 24, 20));
    }

    #[test]
    fn central_region_labels() {
        let g = TileGeometry::default();
        let mut mask = PixelMask::empty(512, 512);
        assert!(!label_tile((0, 0), &mask, &g).unwrap());
        // Outer ring only.
        for y in 0..512 {
            for x in 0..512 {
                if !(128..384).contains(&x) || !(128..384).contains(&y) {
                    mask.set(x, y, true);
                }
            }
        }
        assert!(!label_tile((0, 0), &mask, &g).unwrap());
        mask.set(256, 256, true);
        assert!(label_tile((0, 0), &mask, &g).unwrap());
        assert!(label_tile((1, 0), &mask, &g).is_err());
    }
}
