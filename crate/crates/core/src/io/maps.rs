//! Saliency map files: the raw SALM grid and the diverging-colour PNG.
//!
//! SALM layout: `"SALM" | u32 width | u32 height | u32 reserved (0) | f32 values`,
//! row-major, little-endian.

use std::path::Path;

use crate::error::{Error, Result};
use crate::saliency::{MethodId, SaliencyMap};

const MAGIC: &[u8; 4] = b"SALM";

/// A decoded SALM file. The format stores values only, so the method and
/// class are supplied when converting back to a [`SaliencyMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct SalmGrid {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f32>,
}

impl SalmGrid {
    pub fn into_map(self, method: MethodId, class_index: usize) -> Result<SaliencyMap> {
        let values = self.values.into_iter().map(f64::from).collect();
        SaliencyMap::new(self.width, self.height, values, method, class_index)
    }
}

pub fn encode_salm(map: &SaliencyMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 4 * map.values().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    for &v in map.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_salm(bytes: &[u8]) -> Result<SalmGrid> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(Error::FormatError("missing SALM magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (width, height) = (word(4), word(8));
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::FormatError("SALM dimensions overflow".into()))?;
    if bytes.len() - 16 != expected {
        return Err(Error::FormatError(format!(
            "SALM {width}x{height} needs {expected} value bytes, found {}",
            bytes.len() - 16
        )));
    }
    let values = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(SalmGrid { width, height, values })
}

pub fn write_salm(map: &SaliencyMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_salm(map)).map_err(|e| Error::io(path, e))
}

pub fn read_salm(path: impl AsRef<Path>) -> Result<SalmGrid> {
    let path = path.as_ref();
    decode_salm(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}

/// White at zero, towards red for positive and blue for negative values,
/// scaled symmetrically by the largest magnitude.
pub fn heatmap_rgb(map: &SaliencyMap) -> Vec<u8> {
    let (lo, hi) = map.min_max();
    let scale = lo.abs().max(hi.abs());
    let mut out = Vec::with_capacity(map.values().len() * 3);
    for &v in map.values() {
        let t = if scale > 0.0 { (v / scale).clamp(-1.0, 1.0) } else { 0.0 };
        let fade = (255.0 * (1.0 - t.abs())).round() as u8;
        let px = if t >= 0.0 { [255, fade, fade] } else { [fade, fade, 255] };
        out.extend_from_slice(&px);
    }
    out
}

pub fn render_heatmap(map: &SaliencyMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    image::save_buffer(
        path,
        &heatmap_rgb(map),
        map.width() as u32,
        map.height() as u32,
        image::ExtendedColorType::Rgb8,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(values: Vec<f64>) -> SaliencyMap {
        SaliencyMap::new(2, 2, values, MethodId::HiResCam, 1).unwrap()
    }

    #[test]
    fn salm_round_trip() {
        let m = map(vec![0.5, -1.25, 3.0, 0.0]);
        let bytes = encode_salm(&m);
        assert_eq!(bytes.len(), 32);
        assert_eq!(&bytes[12..16], &[0, 0, 0, 0]);
        let back = decode_salm(&bytes).unwrap().into_map(MethodId::HiResCam, 1).unwrap();
        assert_eq!(back, m);
        assert!(decode_salm(&bytes[..31]).is_err());
    }

    #[test]
    fn heatmap_colours() {
        assert!(heatmap_rgb(&map(vec![0.0; 4])).iter().all(|&b| b == 255));
        let single = heatmap_rgb(&map(vec![0.0, 2.0, 0.0, 0.0]));
        assert_eq!(&single[3..6], &[255, 0, 0]);
        assert_eq!(single.iter().filter(|&&b| b != 255).count(), 2);
        let v = vec![0.3, -1.0, 0.7, 0.1];
        let pos = heatmap_rgb(&map(v.clone()));
        let neg = heatmap_rgb(&map(v.iter().map(|x| -x).collect()));
        for (p, n) in pos.chunks(3).zip(neg.chunks(3)) {
            assert_eq!([p[0], p[1], p[2]], [n[2], n[1], n[0]]);
        }
    }
}
