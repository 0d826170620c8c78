//! Binary model format:
//!
//! ```text
//! "SMDL" | u32 header_len | JSON header | blob
//! blob  = for each parametrised layer: u64 n, n x f64 weights, u64 m, m x f64 bias
//! ```
//!
//! All integers and floats are little-endian.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{Conv2d, Dense, Layer, ModelSpec};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SMDL";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    input_shape: [usize; 3],
    class_count: usize,
    layers: Vec<LayerHeader>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind")]
enum LayerHeader {
    Conv2D {
        in_channels: usize,
        out_channels: usize,
        kernel_size: usize,
        stride: usize,
        padding: usize,
    },
    ReLU,
    MaxPool2D {
        kernel_size: usize,
        stride: usize,
    },
    GlobalMaxPool,
    GlobalAvgPool,
    Dense {
        in_features: usize,
        out_features: usize,
    },
}

impl LayerHeader {
    fn of(layer: &Layer) -> Self {
        match layer {
            Layer::Conv2d(c) => LayerHeader::Conv2D {
                in_channels: c.in_channels,
                out_channels: c.out_channels,
                kernel_size: c.kernel_size,
                stride: c.stride,
                padding: c.padding,
            },
            Layer::Relu => LayerHeader::ReLU,
            &Layer::MaxPool2d { kernel_size, stride } => LayerHeader::MaxPool2D { kernel_size, stride },
            Layer::GlobalMaxPool => LayerHeader::GlobalMaxPool,
            Layer::GlobalAvgPool => LayerHeader::GlobalAvgPool,
            Layer::Dense(d) => LayerHeader::Dense {
                in_features: d.in_features,
                out_features: d.out_features,
            },
        }
    }
}

pub fn encode_model(model: &ModelSpec) -> Vec<u8> {
    let header = Header {
        format_version: MODEL_FORMAT_VERSION,
        input_shape: model.input_shape(),
        class_count: model.class_count(),
        layers: model.layers().iter().map(LayerHeader::of).collect(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(8 + json.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    let mut push = |values: &[f64]| {
        out.extend_from_slice(&(values.len() as u64).to_le_bytes());
        for v in values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    for layer in model.layers() {
        match layer {
            Layer::Conv2d(c) => {
                push(&c.weights);
                push(&c.bias);
            }
            Layer::Dense(d) => {
                push(&d.weights);
                push(&d.bias);
            }
            _ => {}
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Option<&[u8]> {
        let end = self.pos.checked_add(n)?;
        let slice = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(slice)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    /// One counted array, checked against the header-derived `expected`.
    fn array(&mut self, layer: usize, kind: &str, what: &str, expected: usize) -> Result<Vec<f64>> {
        let mismatch = |detail: String| Error::CountMismatch {
            layer,
            kind: kind.to_string(),
            detail,
        };
        let count = self
            .u64()
            .ok_or_else(|| mismatch(format!("blob ends before the {what} count")))?;
        if count != expected as u64 {
            return Err(mismatch(format!(
                "{what}: header implies {expected} values, blob declares {count}"
            )));
        }
        let raw = expected
            .checked_mul(8)
            .and_then(|n| self.take(n))
            .ok_or_else(|| mismatch(format!("{what}: blob truncated, {expected} values expected")))?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<ModelSpec> {
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(Error::FormatError("missing SMDL magic".into()));
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let json = bytes
        .get(8..8 + header_len)
        .ok_or_else(|| Error::FormatError("header length exceeds file size".into()))?;
    let header: Header = serde_json::from_slice(json).map_err(|e| Error::FormatError(format!("bad header: {e}")))?;
    if header.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::FormatError(format!(
            "unsupported format version {} (expected {MODEL_FORMAT_VERSION})",
            header.format_version
        )));
    }

    let mut reader = Reader {
        bytes,
        pos: 8 + header_len,
    };
    let mut layers = Vec::with_capacity(header.layers.len());
    for (index, h) in header.layers.into_iter().enumerate() {
        let layer = match h {
            LayerHeader::Conv2D {
                in_channels,
                out_channels,
                kernel_size,
                stride,
                padding,
            } => {
                let mut conv = Conv2d::zeros(in_channels, out_channels, kernel_size, stride, padding);
                conv.weights = reader.array(index, "Conv2D", "weights", conv.weight_count())?;
                conv.bias = reader.array(index, "Conv2D", "bias", out_channels)?;
                Layer::Conv2d(conv)
            }
            LayerHeader::Dense {
                in_features,
                out_features,
            } => {
                let weights = reader.array(index, "Dense", "weights", in_features * out_features)?;
                let bias = reader.array(index, "Dense", "bias", out_features)?;
                Layer::Dense(Dense::new(in_features, out_features, weights, bias))
            }
            LayerHeader::ReLU => Layer::Relu,
            LayerHeader::MaxPool2D { kernel_size, stride } => Layer::MaxPool2d { kernel_size, stride },
            LayerHeader::GlobalMaxPool => Layer::GlobalMaxPool,
            LayerHeader::GlobalAvgPool => Layer::GlobalAvgPool,
        };
        layers.push(layer);
    }
    if reader.pos != bytes.len() {
        return Err(Error::FormatError(format!(
            "{} trailing bytes after the last layer",
            bytes.len() - reader.pos
        )));
    }
    let model = ModelSpec::new(header.input_shape, layers)?;
    if model.class_count() != header.class_count {
        return Err(Error::FormatError(format!(
            "header class_count {} but layers produce {}",
            header.class_count,
            model.class_count()
        )));
    }
    Ok(model)
}

pub fn save_model(model: &ModelSpec, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelSpec> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::mini_vgg;

    #[test]
    fn round_trip_is_bit_exact() {
        let model = mini_vgg(32, 3).unwrap();
        assert_eq!(decode_model(&encode_model(&model)).unwrap(), model);
    }

    #[test]
    fn truncated_blob_names_layer() {
        let model = mini_vgg(32, 3).unwrap();
        let bytes = encode_model(&model);
        let err = decode_model(&bytes[..bytes.len() - 8]).unwrap_err();
        match err {
            Error::CountMismatch { layer, kind, .. } => {
                assert_eq!(layer, model.layers().len() - 1);
                assert_eq!(kind, "Dense");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn bad_magic_and_version() {
        assert!(matches!(decode_model(b"NOPE\0\0\0\0"), Err(Error::FormatError(_))));
        let model = mini_vgg(16, 1).unwrap();
        let bytes = encode_model(&model);
        let len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let json = String::from_utf8(bytes[8..8 + len].to_vec()).unwrap();
        let bumped = json.replace("\"format_version\":1", "\"format_version\":2");
        let mut patched = bytes[..4].to_vec();
        patched.extend_from_slice(&(bumped.len() as u32).to_le_bytes());
        patched.extend_from_slice(bumped.as_bytes());
        patched.extend_from_slice(&bytes[8 + len..]);
        assert!(matches!(decode_model(&patched), Err(Error::FormatError(m)) if m.contains("version")));
    }
}
