//! Binary model files: network parameters, normalization statistics and a
//! free-form training digest.
//!
//! Fixed little-endian layout, magic `CIDN`, format version 1, all arrays as
//! 32-bit IEEE floats. Loading a saved model reproduces the parameters
//! bit-exactly at 32-bit precision; corrupted magic, version mismatch or
//! truncation is an error and never yields a partial model.

use std::path::Path;

use ndarray::{Array1, Array2};

use crate::dsp::NUM_BINS;
use crate::error::{Error, Result};
use crate::mask::NormStats;
use crate::nn::{Activation, BatchNorm, DenseLayer, Mlp};

const MAGIC: &[u8; 4] = b"CIDN";
const VERSION: u32 = 1;

/// A loaded model file.
#[derive(Debug)]
pub struct ModelFile {
    pub mlp: Mlp,
    pub stats: NormStats,
    pub digest: String,
}

fn activation_tag(a: Activation) -> u8 {
    match a {
        Activation::LeakyRelu => 0,
        Activation::Sigmoid => 1,
        Activation::Identity => 2,
    }
}

fn tag_activation(t: u8) -> Option<Activation> {
    match t {
        0 => Some(Activation::LeakyRelu),
        1 => Some(Activation::Sigmoid),
        2 => Some(Activation::Identity),
        _ => None,
    }
}

struct Writer {
    bytes: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.bytes.extend_from_slice(&v.to_le_bytes());
    }

    fn u8(&mut self, v: u8) {
        self.bytes.push(v);
    }

    fn f32_slice(&mut self, values: impl IntoIterator<Item = f64>) {
        for v in values {
            self.bytes.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Model {
                path: self.path.to_path_buf(),
                reason: format!(
                    "truncated: wanted {n} bytes at offset {}, file has {}",
                    self.pos,
                    self.bytes.len()
                ),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn f32_vec(&mut self, count: usize) -> Result<Vec<f64>> {
        let b = self.take(count * 4)?;
        Ok(b.chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect())
    }
}

/// Serializes a trained stage to `path`.
pub fn save_model(
    path: impl AsRef<Path>,
    mlp: &Mlp,
    stats: &NormStats,
    digest: &str,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = Writer { bytes: Vec::new() };
    w.bytes.extend_from_slice(MAGIC);
    w.u32(VERSION);
    w.u32(mlp.layers.len() as u32);
    for layer in &mlp.layers {
        w.u32(layer.in_dim() as u32);
        w.u32(layer.out_dim() as u32);
        w.u8(activation_tag(layer.activation));
        w.u8(layer.batch_norm.is_some() as u8);
        w.f32_slice(layer.weights.iter().copied());
        w.f32_slice(layer.bias.iter().copied());
        if let Some(bn) = &layer.batch_norm {
            w.f32_slice(bn.gain.iter().copied());
            w.f32_slice(bn.bias.iter().copied());
            w.f32_slice(bn.running_mean.iter().copied());
            w.f32_slice(bn.running_var.iter().copied());
        }
    }
    w.u32(mlp.bypasses.len() as u32);
    for &(s, d) in &mlp.bypasses {
        w.u32(s as u32);
        w.u32(d as u32);
    }
    w.u32(NUM_BINS as u32);
    w.f32_slice(stats.mean.iter().copied());
    w.f32_slice(stats.std.iter().copied());
    let digest_bytes = digest.as_bytes();
    w.u32(digest_bytes.len() as u32);
    w.bytes.extend_from_slice(digest_bytes);
    std::fs::write(path, &w.bytes).map_err(|e| Error::io(path, e))
}

/// Loads a model saved by [`save_model`].
pub fn load_model(path: impl AsRef<Path>) -> Result<ModelFile> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { bytes: &bytes, pos: 0, path };
    let err = |reason: String| Error::Model { path: path.to_path_buf(), reason };

    if r.take(4)? != MAGIC {
        return Err(err("bad magic, not a model file".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(err(format!("unsupported format version {version}, expected {VERSION}")));
    }
    let num_layers = r.u32()? as usize;
    if num_layers == 0 || num_layers > 64 {
        return Err(err(format!("implausible layer count {num_layers}")));
    }
    let mut layers = Vec::with_capacity(num_layers);
    for i in 0..num_layers {
        let in_dim = r.u32()? as usize;
        let out_dim = r.u32()? as usize;
        if in_dim == 0 || out_dim == 0 || in_dim > 1 << 20 || out_dim > 1 << 20 {
            return Err(err(format!("implausible dims {in_dim}x{out_dim} in layer {i}")));
        }
        let activation = tag_activation(r.u8()?)
            .ok_or_else(|| err(format!("unknown activation tag in layer {i}")))?;
        let has_bn = r.u8()? != 0;
        let weights = Array2::from_shape_vec((out_dim, in_dim), r.f32_vec(out_dim * in_dim)?)
            .expect("shape matches read count");
        let bias = Array1::from_vec(r.f32_vec(out_dim)?);
        let batch_norm = if has_bn {
            Some(BatchNorm {
                gain: Array1::from_vec(r.f32_vec(out_dim)?),
                bias: Array1::from_vec(r.f32_vec(out_dim)?),
                running_mean: Array1::from_vec(r.f32_vec(out_dim)?),
                running_var: Array1::from_vec(r.f32_vec(out_dim)?),
            })
        } else {
            None
        };
        layers.push(DenseLayer { weights, bias, batch_norm, activation, dropout: 0.0 });
    }
    let num_bypasses = r.u32()? as usize;
    if num_bypasses > 1024 {
        return Err(err(format!("implausible bypass count {num_bypasses}")));
    }
    let mut bypasses = Vec::with_capacity(num_bypasses);
    for _ in 0..num_bypasses {
        let s = r.u32()? as usize;
        let d = r.u32()? as usize;
        if s >= d || d >= num_layers {
            return Err(err(format!("invalid bypass edge ({s}, {d})")));
        }
        bypasses.push((s, d));
    }
    let stats_len = r.u32()? as usize;
    if stats_len != NUM_BINS {
        return Err(err(format!("stats length {stats_len}, expected {NUM_BINS}")));
    }
    let mean_v = r.f32_vec(NUM_BINS)?;
    let std_v = r.f32_vec(NUM_BINS)?;
    let mut stats = NormStats { mean: [0.0; NUM_BINS], std: [0.0; NUM_BINS] };
    stats.mean.copy_from_slice(&mean_v);
    stats.std.copy_from_slice(&std_v);
    let digest_len = r.u32()? as usize;
    let digest = String::from_utf8(r.take(digest_len)?.to_vec())
        .map_err(|_| err("digest is not valid UTF-8".into()))?;
    Ok(ModelFile { mlp: Mlp { layers, bypasses }, stats, digest })
}
