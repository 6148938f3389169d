//! INT8 tensor files and synthetic workloads.
//!
//! A tensor is a raw binary file of signed bytes plus an optional sidecar
//! text header at `<file>.hdr`:
//!
//! ```text
//! dtype: int8
//! shape: 64,128
//! ```
//!
//! Without a header the tensor is one-dimensional.

use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<i8>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<i8>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape(format!(
                "shape {shape:?} holds {n} elements but data has {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn flat(data: Vec<i8>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }
}

pub fn header_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".hdr");
    PathBuf::from(p)
}

fn parse_header(text: &str, name: &str) -> Result<Vec<usize>> {
    let mut shape = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(name, i + 1, "expected `key: value`"))?;
        match key.trim() {
            "dtype" => {
                if value.trim() != "int8" {
                    return Err(Error::parse(
                        name,
                        i + 1,
                        format!("unsupported dtype {:?}", value.trim()),
                    ));
                }
            }
            "shape" => {
                let dims = value
                    .split(',')
                    .map(|d| d.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::parse(name, i + 1, format!("bad shape {:?}", value.trim())))?;
                shape = Some(dims);
            }
            other => return Err(Error::parse(name, i + 1, format!("unknown key {other:?}"))),
        }
    }
    shape.ok_or_else(|| Error::parse(name, 1, "missing shape"))
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let data: Vec<i8> = bytes.into_iter().map(|b| b as i8).collect();
    let hdr = header_path(path);
    if !hdr.exists() {
        return Ok(Tensor::flat(data));
    }
    let text = fs::read_to_string(&hdr).map_err(|e| Error::io(&hdr, e))?;
    let shape = parse_header(&text, &hdr.display().to_string())?;
    Tensor::new(shape, data)
}

pub fn tensor_bytes(t: &Tensor) -> Vec<u8> {
    t.data.iter().map(|&v| v as u8).collect()
}

pub fn header_text(t: &Tensor) -> String {
    let dims: Vec<String> = t.shape.iter().map(|d| d.to_string()).collect();
    format!("dtype: int8\nshape: {}\n", dims.join(","))
}

pub fn write_tensor(path: &Path, t: &Tensor) -> Result<()> {
    fs::write(path, tensor_bytes(t)).map_err(|e| Error::io(path, e))?;
    let hdr = header_path(path);
    fs::write(&hdr, header_text(t)).map_err(|e| Error::io(&hdr, e))
}

/// Pruned, zero-centred INT8 data: a `zero_share` of exact zeros, the rest
/// a two-sided geometric (discrete Laplace) law with mean magnitude `scale`,
/// saturated to the INT8 range.
pub fn zero_heavy_tensor(n: usize, zero_share: f64, scale: f64, seed: u64) -> Vec<i8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = scale / (1.0 + scale);
    (0..n)
        .map(|_| {
            if rng.random::<f64>() < zero_share {
                return 0;
            }
            // Geometric magnitude via inversion.
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            let mag = (u.ln() / q.ln()).floor();
            let v = if rng.random::<bool>() { mag } else { -mag - 1.0 };
            v.clamp(-128.0, 127.0) as i8
        })
        .collect()
}

/// Default operand profile: half pruned zeros, magnitudes around 4.
pub fn default_operand_tensor(seed: u64) -> Vec<i8> {
    zero_heavy_tensor(1 << 16, 0.5, 4.0, seed)
}
