//! Retention-error injection into INT8 tensors.
//!
//! Errors only ever turn a stored 0 into a 1 in one of the seven eDRAM
//! payload cells; the SRAM sign cell is never disturbed. With the encoder
//! enabled, flips are applied to the one-enhancement encoded payload and the
//! result decoded; with it disabled, flips hit raw bits 6..0 directly.
//!
//! Fixed-rate injection uses common random numbers: every element draws the
//! same seven uniforms regardless of rate or mode, so higher rates flip a
//! superset of the bits flipped at lower rates.

pub mod classifier;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array::{Address, ArrayConfig, MixedArray};
use crate::codec::{self, EncodedByte};
use crate::error::{Error, Result};
use crate::retention::RetentionCalibration;

/// Elements per independent random substream.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InjectionMode {
    /// Flip each exposed zero bit with this probability.
    Rate(f64),
    /// Store the tensor in a fresh mixed array and read it back after
    /// `dwell_ns` at the given sense reference.
    FromArray { dwell_ns: u64, v_ref: f64, refresh: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InjectionConfig {
    pub mode: InjectionMode,
    pub encoder_enabled: bool,
    pub seed: u64,
}

impl InjectionConfig {
    pub fn rate(rate: f64, encoder_enabled: bool, seed: u64) -> Self {
        Self {
            mode: InjectionMode::Rate(rate),
            encoder_enabled,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            InjectionMode::Rate(r) if !(0.0..=1.0).contains(&r) => {
                Err(Error::Domain(format!("injection rate must be in [0,1], got {r}")))
            }
            _ => Ok(()),
        }
    }
}

#[inline]
fn to_cells(v: i8, encoder: bool) -> EncodedByte {
    if encoder {
        codec::encode(v)
    } else {
        codec::map_unencoded(v)
    }
}

#[inline]
fn from_cells(e: EncodedByte, encoder: bool) -> i8 {
    if encoder {
        codec::decode(e)
    } else {
        codec::unmap_unencoded(e)
    }
}

/// Per-element flip masks at `rate`, one byte per element.
fn flip_masks(n: usize, rate: f64, seed: u64) -> Vec<u8> {
    let mut masks = vec![0u8; n];
    masks.par_chunks_mut(CHUNK).enumerate().for_each(|(c, chunk)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        for m in chunk.iter_mut() {
            for bit in 0..7 {
                let u: f64 = rng.random();
                if u < rate {
                    *m |= 1 << bit;
                }
            }
        }
    });
    masks
}

pub fn inject(tensor: &[i8], cfg: &InjectionConfig) -> Result<Vec<i8>> {
    cfg.validate()?;
    match cfg.mode {
        InjectionMode::Rate(rate) => {
            let masks = flip_masks(tensor.len(), rate, cfg.seed);
            Ok(tensor
                .iter()
                .zip(&masks)
                .map(|(&v, &m)| {
                    let e = to_cells(v, cfg.encoder_enabled);
                    let flipped = e.with_payload(e.payload() | (m & e.zero_mask()));
                    from_cells(flipped, cfg.encoder_enabled)
                })
                .collect())
        }
        InjectionMode::FromArray {
            dwell_ns,
            v_ref,
            refresh,
        } => inject_via_array(tensor, cfg.encoder_enabled, cfg.seed, dwell_ns, v_ref, refresh),
    }
}

fn inject_via_array(
    tensor: &[i8],
    encoder: bool,
    seed: u64,
    dwell_ns: u64,
    v_ref: f64,
    refresh: bool,
) -> Result<Vec<i8>> {
    let base = ArrayConfig {
        v_ref,
        refresh_enabled: refresh,
        ..ArrayConfig::default()
    };
    let bank_bytes = base.rows_per_bank * base.bytes_per_row;
    let cfg = ArrayConfig {
        banks: tensor.len().div_ceil(bank_bytes).max(1),
        ..base
    };
    let mut array = MixedArray::new(cfg.clone(), RetentionCalibration::default(), seed)?;
    let addr = |i: usize| {
        let row = i / cfg.bytes_per_row;
        Address::new(row / cfg.rows_per_bank, row % cfg.rows_per_bank, i % cfg.bytes_per_row)
    };
    for (i, &v) in tensor.iter().enumerate() {
        array.write(addr(i), to_cells(v, encoder), 0)?;
    }
    let mut out = Vec::with_capacity(tensor.len());
    let rows = tensor.len().div_ceil(cfg.bytes_per_row);
    for r in 0..rows {
        let row = array.read_row(r / cfg.rows_per_bank, r % cfg.rows_per_bank, dwell_ns)?;
        for e in row {
            if out.len() == tensor.len() {
                break;
            }
            out.push(from_cells(e, encoder));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub mean_relative_error: f64,
    pub mean_absolute_error: f64,
    pub max_absolute_error: f64,
    /// Bits that differ between the two tensors.
    pub flip_count: u64,
}

/// Relative error uses `max(|orig|, 1)` as denominator.
pub fn distortion(original: &[i8], corrupted: &[i8]) -> Result<DistortionReport> {
    if original.len() != corrupted.len() {
        return Err(Error::Shape(format!(
            "original has {} elements, corrupted has {}",
            original.len(),
            corrupted.len()
        )));
    }
    if original.is_empty() {
        return Ok(DistortionReport::default());
    }
    let mut rel = 0.0;
    let mut abs = 0.0;
    let mut max = 0.0f64;
    let mut flips = 0u64;
    for (&a, &b) in original.iter().zip(corrupted) {
        let d = (f64::from(a) - f64::from(b)).abs();
        rel += d / f64::from(a).abs().max(1.0);
        abs += d;
        max = max.max(d);
        flips += u64::from((a as u8 ^ b as u8).count_ones());
    }
    let n = original.len() as f64;
    Ok(DistortionReport {
        mean_relative_error: rel / n,
        mean_absolute_error: abs / n,
        max_absolute_error: max,
        flip_count: flips,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncodingMode {
    Encoded,
    Raw,
}

impl EncodingMode {
    pub const BOTH: [EncodingMode; 2] = [EncodingMode::Encoded, EncodingMode::Raw];

    pub fn encoder_enabled(self) -> bool {
        self == EncodingMode::Encoded
    }

    pub fn name(self) -> &'static str {
        match self {
            EncodingMode::Encoded => "encoded",
            EncodingMode::Raw => "raw",
        }
    }
}

impl std::str::FromStr for EncodingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "encoded" | "encoder" | "on" => Ok(EncodingMode::Encoded),
            "raw" | "off" => Ok(EncodingMode::Raw),
            _ => Err(Error::Domain(format!("unknown mode {s:?} (expected encoded or raw)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub rate: f64,
    pub mode: EncodingMode,
    pub report: DistortionReport,
}

/// One report per `(rate, mode)`, rates outermost. All runs share `seed`.
pub fn sweep(tensor: &[i8], rates: &[f64], modes: &[EncodingMode], seed: u64) -> Result<Vec<SweepRow>> {
    if rates.is_empty() {
        return Err(Error::EmptyInput("sweep needs at least one rate"));
    }
    if modes.is_empty() {
        return Err(Error::EmptyInput("sweep needs at least one mode"));
    }
    let jobs: Vec<(f64, EncodingMode)> = rates.iter().flat_map(|&r| modes.iter().map(move |&m| (r, m))).collect();
    jobs.par_iter()
        .map(|&(rate, mode)| {
            let cfg = InjectionConfig::rate(rate, mode.encoder_enabled(), seed);
            let corrupted = inject(tensor, &cfg)?;
            Ok(SweepRow {
                rate,
                mode,
                report: distortion(tensor, &corrupted)?,
            })
        })
        .collect()
}

/// `rate,mode,mre,mae,max_abs,flips` CSV.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rate", "mode", "mre", "mae", "max_abs", "flips"])?;
    for r in rows {
        w.write_record([
            r.rate.to_string(),
            r.mode.name().to_string(),
            r.report.mean_relative_error.to_string(),
            r.report.mean_absolute_error.to_string(),
            r.report.max_absolute_error.to_string(),
            r.report.flip_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
