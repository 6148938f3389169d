//! One-enhancement encoding of INT8 data.
//!
//! The sign bit of a two's-complement byte is kept as-is and mapped to the
//! SRAM cell. The seven remaining bits are inverted for non-negative values
//! and mapped to eDRAM cells, so values close to zero are stored mostly as
//! ones. Decoding applies the same conditional inversion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mask of the seven eDRAM-mapped payload bits.
pub const PAYLOAD_MASK: u8 = 0x7F;
/// Bit position of the SRAM-mapped sign bit.
pub const SIGN_POSITION: usize = 7;

/// A byte as stored in the mixed-cell array: one SRAM sign bit and seven
/// eDRAM payload bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EncodedByte {
    sign: bool,
    payload: u8,
}

impl EncodedByte {
    /// Builds an encoded byte from its parts. Payload bits above bit 6 are
    /// dropped.
    pub fn new(sign: bool, payload: u8) -> Self {
        Self {
            sign,
            payload: payload & PAYLOAD_MASK,
        }
    }

    /// Reinterprets a serialized `(sign << 7) | payload` byte.
    pub fn from_bits(bits: u8) -> Self {
        Self::new(bits & 0x80 != 0, bits)
    }

    pub fn to_bits(self) -> u8 {
        ((self.sign as u8) << 7) | self.payload
    }

    pub fn sign(self) -> bool {
        self.sign
    }

    pub fn payload(self) -> u8 {
        self.payload
    }

    /// Payload bits that currently store 0 and are therefore exposed to
    /// retention decay.
    pub fn zero_mask(self) -> u8 {
        !self.payload & PAYLOAD_MASK
    }

    pub fn with_payload(self, payload: u8) -> Self {
        Self::new(self.sign, payload)
    }
}

#[inline]
fn flip_mask(sign: bool) -> u8 {
    if sign {
        0
    } else {
        PAYLOAD_MASK
    }
}

/// Encodes one INT8 value.
#[inline]
pub fn encode(x: i8) -> EncodedByte {
    let raw = x as u8;
    let sign = raw & 0x80 != 0;
    EncodedByte::new(sign, (raw & PAYLOAD_MASK) ^ flip_mask(sign))
}

/// Inverse of [`encode`].
#[inline]
pub fn decode(e: EncodedByte) -> i8 {
    let low = e.payload ^ flip_mask(e.sign);
    (((e.sign as u8) << 7) | low) as i8
}

/// Stores a raw byte without the conditional flip: bit 7 still goes to the
/// SRAM cell, bits 6..0 go to eDRAM unchanged.
#[inline]
pub fn map_unencoded(x: i8) -> EncodedByte {
    EncodedByte::from_bits(x as u8)
}

#[inline]
pub fn unmap_unencoded(e: EncodedByte) -> i8 {
    e.to_bits() as i8
}

pub fn encode_tensor(t: &[i8]) -> Vec<EncodedByte> {
    t.iter().copied().map(encode).collect()
}

pub fn decode_tensor(t: &[EncodedByte]) -> Vec<i8> {
    t.iter().copied().map(decode).collect()
}

/// Fraction of ones at each bit position, indexed by position (index 7 is
/// the sign bit).
pub fn ones_histogram(t: &[EncodedByte]) -> Result<[f64; 8]> {
    if t.is_empty() {
        return Err(Error::EmptyInput("ones histogram of an empty tensor"));
    }
    let mut counts = [0u64; 8];
    for e in t {
        let bits = e.to_bits();
        for (pos, c) in counts.iter_mut().enumerate() {
            *c += u64::from((bits >> pos) & 1);
        }
    }
    let n = t.len() as f64;
    Ok(counts.map(|c| c as f64 / n))
}

/// Fraction of stored bits equal to zero, averaged over all eight cells of
/// each byte.
pub fn zero_fraction(t: &[EncodedByte]) -> Result<f64> {
    let hist = ones_histogram(t)?;
    Ok(1.0 - hist.iter().sum::<f64>() / 8.0)
}

/// Writes a histogram as `bit_position,ones_fraction` CSV.
pub fn write_histogram_csv<W: std::io::Write>(hist: &[f64; 8], mut out: W) -> std::io::Result<()> {
    writeln!(out, "bit_position,ones_fraction")?;
    for (pos, f) in hist.iter().enumerate() {
        writeln!(out, "{pos},{f}")?;
    }
    Ok(())
}
