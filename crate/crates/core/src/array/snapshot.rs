//! Binary snapshot of a [`MixedArray`].
//!
//! Layout (little endian):
//!
//! ```text
//! magic    8 bytes  "MCAISNP\0"
//! version  u32
//! hdr_len  u64
//! header   hdr_len bytes of JSON (config, calibration, seed, RNG position, clocks)
//! cells    capacity bytes, (sign << 7) | payload
//! epochs   capacity x u64, epoch start in ns
//! crossing capacity x 7 x f64, crossing time in us (0 for stored ones)
//! refresh  total_rows x f64, last refresh time in ns
//! ```

use std::io::{Read, Write};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ArrayConfig, ArrayCounters, MixedArray};
use crate::error::{Error, Result};
use crate::retention::RetentionCalibration;

pub const MAGIC: &[u8; 8] = b"MCAISNP\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: ArrayConfig,
    calibration: RetentionCalibration,
    seed: u64,
    rng_stream: u64,
    /// u128 word position, kept as a decimal string for JSON portability.
    rng_word_pos: String,
    now_ns: u64,
    slots_done: u64,
    counters: ArrayCounters,
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("<snapshot>", e)
}

impl MixedArray {
    pub fn dump_state<W: Write>(&self, mut out: W) -> Result<()> {
        let header = Header {
            config: self.config.clone(),
            calibration: self.calibration.clone(),
            seed: self.seed,
            rng_stream: self.rng.get_stream(),
            rng_word_pos: self.rng.get_word_pos().to_string(),
            now_ns: self.now_ns,
            slots_done: self.slots_done,
            counters: self.counters,
        };
        let json = serde_json::to_vec(&header)?;
        out.write_all(MAGIC).map_err(io_err)?;
        out.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
        out.write_all(&(json.len() as u64).to_le_bytes()).map_err(io_err)?;
        out.write_all(&json).map_err(io_err)?;
        out.write_all(&self.cells).map_err(io_err)?;

        let mut buf = Vec::with_capacity(self.epoch_ns.len() * 8);
        for e in &self.epoch_ns {
            buf.extend_from_slice(&e.to_le_bytes());
        }
        for c in &self.crossing_us {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        for r in &self.last_refresh_ns {
            buf.extend_from_slice(&r.to_le_bytes());
        }
        out.write_all(&buf).map_err(io_err)?;
        Ok(())
    }

    pub fn snapshot_bytes(&self) -> Result<Vec<u8>> {
        let mut v = Vec::new();
        self.dump_state(&mut v)?;
        Ok(v)
    }

    pub fn restore_state<R: Read>(mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(io_err)?;
        if &magic != MAGIC {
            return Err(Error::Format("not an array snapshot".into()));
        }
        let version = u32::from_le_bytes(read_array(&mut input)?);
        if version != VERSION {
            return Err(Error::Format(format!("unsupported snapshot version {version}")));
        }
        let hdr_len = u64::from_le_bytes(read_array(&mut input)?) as usize;
        let mut json = vec![0u8; hdr_len];
        input.read_exact(&mut json).map_err(io_err)?;
        let h: Header = serde_json::from_slice(&json)?;

        let mut array = MixedArray::new(h.config, h.calibration, h.seed)?;
        let word_pos: u128 = h
            .rng_word_pos
            .parse()
            .map_err(|_| Error::Format(format!("bad RNG position {:?}", h.rng_word_pos)))?;
        array.rng = ChaCha8Rng::seed_from_u64(h.seed);
        array.rng.set_stream(h.rng_stream);
        array.rng.set_word_pos(word_pos);
        array.now_ns = h.now_ns;
        array.slots_done = h.slots_done;
        array.counters = h.counters;

        input.read_exact(&mut array.cells).map_err(io_err)?;
        for e in array.epoch_ns.iter_mut() {
            *e = u64::from_le_bytes(read_array(&mut input)?);
        }
        for c in array.crossing_us.iter_mut() {
            *c = f64::from_le_bytes(read_array(&mut input)?);
        }
        for r in array.last_refresh_ns.iter_mut() {
            *r = f64::from_le_bytes(read_array(&mut input)?);
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest).map_err(io_err)? != 0 {
            return Err(Error::Format("trailing bytes after snapshot payload".into()));
        }
        Ok(array)
    }
}

fn read_array<R: Read, const N: usize>(input: &mut R) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    input.read_exact(&mut b).map_err(io_err)?;
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::Address;
    use crate::codec::EncodedByte;

    fn cfg(banks: usize) -> ArrayConfig {
        ArrayConfig {
            banks,
            rows_per_bank: 4,
            bytes_per_row: 8,
            ..ArrayConfig::default()
        }
    }

    fn drive(a: &mut MixedArray, from: u64) -> Vec<u8> {
        let mut out = Vec::new();
        for i in 0..40u64 {
            let t = from + i * 4_000;
            let addr = Address::new(0, (i % 4) as usize, (i % 8) as usize);
            if i % 3 == 0 {
                a.write(addr, EncodedByte::from_bits((i * 29) as u8), t).unwrap();
            } else {
                out.push(a.read(addr, t).unwrap().to_bits());
            }
        }
        out
    }

    #[test]
    fn round_trip_preserves_future_behavior() {
        let mut a = MixedArray::new(cfg(2), RetentionCalibration::default(), 42).unwrap();
        drive(&mut a, 0);
        let snap = a.snapshot_bytes().unwrap();
        let mut b = MixedArray::restore_state(snap.as_slice()).unwrap();
        assert_eq!(b.snapshot_bytes().unwrap(), snap);
        let t = a.now_ns() + 1;
        assert_eq!(drive(&mut a, t), drive(&mut b, t));
        assert_eq!(a.snapshot_bytes().unwrap(), b.snapshot_bytes().unwrap());
    }

    #[test]
    fn fresh_snapshot_is_stable() {
        let a = MixedArray::new(cfg(2), RetentionCalibration::default(), 7).unwrap();
        let b = MixedArray::new(cfg(2), RetentionCalibration::default(), 7).unwrap();
        assert_eq!(a.snapshot_bytes().unwrap(), b.snapshot_bytes().unwrap());
        assert_eq!(a.snapshot_bytes().unwrap(), a.snapshot_bytes().unwrap());
    }

    #[test]
    fn size_is_linear_in_capacity() {
        let size = |banks| {
            MixedArray::new(cfg(banks), RetentionCalibration::default(), 1)
                .unwrap()
                .snapshot_bytes()
                .unwrap()
                .len() as i64
        };
        let (s1, s2, s4) = (size(1), size(2), size(4));
        // Header length is the same apart from the bank count digit.
        assert_eq!(s2 - s1, s4 - s2 - (s2 - s1));
        let per_byte = 1 + 8 + 7 * 8;
        let per_row = 8;
        assert_eq!(s2 - s1, 32 * per_byte + 4 * per_row);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            MixedArray::restore_state(&b"NOTASNAPxxxxxxxxxxxx"[..]),
            Err(Error::Format(_))
        ));
        let a = MixedArray::new(cfg(1), RetentionCalibration::default(), 1).unwrap();
        let mut snap = a.snapshot_bytes().unwrap();
        snap.push(0);
        assert!(MixedArray::restore_state(snap.as_slice()).is_err());
        snap.truncate(snap.len() - 10);
        assert!(MixedArray::restore_state(snap.as_slice()).is_err());
    }
}
