//! Bit-accurate state of the mixed SRAM/eDRAM array.
//!
//! Each byte holds one SRAM sign cell and seven eDRAM payload cells. Stored
//! ones are stable. A stored zero carries a crossing time sampled when it was
//! last written or restored; when a sense (read or refresh) happens at least
//! that long after the epoch start, the cell senses 1 and the sense amplifier
//! writes the 1 back, so the flip is permanent. A surviving zero is recharged
//! and draws a fresh crossing time.
//!
//! Sensing is row-wide: a read or refresh restores every byte of the
//! addressed row. Time is a caller-supplied nanosecond clock; each operation
//! first runs the refresh events that fell due up to its timestamp.

mod schedule;
pub mod snapshot;
pub mod trace;

pub use schedule::{refresh_event_count, RefreshSchedule};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{self, EncodedByte, PAYLOAD_MASK};
use crate::error::{Error, Result};
use crate::retention::{CrossingLaw, RetentionCalibration, DEFAULT_TARGET_P};

/// eDRAM cells per byte.
pub const EDRAM_CELLS: usize = 7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArrayConfig {
    pub banks: usize,
    pub rows_per_bank: usize,
    pub bytes_per_row: usize,
    pub v_ref: f64,
    pub refresh_enabled: bool,
    pub refresh_target_p: f64,
    pub clock_hz: f64,
}

impl Default for ArrayConfig {
    /// 64 banks of 16 KB, 1 MB total, V_REF 0.8 V at 100 MHz.
    fn default() -> Self {
        Self {
            banks: 64,
            rows_per_bank: 256,
            bytes_per_row: 64,
            v_ref: 0.8,
            refresh_enabled: true,
            refresh_target_p: DEFAULT_TARGET_P,
            clock_hz: 1e8,
        }
    }
}

impl ArrayConfig {
    pub fn capacity_bytes(&self) -> usize {
        self.banks * self.rows_per_bank * self.bytes_per_row
    }

    pub fn total_rows(&self) -> usize {
        self.banks * self.rows_per_bank
    }

    pub fn validate(&self) -> Result<()> {
        if self.banks == 0 || self.rows_per_bank == 0 || self.bytes_per_row == 0 {
            return Err(Error::Domain(format!("array geometry must be nonzero: {self:?}")));
        }
        if !(self.refresh_target_p > 0.0 && self.refresh_target_p < 1.0) {
            return Err(Error::Domain(format!(
                "refresh target probability must be in (0,1), got {}",
                self.refresh_target_p
            )));
        }
        if !(self.clock_hz > 0.0) {
            return Err(Error::Domain(format!("clock must be positive, got {}", self.clock_hz)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Address {
    pub bank: usize,
    pub row: usize,
    pub col: usize,
}

impl Address {
    pub fn new(bank: usize, row: usize, col: usize) -> Self {
        Self { bank, row, col }
    }
}

/// Observable state of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellState {
    pub stored_bit: bool,
    pub epoch_start_ns: u64,
    /// Present only for eDRAM cells storing 0.
    pub crossing_time_us: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayCounters {
    pub reads: u64,
    pub writes: u64,
    /// Scheduled plus explicit row refreshes.
    pub row_refreshes: u64,
    /// Stored zeros that were sensed as 1 and written back.
    pub flips: u64,
}

pub struct MixedArray {
    config: ArrayConfig,
    calibration: RetentionCalibration,
    law: CrossingLaw,
    schedule: Option<RefreshSchedule>,
    seed: u64,
    rng: ChaCha8Rng,
    /// Encoded bits, `(sign << 7) | payload`, one per byte.
    cells: Vec<u8>,
    epoch_ns: Vec<u64>,
    /// `EDRAM_CELLS` entries per byte, indexed by payload bit position.
    crossing_us: Vec<f64>,
    last_refresh_ns: Vec<f64>,
    now_ns: u64,
    slots_done: u64,
    counters: ArrayCounters,
}

impl std::fmt::Debug for MixedArray {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MixedArray")
            .field("config", &self.config)
            .field("seed", &self.seed)
            .field("now_ns", &self.now_ns)
            .field("counters", &self.counters)
            .finish_non_exhaustive()
    }
}

impl MixedArray {
    /// A fresh array holds `encode(0)` everywhere: all payload cells at 1,
    /// nothing decaying.
    pub fn new(config: ArrayConfig, calibration: RetentionCalibration, seed: u64) -> Result<Self> {
        config.validate()?;
        let law = calibration.law(config.v_ref)?;
        let schedule = if config.refresh_enabled {
            Some(RefreshSchedule::new(&config, &calibration)?)
        } else {
            None
        };
        let cap = config.capacity_bytes();
        Ok(Self {
            law,
            schedule,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            cells: vec![codec::encode(0).to_bits(); cap],
            epoch_ns: vec![0; cap],
            crossing_us: vec![0.0; cap * EDRAM_CELLS],
            last_refresh_ns: vec![0.0; config.total_rows()],
            now_ns: 0,
            slots_done: 0,
            counters: ArrayCounters::default(),
            config,
            calibration,
        })
    }

    pub fn config(&self) -> &ArrayConfig {
        &self.config
    }

    pub fn calibration(&self) -> &RetentionCalibration {
        &self.calibration
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn now_ns(&self) -> u64 {
        self.now_ns
    }

    pub fn counters(&self) -> ArrayCounters {
        self.counters
    }

    pub fn schedule(&self) -> Option<&RefreshSchedule> {
        self.schedule.as_ref()
    }

    fn index(&self, addr: Address) -> Result<usize> {
        let c = &self.config;
        if addr.bank >= c.banks || addr.row >= c.rows_per_bank || addr.col >= c.bytes_per_row {
            return Err(Error::AddressOutOfRange {
                bank: addr.bank,
                row: addr.row,
                col: addr.col,
            });
        }
        Ok((addr.bank * c.rows_per_bank + addr.row) * c.bytes_per_row + addr.col)
    }

    fn row_index(&self, bank: usize, row: usize) -> Result<usize> {
        self.index(Address::new(bank, row, 0))
            .map(|i| i / self.config.bytes_per_row)
    }

    /// Sets all cells of byte `idx` and starts a new decay epoch at `t_ns`.
    fn store(&mut self, idx: usize, e: EncodedByte, t_ns: u64) {
        self.cells[idx] = e.to_bits();
        self.epoch_ns[idx] = t_ns;
        let zeros = e.zero_mask();
        let base = idx * EDRAM_CELLS;
        for bit in 0..EDRAM_CELLS {
            self.crossing_us[base + bit] = if zeros & (1 << bit) != 0 {
                self.law.sample(&mut self.rng)
            } else {
                0.0
            };
        }
    }

    /// Senses byte `idx` at `t_ns` and writes the sensed value back.
    fn restore(&mut self, idx: usize, t_ns: u64) {
        let bits = self.cells[idx];
        let zeros = !bits & PAYLOAD_MASK;
        if zeros != 0 {
            let age_us = t_ns.saturating_sub(self.epoch_ns[idx]) as f64 * 1e-3;
            let base = idx * EDRAM_CELLS;
            let mut sensed = bits;
            for bit in 0..EDRAM_CELLS {
                if zeros & (1 << bit) == 0 {
                    continue;
                }
                let slot = &mut self.crossing_us[base + bit];
                if age_us >= *slot {
                    sensed |= 1 << bit;
                    *slot = 0.0;
                    self.counters.flips += 1;
                } else {
                    *slot = self.law.sample(&mut self.rng);
                }
            }
            self.cells[idx] = sensed;
        }
        self.epoch_ns[idx] = t_ns;
    }

    fn restore_row(&mut self, row_idx: usize, t_ns: u64) {
        let start = row_idx * self.config.bytes_per_row;
        for idx in start..start + self.config.bytes_per_row {
            self.restore(idx, t_ns);
        }
    }

    /// Runs every scheduled refresh due in `(now, t_ns]` and moves the clock
    /// to `t_ns`. Returns the number of row refresh events executed.
    pub fn advance(&mut self, t_ns: u64) -> Result<u64> {
        if t_ns < self.now_ns {
            return Err(Error::TimeRegression {
                requested: t_ns,
                observed: self.now_ns,
            });
        }
        let Some(sched) = self.schedule else {
            self.now_ns = t_ns;
            return Ok(0);
        };
        let target = sched.slots_through(t_ns);
        let mut events = 0;
        for slot in self.slots_done + 1..=target {
            let row = sched.slot_row(slot);
            let at = sched.slot_time_ns(slot);
            let epoch = (at.floor() as u64).min(t_ns);
            for bank in 0..self.config.banks {
                let r = bank * self.config.rows_per_bank + row;
                self.restore_row(r, epoch);
                self.last_refresh_ns[r] = at;
            }
            events += self.config.banks as u64;
        }
        self.slots_done = target;
        self.now_ns = t_ns;
        self.counters.row_refreshes += events;
        Ok(events)
    }

    pub fn write(&mut self, addr: Address, e: EncodedByte, t_ns: u64) -> Result<()> {
        let idx = self.index(addr)?;
        self.advance(t_ns)?;
        self.store(idx, e, t_ns);
        self.counters.writes += 1;
        Ok(())
    }

    /// Reads one byte. The whole addressed row is sensed and restored.
    pub fn read(&mut self, addr: Address, t_ns: u64) -> Result<EncodedByte> {
        let idx = self.index(addr)?;
        self.advance(t_ns)?;
        self.restore_row(idx / self.config.bytes_per_row, t_ns);
        self.counters.reads += 1;
        Ok(EncodedByte::from_bits(self.cells[idx]))
    }

    /// Reads a full row in one sense operation.
    pub fn read_row(&mut self, bank: usize, row: usize, t_ns: u64) -> Result<Vec<EncodedByte>> {
        let r = self.row_index(bank, row)?;
        self.advance(t_ns)?;
        self.restore_row(r, t_ns);
        self.counters.reads += self.config.bytes_per_row as u64;
        let start = r * self.config.bytes_per_row;
        Ok(self.cells[start..start + self.config.bytes_per_row]
            .iter()
            .map(|&b| EncodedByte::from_bits(b))
            .collect())
    }

    /// Restores a row exactly as a read would, without returning data.
    pub fn refresh_row(&mut self, bank: usize, row: usize, t_ns: u64) -> Result<()> {
        let r = self.row_index(bank, row)?;
        self.advance(t_ns)?;
        self.restore_row(r, t_ns);
        self.last_refresh_ns[r] = t_ns as f64;
        self.counters.row_refreshes += 1;
        Ok(())
    }

    pub fn refresh_all(&mut self, t_ns: u64) -> Result<()> {
        for bank in 0..self.config.banks {
            for row in 0..self.config.rows_per_bank {
                self.refresh_row(bank, row, t_ns)?;
            }
        }
        Ok(())
    }

    /// Stored value without sensing; does not disturb any cell.
    pub fn peek(&self, addr: Address) -> Result<EncodedByte> {
        Ok(EncodedByte::from_bits(self.cells[self.index(addr)?]))
    }

    /// `bit` 0..=6 are eDRAM payload cells, 7 is the SRAM sign cell.
    pub fn cell_state(&self, addr: Address, bit: usize) -> Result<CellState> {
        let idx = self.index(addr)?;
        if bit > 7 {
            return Err(Error::Domain(format!("bit position {bit} out of range")));
        }
        let stored_bit = self.cells[idx] >> bit & 1 == 1;
        let crossing_time_us = (bit < EDRAM_CELLS && !stored_bit).then(|| self.crossing_us[idx * EDRAM_CELLS + bit]);
        Ok(CellState {
            stored_bit,
            epoch_start_ns: self.epoch_ns[idx],
            crossing_time_us,
        })
    }

    pub fn last_refresh_ns(&self, bank: usize, row: usize) -> Result<f64> {
        Ok(self.last_refresh_ns[self.row_index(bank, row)?])
    }

    /// Largest `now - last_refresh` over all rows.
    pub fn max_row_age_ns(&self) -> f64 {
        let now = self.now_ns as f64;
        self.last_refresh_ns.iter().map(|&t| now - t).fold(0.0, f64::max)
    }

    /// Fraction of stored cells (all eight per byte) holding 0.
    pub fn zero_fraction(&self) -> f64 {
        let zeros: u64 = self.cells.iter().map(|b| u64::from(b.count_zeros())).sum();
        zeros as f64 / (self.cells.len() * 8) as f64
    }
}
