//! Global staggered refresh schedule.
//!
//! Every bank refreshes one row per stagger slot, walking its rows
//! round-robin, so each row is restored once per refresh period. Banks run
//! in lockstep. Event `j` (1-based) fires at `j * stagger` and restores row
//! `(j - 1) % rows_per_bank` in every bank.

use crate::array::ArrayConfig;
use crate::error::Result;
use crate::retention::RetentionCalibration;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefreshSchedule {
    /// Per-row refresh period in nanoseconds.
    pub period_ns: f64,
    /// Spacing between consecutive row events within a bank.
    pub stagger_ns: f64,
    pub banks: usize,
    pub rows_per_bank: usize,
}

impl RefreshSchedule {
    pub fn new(config: &ArrayConfig, cal: &RetentionCalibration) -> Result<Self> {
        let period_us = cal.refresh_interval(config.v_ref, config.refresh_target_p)?;
        Ok(Self::from_period(period_us * 1e3, config.banks, config.rows_per_bank))
    }

    pub fn from_period(period_ns: f64, banks: usize, rows_per_bank: usize) -> Self {
        Self {
            period_ns,
            stagger_ns: period_ns / rows_per_bank as f64,
            banks,
            rows_per_bank,
        }
    }

    /// Number of stagger slots elapsed in `(0, t_ns]`.
    pub fn slots_through(&self, t_ns: u64) -> u64 {
        (t_ns as f64 / self.stagger_ns).floor() as u64
    }

    pub fn slot_time_ns(&self, slot: u64) -> f64 {
        slot as f64 * self.stagger_ns
    }

    pub fn slot_row(&self, slot: u64) -> usize {
        ((slot - 1) % self.rows_per_bank as u64) as usize
    }

    /// Row refresh events (summed over banks) due in `(from_ns, to_ns]`.
    pub fn events_between(&self, from_ns: u64, to_ns: u64) -> u64 {
        if to_ns <= from_ns {
            return 0;
        }
        (self.slots_through(to_ns) - self.slots_through(from_ns)) * self.banks as u64
    }
}

/// Row refresh events a configured array performs over `duration_ns`.
pub fn refresh_event_count(config: &ArrayConfig, cal: &RetentionCalibration, duration_ns: u64) -> Result<u64> {
    if !config.refresh_enabled {
        return Ok(0);
    }
    Ok(RefreshSchedule::new(config, cal)?.events_between(0, duration_ns))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stagger_divides_period_by_rows() {
        let s = RefreshSchedule::from_period(12_570.0, 64, 256);
        assert!((s.stagger_ns - 49.1015625).abs() < 1e-9);
    }

    #[test]
    fn one_millisecond_count_matches_enumeration() {
        let s = RefreshSchedule::from_period(12_570.0, 64, 256);
        // Walk the event times one by one.
        let mut enumerated = 0u64;
        let mut j = 1u64;
        while (j as f64) * 12_570.0 / 256.0 <= 1e6 {
            enumerated += 64;
            j += 1;
        }
        assert_eq!(s.events_between(0, 1_000_000), enumerated);
        // floor(1 ms * 256 / 12.57 us) * 64
        assert_eq!(enumerated, (1e6f64 * 256.0 / 12_570.0).floor() as u64 * 64);
        assert!((enumerated as f64 - 1_303_744.0).abs() / 1_303_744.0 < 1e-3);
    }

    #[test]
    fn counts_are_additive() {
        let s = RefreshSchedule::from_period(1_300.0, 4, 16);
        let whole = s.events_between(0, 97_531);
        let split = s.events_between(0, 40_000) + s.events_between(40_000, 97_531);
        assert_eq!(whole, split);
        assert_eq!(s.events_between(500, 500), 0);
    }

    #[test]
    fn disabled_refresh_counts_nothing() {
        let cfg = ArrayConfig {
            refresh_enabled: false,
            ..ArrayConfig::default()
        };
        let cal = RetentionCalibration::default();
        assert_eq!(refresh_event_count(&cfg, &cal, 1_000_000).unwrap(), 0);
    }
}
