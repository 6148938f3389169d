//! Data-dependent energy, power and area accounting.
//!
//! Default constants are the 45 nm characterization of 1 MB arrays: static
//! power in mW per MB and access energy in pJ per byte access. For the eDRAM
//! based technologies each quantity has a minimum (all stored bits 1) and a
//! maximum (all stored bits 0); intermediate data interpolates linearly in
//! the fraction of zero bits. RRAM has no static power and no defaults.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::array::{refresh_event_count, ArrayConfig};
use crate::dataflow::{AccelConfig, BitStats, NetworkStats, TraceStats};
use crate::error::{Error, Result};
use crate::retention::RetentionCalibration;

pub const BYTES_PER_MB: f64 = 1_048_576.0;
/// Area units of one SRAM-built byte (eight 6T cells).
pub const SRAM_BYTE_AREA: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tech {
    Sram,
    Edram,
    Mcaimem,
    Rram,
}

impl Tech {
    pub const ALL: [Tech; 4] = [Tech::Sram, Tech::Edram, Tech::Mcaimem, Tech::Rram];

    pub fn name(self) -> &'static str {
        match self {
            Tech::Sram => "sram",
            Tech::Edram => "edram",
            Tech::Mcaimem => "mcaimem",
            Tech::Rram => "rram",
        }
    }

    pub fn needs_refresh(self) -> bool {
        matches!(self, Tech::Edram | Tech::Mcaimem)
    }
}

impl fmt::Display for Tech {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Tech {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sram" => Ok(Tech::Sram),
            "edram" => Ok(Tech::Edram),
            "mcaimem" => Ok(Tech::Mcaimem),
            "rram" => Ok(Tech::Rram),
            _ => Err(Error::Domain(format!("unknown technology {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Access {
    Read,
    Write,
}

/// A data-dependent quantity: `min` with all-ones data, `max` with all-zeros.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub min: f64,
    pub max: f64,
}

impl Span {
    pub const fn new(min: f64, max: f64) -> Self {
        Self { min, max }
    }

    pub const fn flat(v: f64) -> Self {
        Self { min: v, max: v }
    }

    /// Linear in `zero_fraction`, returning the endpoints exactly at 0 and 1.
    pub fn at(&self, zero_fraction: f64) -> f64 {
        if zero_fraction >= 1.0 {
            return self.max;
        }
        (self.min + zero_fraction * (self.max - self.min)).min(self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TechParams {
    /// mW per MB.
    pub static_mw: Span,
    /// pJ per byte access.
    pub read_pj: Span,
    pub write_pj: Span,
    /// Area per byte relative to SRAM.
    pub area_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RramParams {
    pub read_pj: f64,
    pub write_pj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnergyParams {
    pub sram: TechParams,
    pub edram: TechParams,
    pub mcaimem: TechParams,
    #[serde(default)]
    pub rram: Option<RramParams>,
    /// Sense reference that sets the refresh period of plain 2T eDRAM.
    #[serde(default = "default_edram_vref")]
    pub edram_refresh_v_ref: f64,
}

fn default_edram_vref() -> f64 {
    0.5
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self {
            sram: TechParams {
                static_mw: Span::flat(19.29),
                read_pj: Span::flat(0.08),
                write_pj: Span::flat(0.16),
                area_ratio: 1.0,
            },
            edram: TechParams {
                static_mw: Span::new(0.84, 5.03),
                read_pj: Span::new(0.00016, 0.14),
                write_pj: Span::new(0.00016, 0.0184),
                area_ratio: 0.48,
            },
            mcaimem: TechParams {
                static_mw: Span::new(3.15, 6.82),
                read_pj: Span::new(0.01014, 0.1325),
                write_pj: Span::new(0.02014, 0.0361),
                area_ratio: 0.52,
            },
            rram: None,
            edram_refresh_v_ref: default_edram_vref(),
        }
    }
}

fn check_fraction(zero_fraction: f64) -> Result<()> {
    if (0.0..=1.0).contains(&zero_fraction) {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "zero fraction must be in [0,1], got {zero_fraction}"
        )))
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("sram", &self.sram), ("edram", &self.edram), ("mcaimem", &self.mcaimem)] {
            for s in [t.static_mw, t.read_pj, t.write_pj] {
                if !(s.min >= 0.0 && s.min <= s.max) {
                    return Err(Error::Domain(format!("{name}: need 0 <= min <= max, got {s:?}")));
                }
            }
            if !(t.area_ratio > 0.0) {
                return Err(Error::Domain(format!("{name}: area ratio must be positive")));
            }
        }
        if let Some(r) = self.rram {
            if !(r.read_pj >= 0.0 && r.write_pj >= 0.0) {
                return Err(Error::Domain("rram: energies must be >= 0".into()));
            }
        }
        Ok(())
    }

    fn table(&self, tech: Tech) -> Result<&TechParams> {
        match tech {
            Tech::Sram => Ok(&self.sram),
            Tech::Edram => Ok(&self.edram),
            Tech::Mcaimem => Ok(&self.mcaimem),
            Tech::Rram => Err(Error::Domain("RRAM has no tabulated static/area parameters".into())),
        }
    }

    fn rram(&self) -> Result<RramParams> {
        self.rram
            .ok_or_else(|| Error::Domain("RRAM read/write energies must be supplied in the energy parameters".into()))
    }

    /// Static power in mW for `capacity_mb` megabytes.
    pub fn static_power(&self, tech: Tech, zero_fraction: f64, capacity_mb: f64) -> Result<f64> {
        check_fraction(zero_fraction)?;
        if !(capacity_mb >= 0.0) {
            return Err(Error::Domain(format!("capacity must be >= 0, got {capacity_mb}")));
        }
        if tech == Tech::Rram {
            return Ok(0.0);
        }
        Ok(self.table(tech)?.static_mw.at(zero_fraction) * capacity_mb)
    }

    /// Energy of one byte access in pJ.
    pub fn access_energy(&self, tech: Tech, op: Access, zero_fraction: f64) -> Result<f64> {
        check_fraction(zero_fraction)?;
        if tech == Tech::Rram {
            let r = self.rram()?;
            return Ok(match op {
                Access::Read => r.read_pj,
                Access::Write => r.write_pj,
            });
        }
        let t = self.table(tech)?;
        Ok(match op {
            Access::Read => t.read_pj.at(zero_fraction),
            Access::Write => t.write_pj.at(zero_fraction),
        })
    }

    /// Relative area of `capacity_bytes`, in units where one SRAM cell is 1.
    pub fn area(&self, tech: Tech, capacity_bytes: u64) -> Result<f64> {
        if capacity_bytes == 0 {
            return Err(Error::Domain("capacity must be positive".into()));
        }
        Ok(capacity_bytes as f64 * SRAM_BYTE_AREA * self.table(tech)?.area_ratio)
    }

    /// Area of one stretched eDRAM cell implied by the mixed-byte ratio
    /// (one SRAM cell plus seven eDRAM cells per byte).
    pub fn stretched_edram_cell_ratio(&self) -> f64 {
        (self.mcaimem.area_ratio * SRAM_BYTE_AREA - 1.0) / 7.0
    }
}

/// Row refreshes over `duration_ns` and their energy in joules, costed as
/// row reads at `zero_fraction`.
pub fn refresh_energy(
    params: &EnergyParams,
    tech: Tech,
    config: &ArrayConfig,
    cal: &RetentionCalibration,
    duration_ns: u64,
    zero_fraction: f64,
) -> Result<(f64, u64)> {
    check_fraction(zero_fraction)?;
    if !tech.needs_refresh() {
        return Ok((0.0, 0));
    }
    let count = refresh_event_count(config, cal, duration_ns)?;
    let per_byte = params.access_energy(tech, Access::Read, zero_fraction)?;
    Ok((count as f64 * config.bytes_per_row as f64 * per_byte * 1e-12, count))
}

/// Everything needed to cost a trace on one buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyContext {
    pub params: EnergyParams,
    pub calibration: RetentionCalibration,
    /// Reference geometry and refresh policy; scaled linearly to the buffer
    /// capacity.
    pub array: ArrayConfig,
    pub capacity_bytes: u64,
    pub clock_hz: f64,
}

impl EnergyContext {
    /// Default parameters and calibration sized to `accel`'s buffer, with
    /// MCAIMem refresh at `v_ref`.
    pub fn for_accel(accel: &AccelConfig, v_ref: f64) -> Self {
        Self {
            params: EnergyParams::default(),
            calibration: RetentionCalibration::default(),
            array: ArrayConfig {
                v_ref,
                clock_hz: accel.clock_hz,
                ..ArrayConfig::default()
            },
            capacity_bytes: accel.buffer_capacity_bytes,
            clock_hz: accel.clock_hz,
        }
    }

    pub fn capacity_mb(&self) -> f64 {
        self.capacity_bytes as f64 / BYTES_PER_MB
    }

    /// Array configuration used for `tech`'s refresh schedule.
    pub fn refresh_config(&self, tech: Tech) -> ArrayConfig {
        let mut cfg = self.array.clone();
        if tech == Tech::Edram {
            cfg.v_ref = self.params.edram_refresh_v_ref;
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub tech: Tech,
    pub static_energy_j: f64,
    pub read_energy_j: f64,
    pub write_energy_j: f64,
    pub refresh_energy_j: f64,
    pub total_j: f64,
    pub duration_s: f64,
    pub refresh_count: u64,
    pub zero_fraction: f64,
}

impl EnergyReport {
    pub fn zero(tech: Tech) -> Self {
        Self {
            tech,
            static_energy_j: 0.0,
            read_energy_j: 0.0,
            write_energy_j: 0.0,
            refresh_energy_j: 0.0,
            total_j: 0.0,
            duration_s: 0.0,
            refresh_count: 0,
            zero_fraction: 0.0,
        }
    }

    pub fn accumulate(&mut self, other: &EnergyReport) {
        self.static_energy_j += other.static_energy_j;
        self.read_energy_j += other.read_energy_j;
        self.write_energy_j += other.write_energy_j;
        self.refresh_energy_j += other.refresh_energy_j;
        self.total_j += other.total_j;
        self.duration_s += other.duration_s;
        self.refresh_count += other.refresh_count;
        self.zero_fraction = other.zero_fraction;
    }
}

fn class_zero_fraction(tech: Tech, s: &BitStats) -> f64 {
    match tech {
        Tech::Mcaimem => s.encoded_zero_fraction,
        _ => s.raw_zero_fraction,
    }
}

/// Zero fraction of the buffer contents, weighted by access volume per
/// operand class.
pub fn stored_zero_fraction(tech: Tech, stats: &TraceStats) -> f64 {
    let ops = &stats.operands;
    let parts = [
        (stats.ifmap_reads_bytes as f64, class_zero_fraction(tech, &ops.ifmap)),
        (stats.filter_reads_bytes as f64, class_zero_fraction(tech, &ops.filter)),
        (stats.ofmap_writes_bytes as f64, class_zero_fraction(tech, &ops.ofmap)),
    ];
    let weight: f64 = parts.iter().map(|p| p.0).sum();
    if weight == 0.0 {
        return parts.iter().map(|p| p.1).sum::<f64>() / 3.0;
    }
    (parts.iter().map(|p| p.0 * p.1).sum::<f64>() / weight).clamp(0.0, 1.0)
}

pub fn total_energy(stats: &TraceStats, tech: Tech, ctx: &EnergyContext) -> Result<EnergyReport> {
    if !(ctx.clock_hz > 0.0) {
        return Err(Error::Domain("clock must be positive".into()));
    }
    let p = &ctx.params;
    let duration_s = stats.cycles as f64 / ctx.clock_hz;
    let zf = stored_zero_fraction(tech, stats);
    let ops = &stats.operands;

    let static_energy_j = p.static_power(tech, zf, ctx.capacity_mb())? * 1e-3 * duration_s;
    let read_pj = stats.ifmap_reads_bytes as f64
        * p.access_energy(tech, Access::Read, class_zero_fraction(tech, &ops.ifmap))?
        + stats.filter_reads_bytes as f64
            * p.access_energy(tech, Access::Read, class_zero_fraction(tech, &ops.filter))?;
    let write_pj = stats.ofmap_writes_bytes as f64
        * p.access_energy(tech, Access::Write, class_zero_fraction(tech, &ops.ofmap))?;

    let (refresh_energy_j, refresh_count) = if tech.needs_refresh() {
        let cfg = ctx.refresh_config(tech);
        let duration_ns = (duration_s * 1e9).round() as u64;
        let (e, n) = refresh_energy(p, tech, &cfg, &ctx.calibration, duration_ns, zf)?;
        let scale = ctx.capacity_bytes as f64 / cfg.capacity_bytes() as f64;
        (e * scale, (n as f64 * scale).round() as u64)
    } else {
        (0.0, 0)
    };

    let read_energy_j = read_pj * 1e-12;
    let write_energy_j = write_pj * 1e-12;
    Ok(EnergyReport {
        tech,
        static_energy_j,
        read_energy_j,
        write_energy_j,
        refresh_energy_j,
        total_j: static_energy_j + read_energy_j + write_energy_j + refresh_energy_j,
        duration_s,
        refresh_count,
        zero_fraction: zf,
    })
}

/// Access counts observed on one physical array, e.g. by trace replay.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct AccessCounts {
    pub reads_bytes: u64,
    pub writes_bytes: u64,
    pub row_refreshes: u64,
    pub duration_ns: u64,
}

/// Costs observed activity on an array of `config`'s geometry. Refreshes are
/// the ones actually performed rather than a schedule estimate.
pub fn array_energy(
    params: &EnergyParams,
    tech: Tech,
    config: &ArrayConfig,
    counts: &AccessCounts,
    zero_fraction: f64,
) -> Result<EnergyReport> {
    let duration_s = counts.duration_ns as f64 * 1e-9;
    let mb = config.capacity_bytes() as f64 / BYTES_PER_MB;
    let static_energy_j = params.static_power(tech, zero_fraction, mb)? * 1e-3 * duration_s;
    let read = params.access_energy(tech, Access::Read, zero_fraction)?;
    let write = params.access_energy(tech, Access::Write, zero_fraction)?;
    let read_energy_j = counts.reads_bytes as f64 * read * 1e-12;
    let write_energy_j = counts.writes_bytes as f64 * write * 1e-12;
    let (refresh_energy_j, refresh_count) = if tech.needs_refresh() {
        (
            counts.row_refreshes as f64 * config.bytes_per_row as f64 * read * 1e-12,
            counts.row_refreshes,
        )
    } else {
        (0.0, 0)
    };
    Ok(EnergyReport {
        tech,
        static_energy_j,
        read_energy_j,
        write_energy_j,
        refresh_energy_j,
        total_j: static_energy_j + read_energy_j + write_energy_j + refresh_energy_j,
        duration_s,
        refresh_count,
        zero_fraction,
    })
}

/// Per-layer reports and their sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkEnergy {
    pub tech: Tech,
    pub layers: Vec<(String, EnergyReport)>,
    pub total: EnergyReport,
}

pub fn network_energy(net: &NetworkStats, tech: Tech, ctx: &EnergyContext) -> Result<NetworkEnergy> {
    let mut total = EnergyReport::zero(tech);
    let mut layers = Vec::with_capacity(net.layers.len());
    for l in &net.layers {
        let r = total_energy(&l.stats, tech, ctx)?;
        total.accumulate(&r);
        layers.push((l.name.clone(), r));
    }
    total.zero_fraction = stored_zero_fraction(tech, &net.total);
    Ok(NetworkEnergy { tech, layers, total })
}

/// Relative ops-per-watt improvement when a buffer that draws
/// `buffer_power_share` of chip power has its energy scaled by
/// `buffer_energy_ratio`.
pub fn ops_per_watt_gain(buffer_power_share: f64, buffer_energy_ratio: f64) -> Result<f64> {
    if !(buffer_power_share > 0.0 && buffer_power_share < 1.0) {
        return Err(Error::Domain(format!(
            "power share must be in (0,1), got {buffer_power_share}"
        )));
    }
    if !(buffer_energy_ratio > 0.0 && buffer_energy_ratio.is_finite()) {
        return Err(Error::Domain(format!(
            "energy ratio must be positive, got {buffer_energy_ratio}"
        )));
    }
    Ok(1.0 / ((1.0 - buffer_power_share) + buffer_power_share * buffer_energy_ratio) - 1.0)
}

pub const REPORT_HEADER: [&str; 11] = [
    "layer",
    "tech",
    "duration_s",
    "static_j",
    "read_j",
    "write_j",
    "refresh_j",
    "total_j",
    "refresh_count",
    "zero_fraction",
    "cycles",
];

/// One CSV row per layer plus a `total` row, for each network report.
pub fn write_reports_csv<W: std::io::Write>(reports: &[NetworkEnergy], net: &NetworkStats, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPORT_HEADER)?;
    for ne in reports {
        let cycles = net
            .layers
            .iter()
            .map(|l| l.stats.cycles)
            .chain(std::iter::once(net.total.cycles));
        let rows = ne
            .layers
            .iter()
            .map(|(n, r)| (n.as_str(), r))
            .chain(std::iter::once(("total", &ne.total)));
        for ((name, r), c) in rows.zip(cycles) {
            w.write_record([
                name.to_string(),
                r.tech.to_string(),
                r.duration_s.to_string(),
                r.static_energy_j.to_string(),
                r.read_energy_j.to_string(),
                r.write_energy_j.to_string(),
                r.refresh_energy_j.to_string(),
                r.total_j.to_string(),
                r.refresh_count.to_string(),
                r.zero_fraction.to_string(),
                c.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataflow::OperandStats;

    fn params() -> EnergyParams {
        EnergyParams::default()
    }

    #[test]
    fn static_power_endpoints() {
        let p = params();
        assert_eq!(p.static_power(Tech::Mcaimem, 0.0, 1.0).unwrap(), 3.15);
        assert_eq!(p.static_power(Tech::Mcaimem, 1.0, 1.0).unwrap(), 6.82);
        for z in [0.0, 0.3, 1.0] {
            assert_eq!(p.static_power(Tech::Sram, z, 1.0).unwrap(), 19.29);
            assert_eq!(p.static_power(Tech::Rram, z, 1.0).unwrap(), 0.0);
        }
        assert!(p.static_power(Tech::Edram, 1.5, 1.0).is_err());
        assert!(p.static_power(Tech::Edram, -0.1, 1.0).is_err());
    }

    #[test]
    fn access_energy_examples() {
        let p = params();
        assert_eq!(p.access_energy(Tech::Mcaimem, Access::Read, 0.0).unwrap(), 0.01014);
        assert_eq!(p.access_energy(Tech::Mcaimem, Access::Write, 1.0).unwrap(), 0.0361);
        assert_eq!(p.access_energy(Tech::Sram, Access::Read, 0.5).unwrap(), 0.08);
        assert!(p.access_energy(Tech::Rram, Access::Read, 0.5).is_err());
    }

    #[test]
    fn interpolation_is_monotone() {
        let s = Span::new(0.01014, 0.1325);
        let mut prev = s.at(0.0);
        for i in 1..=1000 {
            let v = s.at(i as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
        assert_eq!(prev, 0.1325);
    }

    #[test]
    fn refresh_energy_examples() {
        let p = params();
        let cal = RetentionCalibration::default();
        let cfg = ArrayConfig::default();
        assert_eq!(refresh_energy(&p, Tech::Mcaimem, &cfg, &cal, 0, 0.0).unwrap(), (0.0, 0));
        let (e, n) = refresh_energy(&p, Tech::Mcaimem, &cfg, &cal, 1_000_000, 0.0).unwrap();
        assert!((n as f64 - 1.30e6).abs() / 1.30e6 < 0.005, "{n}");
        assert_eq!(e, n as f64 * 64.0 * 0.01014e-12);
        assert!((e - 0.85e-6).abs() < 0.01e-6, "{e}");

        let low = ArrayConfig {
            v_ref: 0.5,
            ..cfg.clone()
        };
        let (e05, _) = refresh_energy(&p, Tech::Mcaimem, &low, &cal, 1_000_000, 0.2).unwrap();
        let (e08, _) = refresh_energy(&p, Tech::Mcaimem, &cfg, &cal, 1_000_000, 0.2).unwrap();
        assert!((e05 / e08 - 12.57 / 1.3).abs() < 0.01, "{}", e05 / e08);
        assert_eq!(
            refresh_energy(&p, Tech::Sram, &cfg, &cal, 1_000_000, 0.2).unwrap(),
            (0.0, 0)
        );
    }

    fn ctx() -> EnergyContext {
        EnergyContext {
            params: EnergyParams {
                rram: Some(RramParams {
                    read_pj: 0.4,
                    write_pj: 20.0,
                }),
                ..params()
            },
            calibration: RetentionCalibration::default(),
            array: ArrayConfig::default(),
            capacity_bytes: 1 << 20,
            clock_hz: 1e8,
        }
    }

    fn stats(cycles: u64, reads: u64, writes: u64, zf: f64) -> TraceStats {
        TraceStats {
            cycles,
            ifmap_reads_bytes: reads,
            filter_reads_bytes: reads / 2,
            ofmap_writes_bytes: writes,
            operands: OperandStats::same(BitStats::uniform(zf)),
        }
    }

    #[test]
    fn zero_trace_is_all_zero() {
        for tech in Tech::ALL {
            let r = total_energy(&stats(0, 0, 0, 0.3), tech, &ctx()).unwrap();
            assert_eq!(r.total_j, 0.0);
            assert_eq!(r.refresh_count, 0);
        }
    }

    #[test]
    fn static_dominated_ratio_approaches_table_limit() {
        let c = EnergyContext {
            array: ArrayConfig {
                refresh_enabled: false,
                ..ArrayConfig::default()
            },
            ..ctx()
        };
        let s = stats(1_000_000_000, 10, 10, 0.0);
        let sram = total_energy(&s, Tech::Sram, &c).unwrap();
        let mc = total_energy(&s, Tech::Mcaimem, &c).unwrap();
        assert!((sram.total_j / mc.total_j - 19.29 / 3.15).abs() < 1e-3);
    }

    #[test]
    fn report_components_sum() {
        for tech in Tech::ALL {
            let r = total_energy(&stats(123_456, 999_999, 33_333, 0.17), tech, &ctx()).unwrap();
            let sum = r.static_energy_j + r.read_energy_j + r.write_energy_j + r.refresh_energy_j;
            assert_eq!(r.total_j, sum);
            if tech == Tech::Rram {
                assert_eq!(r.static_energy_j, 0.0);
                assert_eq!(r.refresh_energy_j, 0.0);
            }
        }
    }

    #[test]
    fn rram_costs_more_on_write_heavy_traces() {
        let s = stats(10_000, 1_000, 1_000_000, 0.2);
        let sram = total_energy(&s, Tech::Sram, &ctx()).unwrap();
        let rram = total_energy(&s, Tech::Rram, &ctx()).unwrap();
        assert!(rram.total_j > sram.total_j);
    }

    #[test]
    fn ops_per_watt_examples() {
        assert!((ops_per_watt_gain(0.425, 1.0 / 3.4).unwrap() - 0.432).abs() < 0.005);
        assert!((ops_per_watt_gain(0.37, 1.0 / 3.4).unwrap() - 0.354).abs() < 0.005);
        assert_eq!(ops_per_watt_gain(0.4, 1.0).unwrap(), 0.0);
        assert!(ops_per_watt_gain(0.0, 0.5).is_err());
        assert!(ops_per_watt_gain(0.4, 0.0).is_err());
    }

    #[test]
    fn area_examples() {
        let p = params();
        let n = 1 << 20;
        let ratio = p.area(Tech::Mcaimem, n).unwrap() / p.area(Tech::Sram, n).unwrap();
        assert!((ratio - 0.52).abs() < 1e-12);
        assert_eq!(p.area(Tech::Sram, 16384).unwrap(), 16384.0 * 8.0);
        assert!((p.stretched_edram_cell_ratio() - 0.451).abs() < 0.001);
        assert!(p.area(Tech::Sram, 0).is_err());
        assert!(p.area(Tech::Rram, 10).is_err());
    }

    #[test]
    fn params_json_round_trip() {
        let p = ctx().params;
        let back: EnergyParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        let bad = EnergyParams {
            sram: TechParams {
                static_mw: Span::new(2.0, 1.0),
                ..p.sram
            },
            ..p
        };
        assert!(bad.validate().is_err());
    }
}
