//! Output-stationary systolic-array front-end.
//!
//! Layers use SCALE-Sim's topology CSV. For a layer with window size
//! `W = filter_h * filter_w * channels`, `N = ofmap_h * ofmap_w` windows and
//! `M` filters on an `R x C` array:
//!
//! ```text
//! folds  = ceil(N / R) * ceil(M / C)
//! cycles = folds * (W + R + C - 2)
//! reads  = N * W (ifmap) + M * W (filter)
//! writes = N * M (ofmap)
//! ```

use std::io::Read;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub name: String,
    pub ifmap_h: u64,
    pub ifmap_w: u64,
    pub filter_h: u64,
    pub filter_w: u64,
    pub channels: u64,
    pub num_filters: u64,
    pub stride: u64,
}

impl LayerSpec {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.ifmap_h,
            self.ifmap_w,
            self.filter_h,
            self.filter_w,
            self.channels,
            self.num_filters,
            self.stride,
        ];
        if dims.contains(&0) {
            return Err(Error::Domain(format!("layer {}: dimensions must be >= 1", self.name)));
        }
        if self.filter_h > self.ifmap_h || self.filter_w > self.ifmap_w {
            return Err(Error::Domain(format!("layer {}: filter larger than ifmap", self.name)));
        }
        Ok(())
    }

    pub fn ofmap_h(&self) -> u64 {
        (self.ifmap_h - self.filter_h) / self.stride + 1
    }

    pub fn ofmap_w(&self) -> u64 {
        (self.ifmap_w - self.filter_w) / self.stride + 1
    }

    pub fn window_size(&self) -> u64 {
        self.filter_h * self.filter_w * self.channels
    }

    pub fn num_windows(&self) -> u64 {
        self.ofmap_h() * self.ofmap_w()
    }

    /// A fully-connected layer as a 1x1 convolution over a 1x1 ifmap.
    pub fn fully_connected(name: impl Into<String>, inputs: u64, outputs: u64) -> Self {
        Self {
            name: name.into(),
            ifmap_h: 1,
            ifmap_w: 1,
            filter_h: 1,
            filter_w: 1,
            channels: inputs,
            num_filters: outputs,
            stride: 1,
        }
    }
}

pub const TOPOLOGY_HEADER: [&str; 8] = [
    "name",
    "ifmap_h",
    "ifmap_w",
    "filter_h",
    "filter_w",
    "channels",
    "num_filters",
    "stride",
];

/// Parses a topology CSV. The first row is a header and is skipped; a
/// trailing empty column (common in SCALE-Sim files) is tolerated.
pub fn parse_topology<R: Read>(input: R, name: &str) -> Result<Vec<LayerSpec>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut layers = Vec::new();
    let mut saw_header = false;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec.map_err(|e| Error::parse(name, line, e.to_string()))?;
        if !saw_header {
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = rec.iter().collect();
        let used = fields.iter().rposition(|f| !f.is_empty()).map_or(0, |p| p + 1);
        if used == 0 {
            continue;
        }
        if used != 8 {
            return Err(Error::parse(name, line, format!("expected 8 columns, found {used}")));
        }
        let mut dims = [0u64; 7];
        for (k, d) in dims.iter_mut().enumerate() {
            let raw = fields[k + 1];
            let v: i64 = raw.parse().map_err(|_| {
                Error::parse(
                    name,
                    line,
                    format!("{} is not an integer: {raw:?}", TOPOLOGY_HEADER[k + 1]),
                )
            })?;
            if v < 1 {
                return Err(Error::parse(
                    name,
                    line,
                    format!("{} must be >= 1, got {v}", TOPOLOGY_HEADER[k + 1]),
                ));
            }
            *d = v as u64;
        }
        let spec = LayerSpec {
            name: fields[0].to_string(),
            ifmap_h: dims[0],
            ifmap_w: dims[1],
            filter_h: dims[2],
            filter_w: dims[3],
            channels: dims[4],
            num_filters: dims[5],
            stride: dims[6],
        };
        spec.validate().map_err(|e| Error::parse(name, line, e.to_string()))?;
        layers.push(spec);
    }
    if !saw_header {
        return Err(Error::parse(name, 1, "missing header row"));
    }
    Ok(layers)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Eyeriss,
    Tpuv1,
}

impl Preset {
    /// Fraction of chip power spent in the on-chip buffer.
    pub fn buffer_power_share(self) -> f64 {
        match self {
            Preset::Eyeriss => 0.425,
            Preset::Tpuv1 => 0.37,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Eyeriss => "eyeriss",
            Preset::Tpuv1 => "tpuv1",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eyeriss" => Ok(Preset::Eyeriss),
            "tpuv1" => Ok(Preset::Tpuv1),
            _ => Err(Error::Domain(format!(
                "unknown preset {s:?} (expected eyeriss or tpuv1)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccelConfig {
    pub array_rows: u64,
    pub array_cols: u64,
    pub buffer_capacity_bytes: u64,
    pub clock_hz: f64,
    pub preset: Option<Preset>,
}

impl AccelConfig {
    pub fn preset(p: Preset) -> Self {
        match p {
            // 12 x 14 PEs, 108 KB of on-chip SRAM.
            Preset::Eyeriss => Self {
                array_rows: 12,
                array_cols: 14,
                buffer_capacity_bytes: 108 * 1024,
                clock_hz: 1e8,
                preset: Some(p),
            },
            // 256 x 256 MXU, 8 MB of buffer.
            Preset::Tpuv1 => Self {
                array_rows: 256,
                array_cols: 256,
                buffer_capacity_bytes: 8 << 20,
                clock_hz: 1e8,
                preset: Some(p),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.array_rows == 0 || self.array_cols == 0 {
            return Err(Error::Domain("systolic array dimensions must be >= 1".into()));
        }
        if !(self.clock_hz > 0.0) {
            return Err(Error::Domain("clock must be positive".into()));
        }
        Ok(())
    }
}

/// Zero-bit statistics of one operand class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BitStats {
    /// Zero fraction of the stored cells after one-enhancement encoding.
    pub encoded_zero_fraction: f64,
    /// Zero fraction of the plain two's-complement bits.
    pub raw_zero_fraction: f64,
}

impl BitStats {
    pub fn from_tensor(t: &[i8]) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::EmptyInput("operand statistics of an empty tensor"));
        }
        let encoded_zero_fraction = codec::zero_fraction(&codec::encode_tensor(t))?;
        let zeros: u64 = t.iter().map(|&v| u64::from((v as u8).count_zeros())).sum();
        Ok(Self {
            encoded_zero_fraction,
            raw_zero_fraction: zeros as f64 / (t.len() * 8) as f64,
        })
    }

    pub fn uniform(zero_fraction: f64) -> Self {
        Self {
            encoded_zero_fraction: zero_fraction,
            raw_zero_fraction: zero_fraction,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperandStats {
    pub ifmap: BitStats,
    pub filter: BitStats,
    pub ofmap: BitStats,
}

impl OperandStats {
    pub fn same(s: BitStats) -> Self {
        Self {
            ifmap: s,
            filter: s,
            ofmap: s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStats {
    pub cycles: u64,
    pub ifmap_reads_bytes: u64,
    pub filter_reads_bytes: u64,
    pub ofmap_writes_bytes: u64,
    pub operands: OperandStats,
}

impl TraceStats {
    pub fn empty(operands: OperandStats) -> Self {
        Self {
            cycles: 0,
            ifmap_reads_bytes: 0,
            filter_reads_bytes: 0,
            ofmap_writes_bytes: 0,
            operands,
        }
    }

    pub fn buffer_reads_bytes(&self) -> u64 {
        self.ifmap_reads_bytes + self.filter_reads_bytes
    }

    pub fn buffer_writes_bytes(&self) -> u64 {
        self.ofmap_writes_bytes
    }

    /// Adds counts; operand statistics of `self` are kept.
    pub fn accumulate(&mut self, other: &TraceStats) {
        self.cycles += other.cycles;
        self.ifmap_reads_bytes += other.ifmap_reads_bytes;
        self.filter_reads_bytes += other.filter_reads_bytes;
        self.ofmap_writes_bytes += other.ofmap_writes_bytes;
    }
}

pub fn simulate_layer(spec: &LayerSpec, config: &AccelConfig, operands: OperandStats) -> Result<TraceStats> {
    spec.validate()?;
    config.validate()?;
    let n = spec.num_windows();
    let w = spec.window_size();
    let m = spec.num_filters;
    let (r, c) = (config.array_rows, config.array_cols);
    let folds = n.div_ceil(r) * m.div_ceil(c);
    Ok(TraceStats {
        cycles: folds * (w + r + c - 2),
        ifmap_reads_bytes: n * w,
        filter_reads_bytes: m * w,
        ofmap_writes_bytes: n * m,
        operands,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStats {
    pub name: String,
    pub stats: TraceStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub layers: Vec<LayerStats>,
    pub total: TraceStats,
    pub duration_s: f64,
}

pub fn run_network(layers: &[LayerSpec], config: &AccelConfig, operands: OperandStats) -> Result<NetworkStats> {
    config.validate()?;
    let per_layer = layers
        .par_iter()
        .map(|l| {
            simulate_layer(l, config, operands).map(|stats| LayerStats {
                name: l.name.clone(),
                stats,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = TraceStats::empty(operands);
    for l in &per_layer {
        total.accumulate(&l.stats);
    }
    Ok(NetworkStats {
        duration_s: total.cycles as f64 / config.clock_hz,
        layers: per_layer,
        total,
    })
}

/// Writes `layer,cycles,ifmap_reads_bytes,filter_reads_bytes,ofmap_writes_bytes`
/// rows plus a `total` row.
pub fn write_stats_csv<W: std::io::Write>(stats: &NetworkStats, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "layer",
        "cycles",
        "ifmap_reads_bytes",
        "filter_reads_bytes",
        "ofmap_writes_bytes",
    ])?;
    let rows = stats
        .layers
        .iter()
        .map(|l| (l.name.as_str(), &l.stats))
        .chain(std::iter::once(("total", &stats.total)));
    for (name, s) in rows {
        w.write_record([
            name.to_string(),
            s.cycles.to_string(),
            s.ifmap_reads_bytes.to_string(),
            s.filter_reads_bytes.to_string(),
            s.ofmap_writes_bytes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Built-in ResNet-50 topology (padded ifmaps, SCALE-Sim layout).
pub const RESNET50_CSV: &str = include_str!("../data/resnet50.csv");

pub fn resnet50() -> Vec<LayerSpec> {
    parse_topology(RESNET50_CSV.as_bytes(), "resnet50.csv").expect("built-in topology parses")
}
