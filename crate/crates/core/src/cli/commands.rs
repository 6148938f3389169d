use std::fs;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;

use super::output::{read_manifest, Sink};
use super::{CalibrateArgs, Cli, Command, CurvesArgs, EnergyArgs, InjectArgs, MemsimArgs, RerunArgs, RunConfig};
use crate::array::trace::{parse_trace, replay};
use crate::array::{ArrayConfig, MixedArray};
use crate::codec;
use crate::dataflow::{self, AccelConfig, BitStats, OperandStats, Preset};
use crate::energy::{self, AccessCounts, EnergyContext, EnergyReport, Tech};
use crate::error::{Error, Result};
use crate::fault::classifier::eval_classifier;
use crate::fault::{self, EncodingMode, InjectionConfig};
use crate::retention::{calibrate as fit, Anchor, DEFAULT_ANCHORS, DEFAULT_TARGET_P};
use crate::tensor::{default_operand_tensor, read_tensor};
use crate::units::parse_duration_us;

pub struct Ctx<'a> {
    pub seed: u64,
    pub config: &'a RunConfig,
}

fn read_anchors(path: &Path) -> Result<Vec<Anchor>> {
    let name = path.display().to_string();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::parse(&name, i + 2, e.to_string())))
        .collect()
}

pub fn calibrate(a: &CalibrateArgs, _ctx: &Ctx, sink: &mut Sink) -> Result<()> {
    let anchors = match &a.anchors {
        Some(p) => read_anchors(p)?,
        None => DEFAULT_ANCHORS.to_vec(),
    };
    let cal = fit(&anchors, a.vdd)?;
    sink.json("calibration.json", &cal)?;
    println!("sigma = {:.6}", cal.sigma);
    println!("beta  = {:.6}", cal.beta);
    println!("A     = {:.6} us", cal.a_us);
    Ok(())
}

#[derive(Serialize)]
struct CurveRow {
    v_ref: f64,
    t_us: f64,
    p_flip: f64,
}

#[derive(Serialize)]
struct CrossingRow {
    v_ref: f64,
    median_crossing_us: f64,
    refresh_interval_us: f64,
    extrapolated: bool,
}

pub fn curves(a: &CurvesArgs, ctx: &Ctx, sink: &mut Sink) -> Result<()> {
    let cal = ctx.config.calibration();
    let t_max = parse_duration_us(&a.tmax)?;
    let mut rows = Vec::new();
    let mut crossings = Vec::new();
    for &v in &a.vref {
        let curve = cal.generate_curve(v, t_max, a.points)?;
        if curve.extrapolated {
            eprintln!("warning: V_REF {v} V is outside the calibrated range; extrapolating");
        }
        rows.extend(
            curve
                .samples
                .iter()
                .map(|&(t_us, p_flip)| CurveRow { v_ref: v, t_us, p_flip }),
        );
        crossings.push(CrossingRow {
            v_ref: v,
            median_crossing_us: cal.median_crossing_us(v)?,
            refresh_interval_us: cal.refresh_interval(v, DEFAULT_TARGET_P)?,
            extrapolated: curve.extrapolated,
        });
    }
    sink.table("curves", &rows)?;
    sink.table("crossings", &crossings)?;
    for c in &crossings {
        println!("V_REF {:.2} V: 1% at {:.3} us", c.v_ref, c.refresh_interval_us);
    }
    Ok(())
}

#[derive(Serialize)]
struct SummaryRow {
    reads: u64,
    writes: u64,
    explicit_refreshes: u64,
    scheduled_refreshes: u64,
    mismatches: u64,
    duration_ns: u64,
    written_zero_fraction: f64,
    flips: u64,
}

pub fn memsim(a: &MemsimArgs, ctx: &Ctx, sink: &mut Sink) -> Result<()> {
    let mut cfg: ArrayConfig = ctx.config.array.clone();
    if let Some(v) = a.vref {
        cfg.v_ref = v;
    }
    if a.no_refresh {
        cfg.refresh_enabled = false;
    }
    let text = fs::read(&a.trace).map_err(|e| Error::io(&a.trace, e))?;
    let records = parse_trace(text.as_slice(), &a.trace.display().to_string())?;
    let mut array = MixedArray::new(cfg.clone(), ctx.config.calibration(), ctx.seed)?;
    let (events, summary) = replay(&mut array, &records, !a.no_encoder)?;

    let counts = AccessCounts {
        reads_bytes: summary.reads,
        writes_bytes: summary.writes,
        row_refreshes: summary.scheduled_refreshes + summary.explicit_refreshes,
        duration_ns: summary.duration_ns,
    };
    let report = energy::array_energy(
        &ctx.config.energy,
        Tech::Mcaimem,
        &cfg,
        &counts,
        summary.written_zero_fraction,
    )?;

    sink.write("state.snap", &array.snapshot_bytes()?)?;
    sink.table("events", &events)?;
    sink.table(
        "summary",
        &[SummaryRow {
            reads: summary.reads,
            writes: summary.writes,
            explicit_refreshes: summary.explicit_refreshes,
            scheduled_refreshes: summary.scheduled_refreshes,
            mismatches: summary.mismatches,
            duration_ns: summary.duration_ns,
            written_zero_fraction: summary.written_zero_fraction,
            flips: array.counters().flips,
        }],
    )?;
    sink.table("energy", std::slice::from_ref(&report))?;
    println!(
        "{} reads, {} writes, {} mismatches, {:.6e} J",
        summary.reads, summary.writes, summary.mismatches, report.total_j
    );
    Ok(())
}

#[derive(Serialize)]
struct LayerRow<'a> {
    layer: &'a str,
    tech: Tech,
    cycles: u64,
    duration_s: f64,
    static_j: f64,
    read_j: f64,
    write_j: f64,
    refresh_j: f64,
    total_j: f64,
    refresh_count: u64,
    zero_fraction: f64,
}

impl<'a> LayerRow<'a> {
    fn new(layer: &'a str, cycles: u64, r: &EnergyReport) -> Self {
        Self {
            layer,
            tech: r.tech,
            cycles,
            duration_s: r.duration_s,
            static_j: r.static_energy_j,
            read_j: r.read_energy_j,
            write_j: r.write_energy_j,
            refresh_j: r.refresh_energy_j,
            total_j: r.total_j,
            refresh_count: r.refresh_count,
            zero_fraction: r.zero_fraction,
        }
    }
}

#[derive(Serialize)]
struct ComparisonRow {
    tech: Tech,
    total_j: f64,
    static_j: f64,
    dynamic_j: f64,
    refresh_j: f64,
    area_units: Option<f64>,
    area_vs_sram: Option<f64>,
    sram_over_tech: f64,
}

#[derive(Serialize)]
struct RefreshSweepRow {
    v_ref: f64,
    refresh_interval_us: f64,
    refresh_count: u64,
    refresh_j: f64,
    mcaimem_total_j: f64,
    sram_over_mcaimem: f64,
}

#[derive(Serialize)]
struct OpsRow {
    preset: &'static str,
    source: &'static str,
    buffer_power_share: f64,
    buffer_energy_ratio: f64,
    gain_pct: f64,
}

/// Published MCAIMem/SRAM buffer energy ratio (3.4x saving).
const REFERENCE_ENERGY_RATIO: f64 = 1.0 / 3.4;

pub fn energy(a: &EnergyArgs, ctx: &Ctx, sink: &mut Sink) -> Result<()> {
    let preset: Preset = a.preset.parse()?;
    let accel = AccelConfig::preset(preset);
    let layers = match &a.topology {
        Some(p) => {
            let f = fs::File::open(p).map_err(|e| Error::io(p, e))?;
            dataflow::parse_topology(f, &p.display().to_string())?
        }
        None => dataflow::resnet50(),
    };
    let data = match &a.tensor {
        Some(p) => read_tensor(p)?.data,
        None => default_operand_tensor(ctx.seed),
    };
    let operands = OperandStats::same(BitStats::from_tensor(&data)?);
    let net = dataflow::run_network(&layers, &accel, operands)?;

    let techs: Vec<Tech> = if a.tech.is_empty() {
        Tech::ALL
            .into_iter()
            .filter(|t| *t != Tech::Rram || ctx.config.energy.rram.is_some())
            .collect()
    } else {
        a.tech.iter().map(|s| s.parse()).collect::<Result<_>>()?
    };

    let context = |v_ref: f64| EnergyContext {
        params: ctx.config.energy.clone(),
        calibration: ctx.config.calibration(),
        array: ArrayConfig {
            v_ref,
            ..ctx.config.array.clone()
        },
        ..EnergyContext::for_accel(&accel, v_ref)
    };
    let main = context(a.vref);
    let sram = energy::network_energy(&net, Tech::Sram, &main)?.total;

    let mut layer_rows = Vec::new();
    let mut comparison = Vec::new();
    let mut reports = Vec::new();
    for &tech in &techs {
        reports.push(energy::network_energy(&net, tech, &main)?);
    }
    for ne in &reports {
        for ((name, r), l) in ne.layers.iter().zip(&net.layers) {
            layer_rows.push(LayerRow::new(name, l.stats.cycles, r));
        }
        layer_rows.push(LayerRow::new("total", net.total.cycles, &ne.total));
        let t = &ne.total;
        let area = main.params.area(ne.tech, accel.buffer_capacity_bytes).ok();
        let sram_area = main.params.area(Tech::Sram, accel.buffer_capacity_bytes)?;
        comparison.push(ComparisonRow {
            tech: ne.tech,
            total_j: t.total_j,
            static_j: t.static_energy_j,
            dynamic_j: t.read_energy_j + t.write_energy_j,
            refresh_j: t.refresh_energy_j,
            area_units: area,
            area_vs_sram: area.map(|x| x / sram_area),
            sram_over_tech: sram.total_j / t.total_j,
        });
    }

    let mut sweep = Vec::new();
    for &v in &a.sweep_vref {
        let c = context(v);
        let m = energy::network_energy(&net, Tech::Mcaimem, &c)?.total;
        sweep.push(RefreshSweepRow {
            v_ref: v,
            refresh_interval_us: c.calibration.refresh_interval(v, c.array.refresh_target_p)?,
            refresh_count: m.refresh_count,
            refresh_j: m.refresh_energy_j,
            mcaimem_total_j: m.total_j,
            sram_over_mcaimem: sram.total_j / m.total_j,
        });
    }

    let mcai = energy::network_energy(&net, Tech::Mcaimem, &main)?.total;
    let measured = mcai.total_j / sram.total_j;
    let mut ops = vec![OpsRow {
        preset: preset.name(),
        source: "measured",
        buffer_power_share: preset.buffer_power_share(),
        buffer_energy_ratio: measured,
        gain_pct: 100.0 * energy::ops_per_watt_gain(preset.buffer_power_share(), measured)?,
    }];
    for p in [Preset::Eyeriss, Preset::Tpuv1] {
        ops.push(OpsRow {
            preset: p.name(),
            source: "reference",
            buffer_power_share: p.buffer_power_share(),
            buffer_energy_ratio: REFERENCE_ENERGY_RATIO,
            gain_pct: 100.0 * energy::ops_per_watt_gain(p.buffer_power_share(), REFERENCE_ENERGY_RATIO)?,
        });
    }

    sink.table("layers", &layer_rows)?;
    sink.table("comparison", &comparison)?;
    sink.table("refresh_sweep", &sweep)?;
    sink.table("ops_per_watt", &ops)?;

    println!(
        "{} on {} layers, {:.6} s",
        preset.name(),
        net.layers.len(),
        net.duration_s
    );
    for c in &comparison {
        println!(
            "{:>8}  {:.6e} J  sram/tech {:.3}",
            c.tech.name(),
            c.total_j,
            c.sram_over_tech
        );
    }
    for o in &ops {
        println!("ops/W gain {} ({}): {:.1}%", o.preset, o.source, o.gain_pct);
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepCsvRow {
    rate: f64,
    mode: &'static str,
    mre: f64,
    mae: f64,
    max_abs: f64,
    flips: u64,
}

#[derive(Serialize)]
struct HistogramRow {
    bit_position: usize,
    ones_fraction: f64,
}

#[derive(Serialize)]
struct ClassifierRow {
    rate: f64,
    mode: &'static str,
    samples: usize,
    baseline_accuracy: f64,
    injected_accuracy: f64,
    accuracy_drop: f64,
}

fn parse_modes(s: &str) -> Result<Vec<EncodingMode>> {
    if s == "both" {
        return Ok(EncodingMode::BOTH.to_vec());
    }
    s.split(',').map(|m| m.trim().parse()).collect()
}

pub fn inject(a: &InjectArgs, ctx: &Ctx, sink: &mut Sink) -> Result<()> {
    let modes = parse_modes(&a.modes)?;
    for &r in &a.rates {
        InjectionConfig::rate(r, true, ctx.seed).validate()?;
    }
    let data = match &a.tensor {
        Some(p) => read_tensor(p)?.data,
        None => default_operand_tensor(ctx.seed),
    };
    let rows = fault::sweep(&data, &a.rates, &modes, ctx.seed)?;
    let table: Vec<SweepCsvRow> = rows
        .iter()
        .map(|r| SweepCsvRow {
            rate: r.rate,
            mode: r.mode.name(),
            mre: r.report.mean_relative_error,
            mae: r.report.mean_absolute_error,
            max_abs: r.report.max_absolute_error,
            flips: r.report.flip_count,
        })
        .collect();
    sink.table("sweep", &table)?;

    let hist = codec::ones_histogram(&codec::encode_tensor(&data))?;
    let hist_rows: Vec<HistogramRow> = hist
        .iter()
        .enumerate()
        .map(|(bit_position, &ones_fraction)| HistogramRow {
            bit_position,
            ones_fraction,
        })
        .collect();
    sink.table("histogram", &hist_rows)?;

    if let (Some(model), Some(inputs), Some(labels)) = (&a.model, &a.inputs, &a.labels) {
        let mut cls = Vec::new();
        for &rate in &a.rates {
            for &mode in &modes {
                let cfg = InjectionConfig::rate(rate, mode.encoder_enabled(), ctx.seed);
                let r = eval_classifier(model, inputs, labels, &cfg)?;
                cls.push(ClassifierRow {
                    rate,
                    mode: mode.name(),
                    samples: r.samples,
                    baseline_accuracy: r.baseline_accuracy,
                    injected_accuracy: r.injected_accuracy,
                    accuracy_drop: r.accuracy_drop,
                });
            }
        }
        sink.table("classifier", &cls)?;
        for c in &cls {
            println!(
                "rate {:.2} {:>7}: accuracy {:.4} -> {:.4}",
                c.rate, c.mode, c.baseline_accuracy, c.injected_accuracy
            );
        }
    }
    for t in &table {
        println!("rate {:.2} {:>7}: MRE {:.5} MAE {:.5}", t.rate, t.mode, t.mre, t.mae);
    }
    Ok(())
}

/// Executes the manifest's argv into `out` and checks every recorded output
/// hash.
pub fn rerun(a: &RerunArgs, out: &Path) -> Result<PathBuf> {
    let m = read_manifest(&a.manifest)?;
    let mut args = vec!["mcaimem".to_string(), "--out".to_string(), out.display().to_string()];
    args.extend(m.argv.iter().cloned());
    let cli = Cli::try_parse_from(&args).map_err(|e| Error::Format(format!("manifest argv: {e}")))?;
    if matches!(cli.command, Command::Rerun(_)) {
        return Err(Error::Format("a manifest cannot re-run another rerun".into()));
    }
    let new_manifest = super::execute(&cli, m.argv.clone())?;
    let fresh = read_manifest(&new_manifest)?;
    let mut differing = Vec::new();
    for o in &m.outputs {
        match fresh.outputs.iter().find(|f| f.file == o.file) {
            Some(f) if f.sha256 == o.sha256 => println!("identical  {}", o.file),
            _ => {
                println!("DIFFERENT  {}", o.file);
                differing.push(o.file.clone());
            }
        }
    }
    if !differing.is_empty() {
        return Err(Error::Domain(format!("outputs differ: {}", differing.join(", "))));
    }
    Ok(new_manifest)
}
