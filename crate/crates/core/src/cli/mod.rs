//! Command-line front end.
//!
//! Every command writes its outputs plus a `manifest.json` into `--out`.
//! Exit codes: 0 success, 2 usage, 3 domain or calibration error, 4 I/O.

mod commands;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::array::ArrayConfig;
use crate::energy::EnergyParams;
use crate::error::{Error, Result};
use crate::retention::RetentionCalibration;
use output::{Format, Manifest, Sink};

#[derive(Debug, Parser)]
#[command(name = "mcaimem", version, about = "Mixed SRAM/eDRAM AI buffer simulator")]
pub struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "mcaimem-out")]
    pub out: PathBuf,
    /// Table format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// JSON config with optional `calibration`, `energy` and `array`
    /// sections, or a calibration file written by `calibrate`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the retention model to anchors and write calibration.json.
    Calibrate(CalibrateArgs),
    /// Flip-probability curves over time for several V_REF values.
    Curves(CurvesArgs),
    /// Replay an access trace on the mixed array.
    Memsim(MemsimArgs),
    /// Network energy per technology on an accelerator preset.
    Energy(EnergyArgs),
    /// Retention-error injection sweep on a tensor.
    Inject(InjectArgs),
    /// Re-run a manifest into `--out` and compare outputs.
    Rerun(RerunArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Calibrate(_) => "calibrate",
            Command::Curves(_) => "curves",
            Command::Memsim(_) => "memsim",
            Command::Energy(_) => "energy",
            Command::Inject(_) => "inject",
            Command::Rerun(_) => "rerun",
        }
    }
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// CSV with header `t_us,v_ref,p`.
    #[arg(long)]
    pub anchors: Option<PathBuf>,
    /// Supply voltage in volts.
    #[arg(long, default_value_t = crate::retention::DEFAULT_VDD)]
    pub vdd: f64,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    /// Sense reference voltages in volts.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.6,0.7,0.8")]
    pub vref: Vec<f64>,
    /// Time span, e.g. `20us`.
    #[arg(long, default_value = "20us")]
    pub tmax: String,
    /// Grid points per curve.
    #[arg(long, default_value_t = 201)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct MemsimArgs {
    /// CSV trace `t_ns,op,bank,row,col,value_hex`.
    #[arg(long)]
    pub trace: PathBuf,
    /// Store raw bytes without the one-enhancement flip.
    #[arg(long)]
    pub no_encoder: bool,
    /// Disable the refresh controller.
    #[arg(long)]
    pub no_refresh: bool,
    /// Override the array's sense reference in volts.
    #[arg(long)]
    pub vref: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EnergyArgs {
    /// Topology CSV; defaults to the built-in ResNet-50.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[arg(long, default_value = "eyeriss")]
    pub preset: String,
    /// Technologies; RRAM needs `energy.rram` in the config.
    #[arg(long, value_delimiter = ',')]
    pub tech: Vec<String>,
    /// MCAIMem sense reference in volts.
    #[arg(long, default_value_t = 0.8)]
    pub vref: f64,
    /// V_REF values for the refresh sweep.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.6,0.7,0.8")]
    pub sweep_vref: Vec<f64>,
    /// INT8 tensor supplying operand bit statistics; defaults to a seeded
    /// zero-heavy synthetic tensor.
    #[arg(long)]
    pub tensor: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InjectArgs {
    /// INT8 tensor; defaults to a seeded zero-heavy synthetic tensor.
    #[arg(long)]
    pub tensor: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.25")]
    pub rates: Vec<f64>,
    /// `both`, `encoded` or `raw`.
    #[arg(long, default_value = "both")]
    pub modes: String,
    /// Classifier manifest; requires --inputs and --labels.
    #[arg(long, requires_all = ["inputs", "labels"])]
    pub model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub inputs: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

/// Settings shared by all commands, loaded from `--config`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub calibration: Option<RetentionCalibration>,
    pub energy: EnergyParams,
    pub array: ArrayConfig,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg = match serde_json::from_str::<RunConfig>(&text) {
            Ok(c) => c,
            Err(first) => match serde_json::from_str::<RetentionCalibration>(&text) {
                Ok(cal) => RunConfig {
                    calibration: Some(cal),
                    ..RunConfig::default()
                },
                Err(_) => return Err(Error::Format(format!("{}: {first}", path.display()))),
            },
        };
        if let Some(c) = &cfg.calibration {
            c.validate()?;
        }
        cfg.energy.validate()?;
        cfg.array.validate()?;
        Ok(cfg)
    }

    pub fn calibration(&self) -> RetentionCalibration {
        self.calibration.clone().unwrap_or_default()
    }

    /// The config with the calibration filled in, as recorded in manifests.
    fn resolved(&self) -> Self {
        Self {
            calibration: Some(self.calibration()),
            ..self.clone()
        }
    }
}

/// Arguments after the program name with any `--out` removed.
fn replay_argv(args: &[OsString]) -> Vec<String> {
    let mut out = Vec::new();
    let mut it = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        if a == "--out" {
            it.next();
        } else if !a.starts_with("--out=") {
            out.push(a);
        }
    }
    out
}

fn execute(cli: &Cli, argv: Vec<String>) -> Result<PathBuf> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Command::Rerun(r) = &cli.command {
        return commands::rerun(r, &cli.out);
    }
    let mut sink = Sink::new(cli.out.clone(), cli.format);
    let ctx = commands::Ctx {
        seed: cli.seed,
        config: &config,
    };
    match &cli.command {
        Command::Calibrate(a) => commands::calibrate(a, &ctx, &mut sink)?,
        Command::Curves(a) => commands::curves(a, &ctx, &mut sink)?,
        Command::Memsim(a) => commands::memsim(a, &ctx, &mut sink)?,
        Command::Energy(a) => commands::energy(a, &ctx, &mut sink)?,
        Command::Inject(a) => commands::inject(a, &ctx, &mut sink)?,
        Command::Rerun(_) => unreachable!("handled above"),
    }
    sink.finish(Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: cli.command.name().into(),
        argv,
        seed: cli.seed,
        format: cli.format,
        config: serde_json::to_value(config.resolved())?,
        outputs: Vec::new(),
    })
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli, replay_argv(&args)) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("mcaimem: error: {e}");
            e.exit_code()
        }
    }
}
