//! The `flipmon` command-line front end.
//!
//! Every verb writes its artifacts plus a `manifest.json` into the output
//! directory. Exit codes: 0 ok, 2 config, 3 numerical, 4 io.

mod commands;
mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use config::{
    build_template, parse_assignment, parse_range, InterfaceOverride, QubitConfig, RunConfig, SolverConfig,
    SweepRange, SweepSpec, TemplateKind, DEFAULT_SWEEP_OUTPUTS, SWEEP_OUTPUTS,
};
pub use output::{FileDigest, Manifest, OutputDir};

use crate::geometry::GeometryError;
use crate::loss::LossError;
use crate::participation::{ParticipationError, RegionId};
use crate::records::RecordError;
use crate::solver::{SlicePlane, SolverError};
use crate::transmon::TransmonError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::NoConvergence { .. } => CliError::Numerical(e.to_string()),
            SolverError::Io(_) | SolverError::Dump(_) => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<ParticipationError> for CliError {
    fn from(e: ParticipationError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<TransmonError> for CliError {
    fn from(e: TransmonError) -> Self {
        match e {
            TransmonError::InvalidParams(_) | TransmonError::MissingNet(_) | TransmonError::NonPositive(_) => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<LossError> for CliError {
    fn from(e: LossError) -> Self {
        match e {
            LossError::NegativeTangent { .. } | LossError::SingularSystem | LossError::StraddlePoint(_) => {
                CliError::Numerical(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<RecordError> for CliError {
    fn from(e: RecordError) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "flipmon", version, about = "Electrostatics, participation ratios and loss budgets for flip-chip transmons")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: flipmon-out].
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads [default: all cores].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Fixed-order reductions for byte-identical outputs.
    #[arg(long, global = true)]
    pub deterministic: bool,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,
    /// Geometry file; replaces the template.
    #[arg(long, global = true)]
    pub geometry: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub template: Option<TemplateKind>,
    /// Template parameter override, e.g. `--set gap_d=4.8`.
    #[arg(long = "set", global = true, value_name = "NAME=VALUE", value_parser = parse_assignment)]
    pub set: Vec<(String, f64)>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Maxwell capacitance matrix and charging energy.
    Cap,
    /// Energy participation ratios of the qubit mode.
    Participation {
        /// Also render field slices, e.g. `--slice y=0`.
        #[arg(long = "slice", value_name = "AXIS=POS")]
        slices: Vec<SlicePlane>,
        /// Repeat on a grid with doubled cells and report |p_fine - p_coarse|.
        #[arg(long)]
        error_estimate: bool,
        /// Write the raw potential (`field.toml` + `field.bin`).
        #[arg(long)]
        dump: bool,
    },
    /// Sweep one template parameter.
    Sweep {
        #[arg(long)]
        param: Option<String>,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        /// `MIN:MAX:STEPS`.
        #[arg(long, value_parser = parse_range)]
        range: Option<SweepRange>,
        #[arg(long, value_delimiter = ',')]
        outputs: Vec<String>,
    },
    /// Fit E_J and E_C (and g, tan delta) to measured qubit rows.
    Fit {
        input: PathBuf,
        /// Participation CSV for loss-tangent extraction.
        #[arg(long)]
        participation: Option<PathBuf>,
        /// Regions whose participations are summed for the extraction.
        #[arg(long, value_delimiter = ',', default_value = "MA_t,MA_b")]
        regions: Vec<RegionId>,
        /// Background T1 limit, us; its rate is removed before extraction.
        #[arg(long)]
        background_t1_us: Option<f64>,
    },
    /// Predicted T1 from participations and loss tangents.
    Lossbudget {
        /// Loss-tangent table (TOML).
        #[arg(long)]
        tangents: PathBuf,
        /// Participation CSV; computed from the geometry when absent.
        #[arg(long)]
        participation: Option<PathBuf>,
        /// Qubit frequency, GHz.
        #[arg(long)]
        f01: f64,
    },
    /// |E| on planes through the device, as CSV and SVG.
    Slice {
        #[arg(long = "plane", value_name = "AXIS=POS")]
        planes: Vec<SlicePlane>,
        /// Net voltage, e.g. `--drive qubit_top=1`. Default: the qubit mode.
        #[arg(long, value_name = "NET=VOLTS", value_parser = parse_assignment)]
        drive: Vec<(String, f64)>,
        /// Sample lattice, e.g. `300x150`.
        #[arg(long, value_parser = parse_samples)]
        samples: Option<(usize, usize)>,
        /// Linear color scale instead of logarithmic.
        #[arg(long)]
        linear: bool,
        /// Sample the whole domain instead of zooming on the conductors.
        #[arg(long)]
        full: bool,
        #[arg(long)]
        dump: bool,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Cap => "cap",
            Command::Participation { .. } => "participation",
            Command::Sweep { .. } => "sweep",
            Command::Fit { .. } => "fit",
            Command::Lossbudget { .. } => "lossbudget",
            Command::Slice { .. } => "slice",
        }
    }
}

fn parse_samples(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once('x')
        .ok_or_else(|| format!("expected NUxNV, got `{s}`"))?;
    let n = |x: &str| {
        x.trim()
            .parse::<usize>()
            .ok()
            .filter(|&v| v >= 2)
            .ok_or_else(|| format!("invalid sample count `{x}`"))
    };
    Ok((n(a)?, n(b)?))
}

/// Parse `args` (including the program name) and run. Returns the exit code.
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
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let argv: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    match commands::execute(cli, argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
