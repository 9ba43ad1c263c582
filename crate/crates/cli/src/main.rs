mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, Envelope};

/// Thermal affordance mapping and flick mass classification.
#[derive(Debug, Parser)]
#[command(name = "motif", version)]
pub struct Cli {
    /// Pipeline configuration (JSON). Falls back to $MOTIF_CONFIG.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Machine-readable report on stdout and JSON error envelopes on stderr.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decode a binary capture from the palm board.
    Decode(DecodeArgs),
    /// Paint thermal pixels onto a point cloud.
    Paint(PaintArgs),
    /// Locate the warm/cool boundary and replace color anomalies.
    Denoise(DenoiseArgs),
    /// Drop grasp candidates whose contacts come near hot points.
    FilterGrasps(FilterArgs),
    /// Window trace CSVs and extract the 42 flick features.
    Features(FeaturesArgs),
    #[command(subcommand)]
    Lda(LdaCommand),
    #[command(subcommand)]
    Synth(SynthCommand),
    #[command(subcommand)]
    Pipeline(PipelineCommand),
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    pub input: PathBuf,
    /// Frames CSV, or a trace CSV when --unit and --trigger-us are given.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Keep only this unit's frames.
    #[arg(long)]
    pub unit: Option<u8>,
    /// Write a trace CSV (plus sidecar) for --unit with this trigger time.
    #[arg(long, requires = "unit")]
    pub trigger_us: Option<i64>,
    #[arg(long, requires = "trigger_us")]
    pub label: Option<String>,
}

#[derive(Debug, Args)]
pub struct ThermalInputs {
    #[arg(long)]
    pub cloud: PathBuf,
    /// Camera JSON with K, R, t, width, height and optional pose_convention.
    #[arg(long)]
    pub camera: PathBuf,
    /// Thermal PGM with a JSON scale sidecar.
    #[arg(long)]
    pub thermal: PathBuf,
    /// Depth PGM (meters) with a JSON scale sidecar.
    #[arg(long)]
    pub depth: PathBuf,
    /// Temperature range mapped onto the color ramp; defaults to the image range.
    #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
    pub range: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct PaintArgs {
    #[command(flatten)]
    pub inputs: ThermalInputs,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also write the denoise report here.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Scored cloud (PLY with thermal_score).
    #[arg(long)]
    pub cloud: PathBuf,
    /// JSON array of {pose: {R, t}, contacts}.
    #[arg(long)]
    pub grasps: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Overrides grasp.safety_radius, meters.
    #[arg(long)]
    pub radius: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// Directory of trace CSVs with JSON sidecars.
    pub traces: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum LdaCommand {
    /// Fit a discriminant model to a labeled feature CSV.
    Fit {
        features: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Classify feature rows with a fitted model.
    Classify {
        #[arg(long)]
        model: PathBuf,
        features: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Fit, leave-one-out and per-class ellipses as a JSON report.
    Report { features: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// A banded cylinder point cloud with recolored anomalies.
    Cylinder {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides synth.cylinder.anomaly_count.
        #[arg(long)]
        anomalies: Option<usize>,
        /// Ground truth (anomaly indices, boundary height) as JSON.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Labeled flick traces for the three object masses.
    Flicks {
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Overrides synth.trials_per_mass.
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
pub enum PipelineCommand {
    /// paint, denoise, filter-grasps.
    Thermal {
        #[command(flatten)]
        inputs: ThermalInputs,
        #[arg(long)]
        grasps: PathBuf,
        /// Directory for painted.ply, denoised.ply, grasps.json, report.json.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// features, lda fit, leave-one-out report.
    Flick {
        /// Generate the dataset instead of reading traces.
        #[arg(long, conflicts_with = "traces", required_unless_present = "traces")]
        synth: bool,
        #[arg(long, requires = "synth", required_if_eq("synth", "true"))]
        seed: Option<u64>,
        #[arg(long)]
        traces: Option<PathBuf>,
        /// Directory for features.csv, model.json and report.json.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            // Help and version go to stdout with status 0; usage errors to stderr.
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let json = cli.json;
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e, json);
            ExitCode::from(1)
        }
    }
}

fn report_error(e: &CliError, json: bool) {
    if json {
        eprintln!("{}", serde_json::to_string(&Envelope::from(e)).expect("envelope serializes"));
    } else {
        eprintln!("motif: error[{}]: {e}", e.code());
    }
}
