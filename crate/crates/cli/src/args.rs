use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::DEFAULT_SEED;

/// Comma-separated numbers given as one flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct NumberList(pub Vec<f64>);

fn list(s: &str) -> Result<NumberList, String> {
    climb_core::dataio::config::parse_f64_list("list", s)
        .map(NumberList)
        .map_err(|e| e.to_string())
}

/// Climb trajectory prediction with a hybrid total-energy model.
#[derive(Debug, Parser)]
#[command(name = "climb-tp", version, about)]
pub struct Cli {
    /// Config file supplying defaults for any flag (overrides $CLIMB_TP_CONFIG).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Worker threads for parallel work (default: number of processors).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one climb and write the trajectory CSV.
    Simulate(SimulateArgs),
    /// Fit the five parameters to an observed climb.
    Fit(FitArgs),
    /// Online prediction from the prefix of an observed climb.
    Predict(PredictArgs),
    /// Whole-climb fits over a dataset, metered from take-off.
    EvaluateOffline(EvaluateArgs),
    /// Online predictions over a dataset at several prefix lengths.
    EvaluateOnline(EvaluateOnlineArgs),
    /// Generate a synthetic dataset with its truth manifest.
    Synth(SynthArgs),
    /// Altitude profiles for several masses, as long-format CSV.
    MassSweep(MassSweepArgs),
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Aircraft coefficient file (default: built-in A320-like set).
    #[arg(long, value_name = "PATH")]
    pub aircraft: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FlightArgs {
    /// Parameter overrides: m|mass, dT, v1, v2, mach (e.g. m=70000 dT=5).
    #[arg(long, num_args = 1.., value_name = "K=V")]
    pub params: Vec<String>,
    /// Initial altitude, ft [1500].
    #[arg(long, value_name = "FT")]
    pub initial_alt: Option<f64>,
    /// Initial calibrated airspeed, kt [160].
    #[arg(long, value_name = "KT")]
    pub initial_cas: Option<f64>,
    /// Cruise flight level [350].
    #[arg(long, value_name = "FL")]
    pub cruise_fl: Option<f64>,
    /// Output sample interval, s [5].
    #[arg(long, value_name = "S")]
    pub dt: Option<f64>,
    /// Simulated time span, s [3000].
    #[arg(long, value_name = "S")]
    pub horizon: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub flight: FlightArgs,
    /// Output CSV (default: standard output).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Parameter bounds file (default: derived from the aircraft).
    #[arg(long, value_name = "PATH")]
    pub bounds: Option<PathBuf>,
    #[arg(long, help = format!("Optimizer seed [{DEFAULT_SEED}]"))]
    pub seed: Option<u64>,
    /// Objective evaluations per fit.
    #[arg(long, value_name = "N")]
    pub budget: Option<usize>,
    /// Optimizer population size.
    #[arg(long, value_name = "N")]
    pub population: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Observed trajectory CSV.
    #[arg(long, value_name = "PATH")]
    pub obs: Option<PathBuf>,
    /// Skip the dataset quality filters.
    #[arg(long)]
    pub no_filter: bool,
    /// JSON report (default: standard output).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Online learning settings file.
    #[arg(long, value_name = "PATH")]
    pub online_config: Option<PathBuf>,
    /// Observed trajectory CSV.
    #[arg(long, value_name = "PATH")]
    pub obs: Option<PathBuf>,
    /// Present time: the prefix holds the samples up to it, s after the first one.
    #[arg(long, value_name = "S")]
    pub present: Option<f64>,
    /// Prediction span after the present time, s [600].
    #[arg(long, value_name = "S")]
    pub horizon: Option<f64>,
    /// Known cruise flight level; the prediction levels off there.
    #[arg(long, value_name = "FL")]
    pub cruise_fl: Option<f64>,
    /// Predicted trajectory CSV (default: standard output).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// JSON report (default: standard error).
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Directory of trajectory CSV files.
    #[arg(long, value_name = "DIR")]
    pub dataset: Option<PathBuf>,
    /// Metering offsets, minutes.
    #[arg(long, value_parser = list, value_name = "LIST")]
    pub offsets: Option<NumberList>,
    /// Skip the dataset quality filters.
    #[arg(long)]
    pub no_filter: bool,
    /// CSV report.
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
    /// Text table (always printed to standard output as well).
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateOnlineArgs {
    #[command(flatten)]
    pub common: EvaluateArgs,
    /// Online learning settings file.
    #[arg(long, value_name = "PATH")]
    pub online_config: Option<PathBuf>,
    /// Prefix lengths (present times), s [400,500,600].
    #[arg(long, value_parser = list, value_name = "LIST")]
    pub slices: Option<NumberList>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Parameter bounds the draws must respect.
    #[arg(long, value_name = "PATH")]
    pub bounds: Option<PathBuf>,
    /// Generator spec file.
    #[arg(long, value_name = "PATH")]
    pub spec: Option<PathBuf>,
    /// Number of trajectories (overrides the spec).
    #[arg(long, value_name = "N")]
    pub n: Option<usize>,
    /// Generator seed (overrides the spec).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MassSweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub flight: FlightArgs,
    /// Masses, kg [mass_min, mass_ref, mass_max of the aircraft].
    #[arg(long, value_parser = list, value_name = "LIST")]
    pub masses: Option<NumberList>,
    /// Output CSV (default: standard output).
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}
