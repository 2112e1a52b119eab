use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "solesense",
    version,
    about = "Pressure-sensing shoe sole: simulate, stream, collect and analyze"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a walking session through the sensor and ADC models.
    Simulate(SimulateArgs),
    /// Send a session file to a collector over TCP.
    Stream(StreamArgs),
    /// Receive streams and save them as session files.
    Collect(CollectArgs),
    /// Gait report and plots for a session, bench log or calibration file.
    Analyze(AnalyzeArgs),
    /// Fit a calibration profile and characterize it.
    Calibrate(CalibrateArgs),
    /// Run the fabricated sensor and the reference FSR side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReductionArg {
    Max,
    Mean,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Body mass, kg.
    #[arg(long, default_value_t = 70.0)]
    pub mass: f64,
    /// Steps per minute.
    #[arg(long, default_value_t = 120.0)]
    pub cadence: f64,
    /// Stance share of the gait cycle, (0, 1).
    #[arg(long, default_value_t = 0.6)]
    pub stance: f64,
    #[arg(long, default_value_t = 10)]
    pub cycles: u32,
    /// Sample rate, Hz (at most 1000: timestamps are whole milliseconds).
    #[arg(long, default_value_t = 100.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gaussian noise on applied pressure, Pa.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Fraction of body-weight pressure reaching one sensor.
    #[arg(long, default_value_t = 0.18)]
    pub load_scale: f64,
    /// Built-in profile name or profile JSON path.
    #[arg(long, default_value = "table44")]
    pub profile: String,
    #[arg(long, default_value_t = 0)]
    pub device_id: u8,
    /// Wall-clock time of t = 0, RFC 3339.
    #[arg(long, default_value = "1970-01-01T00:00:00Z")]
    pub epoch: String,
    /// Output format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(short, long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct StreamArgs {
    /// Session file to replay.
    pub input: PathBuf,
    /// Collector address [env: SOLESENSE_ADDR, default 127.0.0.1:7332].
    #[arg(long)]
    pub addr: Option<String>,
    /// Override the device id from the file header.
    #[arg(long)]
    pub device_id: Option<u8>,
    /// Override the profile from the file header.
    #[arg(long)]
    pub profile: Option<String>,
    /// Pace frames by their timestamps instead of sending at full speed.
    #[arg(long)]
    pub realtime: bool,
    /// Give up after this many consecutive failed connection attempts.
    #[arg(long)]
    pub max_attempts: Option<u32>,
}

#[derive(Debug, Args)]
pub struct CollectArgs {
    /// Session file for the primary device; other devices get `-dev<ID>` files.
    #[arg(short, long)]
    pub output: PathBuf,
    /// Listen address [env: SOLESENSE_ADDR, default 127.0.0.1:7332].
    #[arg(long)]
    pub addr: Option<String>,
    /// Profile used to turn counts back into pressure.
    #[arg(long, default_value = "table44")]
    pub profile: String,
    /// Device whose samples go to the primary output (default: the first to send).
    #[arg(long)]
    pub device_id: Option<u8>,
    /// Sample rate recorded in the session headers, Hz.
    #[arg(long, default_value_t = 100.0)]
    pub rate: f64,
    /// Stop after this many connections have closed.
    #[arg(long)]
    pub max_connections: Option<usize>,
    /// Stop after this many seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Session epoch, RFC 3339 (default: now).
    #[arg(long)]
    pub epoch: Option<String>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Run gait analysis online and print the report on exit.
    #[arg(long)]
    pub analyze: bool,
    /// Also write the online report here.
    #[arg(long, requires = "analyze")]
    pub report: Option<PathBuf>,
    /// Show per-channel bar meters on stderr.
    #[arg(long)]
    pub live: bool,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Args, Clone)]
pub struct AnalysisArgs {
    /// Contact pressure at the centre of the on/off band, kPa.
    #[arg(long, default_value_t = 20.0)]
    pub contact_kpa: f64,
    #[arg(long, value_enum, default_value_t = ReductionArg::Max)]
    pub reduction: ReductionArg,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    pub input: PathBuf,
    /// Write the report JSON here as well as to stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write SVG plots and their CSV data into this directory.
    #[arg(long)]
    pub plots: Option<PathBuf>,
    /// Profile for resistance plots of session files (default: the header's).
    #[arg(long)]
    pub profile: Option<String>,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// CSV with header `pressure_pa,resistance_ohm`.
    pub input: PathBuf,
    /// Profile JSON output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Characterization JSON output.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
    /// Lowest pressure that changes the resistance, kPa (default: 200, or the first point if lower).
    #[arg(long)]
    pub onset_kpa: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// CSV with header `t_s,sensor_pa,fsr_pa`; the published run when omitted.
    pub stimulus: Option<PathBuf>,
    /// Output CSV (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Overlay plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    #[arg(long, default_value = "bench")]
    pub sensor_profile: String,
    #[arg(long, default_value = "fsr")]
    pub fsr_profile: String,
}
