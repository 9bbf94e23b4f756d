//! Command-line surface for the photon correlation toolkit: simulation,
//! correlation, model fits, localization, and plot-ready report tables,
//! chained through files so each stage is reproducible on its own.
//!
//! Exit codes: 0 success, 2 usage, 3 input or data error, 4 fit did not
//! converge (results are still written, flagged `converged 0`). Errors
//! print a single-line JSON record to stderr.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use photonlab::analyses::{AnalysisError, Weighting};
use photonlab::correlator::CorrelatorError;
use photonlab::io::IoError;
use photonlab::localizer::{LocalizerError, Roi};
use photonlab::simkit::SimError;
use photonlab::types::ValidationError;

#[derive(Parser)]
#[command(
    name = "photonlab",
    version,
    about = "Simulation and analysis of time-tagged photon correlation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a time-tagged acquisition described by a TOML config
    Simulate {
        /// Simulation config (TOML)
        #[arg(long)]
        config: PathBuf,
        /// Output tag file
        #[arg(long)]
        out: PathBuf,
        /// Run summary path (default: <out>.meta)
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Write the debug CSV tag representation instead of binary
        #[arg(long)]
        text: bool,
    },
    /// Cross-correlate two channels of a tag file into a histogram
    Correlate {
        #[arg(long)]
        tags: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        ch_a: u8,
        #[arg(long, default_value_t = 1)]
        ch_b: u8,
        #[arg(long)]
        bin_width_ps: i64,
        #[arg(long)]
        max_tau_ps: i64,
        /// cw divides by the Poisson rate product, pulsed by far
        /// side-peak areas, none keeps raw counts
        #[arg(long, value_enum, default_value_t = NormalizeArg::None)]
        normalize: NormalizeArg,
        /// Repetition period, required for --normalize pulsed
        #[arg(long)]
        rep_period_ps: Option<i64>,
        /// Side peaks per side used by --normalize pulsed
        #[arg(long, default_value_t = 5)]
        n_side_peaks: usize,
        /// Half-width of each peak window (default: rep period / 4)
        #[arg(long)]
        half_window_ps: Option<i64>,
    },
    /// Multi-photon suppression from an autocorrelation histogram
    FitHbt {
        #[arg(long)]
        hist: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Treat the histogram as pulsed: g2(0) from the center-to-side
        /// peak area ratio instead of a dip fit
        #[arg(long)]
        pulsed: bool,
        /// Repetition period, required with --pulsed
        #[arg(long)]
        rep_period_ps: Option<i64>,
        #[arg(long, default_value_t = 5)]
        n_side_peaks: usize,
        /// Half-width of each peak window (default: rep period / 4)
        #[arg(long)]
        half_window_ps: Option<i64>,
        #[arg(long, value_enum, default_value_t = WeightingArg::Poisson)]
        weighting: WeightingArg,
    },
    /// Two-photon interference from pulsed delay-interferometer histograms
    FitHom {
        /// Histogram with arms distinguishable (cross-polarized)
        #[arg(long)]
        orthogonal: PathBuf,
        /// Histogram with arms interfering (co-polarized)
        #[arg(long)]
        parallel: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Interferometer delay in ps
        #[arg(long)]
        delay_ps: f64,
        #[arg(long)]
        rep_period_ps: i64,
        #[arg(long, value_enum, default_value_t = WeightingArg::Poisson)]
        weighting: WeightingArg,
    },
    /// Two-photon interference from continuous-wave histograms
    FitHomCw {
        #[arg(long)]
        orthogonal: PathBuf,
        #[arg(long)]
        parallel: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Interferometer delay in ps
        #[arg(long)]
        delay_ps: f64,
        /// First splitter reflectance
        #[arg(long)]
        r1: f64,
        /// First splitter transmittance
        #[arg(long)]
        t1: f64,
        /// Second splitter reflectance
        #[arg(long)]
        r2: f64,
        /// Second splitter transmittance
        #[arg(long)]
        t2: f64,
        #[arg(long, value_enum, default_value_t = WeightingArg::Poisson)]
        weighting: WeightingArg,
    },
    /// Exponential decay time from a pulsed decay trace
    FitLifetime {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Fit window start (default: the trace maximum)
        #[arg(long)]
        fit_start_ps: Option<i64>,
        /// Fit window end (default: the last bin)
        #[arg(long)]
        fit_end_ps: Option<i64>,
        #[arg(long, value_enum, default_value_t = WeightingArg::Poisson)]
        weighting: WeightingArg,
    },
    /// Degree of linear polarization from an analyzer-angle scan
    FitDop {
        /// xy table with x_unit deg (analyzer angle) and intensities
        #[arg(long)]
        scan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Power-law exponent of a positive xy series (log-log regression)
    FitPowerlaw {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count ratio of two detector channels with windowed uncertainty
    SplittingRatio {
        #[arg(long)]
        tags: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        ch_a: u8,
        #[arg(long, default_value_t = 1)]
        ch_b: u8,
        /// Number of equal time windows for the spread estimate
        #[arg(long, default_value_t = 10)]
        windows: usize,
    },
    /// Sub-pixel emitter position from a scan map
    Localize {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Spectral window center for hyperspectral maps
        #[arg(long)]
        window_center_nm: Option<f64>,
        /// Spectral window half-width for hyperspectral maps
        #[arg(long)]
        window_half_width_nm: Option<f64>,
        /// Fit region as x,y,width,height in pixels (default: full map)
        #[arg(long, value_parser = parse_roi)]
        roi: Option<Roi>,
    },
    /// Placement statistics (and optionally a field transform) from
    /// alignment records
    AlignEval {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also fit the affine measured-to-nominal field transform
        #[arg(long)]
        fit_transform: bool,
    },
    /// Plot-ready data/model tables for external plotting
    Report {
        #[command(subcommand)]
        kind: ReportKind,
    },
}

#[derive(Subcommand)]
enum ReportKind {
    /// Delay vs g2 with the fitted antibunching curve
    HbtCw {
        #[arg(long)]
        hist: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Model samples per bin (1 = bin centers only)
        #[arg(long, default_value_t = 1)]
        oversample: usize,
        #[arg(long, value_enum, default_value_t = WeightingArg::Poisson)]
        weighting: WeightingArg,
    },
    /// Decay trace with the fitted exponential
    Lifetime {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        fit_start_ps: Option<i64>,
        #[arg(long)]
        fit_end_ps: Option<i64>,
        #[arg(long, default_value_t = 1)]
        oversample: usize,
        #[arg(long, value_enum, default_value_t = WeightingArg::Poisson)]
        weighting: WeightingArg,
    },
    /// Both continuous-wave interference histograms with fitted curves
    HomCw {
        #[arg(long)]
        orthogonal: PathBuf,
        #[arg(long)]
        parallel: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        delay_ps: f64,
        #[arg(long)]
        r1: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        r2: f64,
        #[arg(long)]
        t2: f64,
        #[arg(long, default_value_t = 1)]
        oversample: usize,
        #[arg(long, value_enum, default_value_t = WeightingArg::Poisson)]
        weighting: WeightingArg,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum NormalizeArg {
    None,
    Cw,
    Pulsed,
}

impl NormalizeArg {
    fn as_str(self) -> &'static str {
        match self {
            NormalizeArg::None => "none",
            NormalizeArg::Cw => "cw",
            NormalizeArg::Pulsed => "pulsed",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightingArg {
    Uniform,
    Poisson,
}

impl WeightingArg {
    fn as_str(self) -> &'static str {
        match self {
            WeightingArg::Uniform => "uniform",
            WeightingArg::Poisson => "poisson",
        }
    }
}

impl From<WeightingArg> for Weighting {
    fn from(w: WeightingArg) -> Weighting {
        match w {
            WeightingArg::Uniform => Weighting::Uniform,
            WeightingArg::Poisson => Weighting::Poisson,
        }
    }
}

fn parse_roi(s: &str) -> Result<Roi, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err("expected x,y,width,height".into());
    }
    let mut v = [0usize; 4];
    for (slot, part) in v.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| format!("'{part}' is not a pixel count"))?;
    }
    Ok(Roi::new(v[0], v[1], v[2], v[3]))
}

pub enum CliError {
    Usage(String),
    Input { kind: &'static str, message: String },
    FitNotConverged { out: PathBuf },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input { .. } => 3,
            CliError::FitNotConverged { .. } => 4,
        }
    }

    fn kind(&self) -> &str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input { kind, .. } => kind,
            CliError::FitNotConverged { .. } => "fit-not-converged",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) => m.clone(),
            CliError::Input { message, .. } => message.clone(),
            CliError::FitNotConverged { out } => format!(
                "fit did not converge; results written with converged 0 to {}",
                out.display()
            ),
        }
    }

    fn record(&self) -> String {
        format!(
            "{{\"error\":{{\"kind\":\"{}\",\"exit\":{},\"message\":\"{}\"}}}}",
            json_escape(self.kind()),
            self.exit_code(),
            json_escape(&self.message())
        )
    }
}

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        let kind = match &e {
            IoError::Io(_) => "io",
            IoError::Parse { .. } | IoError::BinaryParse { .. } => "parse",
            IoError::VersionMismatch { .. } => "version-mismatch",
            IoError::Invalid(_) => "invalid-data",
            IoError::Config(_) => "config-invalid",
        };
        CliError::Input { kind, message: e.to_string() }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Input { kind: "config-invalid", message: e.to_string() }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        let kind = match &e {
            AnalysisError::Fit(_) => "fit-failed",
            _ => "invalid-input",
        };
        CliError::Input { kind, message: e.to_string() }
    }
}

impl From<CorrelatorError> for CliError {
    fn from(e: CorrelatorError) -> Self {
        CliError::Input { kind: "invalid-input", message: e.to_string() }
    }
}

impl From<LocalizerError> for CliError {
    fn from(e: LocalizerError) -> Self {
        let kind = match &e {
            LocalizerError::Fit(_) | LocalizerError::FitFailed(_) => "fit-failed",
            _ => "invalid-input",
        };
        CliError::Input { kind, message: e.to_string() }
    }
}

impl From<ValidationError> for CliError {
    fn from(e: ValidationError) -> Self {
        CliError::Input { kind: "invalid-data", message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code())
        }
    }
}
