//! Command-line front end: every computation in the library driven from a
//! JSON config file plus flag overrides, emitting plot-ready CSV or JSON.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tfwf_core::run::{self, RunConfig};
use tfwf_core::Error;

#[derive(Parser)]
#[command(
    name = "tfwf",
    version,
    about = "Capacity and rate-distortion of time-varying Gaussian channels by time-frequency waterfilling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Symbol dilation parameter.
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Spreading factors, comma separated.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<f64>>,
    /// Signal-to-noise ratio (capacity-side commands).
    #[arg(long, allow_negative_numbers = true)]
    snr: Option<f64>,
    /// Signal-to-distortion ratio (rate-side commands).
    #[arg(long, allow_negative_numbers = true)]
    sdr: Option<f64>,
    /// Noise density at the filter output.
    #[arg(long, allow_negative_numbers = true)]
    theta2: Option<f64>,
    /// Source PSD driving the filter.
    #[arg(long, allow_negative_numbers = true)]
    sigma2: Option<f64>,
    /// Minimum operator grid size (power of two applied).
    #[arg(long = "grid-n")]
    grid_n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Code rate as a fraction of each subchannel capacity.
    #[arg(long = "rate-fraction")]
    rate_fraction: Option<f64>,
    /// Pulses per codeword.
    #[arg(long)]
    pulses: Option<usize>,
    /// Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Output path; stdout when omitted. Writes are atomic.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl CommonArgs {
    fn resolve(&self) -> Result<RunConfig, Error> {
        let flags = RunConfig {
            gamma: self.gamma,
            r: self.r.clone(),
            snr: self.snr,
            sdr: self.sdr,
            theta2: self.theta2,
            sigma2: self.sigma2,
            grid_n: self.grid_n,
            seed: self.seed,
            rate_fraction: self.rate_fraction,
            pulses: self.pulses,
            trials: self.trials,
        };
        match &self.config {
            Some(path) => Ok(RunConfig::from_file(path)?.merged_with(&flags)),
            None => Ok(flags),
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Channel capacity sweep: exact, plane-integral, and closed-form values.
    Capacity(CommonArgs),
    /// Rate-distortion sweep: exact, plane-integral, and closed-form values.
    Rate(CommonArgs),
    /// Eigenvalue-functional vs plane-integral gaps over the r grid.
    Szego(CommonArgs),
    /// Ellipse of concentration and the spreading-factor bound.
    Eoc(CommonArgs),
    /// Monte Carlo pulse-train coding experiment.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Also dump one noiseless pulse-train trace as CSV.
        #[arg(long = "pulse-csv")]
        pulse_csv: Option<PathBuf>,
    },
    /// Wigner-Ville spectrum of the filtered source on the grid.
    Wvs {
        #[command(flatten)]
        common: CommonArgs,
        /// Also dump one source realization as `t, x` CSV.
        #[arg(long = "realization-csv")]
        realization_csv: Option<PathBuf>,
    },
}

fn emit(out: &Option<PathBuf>, content: String) -> Result<(), Error> {
    match out {
        Some(path) => run::write_atomic(path, &content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn table_output(
    common: &CommonArgs,
    command: &str,
    cfg: &RunConfig,
    table: run::CsvTable,
) -> Result<(), Error> {
    let content = match common.format.unwrap_or(Format::Csv) {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let rep = run::Report {
                schema_version: run::SCHEMA_VERSION,
                command: command.to_string(),
                config: cfg.clone(),
                result: table,
            };
            serde_json::to_string_pretty(&rep).map_err(Error::from)? + "\n"
        }
    };
    emit(&common.out, content)
}

fn json_output<T: serde::Serialize>(
    common: &CommonArgs,
    report: run::Report<T>,
) -> Result<(), Error> {
    if common.format == Some(Format::Csv) {
        return Err(Error::InvalidParameter(format!(
            "command `{}` emits JSON reports only",
            report.command
        )));
    }
    let content = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
    emit(&common.out, content)
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Capacity(common) => {
            let cfg = common.resolve()?;
            table_output(&common, "capacity", &cfg, run::cmd_capacity(&cfg)?)
        }
        Command::Rate(common) => {
            let cfg = common.resolve()?;
            table_output(&common, "rate", &cfg, run::cmd_rate(&cfg)?)
        }
        Command::Szego(common) => {
            let cfg = common.resolve()?;
            json_output(&common, run::cmd_szego(&cfg)?)
        }
        Command::Eoc(common) => {
            let cfg = common.resolve()?;
            json_output(&common, run::cmd_eoc(&cfg)?)
        }
        Command::Simulate { common, pulse_csv } => {
            let cfg = common.resolve()?;
            let (report, trace) = run::cmd_simulate(&cfg)?;
            if let Some(path) = &pulse_csv {
                run::write_atomic(path, &trace.to_csv())?;
            }
            json_output(&common, report)
        }
        Command::Wvs {
            common,
            realization_csv,
        } => {
            let cfg = common.resolve()?;
            if let Some(path) = &realization_csv {
                run::write_atomic(path, &run::realization_csv(&cfg)?.to_csv())?;
            }
            table_output(&common, "wvs", &cfg, run::cmd_wvs(&cfg)?)
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("TFWF_THREADS") {
        if let Ok(n) = threads.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let msg = serde_json::json!({
                "schema_version": run::SCHEMA_VERSION,
                "error": err.to_string(),
            });
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}
