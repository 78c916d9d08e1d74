//! Command-line front end: runs one experiment and writes its CSV.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use adc_planner::config::{parse_number_list, Experiment, RunConfig};
use adc_planner::experiments::run;
use adc_planner::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "adc-planner", version, about = "Rate and power planning for low-resolution ADC receivers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Lloyd-Max distortion factors per resolution.
    Quantizer(Flags),
    /// Additive-noise rate against exact quantized-channel capacity.
    Fig2(Flags),
    /// SISO optimal bandwidth and resolution versus SNR.
    Fig3(Flags),
    /// 1×N SIMO and N×N MIMO rates versus SNR.
    Fig4(Flags),
    /// Rates versus antenna count.
    Fig5(Flags),
    /// Optimized N×N MIMO designs per total power budget.
    Table1(Flags),
    /// Sweep driven entirely by the configuration file and flags.
    Custom(Flags),
}

impl Command {
    fn split(&self) -> (Experiment, &Flags) {
        match self {
            Command::Quantizer(f) => (Experiment::Quantizer, f),
            Command::Fig2(f) => (Experiment::Fig2, f),
            Command::Fig3(f) => (Experiment::Fig3, f),
            Command::Fig4(f) => (Experiment::Fig4, f),
            Command::Fig5(f) => (Experiment::Fig5, f),
            Command::Table1(f) => (Experiment::Table1, f),
            Command::Custom(f) => (Experiment::Custom, f),
        }
    }
}

#[derive(Args, Debug)]
struct Flags {
    /// JSON configuration file; flags override its keys.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Monte Carlo channel draws per design point.
    #[arg(long, value_name = "N")]
    samples: Option<usize>,
    /// CSV destination (stdout when absent).
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// SNR at full bandwidth in dB: `a,b,c` or `start:step:stop`.
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Total receiver power budgets in mW.
    #[arg(long, value_name = "LIST")]
    budget_mw: Option<String>,
    /// Quantizer resolutions (bins): `a,b,c` or `lo..hi`.
    #[arg(long, value_name = "LIST")]
    bins: Option<String>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Domain { .. } => 2,
        Error::NoConvergence { .. } => 3,
        Error::Infeasible(_) | Error::Io(_) => 1,
    }
}

fn counts(text: &str, what: &str) -> Result<Vec<usize>, Error> {
    parse_number_list(text)?
        .into_iter()
        .map(|v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{what} must be positive integers, got {v}")))
            }
        })
        .collect()
}

fn execute(cli: &Cli) -> Result<(), Error> {
    let (experiment, flags) = cli.command.split();
    let mut file = match &flags.config {
        Some(p) => RunConfig::from_path(p)?,
        None => RunConfig::default(),
    };
    if flags.seed.is_some() {
        file.seed = flags.seed;
    }
    if flags.samples.is_some() {
        file.samples = flags.samples;
    }
    if flags.out.is_some() {
        file.out = flags.out.clone();
    }
    if let Some(s) = &flags.snr_db {
        file.snr_db = Some(parse_number_list(s)?);
    }
    if let Some(s) = &flags.budget_mw {
        file.budgets_mw = Some(parse_number_list(s)?);
    }
    if let Some(s) = &flags.bins {
        file.bins = Some(counts(s, "bins")?);
    }
    let cfg = file.resolve(Some(experiment))?;
    let report = run(&cfg)?;
    let csv = report.to_csv();
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, csv)?;
            let mut stdout = std::io::stdout().lock();
            for line in &report.summaries {
                writeln!(stdout, "{line}")?;
            }
        }
        None => {
            let mut stderr = std::io::stderr().lock();
            for line in &report.summaries {
                writeln!(stderr, "{line}")?;
            }
            std::io::stdout().lock().write_all(csv.as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
