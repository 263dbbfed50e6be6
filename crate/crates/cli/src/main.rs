use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use commands::CliError;

#[derive(Parser)]
#[command(
    name = "swapsim",
    version,
    about = "Entanglement-swapping Bell-test simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PresetArg {
    Ideal,
    Paper,
    Delayed,
}

#[derive(Args, Clone, Debug)]
pub struct RunArgs {
    /// JSON run configuration; overrides --preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "paper")]
    pub preset: PresetArg,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (defaults to the configuration's `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment and write events.ndjson, fourfolds.csv and counts.csv.
    Simulate(RunArgs),
    /// Bell parameter from a count-table CSV.
    Chsh {
        counts: PathBuf,
        /// Analyzer settings a1,a2,b1,b2 in degrees.
        #[arg(long, default_value = "0,45,22.5,67.5")]
        settings: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Teleported-state fidelity at equal analyzer angles.
    FidelityScan {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated angles in degrees.
        #[arg(long, default_value = "0,15,30,45,60,75,90,105,120,135,150,165")]
        angles: String,
        /// Seconds per angle (defaults to the first schedule entry's duration).
        #[arg(long)]
        duration: Option<f64>,
    },
    /// Allan deviation of a simulated pump-phase random walk.
    Allan {
        /// Random-walk strength in rad/√s (default: one wavelength in 400 s).
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 36_000.0)]
        duration: f64,
        #[arg(long, default_value_t = 1.0)]
        dt: f64,
        #[arg(
            long,
            default_value = "1,2,5,10,20,50,100,200,500,1000,2000,5000,10000"
        )]
        taus: String,
        /// Realizations averaged per τ.
        #[arg(long, default_value_t = 1)]
        realizations: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Full paper workflow: published values, simulated runs with and
    /// without delay, fidelity scan and Allan deviation.
    ReproducePaper {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// CHSH values of simulated local hidden-variable event streams.
    LhvTest {
        #[arg(long, default_value_t = 10_000)]
        events: u64,
        #[arg(long, default_value_t = 100)]
        runs: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(args) => commands::simulate(&args),
        Command::Chsh {
            counts,
            settings,
            out,
            format,
        } => commands::chsh(&counts, &settings, out.as_deref(), format),
        Command::FidelityScan {
            run,
            angles,
            duration,
        } => commands::fidelity_scan(&run, &angles, duration),
        Command::Allan {
            sigma,
            duration,
            dt,
            taus,
            realizations,
            seed,
            out,
            format,
        } => commands::allan(
            &commands::AllanArgs {
                sigma,
                duration,
                dt,
                taus,
                realizations,
                seed,
            },
            out.as_deref(),
            format,
        ),
        Command::ReproducePaper { seed, out, format } => {
            commands::reproduce_paper(seed, &out, format)
        }
        Command::LhvTest {
            events,
            runs,
            seed,
            out,
            format,
        } => commands::lhv_test(events, runs, seed, out.as_deref(), format),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
