use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use vessel_cli::commands::{cmd_run, cmd_sweep, cmd_validate, RunArgs};

#[derive(Parser)]
#[command(
    name = "vessel",
    version,
    about = "Saturated tracking control for underactuated surface vessels",
    after_help = "Scenarios are TOML files; the names `paper-monohull` and `monohull-fast` \
                  resolve to bundled copies. The default output directory is taken from \
                  VESSEL_OUT_DIR when --out is absent."
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Derive constants and evaluate every gain inequality without
    /// running the closed loop
    Validate {
        /// Bundled scenario name or path to a scenario file
        scenario: String,
        /// Also write the report as TOML to this path
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trailing window for the heading-variation diagnostic
        #[arg(long)]
        window: Option<f64>,
    },
    /// Run the closed loop and export artifacts
    Run {
        /// Bundled scenario name or path to a scenario file
        scenario: String,
        /// Output directory (default: $VESSEL_OUT_DIR or ./out)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the run CSV (implied when --plots is absent)
        #[arg(long)]
        csv: bool,
        /// Emit the six SVG figures
        #[arg(long)]
        plots: bool,
        /// Feedback mode: state | output-diff | output-harness
        #[arg(long)]
        mode: Option<String>,
        /// Integrator step in scaled time
        #[arg(long)]
        step: Option<f64>,
        /// Horizon in scaled time
        #[arg(long)]
        horizon: Option<f64>,
        /// Seed for randomized components
        #[arg(long)]
        seed: Option<u64>,
        /// Record every n-th sample
        #[arg(long)]
        stride: Option<usize>,
        /// Harness error amplitude (output-harness mode)
        #[arg(long, allow_negative_numbers = true)]
        f0: Option<f64>,
        /// Harness error decay rate (output-harness mode)
        #[arg(long, allow_negative_numbers = true)]
        lambda: Option<f64>,
        /// High-gain differentiator gain (output-diff mode)
        #[arg(long = "observer-gain")]
        observer_gain: Option<f64>,
    },
    /// Expand a sweep file against a scenario and run every point
    Sweep {
        /// Bundled scenario name or path to a scenario file
        scenario: String,
        /// Sweep specification file
        grid: PathBuf,
        /// Output directory (default: $VESSEL_OUT_DIR or ./out)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed for IC sampling
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Commands::Validate {
            scenario,
            out,
            window,
        } => cmd_validate(&scenario, out, window),
        Commands::Run {
            scenario,
            out,
            csv,
            plots,
            mode,
            step,
            horizon,
            seed,
            stride,
            f0,
            lambda,
            observer_gain,
        } => cmd_run(RunArgs {
            scenario,
            out,
            csv,
            plots,
            mode,
            step,
            horizon,
            seed,
            stride,
            f0,
            lambda,
            observer_gain,
        }),
        Commands::Sweep {
            scenario,
            grid,
            out,
            seed,
        } => cmd_sweep(&scenario, &grid, out, seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {:#}", err.error());
            ExitCode::from(err.code() as u8)
        }
    }
}
