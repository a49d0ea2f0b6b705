//! `attitude`: reproduce the seven-star example, solve one-shot attitude
//! determination, propagate the dynamics, and run filters and Monte-Carlo
//! campaigns from JSON configs.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | runtime failure (I/O, integration, filter) |
//! | 2 | invalid command line or config |
//! | 3 | golden mismatch in `paper-example` |
//! | 4 | singular attitude profile |
//! | 5 | reflection attitude profile (`det L ≤ 0`) |

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use attitude_core::filter::FilterMode;
use clap::{Args, Parser, Subcommand};

use crate::output::OutputTarget;

pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_GOLDEN_MISMATCH: u8 = 3;
pub const EXIT_SINGULAR_PROFILE: u8 = 4;
pub const EXIT_REFLECTION_PROFILE: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "attitude", version, about = "Attitude determination and filtering on SO(3)")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the seven-star example and compare with the published result.
    PaperExample(OutputArgs),
    /// One-shot attitude determination from vector measurements.
    Determine(Io),
    /// Propagate the rigid-body dynamics and sample the trajectory as CSV.
    Propagate(Io),
    /// Run one filter over a simulated scenario and write its error time series as CSV.
    Filter(RunArgs),
    /// Run independent noise realizations and write summary statistics as JSON.
    Montecarlo {
        #[command(flatten)]
        run: RunArgs,
        /// Number of trials, overriding the config.
        #[arg(long)]
        trials: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Directory for relative output paths, and for the default file name
    /// when `--output` is absent.
    #[arg(long, env = "ATTITUDE_OUTPUT_DIR", hide_env_values = true)]
    output_dir: Option<PathBuf>,
}

impl OutputArgs {
    fn target(&self, default_name: &str) -> OutputTarget {
        OutputTarget::resolve(self.output.as_deref(), self.output_dir.as_deref(), default_name)
    }
}

#[derive(Debug, Args)]
struct Io {
    /// JSON config file (`"schema": 1`).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    io: Io,
    /// Master noise seed, overriding the scenario's.
    #[arg(long)]
    seed: Option<u64>,
    /// Angular-velocity update, overriding the config.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<FilterMode>,
}

fn parse_mode(s: &str) -> Result<FilterMode, String> {
    s.parse().map_err(|e: attitude_core::Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::PaperExample(out) => {
            let target = out.target("paper-example.json");
            commands::paper_example((!target.is_stdout()).then_some(&target))
        }
        Command::Determine(io) => commands::determine(&io.config, &io.out.target("determine.json")),
        Command::Propagate(io) => commands::propagate(&io.config, &io.out.target("propagate.csv")),
        Command::Filter(run) => commands::filter(&run.io.config, &run.io.out.target("filter.csv"), run.seed, run.mode),
        Command::Montecarlo { run, trials } => commands::montecarlo(
            &run.io.config,
            &run.io.out.target("montecarlo.json"),
            run.seed,
            run.mode,
            *trials,
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code())
        }
    }
}
