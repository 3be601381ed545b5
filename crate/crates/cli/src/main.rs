#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x >= 0.0)` also rejects NaN

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stratclass_cli::commands::{self, Mode, ObjectiveArg, SweepParam};
use stratclass_cli::report::Format;
use stratclass_cli::reproduce;
use stratclass_cli::scenario::load_path;
use stratclass_cli::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "stratclass",
    version,
    about = "Strategic classification game engine"
)]
struct Cli {
    /// Output encoding.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,

    /// Tolerance for equilibrium and equality checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Weight of the contestants' cost in efficiency.
    #[arg(long, global = true, default_value_t = 1.0)]
    beta: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Accuracy, cost and efficiency of the scenario's classifier.
    Evaluate { scenario: PathBuf },
    /// Optimal classifier for the scenario.
    Solve {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "utility")]
        objective: ObjectiveArg,
        #[arg(long, value_enum, default_value = "deterministic")]
        mode: Mode,
    },
    /// One row per parameter value: param,U,U_A,U_B,gap,E.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        param: SweepParam,
        /// `lo:hi:steps`, endpoints included.
        #[arg(long, allow_hyphen_values = true)]
        range: String,
    },
    /// Run a built-in reproduction and report expected against actual.
    Reproduce {
        #[arg(value_name = "ID")]
        id: String,
    },
}

fn run(cli: &Cli, out: &mut dyn Write) -> Result<ExitCode, CliError> {
    if !(cli.tol >= 0.0) {
        return Err(CliError::Usage("--tol must be nonnegative".into()));
    }
    if !(cli.beta >= 0.0) {
        return Err(CliError::Usage("--beta must be nonnegative".into()));
    }
    let table = match &cli.command {
        Command::Evaluate { scenario } => commands::evaluate(&load_path(scenario)?, cli.beta)?,
        Command::Solve {
            scenario,
            objective,
            mode,
        } => {
            if *mode == Mode::Randomized && *objective == ObjectiveArg::Utility {
                return Err(CliError::Usage(commands::INSTABILITY_MESSAGE.into()));
            }
            commands::solve(&load_path(scenario)?, *objective, *mode, cli.beta)?
        }
        Command::Sweep {
            scenario,
            param,
            range,
        } => {
            let values = commands::parse_range(range).map_err(CliError::Usage)?;
            let t = commands::sweep(&load_path(scenario)?, *param, &values, cli.beta)?;
            let format = if cli.format == Format::Text {
                Format::Csv
            } else {
                cli.format
            };
            t.write(format, out)?;
            return Ok(ExitCode::SUCCESS);
        }
        Command::Reproduce { id } => {
            let outcome = reproduce::run(id, cli.tol)?;
            outcome.table(id).write(cli.format, out)?;
            return Ok(if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            });
        }
    };
    table.write(cli.format, out)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("error")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match run(&cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
