use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mc2_cli::config::{solvers_for, ALL_SOLVERS};
use mc2_cli::{parse_problem, report_summary, CliError, OutputFormat, RunArgs};

#[derive(Parser)]
#[command(name = "mc2", version, about = "Annealed Monte Carlo optimization for LPs and stochastic programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a solver on a problem file.
    Run(RunArgs),
    /// Parse a problem file and print it back in normalized form.
    Check {
        #[arg(long)]
        problem: PathBuf,
    },
    /// List solvers, or those applicable to a problem file.
    Solvers {
        #[arg(long)]
        problem: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let report = mc2_cli::run(&args)?;
            match args.format {
                OutputFormat::Text => print!("{}", report_summary(&report)?),
                OutputFormat::Json => {
                    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| CliError::Config(e.to_string()))?)
                }
            }
        }
        Command::Check { problem } => {
            let pf = parse_problem(&problem)?;
            println!("{}", serde_json::to_string_pretty(&pf).map_err(|e| CliError::Config(e.to_string()))?);
        }
        Command::Solvers { problem } => {
            let list = match problem {
                Some(p) => solvers_for(&parse_problem(&p)?.problem),
                None => ALL_SOLVERS.to_vec(),
            };
            for s in list {
                println!("{s}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("MC2_LOG_LEVEL", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Config(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
