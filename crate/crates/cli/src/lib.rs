//! Command-line front end: problem files in, traces, histograms and reports out.

pub mod config;
pub mod error;
pub mod problem;
pub mod report;
pub mod run;

use std::path::Path;

pub use config::{OutputFormat, RunArgs, RunConfig, Solver};
pub use error::CliError;
pub use problem::{parse_problem, parse_problem_str, ProblemFile, ProblemSpec};
pub use report::{report_summary, RunReport};
pub use run::ChainOutput;

/// Runs all chains and builds the report without touching the filesystem.
pub fn execute(pf: &ProblemFile, cfg: &RunConfig) -> Result<(RunReport, Vec<ChainOutput>), CliError> {
    let checks = run::oracle_checks(pf, cfg)?;
    let chains = run::run_chains(pf, cfg)?;
    let report = report::build_report(pf, cfg, &chains, checks)?;
    Ok((report, chains))
}

/// Parses the problem, resolves the configuration, runs and writes every artifact.
pub fn run(args: &RunArgs) -> Result<RunReport, CliError> {
    let pf = parse_problem(&args.problem)?;
    let cfg = RunConfig::resolve(args, &pf)?;
    log::info!("running {} on {} with {} chain(s), seed {}", cfg.solver, pf.name, cfg.chains, cfg.seed);
    let (report, chains) = execute(&pf, &cfg)?;
    report::write_artifacts(Path::new(&cfg.out), &report, &chains)?;
    Ok(report)
}
