//! Run configuration: command-line flags over problem-file defaults over built-in defaults.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::problem::{ProblemFile, ProblemSpec, RunDefaults};

pub const MAX_COPIES: usize = 100_000;
pub const MAX_SWEEPS: usize = 100_000_000;
pub const MAX_CHAINS: usize = 1024;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    /// Annealed Gibbs on the LP dual, truncated-exponential conditionals.
    LpDual,
    /// Annealed LP dual with the slice-variable kernel.
    LpDualSlice,
    /// Annealed Gibbs on the primal of an inequality-form LP.
    Anneal,
    AnnealSlice,
    /// J-copy chain on a one-stage expected payoff.
    OneStage,
    /// Latent-utility Gibbs sampler for the portfolio problem.
    PortfolioGibbs,
    /// Sample-average approximation baseline; `sweeps` is the scenario count.
    Saa,
    FarmerInner,
    FarmerInnerSlice,
    FarmerOuter,
    TwoStage,
}

pub const ALL_SOLVERS: &[Solver] = &[
    Solver::LpDual,
    Solver::LpDualSlice,
    Solver::Anneal,
    Solver::AnnealSlice,
    Solver::OneStage,
    Solver::PortfolioGibbs,
    Solver::Saa,
    Solver::FarmerInner,
    Solver::FarmerInnerSlice,
    Solver::FarmerOuter,
    Solver::TwoStage,
];

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::LpDual => "lp-dual",
            Solver::LpDualSlice => "lp-dual-slice",
            Solver::Anneal => "anneal",
            Solver::AnnealSlice => "anneal-slice",
            Solver::OneStage => "one-stage",
            Solver::PortfolioGibbs => "portfolio-gibbs",
            Solver::Saa => "saa",
            Solver::FarmerInner => "farmer-inner",
            Solver::FarmerInnerSlice => "farmer-inner-slice",
            Solver::FarmerOuter => "farmer-outer",
            Solver::TwoStage => "two-stage",
        }
    }

    /// Solvers that walk a κ ladder with a burn-in of half of each level.
    pub fn is_annealed(self) -> bool {
        matches!(
            self,
            Solver::LpDual | Solver::LpDualSlice | Solver::Anneal | Solver::AnnealSlice | Solver::FarmerInner | Solver::FarmerInnerSlice
        )
    }

    /// Solvers that run at one fixed κ.
    pub fn is_single_kappa(self) -> bool {
        matches!(self, Solver::FarmerOuter | Solver::TwoStage)
    }

    pub fn uses_kappa(self) -> bool {
        self.is_annealed() || self.is_single_kappa()
    }

    pub fn uses_copies(self) -> bool {
        matches!(self, Solver::OneStage | Solver::PortfolioGibbs | Solver::FarmerOuter | Solver::TwoStage)
    }

    pub fn uses_burnin(self) -> bool {
        !self.is_annealed() && self != Solver::Saa
    }

    fn default_kappas(self) -> Vec<f64> {
        match self {
            Solver::LpDual | Solver::LpDualSlice => vec![1.0, 5.0, 25.0, 100.0, 200.0],
            Solver::FarmerInner | Solver::FarmerInnerSlice => vec![0.01, 0.1, 1.0, 5.0, 25.0, 125.0],
            Solver::Anneal | Solver::AnnealSlice => vec![1.0, 5.0, 25.0, 125.0, 625.0],
            _ => vec![1.0],
        }
    }

    fn default_sweeps(self) -> usize {
        match self {
            Solver::PortfolioGibbs | Solver::FarmerOuter => 5_000,
            Solver::Saa => 10_000,
            _ => 20_000,
        }
    }
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn names(list: &[Solver]) -> String {
    list.iter().map(|s| s.name()).collect::<Vec<_>>().join(", ")
}

impl FromStr for Solver {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        ALL_SOLVERS
            .iter()
            .copied()
            .find(|v| v.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown solver `{s}`; valid solvers: {}", names(ALL_SOLVERS))))
    }
}

/// Solvers that accept a problem; the first one is the default.
pub fn solvers_for(problem: &ProblemSpec) -> Vec<Solver> {
    match problem {
        ProblemSpec::Lp(s) if s.is_allocation() => vec![Solver::LpDual, Solver::LpDualSlice],
        ProblemSpec::Lp(s) => {
            if s.nonneg.as_ref().is_none_or(|v| v.iter().all(|b| *b)) {
                vec![Solver::Anneal, Solver::AnnealSlice, Solver::LpDual, Solver::LpDualSlice]
            } else {
                vec![Solver::Anneal, Solver::AnnealSlice]
            }
        }
        ProblemSpec::OneStage(_) => vec![Solver::OneStage, Solver::Saa],
        ProblemSpec::Portfolio(_) => vec![Solver::PortfolioGibbs, Solver::OneStage, Solver::Saa],
        ProblemSpec::Farmer(_) => vec![Solver::FarmerOuter, Solver::FarmerInner, Solver::FarmerInnerSlice],
        ProblemSpec::TwoStage(_) => vec![Solver::TwoStage],
    }
}

fn problem_is_allocation(p: &ProblemSpec) -> bool {
    matches!(p, ProblemSpec::Lp(s) if s.is_allocation())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    /// Human-readable summary table.
    #[default]
    Text,
    /// The report as JSON.
    Json,
}

/// Flags of `mc2 run`.
#[derive(Clone, Debug, Default, Args)]
pub struct RunArgs {
    /// Problem file (JSON).
    #[arg(long)]
    pub problem: PathBuf,
    /// Solver name; defaults to the problem file's choice.
    #[arg(long)]
    pub solver: Option<String>,
    /// Comma-separated κ ladder, e.g. 1,5,25.
    #[arg(long = "kappa-schedule", value_delimiter = ',', num_args = 1..)]
    pub kappa_schedule: Option<Vec<f64>>,
    /// Number of scenario copies J.
    #[arg(long = "J")]
    pub copies: Option<usize>,
    /// Sweeps (final κ level for annealed solvers; scenario count for saa).
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Sweeps at each non-final κ level.
    #[arg(long = "level-sweeps")]
    pub level_sweeps: Option<usize>,
    /// Discarded initial sweeps (non-annealed solvers).
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Independent chains, run in parallel.
    #[arg(long)]
    pub chains: Option<usize>,
    /// Random seed; required.
    #[arg(long)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    pub format: OutputFormat,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub problem: PathBuf,
    pub solver: Solver,
    pub kappa_schedule: Vec<f64>,
    #[serde(rename = "J")]
    pub copies: usize,
    pub sweeps: usize,
    pub level_sweeps: usize,
    pub burnin: usize,
    pub chains: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn resolve(args: &RunArgs, pf: &ProblemFile) -> Result<Self, CliError> {
        let valid = solvers_for(&pf.problem);
        let solver = match args.solver.as_deref().or(pf.defaults.solver.as_deref()) {
            Some(s) => s.parse::<Solver>()?,
            None => valid[0],
        };
        // The file's run settings are tuned for its own solver.
        let file_solver = match pf.defaults.solver.as_deref() {
            Some(s) => s.parse::<Solver>()?,
            None => valid[0],
        };
        let none = RunDefaults::default();
        let d = if solver == file_solver {
            &pf.defaults
        } else {
            log::info!("solver {solver} differs from the file's {file_solver}; using built-in run settings");
            &none
        };
        if !valid.contains(&solver) {
            return Err(CliError::Config(format!(
                "solver `{solver}` does not apply to a {} problem{}; valid solvers: {}",
                pf.problem.kind(),
                if problem_is_allocation(&pf.problem) { " in allocation form" } else { "" },
                names(&valid)
            )));
        }
        if args.kappa_schedule.is_some() && !solver.uses_kappa() {
            log::warn!("solver {solver} does not use κ; --kappa-schedule ignored");
        }
        if args.copies.is_some() && !solver.uses_copies() {
            log::warn!("solver {solver} does not use copies; --J ignored");
        }
        if args.burnin.is_some() && !solver.uses_burnin() {
            log::warn!("solver {solver} discards the first half of each κ level; --burnin ignored");
        }
        let sweeps = args.sweeps.or(d.sweeps).unwrap_or_else(|| solver.default_sweeps());
        let cfg = RunConfig {
            problem: args.problem.clone(),
            solver,
            kappa_schedule: args.kappa_schedule.clone().or_else(|| d.kappa_schedule.clone()).unwrap_or_else(|| solver.default_kappas()),
            copies: args.copies.or(d.copies).unwrap_or(20),
            sweeps,
            level_sweeps: args.level_sweeps.or(d.level_sweeps).unwrap_or((sweeps / 10).max(2)),
            burnin: args.burnin.or(d.burnin).unwrap_or(if solver == Solver::FarmerOuter { sweeps / 2 } else { sweeps / 10 }),
            chains: args.chains.or(d.chains).unwrap_or(1),
            seed: args.seed,
            out: args.out.clone(),
            format: args.format,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if !(1..=MAX_COPIES).contains(&self.copies) {
            return bad(format!("--J {} outside 1..={MAX_COPIES}", self.copies));
        }
        if !(2..=MAX_SWEEPS).contains(&self.sweeps) {
            return bad(format!("--sweeps {} outside 2..={MAX_SWEEPS}", self.sweeps));
        }
        if !(2..=MAX_SWEEPS).contains(&self.level_sweeps) {
            return bad(format!("--level-sweeps {} outside 2..={MAX_SWEEPS}", self.level_sweeps));
        }
        if self.solver.uses_burnin() && self.burnin >= self.sweeps {
            return bad(format!("--burnin {} must be below --sweeps {}", self.burnin, self.sweeps));
        }
        if !(1..=MAX_CHAINS).contains(&self.chains) {
            return bad(format!("--chains {} outside 1..={MAX_CHAINS}", self.chains));
        }
        if self.kappa_schedule.is_empty() {
            return bad("--kappa-schedule is empty".into());
        }
        if let Some(k) = self.kappa_schedule.iter().find(|k| !(**k >= 0.0) || !k.is_finite()) {
            return bad(format!("--kappa-schedule: κ = {k} must be finite and ≥ 0"));
        }
        if self.kappa_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return bad("--kappa-schedule must be strictly increasing".into());
        }
        if self.solver.is_single_kappa() {
            if self.kappa_schedule.len() != 1 {
                return bad(format!("solver {} runs at a single κ; got {} values", self.solver, self.kappa_schedule.len()));
            }
            if self.kappa_schedule[0] <= 0.0 {
                return bad(format!("solver {} needs κ > 0", self.solver));
            }
        }
        Ok(())
    }

    /// Final-level sweeps `sweeps`, earlier levels `level_sweeps`.
    pub fn schedule(&self) -> Result<mc2_core::anneal::Schedule, CliError> {
        mc2_core::anneal::Schedule::with_final(self.kappa_schedule.clone(), self.level_sweeps, self.sweeps)
            .map_err(|e| CliError::Config(format!("--kappa-schedule: {e}")))
    }

    pub fn kappa(&self) -> f64 {
        *self.kappa_schedule.last().expect("validated nonempty")
    }
}
