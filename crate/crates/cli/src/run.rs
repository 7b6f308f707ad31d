//! Solver dispatch. Each chain gets its own stream `(seed, chain index)` and returns a table
//! of draws; chains run in parallel and are pooled in chain order.

use std::collections::BTreeMap;

use mc2_core::anneal::{anneal_run, solve_lp_dual, BoltzmannTarget, Kernel, Sense, Trace};
use mc2_core::lp::maximize_by_vertices;
use mc2_core::stochprog::one_stage::QuadraticToy;
use mc2_core::stochprog::{
    farmer_inner_gibbs, farmer_outer_mcmc, one_stage_mcmc, portfolio_mcmc, saa_baseline, two_stage_mcmc, FarmerOuterConfig,
    OneStageModel,
};
use mc2_core::{Polytope, RngStream};
use nalgebra::DVector;
use rayon::prelude::*;

use crate::config::{RunConfig, Solver};
use crate::error::CliError;
use crate::problem::{LpForm, LpSense, ProblemFile, ProblemSpec};

/// One κ level, as row ranges of the chain table.
#[derive(Clone, Debug, PartialEq)]
pub struct Level {
    pub kappa: Option<f64>,
    pub start: usize,
    pub burnin_end: usize,
    pub end: usize,
    /// Sweeps run at this level, including any not stored in the table.
    pub sweeps: usize,
}

/// Draws of one chain.
#[derive(Clone, Debug, Default)]
pub struct ChainOutput {
    pub chain: usize,
    /// Column names, in row order.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Sweep number of the first stored row.
    pub first_sweep: usize,
    /// Columns holding the decision variables.
    pub x_cols: Vec<usize>,
    pub objective_col: Option<usize>,
    /// Whether a smaller objective is better.
    pub minimize: bool,
    pub levels: Vec<Level>,
    /// Fixed histogram layout `(bins, lo, hi)` per decision column, when the solver has one.
    pub hist_layout: Option<Vec<(usize, f64, f64)>>,
    pub stats: BTreeMap<String, f64>,
}

impl ChainOutput {
    /// Rows counted in estimates: the post-burn-in part of the last level.
    pub fn kept(&self) -> &[Vec<f64>] {
        match self.levels.last() {
            Some(l) => &self.rows[l.burnin_end..l.end],
            None => &self.rows,
        }
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        self.kept().iter().map(|r| r[c]).collect()
    }
}

fn table_from_trace(chain: usize, trace: &Trace, names: &[String], objective: &str, map_objective: impl Fn(f64) -> f64) -> ChainOutput {
    let k = names.len();
    let mut columns = vec!["kappa".to_string()];
    columns.extend(names.iter().cloned());
    columns.push(objective.to_string());
    let rows = trace
        .draws
        .iter()
        .zip(&trace.kappa)
        .zip(&trace.objective)
        .map(|((x, &kappa), &f)| {
            let mut r = Vec::with_capacity(k + 2);
            r.push(kappa);
            r.extend(x.iter().copied());
            r.push(map_objective(f));
            r
        })
        .collect();
    let levels = trace
        .levels
        .iter()
        .map(|l| Level { kappa: Some(l.kappa), start: l.start, burnin_end: l.burnin_end, end: l.end, sweeps: l.end - l.start })
        .collect();
    ChainOutput {
        chain,
        columns,
        rows,
        first_sweep: 0,
        x_cols: (1..=k).collect(),
        objective_col: Some(k + 1),
        minimize: trace.sense == Sense::Min,
        levels,
        ..Default::default()
    }
}

fn x_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// A table of post-burn-in draws only.
fn table_from_draws(chain: usize, names: Vec<String>, draws: &[DVector<f64>], burnin: usize, sweeps: usize) -> ChainOutput {
    let rows: Vec<Vec<f64>> = draws.iter().map(|d| d.iter().copied().collect()).collect();
    let n = rows.len();
    ChainOutput {
        chain,
        x_cols: (0..names.len()).collect(),
        columns: names,
        rows,
        first_sweep: burnin,
        levels: vec![Level { kappa: None, start: 0, burnin_end: 0, end: n, sweeps }],
        ..Default::default()
    }
}

/// The dual `min rhs·π` s.t. `Aᵀπ ≥ c`, `π ≥ 0` of `max c·x` s.t. `Ax ≤ rhs`, `x ≥ 0`.
fn inequality_dual(c: &DVector<f64>, poly: &Polytope) -> Result<Polytope, CliError> {
    let m = poly.n_rows();
    Ok(Polytope::with_search(-poly.a().transpose(), -c, vec![true; m], None)?)
}

fn run_chain(pf: &ProblemFile, cfg: &RunConfig, chain: usize) -> Result<ChainOutput, CliError> {
    let mut rng = RngStream::new(cfg.seed, chain as u64);
    let kernel = match cfg.solver {
        Solver::LpDualSlice | Solver::AnnealSlice => Kernel::SliceWithinGibbs,
        _ => Kernel::GibbsExponential,
    };
    match (&pf.problem, cfg.solver) {
        (ProblemSpec::Lp(spec), Solver::LpDual | Solver::LpDualSlice) => {
            // the table reports the dual objective in the primal's units
            let (z, dual, sign) = match spec.form()? {
                LpForm::Allocation(p) => (-p.dual_costs(), p.dual_polytope()?, 1.0),
                LpForm::Inequality { c, poly, sense } => {
                    let s = if sense == LpSense::Max { 1.0 } else { -1.0 };
                    (-poly.b().clone(), inequality_dual(&(&c * s), &poly)?, s)
                }
            };
            let sol = solve_lp_dual(&z, &dual, &cfg.schedule()?, kernel, &mut rng)?;
            let mut out = table_from_trace(chain, &sol.trace, &x_names("pi", z.len()), "dual_value", |f| -sign * f);
            out.minimize = sign > 0.0;
            Ok(out)
        }
        (ProblemSpec::Lp(spec), Solver::Anneal | Solver::AnnealSlice) => {
            let LpForm::Inequality { c, poly, sense } = spec.form()? else {
                return Err(CliError::Config("the allocation form has an equality constraint; use lp-dual".into()));
            };
            let sense = if sense == LpSense::Max { Sense::Max } else { Sense::Min };
            let target = BoltzmannTarget::linear(c.clone(), sense, poly)?;
            let trace = anneal_run(&target, kernel, &cfg.schedule()?, None, &mut rng)?;
            Ok(table_from_trace(chain, &trace, &x_names("x", c.len()), "objective", |f| f))
        }
        (ProblemSpec::OneStage(_), s) => one_stage_family(&QuadraticToy, s, cfg, chain, &mut rng),
        (ProblemSpec::Portfolio(spec), Solver::PortfolioGibbs) => {
            let inst = spec.instance(cfg.copies)?;
            let run = portfolio_mcmc(&inst, cfg.sweeps, cfg.burnin, &mut rng)?;
            let mut out = table_from_draws(chain, x_names("x", inst.dim()), &run.draws, cfg.burnin, cfg.sweeps);
            out.hist_layout = Some(vec![(40, -inst.x_bound, inst.x_bound); inst.dim()]);
            Ok(out)
        }
        (ProblemSpec::Portfolio(spec), s) => {
            let inst = spec.instance(cfg.copies)?;
            let mut out = one_stage_family(&inst, s, cfg, chain, &mut rng)?;
            if s == Solver::OneStage {
                out.hist_layout = Some(vec![(40, -inst.x_bound, inst.x_bound); inst.dim()]);
            }
            Ok(out)
        }
        (ProblemSpec::Farmer(spec), Solver::FarmerInner | Solver::FarmerInnerSlice) => {
            let inst = spec.instance()?;
            let at = spec.inner_or_default();
            let slice = cfg.solver == Solver::FarmerInnerSlice;
            let r = farmer_inner_gibbs(&inst, at.x, at.omega, &cfg.schedule()?, slice, &mut rng)?;
            let mut out = table_from_trace(chain, &r.trace, &x_names("y", 2), "revenue", |f| f);
            out.stats.insert("revenue_at_mean".into(), r.value);
            Ok(out)
        }
        (ProblemSpec::Farmer(spec), Solver::FarmerOuter) => {
            let inst = spec.instance()?;
            let fc = FarmerOuterConfig { copies: cfg.copies, kappa: cfg.kappa(), iterations: cfg.sweeps, burnin: cfg.burnin, step: spec.step };
            let run = farmer_outer_mcmc(&inst, &fc, &mut rng)?;
            let n = run.x_trace.len();
            let bins = run.histogram.counts.len();
            let mut out = ChainOutput {
                chain,
                columns: vec!["x".into()],
                rows: run.x_trace.iter().map(|&x| vec![x]).collect(),
                x_cols: vec![0],
                levels: vec![Level { kappa: Some(cfg.kappa()), start: 0, burnin_end: run.burnin, end: n, sweeps: n }],
                hist_layout: Some(vec![(bins, run.histogram.edges[0], run.histogram.edges[bins])]),
                ..Default::default()
            };
            out.stats.insert("x_acceptance".into(), run.x_acceptance);
            out.stats.insert("omega_acceptance".into(), run.omega_acceptance);
            Ok(out)
        }
        (ProblemSpec::TwoStage(spec), Solver::TwoStage) => {
            let prob = spec.problem(cfg.kappa(), cfg.copies)?;
            let run = two_stage_mcmc(&prob, cfg.sweeps, cfg.burnin, &mut rng)?;
            let nx = prob.c.len();
            let mut out = table_from_draws(chain, x_names("x", nx), &run.draws, cfg.burnin, cfg.sweeps);
            out.columns.push("scenario".into());
            for (r, &s) in out.rows.iter_mut().zip(&run.scenario_trace) {
                r.push(s as f64);
            }
            out.levels[0].kappa = Some(cfg.kappa());
            out.stats.insert("x_acceptance".into(), run.x_acceptance);
            out.stats.insert("omega_acceptance".into(), run.omega_acceptance);
            out.stats.insert("recourse_cost".into(), run.recourse_cost);
            Ok(out)
        }
        (p, s) => Err(CliError::Config(format!("solver `{s}` does not apply to a {} problem", p.kind()))),
    }
}

fn one_stage_family<M: OneStageModel>(model: &M, solver: Solver, cfg: &RunConfig, chain: usize, rng: &mut RngStream) -> Result<ChainOutput, CliError> {
    let names = x_names("x", model.dim());
    match solver {
        Solver::OneStage => {
            let run = one_stage_mcmc(model, cfg.copies, cfg.sweeps, cfg.burnin, rng)?;
            let mut out = table_from_draws(chain, names, &run.draws, cfg.burnin, cfg.sweeps);
            out.stats.insert("omega_acceptance".into(), run.omega_acceptance);
            Ok(out)
        }
        Solver::Saa => {
            let r = saa_baseline(model, cfg.sweeps, rng)?;
            let mut out = table_from_draws(chain, names, std::slice::from_ref(&r.x), 0, 1);
            out.columns.push("saa_value".into());
            out.rows[0].push(r.value);
            out.objective_col = Some(model.dim());
            out.stats.insert("scenarios".into(), cfg.sweeps as f64);
            out.stats.insert("iterations".into(), r.iterations as f64);
            Ok(out)
        }
        s => Err(CliError::Config(format!("solver `{s}` does not apply to a one-stage problem"))),
    }
}

/// Runs every chain; results are in chain order whatever the thread interleaving.
pub fn run_chains(pf: &ProblemFile, cfg: &RunConfig) -> Result<Vec<ChainOutput>, CliError> {
    (0..cfg.chains).into_par_iter().map(|c| run_chain(pf, cfg, c)).collect()
}

/// Exact reference values to print next to the estimates, where cheap.
pub fn oracle_checks(pf: &ProblemFile, cfg: &RunConfig) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    match (&pf.problem, cfg.solver) {
        (ProblemSpec::Lp(spec), _) => {
            let v = match spec.form()? {
                LpForm::Allocation(p) => mc2_core::anneal::pincus_primal_oracle(&p)?.value,
                LpForm::Inequality { c, poly, sense } => {
                    let s = if sense == LpSense::Max { 1.0 } else { -1.0 };
                    s * maximize_by_vertices(&poly, &(&c * s))?.value
                }
            };
            out.insert("oracle_value".into(), v);
        }
        (ProblemSpec::Portfolio(spec), _) => {
            let inst = spec.instance(cfg.copies)?;
            for (i, v) in inst.analytic_optimum().iter().enumerate() {
                out.insert(format!("analytic_optimum_x{}", i + 1), *v);
            }
        }
        (ProblemSpec::Farmer(spec), Solver::FarmerInner | Solver::FarmerInnerSlice) => {
            let at = spec.inner_or_default();
            out.insert("oracle_value".into(), spec.instance()?.recourse_value(at.x, at.omega)?.value);
        }
        (ProblemSpec::Farmer(spec), Solver::FarmerOuter) => {
            let inst = spec.instance()?;
            if let mc2_core::stochprog::OmegaLaw::Fixed(w) = inst.omega {
                let (x, v) = inst.grid_oracle(w, 400)?;
                out.insert("oracle_argmax".into(), x);
                out.insert("oracle_payoff".into(), v);
            }
        }
        _ => {}
    }
    Ok(out)
}
