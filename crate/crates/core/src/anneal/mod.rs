//! Annealed Boltzmann targets `π_κ(x) ∝ exp(κ·score(x))` on a polytope, where `score` is the
//! objective for maximization and its negative for minimization.
//!
//! A run walks a ladder of κ values, records every sweep, and estimates the mode by the
//! ergodic mean of the final level (or, as a diagnostic, the best draw).

mod lp_dual;

pub use lp_dual::{
    dual_polytope_from, pincus_gibbs_step, pincus_primal_oracle, solve_lp_dual, solve_pincus, LpDualSolution,
    PincusParams,
};

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::diagnostics::{batch_means_se, mean};
use crate::error::{Error, Result};
use crate::lp::{check_normalizable, Normalizability};
use crate::polytope::Polytope;
use crate::rng::RngStream;
use crate::slice::{exp_slice_level, slice_gibbs_sweep_linear, slice_set_sample_1d, LinearTerm};
use crate::truncexp_mv::{gibbs_sweep_truncexp, ScanOrder};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Max => 1.0,
            Sense::Min => -1.0,
        }
    }
}

pub type ObjectiveFn = Arc<dyn Fn(&DVector<f64>) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Objective {
    Linear(DVector<f64>),
    Custom(ObjectiveFn),
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::Linear(c) => f.debug_tuple("Linear").field(&c.as_slice()).finish(),
            Objective::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl Objective {
    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        match self {
            Objective::Linear(c) => c.dot(x),
            Objective::Custom(f) => f(x),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoltzmannTarget {
    objective: Objective,
    sense: Sense,
    feasible: Polytope,
}

impl BoltzmannTarget {
    pub fn new(objective: Objective, sense: Sense, feasible: Polytope) -> Result<Self> {
        if let Objective::Linear(c) = &objective {
            if c.len() != feasible.dim() {
                return Err(Error::Dimension(format!(
                    "objective has {} coefficients, polytope dimension {}",
                    c.len(),
                    feasible.dim()
                )));
            }
        }
        Ok(Self {
            objective,
            sense,
            feasible,
        })
    }

    pub fn linear(c: DVector<f64>, sense: Sense, feasible: Polytope) -> Result<Self> {
        Self::new(Objective::Linear(c), sense, feasible)
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn feasible(&self) -> &Polytope {
        &self.feasible
    }

    pub fn dim(&self) -> usize {
        self.feasible.dim()
    }

    /// Objective value at `x`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.objective.eval(x)
    }

    /// Objective oriented for maximization.
    pub fn score(&self, x: &DVector<f64>) -> f64 {
        self.sense.sign() * self.value(x)
    }

    /// Checks that `exp(κ·score)` has finite mass on the polytope.
    pub fn check_normalizable(&self, kappa: f64) -> Result<()> {
        let dir = match &self.objective {
            Objective::Linear(c) => c * (self.sense.sign() * kappa),
            Objective::Custom(_) => DVector::zeros(self.dim()),
        };
        match check_normalizable(&self.feasible, &dir) {
            Normalizability::Proper => Ok(()),
            Normalizability::Improper(d) => Err(Error::Unbounded(format!(
                "the annealed density at κ = {kappa} does not decay along {:?}",
                d.as_slice()
            ))),
            Normalizability::Unchecked => {
                log::warn!("too many constraints to certify normalizability; relying on sweep-time checks");
                Ok(())
            }
        }
    }
}

/// A strictly increasing ladder of κ values with a sweep count for each level.
#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    kappas: Vec<f64>,
    sweeps: Vec<usize>,
}

impl Schedule {
    pub fn new(kappas: Vec<f64>, sweeps: Vec<usize>) -> Result<Self> {
        if kappas.is_empty() || kappas.len() != sweeps.len() {
            return Err(Error::InvalidArgument(format!(
                "{} κ values and {} sweep counts",
                kappas.len(),
                sweeps.len()
            )));
        }
        if kappas.iter().any(|k| !(*k >= 0.0) || !k.is_finite()) {
            return Err(Error::InvalidArgument("κ values must be finite and ≥ 0".into()));
        }
        if kappas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("κ values must be strictly increasing".into()));
        }
        if sweeps.iter().any(|s| *s < 2) {
            return Err(Error::InvalidArgument("each level needs at least 2 sweeps".into()));
        }
        Ok(Self { kappas, sweeps })
    }

    /// `per_level` sweeps at every κ except the last, which gets `final_sweeps`.
    pub fn with_final(kappas: Vec<f64>, per_level: usize, final_sweeps: usize) -> Result<Self> {
        let n = kappas.len();
        let mut sweeps = vec![per_level; n];
        if let Some(last) = sweeps.last_mut() {
            *last = final_sweeps;
        }
        Self::new(kappas, sweeps)
    }

    pub fn geometric(first: f64, ratio: f64, levels: usize, per_level: usize, final_sweeps: usize) -> Result<Self> {
        if !(ratio > 1.0) || levels == 0 {
            return Err(Error::InvalidArgument("geometric ladder needs ratio > 1 and ≥ 1 level".into()));
        }
        let kappas = (0..levels).map(|i| first * ratio.powi(i as i32)).collect();
        Self::with_final(kappas, per_level, final_sweeps)
    }

    pub fn single(kappa: f64, sweeps: usize) -> Result<Self> {
        Self::new(vec![kappa], vec![sweeps])
    }

    pub fn kappas(&self) -> &[f64] {
        &self.kappas
    }

    pub fn sweeps(&self) -> &[usize] {
        &self.sweeps
    }

    pub fn final_kappa(&self) -> f64 {
        *self.kappas.last().expect("schedule is nonempty")
    }

    pub fn total_sweeps(&self) -> usize {
        self.sweeps.iter().sum()
    }
}

impl Default for Schedule {
    /// κ = 1, 5, 25, 125, 625 with 2000 sweeps per level and 10⁴ at the last.
    fn default() -> Self {
        Self::geometric(1.0, 5.0, 5, 2_000, 10_000).expect("valid default ladder")
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Kernel {
    /// Coordinate-wise truncated-exponential Gibbs (linear objectives only).
    #[default]
    GibbsExponential,
    /// Exponential slice level, then uniform coordinate updates inside the slice.
    SliceWithinGibbs,
}

/// Draw indices `[start, end)` sampled at one κ; `[start, burnin_end)` is burn-in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelSegment {
    pub kappa: f64,
    pub start: usize,
    pub burnin_end: usize,
    pub end: usize,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub draws: Vec<DVector<f64>>,
    pub kappa: Vec<f64>,
    pub objective: Vec<f64>,
    pub sense: Sense,
    pub levels: Vec<LevelSegment>,
    pub seed: u64,
    pub stream: u64,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn final_level(&self) -> Option<&LevelSegment> {
        self.levels.last()
    }

    /// Range of post-burn-in draws at the final κ.
    pub fn final_range(&self) -> Result<std::ops::Range<usize>> {
        let seg = self
            .final_level()
            .ok_or_else(|| Error::InvalidArgument("trace has no levels".into()))?;
        if seg.burnin_end >= seg.end {
            return Err(Error::InvalidArgument("final level has no post-burn-in draws".into()));
        }
        Ok(seg.burnin_end..seg.end)
    }

    pub fn level_stats(&self) -> Vec<LevelStats> {
        self.levels
            .iter()
            .map(|s| {
                let vals = &self.objective[s.burnin_end..s.end];
                LevelStats {
                    kappa: s.kappa,
                    sweeps: s.end - s.start,
                    kept: vals.len(),
                    mean_objective: mean(vals),
                    se_objective: batch_means_se(vals),
                }
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelStats {
    pub kappa: f64,
    pub sweeps: usize,
    pub kept: usize,
    pub mean_objective: f64,
    pub se_objective: f64,
}

fn sweep(
    target: &BoltzmannTarget,
    kernel: Kernel,
    kappa: f64,
    x: &mut DVector<f64>,
    rng: &mut RngStream,
) -> Result<()> {
    let poly = &target.feasible;
    let s = target.sense.sign();
    match (&target.objective, kernel) {
        (Objective::Linear(c), Kernel::GibbsExponential) => {
            let rates = c * (-s * kappa);
            gibbs_sweep_truncexp(poly, &rates, x, ScanOrder::Systematic, rng)
        }
        (Objective::Linear(c), Kernel::SliceWithinGibbs) => {
            let term = LinearTerm::new(c * s, 0.0);
            slice_gibbs_sweep_linear(poly, &term, kappa, x, rng).map(|_| ())
        }
        (Objective::Custom(_), Kernel::SliceWithinGibbs) => {
            let u = exp_slice_level(target.score(x), kappa, rng)?;
            for k in 0..target.dim() {
                let iv = poly.conditional_bounds(x, k)?;
                let base = x.clone();
                let g = |t: f64| {
                    let mut z = base.clone();
                    z[k] = t;
                    target.score(&z)
                };
                x[k] = slice_set_sample_1d(g, u, x[k], iv, rng)?;
            }
            Ok(())
        }
        (Objective::Custom(_), Kernel::GibbsExponential) => Err(Error::InvalidArgument(
            "the exponential Gibbs kernel needs a linear objective; use the slice kernel".into(),
        )),
    }
}

/// Runs the κ ladder from `start` (or the polytope witness).
pub fn anneal_run(
    target: &BoltzmannTarget,
    kernel: Kernel,
    schedule: &Schedule,
    start: Option<DVector<f64>>,
    rng: &mut RngStream,
) -> Result<Trace> {
    if matches!(target.objective, Objective::Custom(_)) && kernel == Kernel::GibbsExponential {
        return Err(Error::InvalidArgument(
            "the exponential Gibbs kernel needs a linear objective; use the slice kernel".into(),
        ));
    }
    for &k in schedule.kappas() {
        target.check_normalizable(k)?;
    }
    let mut x = start.unwrap_or_else(|| target.feasible.witness().clone());
    if !target.feasible.is_feasible(&x) {
        return Err(Error::Infeasible(format!(
            "start point violates the constraints by {:e}",
            target.feasible.violation(&x)
        )));
    }
    let total = schedule.total_sweeps();
    let mut trace = Trace {
        draws: Vec::with_capacity(total),
        kappa: Vec::with_capacity(total),
        objective: Vec::with_capacity(total),
        sense: target.sense,
        levels: Vec::with_capacity(schedule.kappas().len()),
        seed: rng.seed(),
        stream: rng.stream(),
    };
    for (&kappa, &n) in schedule.kappas().iter().zip(schedule.sweeps()) {
        let start = trace.len();
        for _ in 0..n {
            sweep(target, kernel, kappa, &mut x, rng)?;
            trace.objective.push(target.value(&x));
            trace.draws.push(x.clone());
            trace.kappa.push(kappa);
        }
        trace.levels.push(LevelSegment {
            kappa,
            start,
            burnin_end: start + n / 2,
            end: start + n,
        });
    }
    Ok(trace)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ModeMethod {
    #[default]
    ErgodicMean,
    MaxObjectiveDraw,
}

/// Mode estimate from the post-burn-in draws of the final level.
pub fn mode_estimate(trace: &Trace, method: ModeMethod) -> Result<DVector<f64>> {
    let r = trace.final_range()?;
    let draws = &trace.draws[r.clone()];
    match method {
        ModeMethod::ErgodicMean => {
            let mut m = DVector::zeros(draws[0].len());
            for d in draws {
                m += d;
            }
            Ok(m / draws.len() as f64)
        }
        ModeMethod::MaxObjectiveDraw => {
            let s = trace.sense.sign();
            let best = r
                .max_by(|&a, &b| (s * trace.objective[a]).total_cmp(&(s * trace.objective[b])))
                .expect("nonempty range");
            Ok(trace.draws[best].clone())
        }
    }
}

/// Up to `n` distinct final-level draws, best objective first.
pub fn top_draws(trace: &Trace, n: usize) -> Result<Vec<(DVector<f64>, f64)>> {
    let r = trace.final_range()?;
    let s = trace.sense.sign();
    let mut idx: Vec<usize> = r.collect();
    idx.sort_by(|&a, &b| (s * trace.objective[b]).total_cmp(&(s * trace.objective[a])));
    let mut out: Vec<(DVector<f64>, f64)> = Vec::new();
    for i in idx {
        let d = &trace.draws[i];
        if out.iter().all(|(o, _)| (o - d).amax() > 1e-9 * (1.0 + d.amax())) {
            out.push((d.clone(), trace.objective[i]));
            if out.len() == n {
                break;
            }
        }
    }
    Ok(out)
}

/// Rao-Blackwellised value: mean objective over final-level post-burn-in draws, with its
/// batch-means standard error.
pub fn value_estimate(trace: &Trace) -> Result<(f64, f64)> {
    let r = trace.final_range()?;
    let v = &trace.objective[r];
    Ok((mean(v), batch_means_se(v)))
}

/// Pseudo-prior mixtures over κ are a reserved configuration keyword.
pub fn anneal_with_pseudo_prior(_weights: &[(f64, f64)]) -> Result<Trace> {
    Err(Error::NotImplemented("pseudo-prior mixture over κ".into()))
}
