//! One-stage problems `max_x E_ω G(ω, x)` with a positive payoff.

use nalgebra::DVector;
use rand::Rng;

use crate::diagnostics::{mean, variance};
use crate::error::{Error, Result};
use crate::rng::{exp1, open01, RngStream};
use crate::samplers1d::Interval;
use crate::slice::slice_set_sample_1d;

/// Redraws allowed when looking for a scenario with positive payoff at the start.
pub const START_BUDGET: usize = 1000;

pub trait OneStageModel {
    type Scenario: Clone;

    fn dim(&self) -> usize;

    /// Box `[lo_k, hi_k]` per coordinate; both ends finite.
    fn domain(&self) -> Vec<(f64, f64)>;

    fn sample_scenario(&self, rng: &mut RngStream) -> Self::Scenario;

    fn payoff(&self, omega: &Self::Scenario, x: &DVector<f64>) -> f64;
}

#[derive(Clone, Debug)]
pub struct OneStageRun {
    /// Ergodic mean of the kept x draws.
    pub x_hat: DVector<f64>,
    /// Kept draws, one per sweep after burn-in.
    pub draws: Vec<DVector<f64>>,
    pub copies: usize,
    pub omega_acceptance: f64,
}

impl OneStageRun {
    /// Per-coordinate standard deviation of the kept draws.
    pub fn spread(&self) -> DVector<f64> {
        let k = self.x_hat.len();
        DVector::from_fn(k, |i, _| {
            let col: Vec<f64> = self.draws.iter().map(|d| d[i]).collect();
            variance(&col).sqrt()
        })
    }
}

fn log_product<M: OneStageModel>(model: &M, omegas: &[M::Scenario], x: &DVector<f64>) -> f64 {
    let mut s = 0.0;
    for w in omegas {
        let g = model.payoff(w, x);
        if g <= 0.0 || g.is_nan() {
            return f64::NEG_INFINITY;
        }
        s += g.ln();
    }
    s
}

/// MCMC on `π_J(ω₁…ω_J, x) ∝ ∏_j G(ω_j, x) p(ω_j)` over the model's box.
///
/// Each `ω_j` moves by an independence Metropolis step proposing from `p(ω)`; the
/// acceptance ratio is `G(ω', x)/G(ω_j, x)`. Each coordinate of `x` then moves by a slice
/// step on `Σ_j ln G(ω_j, x)`.
pub fn one_stage_mcmc<M: OneStageModel>(
    model: &M,
    copies: usize,
    sweeps: usize,
    burnin: usize,
    rng: &mut RngStream,
) -> Result<OneStageRun> {
    if copies == 0 {
        return Err(Error::InvalidArgument("need at least one copy".into()));
    }
    if sweeps <= burnin {
        return Err(Error::InvalidArgument(format!("sweeps ({sweeps}) must exceed burn-in ({burnin})")));
    }
    let dom = model.domain();
    if dom.len() != model.dim() {
        return Err(Error::Dimension(format!("domain has {} sides, model dim {}", dom.len(), model.dim())));
    }
    let boxes = dom
        .iter()
        .map(|&(lo, hi)| {
            let iv = Interval::new(lo, hi)?;
            if !iv.is_bounded() {
                return Err(Error::InvalidArgument(format!("domain side {iv} is unbounded")));
            }
            Ok(iv)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut x = DVector::from_iterator(boxes.len(), boxes.iter().map(|iv| 0.5 * (iv.lo() + iv.hi())));

    let mut omegas = Vec::with_capacity(copies);
    for _ in 0..copies {
        let mut found = None;
        let mut last = f64::NAN;
        for _ in 0..START_BUDGET {
            let w = model.sample_scenario(rng);
            last = model.payoff(&w, &x);
            if last > 0.0 {
                found = Some(w);
                break;
            }
        }
        omegas.push(found.ok_or(Error::NonPositivePayoff { value: last })?);
    }

    let mut accepted = 0usize;
    let mut proposed = 0usize;
    let mut draws = Vec::with_capacity(sweeps - burnin);
    for s in 0..sweeps {
        for w in omegas.iter_mut() {
            let cand = model.sample_scenario(rng);
            let g_new = model.payoff(&cand, &x);
            let g_old = model.payoff(w, &x);
            proposed += 1;
            if g_new > 0.0 && open01(rng) * g_old < g_new {
                *w = cand;
                accepted += 1;
            }
        }
        for k in 0..x.len() {
            let cur = log_product(model, &omegas, &x);
            if cur == f64::NEG_INFINITY {
                return Err(Error::NonPositivePayoff { value: 0.0 });
            }
            let level = cur - exp1(rng);
            let t = slice_set_sample_1d(
                |t| {
                    let mut probe = x.clone();
                    probe[k] = t;
                    log_product(model, &omegas, &probe)
                },
                level,
                x[k],
                boxes[k],
                rng,
            );
            x[k] = t?;
        }
        if s >= burnin {
            draws.push(x.clone());
        }
    }
    let k = x.len();
    let x_hat = DVector::from_fn(k, |i, _| mean(&draws.iter().map(|d| d[i]).collect::<Vec<_>>()));
    Ok(OneStageRun {
        x_hat,
        draws,
        copies,
        omega_acceptance: accepted as f64 / proposed.max(1) as f64,
    })
}

/// Runs [`one_stage_mcmc`] for each `J`, each on its own substream.
pub fn run_j_ladder<M: OneStageModel>(
    model: &M,
    ladder: &[usize],
    sweeps: usize,
    burnin: usize,
    rng: &RngStream,
) -> Result<Vec<OneStageRun>> {
    ladder
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let mut r = rng.substream(rng.stream().wrapping_add(1 + i as u64));
            one_stage_mcmc(model, j, sweeps, burnin, &mut r)
        })
        .collect()
}

/// `G(ω, x) = 1 − (x − 0.3)² + ω` with `ω ∼ U(−0.1, 0.1)`, on `[0, 1]`. Maximizer 0.3.
#[derive(Clone, Copy, Debug, Default)]
pub struct QuadraticToy;

impl OneStageModel for QuadraticToy {
    type Scenario = f64;

    fn dim(&self) -> usize {
        1
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(0.0, 1.0)]
    }

    fn sample_scenario(&self, rng: &mut RngStream) -> f64 {
        rng.random_range(-0.1..0.1)
    }

    fn payoff(&self, omega: &f64, x: &DVector<f64>) -> f64 {
        1.0 - (x[0] - 0.3).powi(2) + omega
    }
}
