//! Two-stage programs with linear recourse, sampled through an annealed recourse dual.
//!
//! The recourse cost `Q(x, ω) = min_{y≥0} {qᵀy : Wy = h − Tx}` equals the dual value
//! `max_ξ {ξᵀ(h − Tx) : Wᵀξ ≤ q}`. With the payoff
//! `Π(ω, ξ, x) = shift − cᵀx − ξᵀ(h − Tx)` and a slice variable `u` per copy, the target is
//!
//! `μ(x) ∏_j p(ω_j)·p_κ(ξ_j | ω_j, x)·1(0 < u_j < Π(ω_j, ξ_j, x))`,
//! `p_κ(ξ | ω, x) ∝ exp(κ ξᵀ(h − Tx))·1(Wᵀξ ≤ q)`,
//!
//! whose x-marginal is `∏_j (shift − cᵀx − E_ω E_κ[ξᵀ(h − Tx)])`, peaking at the minimizer
//! of expected total cost as κ and J grow.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::diagnostics::mean;
use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::rng::{open01, RngStream};
use crate::samplers1d::{trunc_exp_log_normalizer, trunc_exp_sample};
use crate::truncexp_mv::{gibbs_sweep_truncexp, ScanOrder};

/// Scenario data `(q, h, T)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecourseData {
    pub q: DVector<f64>,
    pub h: DVector<f64>,
    pub t: DMatrix<f64>,
}

/// How the payoff enters the joint target.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TwoStageVariant {
    /// One slice variable `u_j` per copy; the payoff appears as `1(0 < u_j < Π)`.
    #[default]
    Sliced,
    /// `u` integrated out; the payoff appears as a weight `Π` in every Metropolis ratio.
    PayoffWeighted,
}

#[derive(Clone, Debug)]
pub struct TwoStageProblem {
    pub c: DVector<f64>,
    pub first_stage: Polytope,
    pub w: DMatrix<f64>,
    pub scenarios: Vec<RecourseData>,
    pub probs: Vec<f64>,
    pub kappa: f64,
    pub copies: usize,
    /// Added to the payoff so that it stays positive.
    pub shift: f64,
    pub variant: TwoStageVariant,
    duals: Vec<Polytope>,
}

impl TwoStageProblem {
    pub fn new(
        c: DVector<f64>,
        first_stage: Polytope,
        w: DMatrix<f64>,
        scenarios: Vec<RecourseData>,
        probs: Vec<f64>,
        kappa: f64,
        copies: usize,
        shift: f64,
    ) -> Result<Self> {
        let nx = c.len();
        let (m, ny) = w.shape();
        if first_stage.dim() != nx {
            return Err(Error::Dimension(format!("c has {nx} entries, first-stage set {}", first_stage.dim())));
        }
        if scenarios.is_empty() || scenarios.len() != probs.len() {
            return Err(Error::Dimension(format!(
                "{} scenarios with {} probabilities",
                scenarios.len(),
                probs.len()
            )));
        }
        let total: f64 = probs.iter().sum();
        if probs.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("scenario probabilities must be ≥ 0 and sum to 1 (sum {total})")));
        }
        if !(kappa > 0.0) || !kappa.is_finite() || copies == 0 || !shift.is_finite() {
            return Err(Error::InvalidArgument("need κ > 0, at least one copy and a finite shift".into()));
        }
        let mut duals = Vec::with_capacity(scenarios.len());
        for (s, d) in scenarios.iter().enumerate() {
            if d.q.len() != ny || d.h.len() != m || d.t.shape() != (m, nx) {
                return Err(Error::Dimension(format!(
                    "scenario {s}: q {}, h {}, T {:?}; expected {ny}, {m}, ({m}, {nx})",
                    d.q.len(),
                    d.h.len(),
                    d.t.shape()
                )));
            }
            let dual = Polytope::with_search(w.transpose(), d.q.clone(), vec![false; m], None).map_err(|e| {
                Error::Infeasible(format!("scenario {s}: recourse dual {{Wᵀξ ≤ q}} is empty ({e})"))
            })?;
            duals.push(dual);
        }
        Ok(Self {
            c,
            first_stage,
            w,
            scenarios,
            probs,
            kappa,
            copies,
            shift,
            variant: TwoStageVariant::default(),
            duals,
        })
    }

    pub fn with_variant(mut self, variant: TwoStageVariant) -> Self {
        self.variant = variant;
        self
    }

    pub fn dual(&self, s: usize) -> &Polytope {
        &self.duals[s]
    }

    /// `h − Tx` for scenario `s`.
    pub fn rhs(&self, s: usize, x: &DVector<f64>) -> DVector<f64> {
        let d = &self.scenarios[s];
        &d.h - &d.t * x
    }

    pub fn payoff(&self, s: usize, xi: &DVector<f64>, x: &DVector<f64>) -> f64 {
        self.shift - self.c.dot(x) - xi.dot(&self.rhs(s, x))
    }

    fn sample_scenario<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = open01(rng);
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.len() - 1
    }
}

/// Metropolis ratio `p_κ(ξ | cand)/p_κ(ξ | curr)` as the product over coordinates of the
/// one-dimensional conditional densities `p_κ(ξ_j | ξ_{−j}, ·)`, each a truncated exponential
/// with a closed-form normalizer. No joint normalizer is evaluated.
///
/// The product equals the joint ratio when the dual density factorizes over coordinates
/// (always in one dimension, or on a box-shaped dual set). Returns 0 when `ξ` is infeasible
/// under `cand`.
pub fn ch_metropolis_ratio(
    prob: &TwoStageProblem,
    xi: &DVector<f64>,
    cand: (usize, &DVector<f64>),
    curr: (usize, &DVector<f64>),
) -> Result<f64> {
    if !prob.dual(cand.0).is_feasible(xi) {
        return Ok(0.0);
    }
    if cand.0 == curr.0 && cand.1 == curr.1 {
        return Ok(1.0);
    }
    let log_cond = |(s, x): (usize, &DVector<f64>)| -> Result<f64> {
        let z = prob.rhs(s, x);
        let dual = prob.dual(s);
        let mut acc = 0.0;
        for j in 0..xi.len() {
            let iv = dual.conditional_bounds(xi, j)?;
            let m = prob.kappa * z[j];
            if iv.is_degenerate() {
                continue;
            }
            acc += m * xi[j] - trunc_exp_log_normalizer(m, iv)?;
        }
        Ok(acc)
    };
    Ok((log_cond(cand)? - log_cond(curr)?).exp())
}

#[derive(Clone, Debug)]
pub struct TwoStageRun {
    /// Ergodic mean of the kept x draws.
    pub x_hat: DVector<f64>,
    pub draws: Vec<DVector<f64>>,
    /// Scenario index of the first copy, per kept sweep.
    pub scenario_trace: Vec<usize>,
    /// Mean of `ξᵀ(h − Tx)` over kept sweeps and copies: the annealed recourse cost.
    pub recourse_cost: f64,
    pub x_acceptance: f64,
    pub omega_acceptance: f64,
}

struct CopyState {
    s: usize,
    xi: DVector<f64>,
    u: f64,
}

/// Cycles a dual Gibbs sweep with the slice row, a fresh `u`, an independence move on `ω`,
/// and a coordinate-wise `x` move per copy set; see the module docs for the target.
///
/// The x move proposes each coordinate from the truncated exponential
/// `∝ exp(−κ Σ_j (T_jᵀξ_j)_k x_k)` on the slice-feasible interval and corrects for the
/// dual normalizers with [`ch_metropolis_ratio`].
pub fn two_stage_mcmc(prob: &TwoStageProblem, sweeps: usize, burnin: usize, rng: &mut RngStream) -> Result<TwoStageRun> {
    if sweeps <= burnin {
        return Err(Error::InvalidArgument(format!("sweeps ({sweeps}) must exceed burn-in ({burnin})")));
    }
    let kappa = prob.kappa;
    let nx = prob.c.len();
    let mut x = prob.first_stage.witness().clone();
    let mut copies = Vec::with_capacity(prob.copies);
    for _ in 0..prob.copies {
        let s = prob.sample_scenario(rng);
        let xi = prob.dual(s).witness().clone();
        let pi = prob.payoff(s, &xi, &x);
        if pi <= 0.0 {
            return Err(Error::NonPositivePayoff { value: pi });
        }
        let u = if prob.variant == TwoStageVariant::Sliced { pi * open01(rng) } else { 0.0 };
        copies.push(CopyState { s, xi, u });
    }

    let mut draws = Vec::with_capacity(sweeps - burnin);
    let mut scenario_trace = Vec::with_capacity(sweeps - burnin);
    let mut cost = Vec::with_capacity(sweeps - burnin);
    let (mut x_acc, mut x_prop, mut w_acc, mut w_prop) = (0usize, 0usize, 0usize, 0usize);
    let weighted = prob.variant == TwoStageVariant::PayoffWeighted;
    for sweep in 0..sweeps {
        for c in copies.iter_mut() {
            let z = prob.rhs(c.s, &x);
            if weighted {
                // single-site draws from p_κ's conditional, corrected by the payoff ratio
                let dual = prob.dual(c.s);
                for j in 0..c.xi.len() {
                    let iv = dual.conditional_bounds(&c.xi, j).map_err(|e| annotate(e, c.s))?;
                    let mut cand = c.xi.clone();
                    cand[j] = trunc_exp_sample(kappa * z[j], iv, rng).map_err(|e| annotate(e, c.s))?;
                    let (p_new, p_old) = (prob.payoff(c.s, &cand, &x), prob.payoff(c.s, &c.xi, &x));
                    if p_new > 0.0 && open01(rng) * p_old < p_new {
                        c.xi = cand;
                    }
                }
            } else {
                // Π > u  ⇔  zᵀξ ≤ shift − cᵀx − u
                let poly = prob
                    .dual(c.s)
                    .with_row(z.as_slice(), prob.shift - prob.c.dot(&x) - c.u)?;
                gibbs_sweep_truncexp(&poly, &(&z * -kappa), &mut c.xi, ScanOrder::Systematic, rng)
                    .map_err(|e| annotate(e, c.s))?;
                c.u = prob.payoff(c.s, &c.xi, &x) * open01(rng);
            }
            if prob.scenarios.len() > 1 {
                let s = prob.sample_scenario(rng);
                w_prop += 1;
                if s == c.s {
                    w_acc += 1;
                    continue;
                }
                let p_new = prob.payoff(s, &c.xi, &x);
                if p_new > c.u {
                    let mut r = ch_metropolis_ratio(prob, &c.xi, (s, &x), (c.s, &x))?;
                    if weighted {
                        r *= p_new / prob.payoff(c.s, &c.xi, &x);
                    }
                    if open01(rng) < r {
                        c.s = s;
                        w_acc += 1;
                    }
                }
            }
        }

        for k in 0..nx {
            let mut acc = prob.first_stage.conditional_accumulator(&x, k)?;
            let mut slope = 0.0;
            for (j, c) in copies.iter().enumerate() {
                let d = &prob.scenarios[c.s];
                let g = d.t.transpose() * &c.xi; // Tᵀξ
                slope += g[k];
                if !weighted {
                    // (c − Tᵀξ)ᵀx ≤ shift − ξᵀh − u
                    let a = &prob.c - &g;
                    let rest = a.dot(&x) - a[k] * x[k];
                    let rhs = prob.shift - c.xi.dot(&d.h) - c.u;
                    acc.add(prob.first_stage.n_rows() + j, a[k], rhs - rest, rhs.abs());
                }
            }
            let iv = acc.finish(k, x[k])?;
            let xk = trunc_exp_sample(-kappa * slope, iv, rng)?;
            let mut xp = x.clone();
            xp[k] = xk;
            x_prop += 1;
            let mut log_r = 0.0;
            for c in &copies {
                let r = ch_metropolis_ratio(prob, &c.xi, (c.s, &xp), (c.s, &x))?;
                let g = prob.scenarios[c.s].t.transpose() * &c.xi;
                log_r += r.ln() + kappa * g[k] * (xk - x[k]);
                if weighted {
                    let p_new = prob.payoff(c.s, &c.xi, &xp);
                    log_r += if p_new > 0.0 { (p_new / prob.payoff(c.s, &c.xi, &x)).ln() } else { f64::NEG_INFINITY };
                }
            }
            if open01(rng).ln() < log_r {
                x = xp;
                x_acc += 1;
            }
        }

        if sweep >= burnin {
            draws.push(x.clone());
            scenario_trace.push(copies[0].s);
            cost.push(mean(
                &copies
                    .iter()
                    .map(|c| c.xi.dot(&prob.rhs(c.s, &x)))
                    .collect::<Vec<_>>(),
            ));
        }
    }
    let x_hat = DVector::from_fn(nx, |i, _| mean(&draws.iter().map(|d| d[i]).collect::<Vec<_>>()));
    Ok(TwoStageRun {
        x_hat,
        draws,
        scenario_trace,
        recourse_cost: mean(&cost),
        x_acceptance: x_acc as f64 / x_prop.max(1) as f64,
        omega_acceptance: w_acc as f64 / w_prop.max(1) as f64,
    })
}

fn annotate(e: Error, s: usize) -> Error {
    match e {
        Error::NonNormalizable(m) => Error::NonNormalizable(format!("scenario {s}: {m}")),
        Error::Infeasible(m) => Error::Infeasible(format!("scenario {s}: {m}")),
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Newsvendor-style toy: ξ ∈ [−q₂, q₁], x ∈ [0, 1].
    pub(crate) fn toy(kappa: f64, copies: usize) -> TwoStageProblem {
        let s = Polytope::new(
            DMatrix::from_row_slice(1, 1, &[1.0]),
            DVector::from_element(1, 1.0),
            vec![true],
            DVector::from_element(1, 0.5),
        )
        .unwrap();
        let sc = |q1: f64, q2: f64, h: f64| RecourseData {
            q: DVector::from_vec(vec![q1, q2]),
            h: DVector::from_element(1, h),
            t: DMatrix::from_element(1, 1, 1.0),
        };
        TwoStageProblem::new(
            DVector::from_element(1, 0.5),
            s,
            DMatrix::from_row_slice(1, 2, &[1.0, -1.0]),
            vec![sc(2.0, 1.0, 0.3), sc(1.5, 0.5, 0.8)],
            vec![0.4, 0.6],
            kappa,
            copies,
            4.0,
        )
        .unwrap()
    }

    #[test]
    fn ratio_is_one_for_same_pair() {
        let p = toy(1.0, 1);
        let xi = DVector::from_element(1, 0.1);
        let x = DVector::from_element(1, 0.4);
        assert_eq!(ch_metropolis_ratio(&p, &xi, (0, &x), (0, &x)).unwrap(), 1.0);
    }

    #[test]
    fn ratio_zero_when_infeasible() {
        let p = toy(1.0, 1);
        let xi = DVector::from_element(1, 1.8); // inside [−1, 2] but not [−0.5, 1.5]
        let x = DVector::from_element(1, 0.4);
        assert_eq!(ch_metropolis_ratio(&p, &xi, (1, &x), (0, &x)).unwrap(), 0.0);
    }

    #[test]
    fn zero_technology_minimizes_first_stage_cost() {
        let mut p = toy(1.0, 8);
        for d in p.scenarios.iter_mut() {
            d.t[(0, 0)] = 0.0;
        }
        p.c[0] = 3.0;
        let mut rng = RngStream::new(9, 0);
        let run = two_stage_mcmc(&p, 4000, 1000, &mut rng).unwrap();
        // x-marginal ∝ (const − 3x)^8 on [0, 1] leans to 0
        assert!(run.x_hat[0] < 0.3, "{}", run.x_hat[0]);
    }
}
