//! `G(z) = max {π·z : W′π ≤ q}` by annealing `exp(κ π·z)` over the dual polytope.

use nalgebra::{dmatrix, dvector, DMatrix, DVector};
use rand::Rng;

use super::{anneal_run, mode_estimate, value_estimate, BoltzmannTarget, Kernel, ModeMethod, Schedule, Sense, Trace};
use crate::error::{Error, Result};
use crate::lp::{maximize_by_vertices, LpSolution};
use crate::polytope::Polytope;
use crate::rng::RngStream;
use crate::samplers1d::{trunc_exp_sample, Interval};

#[derive(Clone, Debug)]
pub struct LpDualSolution {
    /// Ergodic mean of the final level.
    pub pi_hat: DVector<f64>,
    /// Rao-Blackwellised value `mean(π·z)` over the final level.
    pub g_hat: f64,
    pub g_se: f64,
    pub trace: Trace,
}

/// Anneals `exp(κ π·z)` on `dual` (the region `W′π ≤ q`).
pub fn solve_lp_dual(
    z: &DVector<f64>,
    dual: &Polytope,
    schedule: &Schedule,
    kernel: Kernel,
    rng: &mut RngStream,
) -> Result<LpDualSolution> {
    if z.len() != dual.dim() {
        return Err(Error::Dimension(format!(
            "z has {} entries, dual polytope dimension {}",
            z.len(),
            dual.dim()
        )));
    }
    if z.iter().all(|v| *v == 0.0) {
        // Every feasible π is optimal and the value is exactly zero.
        let w = dual.witness().clone();
        let trace = Trace {
            draws: vec![w.clone(), w.clone()],
            kappa: vec![schedule.final_kappa(); 2],
            objective: vec![0.0, 0.0],
            sense: Sense::Max,
            levels: vec![super::LevelSegment {
                kappa: schedule.final_kappa(),
                start: 0,
                burnin_end: 1,
                end: 2,
            }],
            seed: rng.seed(),
            stream: rng.stream(),
        };
        return Ok(LpDualSolution {
            pi_hat: w,
            g_hat: 0.0,
            g_se: 0.0,
            trace,
        });
    }
    let target = BoltzmannTarget::linear(z.clone(), Sense::Max, dual.clone())?;
    let trace = anneal_run(&target, kernel, schedule, None, rng)?;
    let pi_hat = mode_estimate(&trace, ModeMethod::ErgodicMean)?;
    let (g_hat, g_se) = value_estimate(&trace)?;
    Ok(LpDualSolution {
        pi_hat,
        g_hat,
        g_se,
        trace,
    })
}

/// The two-variable allocation LP `max c₁x₁ + c₂x₂` s.t. `x₁ + b·x₂ = t`, `0 ≤ x₁ ≤ u₁`,
/// `0 ≤ x₂ ≤ u₂`, solved through its three-variable dual
/// `min t·π₁ + u₁·π₂ + u₂·π₃` s.t. `π₁ + π₂ ≥ c₁`, `b·π₁ + π₃ ≥ c₂`, `π₂, π₃ ≥ 0`.
///
/// The box `(u₁, u₂)` defaults to `(t, t/b)`, the largest values the equality allows, so it
/// never cuts the original problem. Smaller boxes can make the annealed dual improper.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PincusParams {
    pub t: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
    pub u1: f64,
    pub u2: f64,
}

impl PincusParams {
    pub fn new(t: f64, b: f64, c1: f64, c2: f64) -> Result<Self> {
        Self::with_box(t, b, c1, c2, t, t / b)
    }

    pub fn with_box(t: f64, b: f64, c1: f64, c2: f64, u1: f64, u2: f64) -> Result<Self> {
        if !(t > 0.0 && b > 0.0) {
            return Err(Error::InvalidArgument(format!("need t > 0 and b > 0, got t={t}, b={b}")));
        }
        if !(u1 > 0.0 && u2 > 0.0) {
            return Err(Error::InvalidArgument(format!("box bounds must be positive, got ({u1}, {u2})")));
        }
        if ![c1, c2, u1, u2].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument("parameters must be finite".into()));
        }
        Ok(Self { t, b, c1, c2, u1, u2 })
    }

    /// Dual costs; the annealed density is `exp(−κ cost·π)`.
    pub fn dual_costs(&self) -> DVector<f64> {
        dvector![self.t, self.u1, self.u2]
    }

    pub fn dual_polytope(&self) -> Result<Polytope> {
        let witness = dvector![self.c1.max(self.c2 / self.b).max(0.0) + 1.0, 1.0, 1.0];
        Polytope::new(
            dmatrix![-1.0, -1.0, 0.0; -self.b, 0.0, -1.0],
            dvector![-self.c1, -self.c2],
            vec![false, true, true],
            witness,
        )
    }

    pub fn primal_polytope(&self) -> Result<Polytope> {
        Polytope::new(
            dmatrix![1.0, self.b; -1.0, -self.b; 1.0, 0.0; 0.0, 1.0],
            dvector![self.t, -self.t, self.u1, self.u2],
            vec![true, true],
            dvector![0.0, self.t / self.b],
        )
    }

    pub fn dual_value(&self, pi: &DVector<f64>) -> f64 {
        self.dual_costs().dot(pi)
    }
}

/// Exact primal optimum by vertex enumeration.
pub fn pincus_primal_oracle(p: &PincusParams) -> Result<LpSolution> {
    maximize_by_vertices(&p.primal_polytope()?, &dvector![p.c1, p.c2])
}

/// One sweep of the three truncated-exponential conditionals of the dual.
pub fn pincus_gibbs_step<R: Rng + ?Sized>(
    pi: &mut DVector<f64>,
    kappa: f64,
    p: &PincusParams,
    rng: &mut R,
) -> Result<()> {
    if pi.len() != 3 {
        return Err(Error::Dimension(format!("dual state has {} entries, expected 3", pi.len())));
    }
    let slack = 1e-9 * (1.0 + p.c1.abs().max(p.c2.abs()));
    if pi[0] + pi[1] < p.c1 - slack || p.b * pi[0] + pi[2] < p.c2 - slack || pi[1] < 0.0 || pi[2] < 0.0 {
        return Err(Error::Infeasible(format!("dual state {:?} is infeasible", pi.as_slice())));
    }
    let lo1 = (p.c1 - pi[1]).max((p.c2 - pi[2]) / p.b);
    pi[0] = trunc_exp_sample(-kappa * p.t, Interval::upper_half_line(lo1), rng)?;
    let lo2 = (p.c1 - pi[0]).max(0.0);
    pi[1] = trunc_exp_sample(-kappa * p.u1, Interval::upper_half_line(lo2), rng)?;
    let lo3 = (p.c2 - p.b * pi[0]).max(0.0);
    pi[2] = trunc_exp_sample(-kappa * p.u2, Interval::upper_half_line(lo3), rng)?;
    Ok(())
}

/// Anneals the dual; the primal value estimate is `−g_hat`.
pub fn solve_pincus(
    p: &PincusParams,
    schedule: &Schedule,
    kernel: Kernel,
    rng: &mut RngStream,
) -> Result<LpDualSolution> {
    solve_lp_dual(&(-p.dual_costs()), &p.dual_polytope()?, schedule, kernel, rng)
}

/// `W′` as rows and `q`, for callers that hold the LP in the textbook form.
pub fn dual_polytope_from(w_t: DMatrix<f64>, q: DVector<f64>) -> Result<Polytope> {
    let k = w_t.ncols();
    Polytope::with_search(w_t, q, vec![false; k], None)
}
