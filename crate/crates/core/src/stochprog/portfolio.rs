//! Exponential-utility portfolio choice with normal returns.
//!
//! The shifted utility `G(r, x) = K − exp(−γ(rᵀx + r_f))` is written as the integral
//! `∫ γ e^{−γw} dw` over `w ∈ [−ln K/γ, rᵀx + r_f]`, so each copy carries a latent `w_j`
//! and every full conditional is a standard one-dimensional or truncated-normal draw.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;
use super::one_stage::OneStageModel;
use crate::diagnostics::{mean, Histogram};
use crate::error::{Error, Result};
use crate::polytope::{BoundAccumulator, Polytope};
use crate::rng::RngStream;
use crate::samplers1d::{trunc_exp_sample, uniform_on, Interval};
use crate::truncnorm_mv::{gibbs_sweep_truncnorm, DecorrelatedSystem};

/// Largest number of assets accepted.
pub const MAX_ASSETS: usize = 64;
/// Redraws of the latent utilities when an x-interval comes out empty.
pub const EMPTY_RETRY: usize = 16;

#[derive(Clone, Debug)]
pub struct PortfolioInstance {
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    pub gamma: f64,
    pub r_f: f64,
    /// Utility shift `K`.
    pub k_shift: f64,
    pub copies: usize,
    /// Positions are confined to `[−x_bound, x_bound]` per asset.
    pub x_bound: f64,
    chol: Cholesky<f64, Dyn>,
    q: DMatrix<f64>,
}

impl PortfolioInstance {
    pub fn new(
        mu: DVector<f64>,
        sigma: DMatrix<f64>,
        gamma: f64,
        r_f: f64,
        k_shift: f64,
        copies: usize,
        x_bound: f64,
    ) -> Result<Self> {
        let n = mu.len();
        if n == 0 || n > MAX_ASSETS {
            return Err(Error::InvalidArgument(format!("asset count {n} outside 1..={MAX_ASSETS}")));
        }
        if sigma.nrows() != n || sigma.ncols() != n {
            return Err(Error::Dimension(format!("Σ is {}×{}, μ has {n} entries", sigma.nrows(), sigma.ncols())));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("risk aversion γ = {gamma} must be positive")));
        }
        if !(x_bound > 0.0) || !x_bound.is_finite() {
            return Err(Error::InvalidArgument(format!("position bound {x_bound} must be positive and finite")));
        }
        if copies == 0 {
            return Err(Error::InvalidArgument("need at least one copy".into()));
        }
        // At x = 0 the payoff is K − e^{−γ r_f}; the latent interval must be nonempty there.
        if !(k_shift > (-gamma * r_f).exp()) {
            return Err(Error::NonPositivePayoff { value: k_shift - (-gamma * r_f).exp() });
        }
        let chol = Cholesky::new(sigma.clone())
            .ok_or_else(|| Error::NotPositiveDefinite("return covariance".into()))?;
        let q = chol
            .l()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factor is singular".into()))?;
        Ok(Self {
            mu,
            sigma,
            gamma,
            r_f,
            k_shift,
            copies,
            x_bound,
            chol,
            q,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `Σ⁻¹μ/γ`, the unconstrained maximizer of expected exponential utility.
    pub fn analytic_optimum(&self) -> DVector<f64> {
        self.chol.solve(&self.mu) / self.gamma
    }

    /// Lower end of the latent utility interval, `−ln K/γ`.
    pub fn w_floor(&self) -> f64 {
        -self.k_shift.ln() / self.gamma
    }

    pub fn sample_return(&self, rng: &mut RngStream) -> DVector<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        &self.mu + self.chol.l() * z
    }
}

impl OneStageModel for PortfolioInstance {
    type Scenario = DVector<f64>;

    fn dim(&self) -> usize {
        self.mu.len()
    }

    fn domain(&self) -> Vec<(f64, f64)> {
        vec![(-self.x_bound, self.x_bound); self.mu.len()]
    }

    fn sample_scenario(&self, rng: &mut RngStream) -> DVector<f64> {
        self.sample_return(rng)
    }

    fn payoff(&self, r: &DVector<f64>, x: &DVector<f64>) -> f64 {
        self.k_shift - (-self.gamma * (r.dot(x) + self.r_f)).exp()
    }
}

#[derive(Clone, Debug)]
pub struct PortfolioRun {
    /// Ergodic mean of the kept x draws.
    pub x_hat: DVector<f64>,
    /// Per-coordinate Freedman–Diaconis histogram mode (bin midpoint), a diagnostic.
    pub x_mode: DVector<f64>,
    pub draws: Vec<DVector<f64>>,
}

struct State {
    x: DVector<f64>,
    r: Vec<DVector<f64>>,
    w: Vec<f64>,
}

fn draw_w(inst: &PortfolioInstance, r: &DVector<f64>, x: &DVector<f64>, rng: &mut RngStream) -> Result<f64> {
    let hi = r.dot(x) + inst.r_f;
    let lo = inst.w_floor();
    if hi < lo {
        return Err(Error::NonPositivePayoff { value: inst.payoff(r, x) });
    }
    // density ∝ e^{−γw}
    trunc_exp_sample(-inst.gamma, Interval::new(lo, hi)?, rng)
}

fn draw_r(inst: &PortfolioInstance, r: &DVector<f64>, w: f64, x: &DVector<f64>, rng: &mut RngStream) -> Result<DVector<f64>> {
    // rᵀx + r_f ≥ w  ⇔  −xᵀr ≤ r_f − w
    let n = inst.dim();
    let a = DMatrix::from_row_slice(1, n, (-x).as_slice());
    let poly = Polytope::new(a, DVector::from_element(1, inst.r_f - w), vec![false; n], r.clone())?;
    let sys = DecorrelatedSystem::from_cholesky(&inst.chol, &inst.q, &inst.mu, &poly);
    let mut phi = sys.to_phi(r);
    gibbs_sweep_truncnorm(&sys, &mut phi, rng)?;
    Ok(sys.to_theta(&phi))
}

fn x_interval(inst: &PortfolioInstance, st: &State, k: usize) -> Result<Interval> {
    let mut acc = BoundAccumulator::new(-inst.x_bound, inst.x_bound);
    for (j, (r, &w)) in st.r.iter().zip(&st.w).enumerate() {
        let rest = r.dot(&st.x) - r[k] * st.x[k];
        // r_k·t + rest + r_f ≥ w  ⇔  −r_k·t ≤ rest + r_f − w
        acc.add(j, -r[k], rest + inst.r_f - w, w.abs() + inst.r_f.abs());
    }
    acc.finish(k, st.x[k])
}

/// One sweep over `w`, `r` (per copy) and then each coordinate of `x`.
fn sweep(inst: &PortfolioInstance, st: &mut State, rng: &mut RngStream) -> Result<()> {
    for j in 0..inst.copies {
        st.w[j] = draw_w(inst, &st.r[j], &st.x, rng)?;
        st.r[j] = draw_r(inst, &st.r[j], st.w[j], &st.x, rng)?;
    }
    for k in 0..inst.dim() {
        let mut tries = 0;
        let iv = loop {
            match x_interval(inst, st, k) {
                Ok(iv) => break iv,
                Err(e @ Error::EmptyInterval { .. }) => {
                    tries += 1;
                    if tries > EMPTY_RETRY {
                        return Err(e);
                    }
                    log::debug!("empty x-interval for asset {k}; redrawing latent utilities");
                    for j in 0..inst.copies {
                        st.w[j] = draw_w(inst, &st.r[j], &st.x, rng)?;
                    }
                }
                Err(e) => return Err(e),
            }
        };
        st.x[k] = uniform_on(iv, rng)?;
    }
    Ok(())
}

/// Auxiliary-variable Gibbs sampler on the `J`-copy target; see the module docs.
pub fn portfolio_mcmc(inst: &PortfolioInstance, sweeps: usize, burnin: usize, rng: &mut RngStream) -> Result<PortfolioRun> {
    if sweeps <= burnin {
        return Err(Error::InvalidArgument(format!("sweeps ({sweeps}) must exceed burn-in ({burnin})")));
    }
    let n = inst.dim();
    let mut st = State {
        x: DVector::zeros(n),
        r: vec![inst.mu.clone(); inst.copies],
        w: vec![0.0; inst.copies],
    };
    for j in 0..inst.copies {
        st.w[j] = draw_w(inst, &st.r[j], &st.x, rng)?;
    }
    let mut draws = Vec::with_capacity(sweeps - burnin);
    for s in 0..sweeps {
        sweep(inst, &mut st, rng)?;
        if s >= burnin {
            draws.push(st.x.clone());
        }
    }
    let col = |i: usize| draws.iter().map(|d: &DVector<f64>| d[i]).collect::<Vec<_>>();
    let x_hat = DVector::from_fn(n, |i, _| mean(&col(i)));
    let x_mode = DVector::from_fn(n, |i, _| {
        let (_, lo, hi) = Histogram::freedman_diaconis(&col(i)).mode_bin();
        0.5 * (lo + hi)
    });
    Ok(PortfolioRun { x_hat, x_mode, draws })
}

impl PortfolioInstance {
    /// `n` independent return draws.
    pub fn scenarios(&self, n: usize, rng: &mut RngStream) -> Vec<DVector<f64>> {
        (0..n).map(|_| self.sample_return(rng)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n1() -> PortfolioInstance {
        PortfolioInstance::new(
            DVector::from_element(1, 0.05),
            DMatrix::from_element(1, 1, 0.04),
            2.0,
            0.0,
            9.0,
            20,
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn analytic_optimum_n1() {
        assert!((n1().analytic_optimum()[0] - 0.625).abs() < 1e-12);
    }

    #[test]
    fn draws_stay_in_box() {
        let inst = n1();
        let mut rng = RngStream::new(3, 0);
        let run = portfolio_mcmc(&inst, 200, 100, &mut rng).unwrap();
        assert!(run.draws.iter().all(|d| d[0].abs() <= 2.0));
    }

    #[test]
    fn shift_too_small_is_rejected() {
        let e = PortfolioInstance::new(
            DVector::from_element(1, 0.05),
            DMatrix::from_element(1, 1, 0.04),
            2.0,
            0.0,
            1.0,
            20,
            2.0,
        );
        assert!(matches!(e, Err(Error::NonPositivePayoff { .. })));
    }
}
