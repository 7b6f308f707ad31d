//! The two-crop farmer problem.
//!
//! First stage: plant `x ∈ (0, 100)` acres at storage cost `k` per acre. Second stage, after
//! the yields `ω = (ω₁, ω₂)` are revealed: maximize `143y₁ + 60y₂` subject to
//! `y₁ + y₂ ≤ x`, `110y₁ + 30y₂ ≤ ω₁`, `120y₁ + 210y₂ ≤ ω₂`, `y ≥ 0`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::piecewise::PiecewiseExp;
use crate::anneal::{anneal_run, mode_estimate, BoltzmannTarget, Kernel, ModeMethod, Schedule, Sense, Trace};
use crate::diagnostics::{mean, Histogram};
use crate::error::{Error, Result};
use crate::lp::{maximize_by_vertices, LpSolution};
use crate::polytope::Polytope;
use crate::rng::{open01, RngStream};

pub const PRICES: [f64; 2] = [143.0, 60.0];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OmegaLaw {
    /// Independent uniforms on the two ranges.
    Uniform { w1: (f64, f64), w2: (f64, f64) },
    /// A single known scenario.
    Fixed([f64; 2]),
}

impl Default for OmegaLaw {
    fn default() -> Self {
        OmegaLaw::Uniform {
            w1: (3000.0, 5000.0),
            w2: (10000.0, 20000.0),
        }
    }
}

impl OmegaLaw {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [f64; 2] {
        match *self {
            OmegaLaw::Uniform { w1, w2 } => [
                w1.0 + (w1.1 - w1.0) * open01(rng),
                w2.0 + (w2.1 - w2.0) * open01(rng),
            ],
            OmegaLaw::Fixed(w) => w,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, OmegaLaw::Fixed(_))
    }

    fn contains(&self, w: [f64; 2]) -> bool {
        match *self {
            OmegaLaw::Uniform { w1, w2 } => w1.0 <= w[0] && w[0] <= w1.1 && w2.0 <= w[1] && w[1] <= w2.1,
            OmegaLaw::Fixed(f) => f == w,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FarmerInstance {
    /// Storage cost per planted acre.
    pub k: f64,
    pub x_range: (f64, f64),
    pub omega: OmegaLaw,
}

impl Default for FarmerInstance {
    fn default() -> Self {
        Self {
            k: 10.0,
            x_range: (0.0, 100.0),
            omega: OmegaLaw::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct FarmerInner {
    pub y_hat: DVector<f64>,
    pub value: f64,
    pub trace: Trace,
}

impl FarmerInstance {
    pub fn new(k: f64, x_range: (f64, f64), omega: OmegaLaw) -> Result<Self> {
        if !(k >= 0.0) || !k.is_finite() {
            return Err(Error::InvalidArgument(format!("storage cost k = {k} must be ≥ 0")));
        }
        if !(x_range.0 >= 0.0 && x_range.1 > x_range.0 && x_range.1.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad planting range {x_range:?}")));
        }
        let ok = match omega {
            OmegaLaw::Uniform { w1, w2 } => w1.0 > 0.0 && w1.1 >= w1.0 && w2.0 > 0.0 && w2.1 >= w2.0,
            OmegaLaw::Fixed(w) => w[0] > 0.0 && w[1] > 0.0,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!("bad yield law {omega:?}")));
        }
        Ok(Self { k, x_range, omega })
    }

    fn check(&self, x: f64, w: [f64; 2]) -> Result<()> {
        if !(x > self.x_range.0 && x < self.x_range.1) {
            return Err(Error::InvalidArgument(format!("x = {x} outside {:?}", self.x_range)));
        }
        if !self.omega.contains(w) {
            return Err(Error::InvalidArgument(format!("ω = {w:?} outside the yield law {:?}", self.omega)));
        }
        Ok(())
    }

    /// Second-stage feasible set in `(y₁, y₂)`.
    pub fn inner_polytope(&self, x: f64, w: [f64; 2]) -> Result<Polytope> {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 110.0, 30.0, 120.0, 210.0]);
        let b = DVector::from_vec(vec![x, w[0], w[1]]);
        // a strictly interior point
        let s = 0.25 * x.min(w[0] / 140.0).min(w[1] / 330.0);
        Polytope::new(a, b, vec![true, true], DVector::from_vec(vec![s, s]))
    }

    /// `V(x, ω)` and its maximizer by vertex enumeration.
    pub fn recourse_value(&self, x: f64, w: [f64; 2]) -> Result<LpSolution> {
        maximize_by_vertices(&self.inner_polytope(x, w)?, &DVector::from_row_slice(&PRICES))
    }

    /// The largest `y₁` allowed with `y₂` fixed.
    pub fn y1_of(x: f64, w: [f64; 2], y2: f64) -> f64 {
        (x - y2).min((w[0] - 30.0 * y2) / 110.0).min((w[1] - 210.0 * y2) / 120.0)
    }

    /// Marginal of `y₂` under `exp(κ(143y₁ + 60y₂))` after `y₁` is set to its best value.
    pub fn y2_marginal(x: f64, w: [f64; 2], kappa: f64) -> Result<PiecewiseExp> {
        let hi = x.min(w[1] / 210.0);
        PiecewiseExp::from_min_of_lines(
            (0.0, PRICES[1]),
            PRICES[0],
            &[(x, -1.0), (w[0] / 110.0, -30.0 / 110.0), (w[1] / 120.0, -210.0 / 120.0)],
            0.0,
            hi,
            kappa,
        )
    }

    /// `Π = h(y₂) − kx + k·x_max`, positive on the whole planting range.
    fn payoff_shift(&self, x: f64) -> f64 {
        self.k * (self.x_range.1 - x)
    }

    /// Argmax of `−kx + V(x, ω)` over `n` midpoints of the planting range, `V` by vertex enumeration.
    pub fn grid_oracle(&self, w: [f64; 2], n: usize) -> Result<(f64, f64)> {
        let (lo, hi) = self.x_range;
        let h = (hi - lo) / n as f64;
        let mut best = (f64::NAN, f64::NEG_INFINITY);
        for i in 0..n {
            let x = lo + (i as f64 + 0.5) * h;
            let v = self.recourse_value(x, w)?.value - self.k * x;
            if v > best.1 {
                best = (x, v);
            }
        }
        Ok(best)
    }
}

/// Annealed Gibbs on the second stage at fixed `(x, ω)`; `use_slice` switches to the
/// slice-variable kernel. `ŷ*` is the ergodic mean of the final level.
pub fn farmer_inner_gibbs(
    inst: &FarmerInstance,
    x: f64,
    w: [f64; 2],
    schedule: &Schedule,
    use_slice: bool,
    rng: &mut RngStream,
) -> Result<FarmerInner> {
    inst.check(x, w)?;
    let target = BoltzmannTarget::linear(DVector::from_row_slice(&PRICES), Sense::Max, inst.inner_polytope(x, w)?)?;
    let kernel = if use_slice {
        Kernel::SliceWithinGibbs
    } else {
        Kernel::GibbsExponential
    };
    let trace = anneal_run(&target, kernel, schedule, None, rng)?;
    let y_hat = mode_estimate(&trace, ModeMethod::ErgodicMean)?;
    let value = PRICES[0] * y_hat[0] + PRICES[1] * y_hat[1];
    Ok(FarmerInner { y_hat, value, trace })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FarmerOuterConfig {
    pub copies: usize,
    /// Annealing parameter of the recourse marginal.
    pub kappa: f64,
    pub iterations: usize,
    /// Draws before this index are discarded; the histogram uses the rest.
    pub burnin: usize,
    /// Random-walk scale for `x`; `None` picks `width/(4√J)`.
    pub step: Option<f64>,
}

impl Default for FarmerOuterConfig {
    fn default() -> Self {
        Self {
            copies: 20,
            kappa: 1.0,
            iterations: 5000,
            burnin: 2500,
            step: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FarmerOuterRun {
    /// Ergodic mean of the kept x draws.
    pub x_hat: f64,
    /// Every x draw, burn-in included.
    pub x_trace: Vec<f64>,
    pub burnin: usize,
    pub histogram: Histogram,
    pub modal_interval: (f64, f64),
    pub x_acceptance: f64,
    pub omega_acceptance: f64,
}

impl FarmerOuterRun {
    pub fn kept(&self) -> &[f64] {
        &self.x_trace[self.burnin..]
    }
}

struct Copy {
    w: [f64; 2],
    y2: f64,
    u: f64,
    marg: PiecewiseExp,
}

/// MCMC over `(x, {ω_j, y₂ʲ, u_j})` with target
/// `∏_j p(ω_j)·p_κ(y₂ʲ | ω_j, x)·1(0 < u_j < Π(ω_j, y₂ʲ, x))`, whose x-marginal is
/// `∏_j (E_ω E_κ[h] − kx + k·x_max)`.
///
/// Per iteration and copy: an independence move on `ω_j` from the prior, `y₂ʲ` from its
/// marginal cut to the slice `{h ≥ u_j − shift}`, and a fresh `u_j`. Then `x` moves jointly
/// with all `y₂ʲ`: a random-walk proposal for `x` with `y₂ʲ` redrawn from `p_κ(·|ω_j, x')`,
/// which makes the acceptance ratio the product of the slice indicators.
pub fn farmer_outer_mcmc(inst: &FarmerInstance, cfg: &FarmerOuterConfig, rng: &mut RngStream) -> Result<FarmerOuterRun> {
    if cfg.copies == 0 {
        return Err(Error::InvalidArgument("need at least one copy".into()));
    }
    if cfg.iterations <= cfg.burnin {
        return Err(Error::InvalidArgument(format!(
            "iterations ({}) must exceed burn-in ({})",
            cfg.iterations, cfg.burnin
        )));
    }
    if !(cfg.kappa > 0.0) || !cfg.kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("κ = {} must be positive", cfg.kappa)));
    }
    let (lo, hi) = inst.x_range;
    let step = cfg.step.unwrap_or((hi - lo) / (4.0 * (cfg.copies as f64).sqrt()));
    let kappa = cfg.kappa;

    let mut x = 0.5 * (lo + hi);
    let mut copies = Vec::with_capacity(cfg.copies);
    for _ in 0..cfg.copies {
        let w = inst.omega.sample(rng);
        let marg = FarmerInstance::y2_marginal(x, w, kappa)?;
        let y2 = marg.sample(rng)?;
        let pi = marg.h(y2).expect("draw in support") + inst.payoff_shift(x);
        copies.push(Copy {
            w,
            y2,
            u: pi * open01(rng),
            marg,
        });
    }

    let mut x_trace = Vec::with_capacity(cfg.iterations);
    let (mut x_acc, mut w_acc, mut w_prop) = (0usize, 0usize, 0usize);
    for _ in 0..cfg.iterations {
        let shift = inst.payoff_shift(x);
        for c in copies.iter_mut() {
            if !inst.omega.is_fixed() {
                let w = inst.omega.sample(rng);
                let marg = FarmerInstance::y2_marginal(x, w, kappa)?;
                w_prop += 1;
                if let Some(h) = marg.h(c.y2) {
                    let log_r = marg.log_density(c.y2) - c.marg.log_density(c.y2);
                    if h + shift > c.u && open01(rng).ln() < log_r {
                        c.w = w;
                        c.marg = marg;
                        w_acc += 1;
                    }
                }
            }
            let iv = c
                .marg
                .superlevel(c.u - shift)
                .ok_or_else(|| Error::Infeasible("empty slice for y₂".into()))?;
            c.y2 = c.marg.sample_within(iv, rng)?;
            let pi = c.marg.h(c.y2).expect("draw in support") + shift;
            c.u = pi * open01(rng);
        }

        let xp = x + step * rng.sample::<f64, _>(StandardNormal);
        if xp > lo && xp < hi {
            let shift_p = inst.payoff_shift(xp);
            let mut prop = Vec::with_capacity(copies.len());
            let mut ok = true;
            for c in &copies {
                let marg = FarmerInstance::y2_marginal(xp, c.w, kappa)?;
                let y2 = marg.sample(rng)?;
                if marg.h(y2).expect("draw in support") + shift_p <= c.u {
                    ok = false;
                    break;
                }
                prop.push((marg, y2));
            }
            if ok {
                for (c, (marg, y2)) in copies.iter_mut().zip(prop) {
                    c.marg = marg;
                    c.y2 = y2;
                }
                x = xp;
                x_acc += 1;
            }
        }
        x_trace.push(x);
    }

    let kept = &x_trace[cfg.burnin..];
    let histogram = Histogram::freedman_diaconis(kept);
    let (_, mlo, mhi) = histogram.mode_bin();
    Ok(FarmerOuterRun {
        x_hat: mean(kept),
        histogram,
        modal_interval: (mlo, mhi),
        burnin: cfg.burnin,
        x_acceptance: x_acc as f64 / cfg.iterations as f64,
        omega_acceptance: w_acc as f64 / w_prop.max(1) as f64,
        x_trace,
    })
}

/// True when `x` lies in the histogram's modal bin or one of its neighbours.
pub fn within_one_bin(hist: &Histogram, x: f64) -> bool {
    let (m, lo, hi) = hist.mode_bin();
    let w = hi - lo;
    match hist.bin_of(x) {
        Some(i) => i.abs_diff(m) <= 1,
        None => x >= lo - w && x <= hi + w,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const W: [f64; 2] = [4000.0, 15000.0];

    #[test]
    fn recourse_at_75() {
        let inst = FarmerInstance::default();
        let s = inst.recourse_value(75.0, W).unwrap();
        assert!((s.value - 6315.625).abs() < 1e-9);
        assert!((s.x[0] - 21.875).abs() < 1e-9 && (s.x[1] - 53.125).abs() < 1e-9);
    }

    #[test]
    fn y1_substitution_matches_rows() {
        let y1 = FarmerInstance::y1_of(75.0, W, 10.0);
        assert!((y1 - 3700.0 / 110.0).abs() < 1e-12);
    }

    #[test]
    fn marginal_h_matches_best_y1() {
        let m = FarmerInstance::y2_marginal(75.0, W, 1.0).unwrap();
        for &y2 in &[0.0, 10.0, 40.0, 53.125, 60.0, 71.0] {
            let want = 60.0 * y2 + 143.0 * FarmerInstance::y1_of(75.0, W, y2);
            assert!((m.h(y2).unwrap() - want).abs() < 1e-9, "{y2}");
        }
        // the concave peak sits at the LP optimum
        let iv = m.superlevel(6315.625 - 1e-9).unwrap();
        assert!((iv.lo() - 53.125).abs() < 1e-6);
    }

    #[test]
    fn grid_oracle_fixed_scenario() {
        let inst = FarmerInstance::new(10.0, (0.0, 100.0), OmegaLaw::Fixed(W)).unwrap();
        let (x, _) = inst.grid_oracle(W, 200).unwrap();
        // slope of −kx + V is +18.875 left of 80 and −10 right of it
        assert!((x - 80.25).abs() < 1e-9, "{x}");
    }
}
