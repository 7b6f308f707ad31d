//! Multivariate exponentials truncated to polytopes and to the unit simplex.

use nalgebra::DVector;
use rand::Rng;
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::polytope::{Polytope, FEAS_TOL};
use crate::rng::open01;
use crate::samplers1d::{
    trunc_exp_sample, trunc_gamma_ratio_uniforms, vaduva_sample, ExpMixture, Interval,
    RATE_SEPARATION,
};

pub const KENT_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScanOrder {
    /// Coordinates 1..K in order.
    #[default]
    Systematic,
    /// K coordinates drawn with replacement.
    Random,
}

/// Alias of [`Polytope::conditional_bounds`].
pub fn gibbs_conditional_bounds(poly: &Polytope, x: &DVector<f64>, k: usize) -> Result<Interval> {
    poly.conditional_bounds(x, k)
}

/// One Gibbs sweep for the density `∝ exp(−rates·x)` on `poly`.
pub fn gibbs_sweep_truncexp<R: Rng + ?Sized>(
    poly: &Polytope,
    rates: &DVector<f64>,
    x: &mut DVector<f64>,
    order: ScanOrder,
    rng: &mut R,
) -> Result<()> {
    let k = poly.dim();
    if rates.len() != k || x.len() != k {
        return Err(Error::Dimension(format!(
            "rates ({}) and state ({}) must match the polytope dimension {k}",
            rates.len(),
            x.len()
        )));
    }
    for step in 0..k {
        let j = match order {
            ScanOrder::Systematic => step,
            ScanOrder::Random => rng.random_range(0..k),
        };
        let iv = poly.conditional_bounds(x, j)?;
        x[j] = trunc_exp_sample(-rates[j], iv, rng)?;
    }
    let v = poly.violation(x);
    if v > FEAS_TOL * (1.0 + poly.b().amax()) {
        return Err(Error::Infeasible(format!("sweep left the polytope (violation {v:e})")));
    }
    Ok(())
}

/// Uniform draw on `{r ≥ 0, Σ r ≤ 1}` in `dim` coordinates: gaps of sorted uniforms.
pub fn simplex_uniform<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DVector<f64>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("simplex dimension must be ≥ 1".into()));
    }
    let mut u: Vec<f64> = (0..dim).map(|_| open01(rng)).collect();
    u.sort_by(f64::total_cmp);
    let mut prev = 0.0;
    Ok(DVector::from_iterator(
        dim,
        u.into_iter().map(|v| {
            let g = v - prev;
            prev = v;
            g
        }),
    ))
}

/// Uniform draw on the face `{r ≥ 0, Σ r = 1}` in `dim` coordinates.
pub fn simplex_face_uniform<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<DVector<f64>> {
    if dim == 0 {
        return Err(Error::InvalidArgument("simplex dimension must be ≥ 1".into()));
    }
    if dim == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let inner = simplex_uniform(dim - 1, rng)?;
    let rest = 1.0 - inner.sum();
    Ok(DVector::from_iterator(dim, inner.iter().copied().chain([rest.max(0.0)])))
}

/// `d(λ)⁻¹ exp(−Σ λ_j x_j)` on the unit simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct SimplexExpTarget {
    rates: DVector<f64>,
    equal: bool,
}

impl SimplexExpTarget {
    pub fn new(rates: DVector<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidArgument("need at least one rate".into()));
        }
        if let Some(r) = rates.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidArgument(format!("rate {r} is not positive and finite")));
        }
        let (lo, hi) = (rates.min(), rates.max());
        let equal = (hi - lo) / hi < RATE_SEPARATION;
        Ok(Self { rates, equal })
    }

    pub fn equal_rates(dim: usize, rate: f64) -> Result<Self> {
        Self::new(DVector::from_element(dim, rate))
    }

    pub fn rates(&self) -> &DVector<f64> {
        &self.rates
    }

    pub fn dim(&self) -> usize {
        self.rates.len()
    }

    pub fn is_equal(&self) -> bool {
        self.equal
    }

    pub fn mean_rate(&self) -> f64 {
        self.rates.mean()
    }

    /// `P(Σ X_j < 1)` for independent `X_j ∼ Exp(λ_j)`.
    pub fn simplex_prob(&self) -> Result<f64> {
        if self.equal {
            // P(Poisson(λ) ≥ k−1) = P(Gamma(k−1, 1) ≤ λ).
            Ok(gamma_lr(self.dim() as f64, self.mean_rate()))
        } else {
            Ok(ExpMixture::from_rates(self.rates.as_slice())?.simplex_prob())
        }
    }

    /// `d(λ) = p(λ)/∏λ_j`, the integral of `exp(−λ·x)` over the simplex.
    pub fn normalizer(&self) -> Result<f64> {
        Ok(self.simplex_prob()? / self.rates.product())
    }

    pub fn log_density(&self, x: &DVector<f64>) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!("point of length {}, target {}", x.len(), self.dim())));
        }
        if x.iter().any(|v| *v < 0.0) || x.sum() > 1.0 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(-self.rates.dot(x) - self.normalizer()?.ln())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KentDraw {
    pub x: DVector<f64>,
    /// Proposals generated, the accepted one included.
    pub trials: u64,
}

/// Size–direction sampler for equal rates: `x = y·r`, `y ∼ Gamma(k−1, λ)` on `[0, 1]`.
pub fn kent_equal_lambda_sample<R: Rng + ?Sized>(
    target: &SimplexExpTarget,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if !target.equal {
        return Err(Error::InvalidArgument(
            "size–direction sampler needs equal rates".into(),
        ));
    }
    let k1 = target.dim();
    let y = trunc_gamma_ratio_uniforms(k1 as f64, target.mean_rate(), 1.0, rng)?;
    Ok(simplex_face_uniform(k1, rng)? * y)
}

/// Accept–reject from independent exponentials truncated to the unit cube.
pub fn kent_unequal_lambda_sample<R: Rng + ?Sized>(
    target: &SimplexExpTarget,
    rng: &mut R,
) -> Result<KentDraw> {
    let unit = Interval::new(0.0, 1.0)?;
    let mut x = DVector::zeros(target.dim());
    for trials in 1..=KENT_BUDGET {
        let mut s = 0.0;
        for j in 0..target.dim() {
            x[j] = trunc_exp_sample(-target.rates[j], unit, rng)?;
            s += x[j];
        }
        if s <= 1.0 {
            return Ok(KentDraw { x, trials });
        }
    }
    Err(Error::RejectionBudget {
        budget: KENT_BUDGET,
        accepted: 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KentMethod {
    CubeRejection,
    SizeDirection,
}

/// Mean-rate cutoffs for choosing a simplex sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KentThresholds {
    pub small: f64,
    pub large: f64,
}

impl Default for KentThresholds {
    fn default() -> Self {
        Self {
            small: 0.5,
            large: 5.0,
        }
    }
}

pub fn select_method(target: &SimplexExpTarget, th: KentThresholds) -> KentMethod {
    let lbar = target.mean_rate();
    if lbar < th.small || !target.equal {
        KentMethod::CubeRejection
    } else {
        // Between the cutoffs and above them the gamma size is drawn by ratio of uniforms.
        KentMethod::SizeDirection
    }
}

pub fn kent_sample<R: Rng + ?Sized>(
    target: &SimplexExpTarget,
    th: KentThresholds,
    rng: &mut R,
) -> Result<DVector<f64>> {
    match select_method(target, th) {
        KentMethod::CubeRejection => Ok(kent_unequal_lambda_sample(target, rng)?.x),
        KentMethod::SizeDirection => kent_equal_lambda_sample(target, rng),
    }
}

/// Exact draw from `exp(−q₁x₁ − q₂x₂)` on `{x ≥ 0, a₁x₁ + a₂x₂ ≤ b}` (all of `q, a, b` positive).
///
/// With `z = q₁x₁` the first coordinate has density `∝ e^{−z}(1 − e^{−r(b' − z)})` on
/// `(0, b')`, a density tilted by a cdf, sampled by Vaduva rejection; the second is then a
/// truncated exponential.
pub fn two_var_halfplane_sample<R: Rng + ?Sized>(
    q: [f64; 2],
    a: [f64; 2],
    b: f64,
    rng: &mut R,
) -> Result<(DVector<f64>, u64)> {
    if q.iter().chain(&a).chain([&b]).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("rates, coefficients and b must be positive".into()));
    }
    // In z = q₁x₁ the region is 0 < z < bz with bz = q₁b/a₁ and the tilt rate
    // r = q₂a₁/(a₂q₁) in the same units.
    let bz = q[0] * b / a[0];
    let r = q[1] * a[0] / (a[1] * q[0]);
    let iv = Interval::new(0.0, bz)?;
    // p(z) ∝ e^{−z}·G(bz − z) with G the Exp(r) cdf; with s = bz − z this is e^{s}·G(s),
    // so s has f = TExp(+1) on (0, bz) and Y ∼ Exp(r).
    let draw = vaduva_sample(
        |rng: &mut R| trunc_exp_sample(1.0, iv, rng),
        |rng: &mut R| Ok(crate::rng::exp1(rng) / r),
        rng,
    )?;
    let z = bz - draw.value;
    let x1 = z / q[0];
    let x2_hi = ((b - a[0] * x1) / a[1]).max(0.0);
    let x2 = if x2_hi > 0.0 {
        trunc_exp_sample(-q[1], Interval::new(0.0, x2_hi)?, rng)?
    } else {
        0.0
    };
    Ok((DVector::from_vec(vec![x1, x2]), draw.trials))
}
