//! Law of a sum of independent exponentials with distinct rates.
//!
//! `F(y) = Σ a_j (1 − e^{−λ_j y})` with `a_j = ∏_{i≠j} λ_i/(λ_i − λ_j)`. Weights alternate in
//! sign, so sampling inverts `F` by bisection rather than by mixture selection.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::open01;

/// Minimum relative separation `|λ_i − λ_j| / max(λ_i, λ_j)`.
pub const RATE_SEPARATION: f64 = 1e-6;

const INVERSION_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct ExpMixture {
    weights: Vec<f64>,
    rates: Vec<f64>,
}

impl ExpMixture {
    pub fn from_rates(rates: &[f64]) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::InvalidArgument("need at least one rate".into()));
        }
        if let Some(&r) = rates.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidArgument(format!("rate {r} is not positive and finite")));
        }
        for (i, &li) in rates.iter().enumerate() {
            for &lj in &rates[i + 1..] {
                if (li - lj).abs() / li.max(lj) < RATE_SEPARATION {
                    return Err(Error::CoalescingRates(li, lj));
                }
            }
        }
        let weights = rates
            .iter()
            .enumerate()
            .map(|(j, &lj)| {
                rates
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != j)
                    .map(|(_, &li)| li / (li - lj))
                    .product()
            })
            .collect();
        Ok(Self {
            weights,
            rates: rates.to_vec(),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        let s: f64 = self
            .weights
            .iter()
            .zip(&self.rates)
            .map(|(a, l)| -a * (-l * y).exp_m1())
            .sum();
        s.clamp(0.0, 1.0)
    }

    /// `P(Σ X_j < 1)`, the probability that the sum lands in the unit simplex.
    pub fn simplex_prob(&self) -> f64 {
        self.cdf(1.0)
    }

    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::InvalidArgument(format!("u = {u} lies outside [0, 1)")));
        }
        if u == 0.0 {
            return Ok(0.0);
        }
        let mut hi = self.rates.iter().map(|l| 1.0 / l).sum::<f64>();
        let mut grow = 0;
        while self.cdf(hi) < u {
            hi *= 2.0;
            grow += 1;
            if grow > 200 {
                return Err(Error::Convergence(format!("could not bracket F⁻¹({u})")));
            }
        }
        let mut lo = 0.0;
        while hi - lo > INVERSION_TOL {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.inverse_cdf(open01(rng))
    }
}
