//! Rejection for densities of the form `c·f(x)·F(x)` where `F` is a cdf.
//!
//! Draw `X ∼ f` and `Y ∼ F` until `X ≥ Y`; the accepted `X` has density `∝ f·F`.

use rand::Rng;

use crate::error::{Error, Result};

pub const VADUVA_BUDGET: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VaduvaDraw {
    pub value: f64,
    /// Number of (X, Y) pairs generated, the accepted one included.
    pub trials: u64,
}

pub fn vaduva_sample<R, Fx, Fy>(mut f_sampler: Fx, mut cdf_sampler: Fy, rng: &mut R) -> Result<VaduvaDraw>
where
    R: Rng + ?Sized,
    Fx: FnMut(&mut R) -> Result<f64>,
    Fy: FnMut(&mut R) -> Result<f64>,
{
    for trials in 1..=VADUVA_BUDGET {
        let x = f_sampler(rng)?;
        let y = cdf_sampler(rng)?;
        if x >= y {
            return Ok(VaduvaDraw { value: x, trials });
        }
    }
    Err(Error::RejectionBudget {
        budget: VADUVA_BUDGET,
        accepted: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{exp1, RngStream};

    #[test]
    fn degenerate_cdf_accepts_first_trial() {
        let mut rng = RngStream::new(5, 0);
        let d = vaduva_sample(|r| Ok(exp1(r)), |_| Ok(f64::NEG_INFINITY), &mut rng).unwrap();
        assert_eq!(d.trials, 1);
    }

    #[test]
    fn impossible_acceptance_exhausts_budget() {
        let mut rng = RngStream::new(5, 0);
        let e = vaduva_sample(|_| Ok(0.0), |_| Ok(1.0), &mut rng).unwrap_err();
        assert!(matches!(e, Error::RejectionBudget { .. }));
    }
}
