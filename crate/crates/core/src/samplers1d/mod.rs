//! Exact one-dimensional samplers shared by every higher-level kernel.

mod expmix;
mod gamma;
mod interval;
mod truncexp;
mod truncnorm;
mod vaduva;

pub use expmix::{ExpMixture, RATE_SEPARATION};
pub use gamma::{trunc_gamma_ratio_uniforms, TruncGammaRou};
pub use interval::Interval;
pub use truncexp::{
    trunc_exp_inverse_cdf, trunc_exp_log_density, trunc_exp_log_normalizer, trunc_exp_sample,
};
pub use truncnorm::{std_normal_mass, std_trunc_normal, trunc_normal_sample, INVERSION_MASS_FLOOR};
pub use vaduva::{vaduva_sample, VaduvaDraw, VADUVA_BUDGET};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::open01;

/// Uniform draw on a bounded interval.
pub fn uniform_on<R: Rng + ?Sized>(iv: Interval, rng: &mut R) -> Result<f64> {
    if !iv.is_bounded() {
        return Err(Error::NonNormalizable(format!("uniform law on {iv}")));
    }
    Ok(iv.clamp(iv.lo() + iv.width() * open01(rng)))
}
