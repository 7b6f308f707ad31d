//! Exponential densities `∝ exp(m·x)` restricted to an interval.
//!
//! `m` is the coefficient of `x` in the log-density: `m > 0` puts mass toward the upper
//! end, `m < 0` toward the lower end, `m = 0` is uniform. A half-line is allowed only on
//! the side where the density decays.

use rand::Rng;

use super::Interval;
use crate::error::{Error, Result};
use crate::rng::open01;

/// Below this value of `|m|·width` the density is treated as uniform.
const FLAT_RATE: f64 = 1e-12;

/// Exponents below this are combined in log space.
const LOG_SPACE_CUTOFF: f64 = -30.0;

pub(crate) fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + (-(a - b).abs()).exp().ln_1p()
}

fn check_normalizable(m: f64, iv: &Interval) -> Result<()> {
    if !m.is_finite() {
        return Err(Error::InvalidArgument(format!("exponential rate {m} is not finite")));
    }
    let bad = (m > 0.0 && iv.hi().is_infinite())
        || (m < 0.0 && iv.lo().is_infinite())
        || (m == 0.0 && !iv.is_bounded());
    if bad && !iv.is_degenerate() {
        return Err(Error::NonNormalizable(format!(
            "exp({m}·x) on {iv} has infinite mass"
        )));
    }
    Ok(())
}

/// Inverse cdf for `m > 0` on `(a, t)` with finite `t`:
/// `t + ln(e^{m(a−t)} + u(1 − e^{m(a−t)}))/m`.
fn upper_anchored(m: f64, a: f64, t: f64, u: f64) -> f64 {
    let d = m * (a - t);
    let log_term = if d < LOG_SPACE_CUTOFF {
        log_add_exp(u.ln(), (1.0 - u).ln() + d)
    } else {
        (d.exp() + u * (-d.exp_m1())).ln()
    };
    t + log_term / m
}

/// Quantile function of the density `∝ exp(m·x)` on `iv`, evaluated at `u ∈ [0, 1]`.
pub fn trunc_exp_inverse_cdf(m: f64, iv: Interval, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::InvalidArgument(format!("u = {u} lies outside [0, 1]")));
    }
    check_normalizable(m, &iv)?;
    let (a, t) = (iv.lo(), iv.hi());
    if iv.is_degenerate() {
        return Ok(a);
    }
    if m == 0.0 || (iv.is_bounded() && (m * iv.width()).abs() < FLAT_RATE) {
        return Ok(iv.clamp(a + u * (t - a)));
    }
    let x = if m > 0.0 {
        upper_anchored(m, a, t, u)
    } else {
        -upper_anchored(-m, -t, -a, 1.0 - u)
    };
    Ok(iv.clamp(x))
}

/// One draw from the density `∝ exp(m·x)` on `iv`.
pub fn trunc_exp_sample<R: Rng + ?Sized>(m: f64, iv: Interval, rng: &mut R) -> Result<f64> {
    trunc_exp_inverse_cdf(m, iv, open01(rng))
}

/// `ln ∫_iv exp(m·x) dx`. Degenerate intervals give `-∞`.
pub fn trunc_exp_log_normalizer(m: f64, iv: Interval) -> Result<f64> {
    check_normalizable(m, &iv)?;
    if iv.is_degenerate() {
        return Ok(f64::NEG_INFINITY);
    }
    let (a, t) = (iv.lo(), iv.hi());
    Ok(if m == 0.0 {
        iv.width().ln()
    } else if m > 0.0 {
        m * t + (-(m * (a - t)).exp_m1()).ln() - m.ln()
    } else {
        m * a + (-(m * (t - a)).exp_m1()).ln() - (-m).ln()
    })
}

/// Log-density of `exp(m·x)` normalized on `iv`; `-∞` outside the interval.
pub fn trunc_exp_log_density(m: f64, iv: Interval, x: f64) -> Result<f64> {
    if !iv.contains(x) {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(m * x - trunc_exp_log_normalizer(m, iv)?)
}
