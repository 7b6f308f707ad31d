//! Gamma law restricted to `[0, upper]` by the ratio-of-uniforms method.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::open01;

const BUDGET: u64 = 1_000_000;

/// Log of the unnormalized density `y^{shape-1} e^{-rate·y}`, rescaled to 0 at the mode `s`.
fn log_h(shape: f64, rate: f64, s: f64, y: f64) -> f64 {
    if y < 0.0 {
        return f64::NEG_INFINITY;
    }
    let tilt = -rate * (y - s);
    if shape == 1.0 {
        return tilt;
    }
    if y == 0.0 {
        return f64::NEG_INFINITY;
    }
    (shape - 1.0) * (y / s).ln() + tilt
}

/// Maximizer of a concave function on `[lo, hi]` given its decreasing derivative.
fn concave_argmax(lo: f64, hi: f64, deriv: impl Fn(f64) -> f64) -> f64 {
    if deriv(hi) >= 0.0 {
        return hi;
    }
    if deriv(lo) <= 0.0 {
        return lo;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if deriv(m) > 0.0 {
            a = m;
        } else {
            b = m;
        }
        if b - a <= 1e-15 * (1.0 + b.abs()) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Ratio-of-uniforms envelope for a shifted, truncated gamma.
#[derive(Clone, Debug)]
pub struct TruncGammaRou {
    shape: f64,
    rate: f64,
    upper: f64,
    mode: f64,
    shift: f64,
    v_lo: f64,
    v_hi: f64,
}

impl TruncGammaRou {
    pub fn new(shape: f64, rate: f64, upper: f64) -> Result<Self> {
        if !(shape >= 1.0) || !shape.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma shape {shape} must be ≥ 1")));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma rate {rate} must be positive")));
        }
        if !(upper > 0.0) || !upper.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "truncation point {upper} must be positive and finite"
            )));
        }
        // h is scaled to 1 at its truncated mode, so u₊ = 1. The rectangle is centred at
        // min(shape, rate·upper) on the rate-one scale.
        let mode = ((shape - 1.0) / rate).min(upper);
        let shift = shape.min(rate * upper) / rate;
        let d = |w: f64| {
            let y = w + shift;
            1.0 / w + 0.5 * ((shape - 1.0) / y - rate)
        };
        let v_hi = if upper - shift > 0.0 {
            let w = concave_argmax(1e-300, upper - shift, d);
            w * (0.5 * log_h(shape, rate, mode, w + shift)).exp()
        } else {
            0.0
        };
        let v_lo = if shift > 0.0 {
            let w = concave_argmax(-shift * (1.0 - 1e-15), -1e-300 * shift, d);
            w * (0.5 * log_h(shape, rate, mode, w + shift)).exp()
        } else {
            0.0
        };
        Ok(Self {
            shape,
            rate,
            upper,
            mode,
            shift,
            v_lo,
            v_hi,
        })
    }

    /// The `v` side of the rectangle `[0, 1] × [v₋, v₊]`.
    pub fn rectangle(&self) -> (f64, f64) {
        (self.v_lo, self.v_hi)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        for _ in 0..BUDGET {
            let u = open01(rng);
            let v = self.v_lo + (self.v_hi - self.v_lo) * open01(rng);
            let y = v / u + self.shift;
            if !(0.0..=self.upper).contains(&y) {
                continue;
            }
            if 2.0 * u.ln() <= log_h(self.shape, self.rate, self.mode, y) {
                return Ok(y);
            }
        }
        Err(Error::RejectionBudget {
            budget: BUDGET,
            accepted: 0,
        })
    }
}

/// One draw from `Gamma(shape, rate)` conditioned on `[0, upper]`.
pub fn trunc_gamma_ratio_uniforms<R: Rng + ?Sized>(
    shape: f64,
    rate: f64,
    upper: f64,
    rng: &mut R,
) -> Result<f64> {
    TruncGammaRou::new(shape, rate, upper)?.sample(rng)
}
