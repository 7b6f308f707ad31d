//! Normal draws restricted to an interval.

use rand::Rng;
use statrs::function::erf::{erfc, erfc_inv};

use super::Interval;
use crate::error::{Error, Result};
use crate::rng::{exp1, open01};

/// Intervals with less standardized mass than this are sampled by rejection.
pub const INVERSION_MASS_FLOOR: f64 = 1e-12;

pub(crate) const REJECTION_BUDGET: u64 = 1_000_000;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// Upper tail `P(Z > z)`.
fn q(z: f64) -> f64 {
    0.5 * erfc(z / SQRT_2)
}

/// Inverse of [`q`].
fn q_inv(p: f64) -> f64 {
    SQRT_2 * erfc_inv(2.0 * p)
}

/// `P(a ≤ Z ≤ b)` for a standard normal, evaluated on the tail nearest the interval.
pub fn std_normal_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        q(a) - q(b)
    } else if b <= 0.0 {
        q(-b) - q(-a)
    } else {
        1.0 - q(b) - q(-a)
    }
}

/// Standard normal draw conditioned on `[a, b]`.
pub fn std_trunc_normal<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::NegligibleMass {
            lo: a,
            hi: b,
            mass: 0.0,
        });
    }
    let mass = std_normal_mass(a, b);
    if mass >= INVERSION_MASS_FLOOR {
        let u = open01(rng);
        let z = if a >= 0.0 {
            let (qa, qb) = (q(a), q(b));
            q_inv(qa - u * (qa - qb))
        } else if b <= 0.0 {
            let (qa, qb) = (q(-b), q(-a));
            -q_inv(qa - u * (qa - qb))
        } else {
            // Φ(z) = Φ(a) + u·mass; invert on whichever tail keeps precision.
            let p = q(-a) + u * mass;
            if p < 0.5 {
                -q_inv(p)
            } else {
                q_inv(1.0 - p)
            }
        };
        // Inversion can round a hair outside near the endpoints.
        return Ok(z.max(a).min(b));
    }
    if a > 0.0 {
        tail_rejection(a, b, rng)
    } else if b < 0.0 {
        tail_rejection(-b, -a, rng).map(|z| -z)
    } else {
        narrow_rejection(a, b, 0.0, rng)
    }
}

/// Draw on `[a, b]` with `a > 0`, far in the upper tail.
fn tail_rejection<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
    if (b - a) * lambda < 1.0 {
        return narrow_rejection(a, b, a, rng);
    }
    for _ in 0..REJECTION_BUDGET {
        let z = a + exp1(rng) / lambda;
        if z > b {
            continue;
        }
        let d = z - lambda;
        if open01(rng).ln() <= -0.5 * d * d {
            return Ok(z);
        }
    }
    Err(Error::RejectionBudget {
        budget: REJECTION_BUDGET,
        accepted: 0,
    })
}

/// Uniform proposal on `[a, b]`; `peak` is the point of the interval closest to zero.
fn narrow_rejection<R: Rng + ?Sized>(a: f64, b: f64, peak: f64, rng: &mut R) -> Result<f64> {
    for _ in 0..REJECTION_BUDGET {
        let z = a + (b - a) * open01(rng);
        if open01(rng).ln() <= 0.5 * (peak * peak - z * z) {
            return Ok(z);
        }
    }
    Err(Error::RejectionBudget {
        budget: REJECTION_BUDGET,
        accepted: 0,
    })
}

/// One draw from `N(mean, sd²)` conditioned on `iv`.
pub fn trunc_normal_sample<R: Rng + ?Sized>(
    mean: f64,
    sd: f64,
    iv: Interval,
    rng: &mut R,
) -> Result<f64> {
    if !(sd > 0.0) || !sd.is_finite() || !mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "normal needs finite mean and positive sd, got mean={mean}, sd={sd}"
        )));
    }
    if iv.is_degenerate() {
        return Err(Error::NegligibleMass {
            lo: iv.lo(),
            hi: iv.hi(),
            mass: 0.0,
        });
    }
    let a = (iv.lo() - mean) / sd;
    let b = (iv.hi() - mean) / sd;
    let z = std_trunc_normal(a, b, rng).map_err(|e| match e {
        Error::NegligibleMass { mass, .. } => Error::NegligibleMass {
            lo: iv.lo(),
            hi: iv.hi(),
            mass,
        },
        other => other,
    })?;
    Ok(iv.clamp(mean + sd * z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    #[test]
    fn degenerate_interval_is_an_error() {
        let mut rng = RngStream::new(1, 0);
        let iv = Interval::new(0.3, 0.3).unwrap();
        assert!(matches!(
            trunc_normal_sample(0.0, 1.0, iv, &mut rng),
            Err(Error::NegligibleMass { .. })
        ));
    }

    #[test]
    fn far_tail_draws_stay_inside() {
        let mut rng = RngStream::new(2, 0);
        for &(a, b) in &[(8.0, f64::INFINITY), (40.0, 41.0), (-50.0, -49.99), (12.0, 12.001)] {
            for _ in 0..1000 {
                let z = std_trunc_normal(a, b, &mut rng).unwrap();
                assert!(z >= a && z <= b, "{z} not in [{a}, {b}]");
            }
        }
    }

    #[test]
    fn far_tail_mean_matches_mills_ratio() {
        // E[Z | Z > a] = φ(a)/Q(a) ≈ a + 1/a - 2/a³ for large a.
        let mut rng = RngStream::new(3, 0);
        let a = 10.0;
        let n = 50_000;
        let m: f64 = (0..n)
            .map(|_| std_trunc_normal(a, f64::INFINITY, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        let expect = a + 1.0 / a - 2.0 / a.powi(3) + 10.0 / a.powi(5);
        assert!((m - expect).abs() < 0.003, "{m} vs {expect}");
    }

    #[test]
    fn mass_is_tail_accurate() {
        let m = std_normal_mass(9.0, f64::INFINITY);
        assert!((m / 1.128_588_405_953_06e-19 - 1.0).abs() < 1e-10);
    }
}
