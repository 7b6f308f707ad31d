//! Reference computations for tests: quadrature, plain rejection samplers and brute-force
//! enumeration. Deliberately simple and independent of the samplers they check.

use rand::Rng;
use rand_distr::StandardNormal;

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb, m) = (f(a), f(b), 0.5 * (a + b));
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫_a^b f` split at the given interior points (kinks), each piece to relative tolerance `rel`.
pub fn integrate_pieces(f: &dyn Fn(f64) -> f64, a: f64, b: f64, kinks: &[f64], rel: f64) -> f64 {
    let mut pts = vec![a];
    pts.extend(kinks.iter().copied().filter(|k| *k > a && *k < b));
    pts.push(b);
    pts.sort_by(f64::total_cmp);
    // rough scale for the absolute tolerance
    let scale: f64 = pts
        .windows(2)
        .map(|w| (w[1] - w[0]) * (f(w[0]).abs() + f(0.5 * (w[0] + w[1])).abs() + f(w[1]).abs()) / 3.0)
        .sum();
    pts.windows(2)
        .map(|w| integrate(f, w[0], w[1], rel * scale.max(f64::MIN_POSITIVE)))
        .sum()
}

/// `∫_a^∞ f` through the substitution `x = a + t/(1 − t)`.
pub fn integrate_upper(f: &dyn Fn(f64) -> f64, a: f64, tol: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        f(a + t / s) / (s * s)
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// Draw from a density bounded by `fmax` on `[a, b]` by uniform rejection.
pub fn rejection_1d<R: Rng + ?Sized>(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fmax: f64, rng: &mut R) -> f64 {
    loop {
        let x = rng.random_range(a..b);
        if rng.random::<f64>() * fmax <= f(x) {
            return x;
        }
    }
}

/// Normal draws conditioned on `x ∈ [a, b]` by drawing until one lands inside.
pub fn naive_trunc_normal<R: Rng + ?Sized>(mu: f64, sd: f64, a: f64, b: f64, rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let x = mu + sd * z;
        if x >= a && x <= b {
            return x;
        }
    }
}

/// Uniform draw in `{x ∈ box : inside(x)}` by rejection from the box.
pub fn rejection_in_box<R: Rng + ?Sized>(
    lo: &[f64],
    hi: &[f64],
    inside: &dyn Fn(&[f64]) -> bool,
    rng: &mut R,
) -> Vec<f64> {
    loop {
        let x: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| rng.random_range(*l..*h)).collect();
        if inside(&x) {
            return x;
        }
    }
}

/// Weighted rejection in a box: accept `x` with probability `w(x)/wmax`.
pub fn weighted_rejection_in_box<R: Rng + ?Sized>(
    lo: &[f64],
    hi: &[f64],
    weight: &dyn Fn(&[f64]) -> f64,
    wmax: f64,
    rng: &mut R,
) -> Vec<f64> {
    loop {
        let x: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| rng.random_range(*l..*h)).collect();
        if rng.random::<f64>() * wmax <= weight(&x) {
            return x;
        }
    }
}

/// Argmax of `f` over `n` equally spaced midpoints of `[a, b]`.
pub fn grid_argmax(f: &dyn Fn(f64) -> f64, a: f64, b: f64, n: usize) -> (f64, f64) {
    let h = (b - a) / n as f64;
    (0..n)
        .map(|i| a + (i as f64 + 0.5) * h)
        .map(|x| (x, f(x)))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

/// Normalized weights `∝ exp(κ·score)` over a finite set.
pub fn boltzmann_weights(scores: &[f64], kappa: f64) -> Vec<f64> {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = scores.iter().map(|s| (kappa * (s - m)).exp()).collect();
    let t: f64 = w.iter().sum();
    w.into_iter().map(|v| v / t).collect()
}

/// Standard normal CDF from the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}
