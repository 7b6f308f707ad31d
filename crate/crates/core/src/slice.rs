//! Slice-sampling kernels.
//!
//! Internally everything is a maximization: the target is `exp(κ f(x))` and an exponential
//! slice level sits below `f`, `u = f(x) − E/κ` with `E ∼ Exp(1)`. Integrating `u` over
//! `(−∞, f(x)]` gives back `exp(κ f(x))/κ`. Minimization problems negate `f` at the boundary.

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::polytope::Polytope;
use crate::rng::{exp1, open01};
use crate::samplers1d::{uniform_on, Interval};

/// How the auxiliary level is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SliceMode {
    /// `u ∼ κ e^{κu}` on `(−∞, f]` (maximization of `f`).
    #[default]
    Exponential,
    /// `v ∼ U(0, e^{−κ f})` (minimization of `f`); the log of `v` is returned.
    Uniform,
}

/// Exponential slice level below `f_at_x`. `κ = 0` gives `−∞` (no constraint).
pub fn exp_slice_level<R: Rng + ?Sized>(f_at_x: f64, kappa: f64, rng: &mut R) -> Result<f64> {
    if !f_at_x.is_finite() {
        return Err(Error::InvalidArgument(format!("objective value {f_at_x} is not finite")));
    }
    if !(kappa >= 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("κ = {kappa} must be finite and ≥ 0")));
    }
    if kappa == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(f_at_x - exp1(rng) / kappa)
}

/// `ln v` for `v ∼ U(0, exp(−κ f))`. The slice is `{x : −κ f(x) > ln v}`.
pub fn uniform_slice_log_level<R: Rng + ?Sized>(f_at_x: f64, kappa: f64, rng: &mut R) -> Result<f64> {
    if !f_at_x.is_finite() || !(kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need finite objective and κ ≥ 0, got f={f_at_x}, κ={kappa}"
        )));
    }
    Ok(-kappa * f_at_x + open01(rng).ln())
}

/// One exponential level per additive objective term.
///
/// Terms must be nonnegative; callers shift each term by a constant first.
pub fn multi_slice_levels<R: Rng + ?Sized>(f_terms: &[f64], kappa: f64, rng: &mut R) -> Result<Vec<f64>> {
    if let Some((i, f)) = f_terms.iter().enumerate().find(|(_, f)| !(**f >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "objective term {i} is {f}; shift terms to be nonnegative before slicing"
        )));
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("κ = {kappa} must be positive")));
    }
    f_terms.iter().map(|&f| exp_slice_level(f, kappa, rng)).collect()
}

/// A linear objective term `coef·x + offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearTerm {
    pub coef: DVector<f64>,
    pub offset: f64,
}

impl LinearTerm {
    pub fn new(coef: DVector<f64>, offset: f64) -> Self {
        Self { coef, offset }
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        self.coef.dot(x) + self.offset
    }
}

/// Values of `x_k` keeping `x` in the polytope and every term at or above its level.
pub fn linear_slice_interval(
    poly: &Polytope,
    x: &DVector<f64>,
    k: usize,
    terms: &[(&LinearTerm, f64)],
) -> Result<Interval> {
    let mut acc = poly.conditional_accumulator(x, k)?;
    let base = poly.n_rows();
    for (r, (term, level)) in terms.iter().enumerate() {
        if *level == f64::NEG_INFINITY {
            continue;
        }
        let ck = term.coef[k];
        let rest = term.eval(x) - ck * x[k];
        // ck·t + rest ≥ level  ⇔  −ck·t ≤ rest − level
        acc.add(base + r, -ck, rest - level, *level);
    }
    acc.finish(k, x[k])
}

/// Uniform draw of `x_k` on [`linear_slice_interval`].
pub fn slice_set_sample_linear<R: Rng + ?Sized>(
    poly: &Polytope,
    x: &DVector<f64>,
    k: usize,
    terms: &[(&LinearTerm, f64)],
    rng: &mut R,
) -> Result<f64> {
    let iv = linear_slice_interval(poly, x, k, terms)?;
    uniform_on(iv, rng).map_err(|_| {
        Error::NonNormalizable(format!("slice for coordinate {k} is the unbounded interval {iv}"))
    })
}

/// Stepping-out width as a fraction of a bounded feasible interval.
pub const STEP_FRACTION: f64 = 0.1;
/// Maximum number of step-outs on each side.
pub const STEP_CAP: usize = 20;
const MIN_WIDTH: f64 = 1e-14;

/// Uniform draw on `{t ∈ bounds : g(t) ≥ level}` by stepping out and shrinkage.
///
/// `current` must satisfy `g(current) ≥ level`. The kernel leaves the uniform law on the
/// slice invariant even when the slice is not an interval.
pub fn slice_set_sample_1d<R, G>(
    g: G,
    level: f64,
    current: f64,
    bounds: Interval,
    rng: &mut R,
) -> Result<f64>
where
    R: Rng + ?Sized,
    G: Fn(f64) -> f64,
{
    if !bounds.contains(current) {
        return Err(Error::InvalidArgument(format!("current point {current} is outside {bounds}")));
    }
    if bounds.is_degenerate() {
        return Ok(current);
    }
    let w = if bounds.is_bounded() {
        STEP_FRACTION * bounds.width()
    } else {
        1.0
    };
    let mut left = current - w * open01(rng);
    let mut right = left + w;
    let j = rng.random_range(0..STEP_CAP);
    let mut k = STEP_CAP - 1 - j;
    let mut j = j;
    while j > 0 && left > bounds.lo() && g(left) >= level {
        left -= w;
        j -= 1;
    }
    while k > 0 && right < bounds.hi() && g(right) >= level {
        right += w;
        k -= 1;
    }
    left = left.max(bounds.lo());
    right = right.min(bounds.hi());
    loop {
        if right - left < MIN_WIDTH * (1.0 + current.abs()) {
            return Err(Error::Convergence(format!(
                "slice shrank below width {MIN_WIDTH:e} around {current}"
            )));
        }
        let t = left + (right - left) * open01(rng);
        if g(t) >= level {
            return Ok(t);
        }
        if t < current {
            left = t;
        } else {
            right = t;
        }
    }
}

/// One slice-within-Gibbs sweep for `exp(κ c·x)` on the polytope.
pub fn slice_gibbs_sweep_linear<R: Rng + ?Sized>(
    poly: &Polytope,
    objective: &LinearTerm,
    kappa: f64,
    x: &mut DVector<f64>,
    rng: &mut R,
) -> Result<f64> {
    let u = exp_slice_level(objective.eval(x), kappa, rng)?;
    for k in 0..poly.dim() {
        x[k] = slice_set_sample_linear(poly, x, k, &[(objective, u)], rng)?;
    }
    Ok(u)
}

/// One step of the multi-level slice chain on a finite set of points.
///
/// `terms[p][i]` is term `i` at point `p`; the stationary law is `∝ exp(κ Σ_i terms[p][i])`.
pub fn discrete_multi_slice_step<R: Rng + ?Sized>(
    terms: &[Vec<f64>],
    current: usize,
    kappa: f64,
    rng: &mut R,
) -> Result<usize> {
    let levels = multi_slice_levels(&terms[current], kappa, rng)?;
    let ok: Vec<usize> = terms
        .iter()
        .enumerate()
        .filter(|(_, t)| t.iter().zip(&levels).all(|(f, y)| f >= y))
        .map(|(p, _)| p)
        .collect();
    debug_assert!(ok.contains(&current));
    Ok(ok[rng.random_range(0..ok.len())])
}
