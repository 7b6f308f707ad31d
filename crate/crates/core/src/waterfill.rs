//! Stochastic water-filling: collapse `M` weighted particles to `N` without bias.
//!
//! With `α` the root of `Σ min(α q_j, 1) = N`, particles with `α q_j ≥ 1` are kept with
//! their own weight; each of the others survives with probability `α q_j` and weight `1/α`.
//! Survivors among the light particles are chosen by systematic sampling, so exactly `N`
//! particles remain while every inclusion probability is still `min(α q_j, 1)`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::open01;

const SUM_TOL: f64 = 1e-12;
const ROOT_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet<T> {
    points: Vec<T>,
    weights: Vec<f64>,
}

impl<T> ParticleSet<T> {
    pub fn new(points: Vec<T>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() || points.is_empty() {
            return Err(Error::Dimension(format!(
                "{} points and {} weights",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
        }
        let s: f64 = weights.iter().sum();
        if (s - 1.0).abs() > SUM_TOL * weights.len().max(1) as f64 {
            return Err(Error::InvalidArgument(format!("weights sum to {s}, not 1")));
        }
        Ok(Self { points, weights })
    }

    /// Normalizes nonnegative weights before building the set.
    pub fn from_unnormalized(points: Vec<T>, weights: Vec<f64>) -> Result<Self> {
        let s: f64 = weights.iter().sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidArgument(format!("weights sum to {s}")));
        }
        Self::new(points, weights.into_iter().map(|w| w / s).collect())
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Keeps the collapsed survivors with their new weights.
    pub fn apply(self, cs: &CollapsedSet) -> ParticleSet<T> {
        let mut slots: Vec<Option<T>> = self.points.into_iter().map(Some).collect();
        let points = cs.indices.iter().map(|&i| slots[i].take().expect("distinct survivors")).collect();
        let s: f64 = cs.weights.iter().sum();
        ParticleSet {
            points,
            weights: cs.weights.iter().map(|w| w / s).collect(),
        }
    }
}

/// Survivors of a collapse. `weights[i]` belongs to original particle `indices[i]`; the
/// weights sum to 1 only in expectation.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapsedSet {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub alpha: f64,
}

impl CollapsedSet {
    /// Dense weight vector over the original `m` particles.
    pub fn dense(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; m];
        for (&i, &w) in self.indices.iter().zip(&self.weights) {
            out[i] = w;
        }
        out
    }
}

fn coverage(q: &[f64], alpha: f64) -> f64 {
    q.iter().map(|&v| (alpha * v).min(1.0)).sum()
}

/// Root `α` of `Σ min(α q_j, 1) = n`, by scanning the breakpoints `1/q_(j)`.
pub fn solve_alpha(q: &[f64], n: usize) -> Result<f64> {
    let mut pos: Vec<f64> = q.iter().copied().filter(|v| *v > 0.0).collect();
    if q.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument("weights must be finite and nonnegative".into()));
    }
    if n == 0 || n > pos.len() {
        return Err(Error::InvalidArgument(format!(
            "cannot keep {n} particles out of {} with positive weight",
            pos.len()
        )));
    }
    pos.sort_by(|a, b| b.total_cmp(a));
    let m = pos.len();
    if n == m {
        return Ok(1.0 / pos[m - 1]);
    }
    // tail[j] = Σ_{i ≥ j} pos[i], summed smallest first.
    let mut tail = vec![0.0; m + 1];
    for j in (0..m).rev() {
        tail[j] = tail[j + 1] + pos[j];
    }
    for j in 0..n {
        let alpha = (n - j) as f64 / tail[j];
        let top_ok = j == 0 || alpha * pos[j - 1] >= 1.0;
        if top_ok && alpha * pos[j] <= 1.0 {
            return Ok(alpha);
        }
    }
    // Ties at a breakpoint can defeat the scan in floating point; bisect instead.
    let (mut lo, mut hi) = (0.0, 1.0 / pos[m - 1]);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if coverage(&pos, mid) < n as f64 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    if (coverage(&pos, alpha) - n as f64).abs() > ROOT_TOL {
        return Err(Error::Convergence(format!("water level for N = {n} did not converge")));
    }
    Ok(alpha)
}

/// Collapses the weight vector `q` to `n` survivors.
pub fn collapse_weights<R: Rng + ?Sized>(q: &[f64], n: usize, rng: &mut R) -> Result<CollapsedSet> {
    let alpha = solve_alpha(q, n)?;
    let mut indices = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let mut light = Vec::new();
    for (j, &v) in q.iter().enumerate() {
        if v <= 0.0 {
            continue;
        }
        if alpha * v >= 1.0 {
            indices.push(j);
            weights.push(v);
        } else {
            light.push(j);
        }
    }
    let want = n - indices.len();
    if want > 0 {
        let raw: f64 = light.iter().map(|&j| alpha * q[j]).sum();
        // Pin the inclusion probabilities to sum to the integer survivor count.
        let scale = want as f64 / raw;
        let u = open01(rng);
        let mut cum = 0.0;
        let mut next = u;
        for &j in &light {
            cum += alpha * q[j] * scale;
            if cum > next && indices.len() < n {
                indices.push(j);
                weights.push(1.0 / alpha);
                next += 1.0;
            }
        }
        debug_assert_eq!(indices.len(), n);
    }
    let mut order: Vec<usize> = (0..indices.len()).collect();
    order.sort_by_key(|&i| indices[i]);
    Ok(CollapsedSet {
        indices: order.iter().map(|&i| indices[i]).collect(),
        weights: order.iter().map(|&i| weights[i]).collect(),
        alpha,
    })
}

pub fn collapse<T, R: Rng + ?Sized>(ps: &ParticleSet<T>, n: usize, rng: &mut R) -> Result<CollapsedSet> {
    collapse_weights(&ps.weights, n, rng)
}

/// `Σ_{survivors} f_j Q_j`, unbiased for `Σ_j f_j q_j`. `f` is indexed by original particle.
pub fn estimate_functional(cs: &CollapsedSet, f: &[f64]) -> Result<f64> {
    cs.indices
        .iter()
        .zip(&cs.weights)
        .map(|(&i, &w)| {
            f.get(i)
                .map(|v| v * w)
                .ok_or_else(|| Error::Dimension(format!("no functional value for particle {i}")))
        })
        .sum()
}

/// `Σ_j E(Q_j − q_j)² = Σ_j q_j² (1/p_j − 1)` with `p_j = min(α q_j, 1)`.
pub fn theoretical_mse(q: &[f64], n: usize) -> Result<f64> {
    let alpha = solve_alpha(q, n)?;
    Ok(q.iter()
        .filter(|v| **v > 0.0)
        .map(|&v| {
            let p = (alpha * v).min(1.0);
            v * v * (1.0 / p - 1.0)
        })
        .sum())
}

/// Multinomial resampling to `n` draws, as weights `count_j / n`.
pub fn multinomial_resample<R: Rng + ?Sized>(q: &[f64], n: usize, rng: &mut R) -> Vec<f64> {
    let mut cum = Vec::with_capacity(q.len());
    let mut s = 0.0;
    for &v in q {
        s += v;
        cum.push(s);
    }
    let mut out = vec![0.0; q.len()];
    for _ in 0..n {
        let u = open01(rng) * s;
        let j = cum.partition_point(|c| *c < u).min(q.len() - 1);
        out[j] += 1.0 / n as f64;
    }
    out
}
