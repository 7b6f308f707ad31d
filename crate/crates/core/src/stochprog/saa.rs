//! Sample average approximation baseline: fix scenarios, then climb the sample mean.

use nalgebra::DVector;

use super::one_stage::OneStageModel;
use crate::error::{Error, Result};
use crate::rng::RngStream;

const GRAD_TOL: f64 = 1e-8;
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-16;
const MAX_ITER: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct SaaResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
}

fn project(x: &mut DVector<f64>, dom: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(dom) {
        *v = v.clamp(lo, hi);
    }
}

fn fd_gradient(f: &impl Fn(&DVector<f64>) -> f64, x: &DVector<f64>, dom: &[(f64, f64)]) -> DVector<f64> {
    let mut g = DVector::zeros(x.len());
    for k in 0..x.len() {
        let h = 1e-6 * (1.0 + x[k].abs());
        let (lo, hi) = ((x[k] - h).max(dom[k].0), (x[k] + h).min(dom[k].1));
        if hi <= lo {
            continue;
        }
        let mut a = x.clone();
        let mut b = x.clone();
        a[k] = lo;
        b[k] = hi;
        g[k] = (f(&b) - f(&a)) / (hi - lo);
    }
    g
}

/// Projected gradient ascent on a box with finite-difference gradients and Armijo backtracking.
pub fn saa_maximize(
    f: impl Fn(&DVector<f64>) -> f64,
    domain: &[(f64, f64)],
    start: DVector<f64>,
) -> Result<SaaResult> {
    if domain.len() != start.len() {
        return Err(Error::Dimension(format!("domain has {} sides, start {}", domain.len(), start.len())));
    }
    let mut x = start;
    project(&mut x, domain);
    let mut fx = f(&x);
    if !fx.is_finite() {
        return Err(Error::InvalidArgument(format!("objective is {fx} at the start")));
    }
    let mut t: f64 = 1.0;
    for it in 0..MAX_ITER {
        let g = fd_gradient(&f, &x, domain);
        let mut probe = &x + &g;
        project(&mut probe, domain);
        if (&probe - &x).norm() <= GRAD_TOL * (1.0 + x.norm()) {
            return Ok(SaaResult { x, value: fx, iterations: it });
        }
        t = (t * 2.0).min(1e8);
        loop {
            let mut cand = &x + &g * t;
            project(&mut cand, domain);
            let fc = f(&cand);
            if fc.is_finite() && fc >= fx + ARMIJO * g.dot(&(&cand - &x)) {
                let moved = (&cand - &x).norm();
                x = cand;
                fx = fc;
                if moved <= 1e-14 * (1.0 + x.norm()) {
                    return Ok(SaaResult { x, value: fx, iterations: it + 1 });
                }
                break;
            }
            t *= 0.5;
            if t < MIN_STEP {
                return Err(Error::Convergence(format!(
                    "line search failed at x = {:?} (value {fx})",
                    x.as_slice()
                )));
            }
        }
    }
    Err(Error::Convergence(format!(
        "no stationary point after {MAX_ITER} iterations; last x = {:?}",
        x.as_slice()
    )))
}

/// Draws `n` scenarios once and maximizes the sample-mean payoff from the box centre.
pub fn saa_baseline<M: OneStageModel>(model: &M, n: usize, rng: &mut RngStream) -> Result<SaaResult> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one scenario".into()));
    }
    let scen: Vec<M::Scenario> = (0..n).map(|_| model.sample_scenario(rng)).collect();
    let dom = model.domain();
    let start = DVector::from_iterator(dom.len(), dom.iter().map(|&(lo, hi)| 0.5 * (lo + hi)));
    let f = |x: &DVector<f64>| scen.iter().map(|w| model.payoff(w, x)).sum::<f64>() / n as f64;
    saa_maximize(f, &dom, start)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_objective_stops_at_start() {
        let r = saa_maximize(|_| 3.0, &[(0.0, 1.0)], DVector::from_element(1, 0.4)).unwrap();
        assert_eq!(r.x[0], 0.4);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn concave_quadratic() {
        let f = |x: &DVector<f64>| -(x[0] - 0.3).powi(2) - 2.0 * (x[1] + 0.2).powi(2);
        let r = saa_maximize(f, &[(0.0, 1.0), (-1.0, 1.0)], DVector::from_vec(vec![0.9, 0.9])).unwrap();
        assert!((r.x[0] - 0.3).abs() < 1e-4 && (r.x[1] + 0.2).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn active_bound() {
        let r = saa_maximize(|x| x[0], &[(0.0, 2.0)], DVector::from_element(1, 0.5)).unwrap();
        assert_eq!(r.x[0], 2.0);
    }
}
