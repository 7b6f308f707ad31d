//! Multivariate normals truncated to `{θ : A·θ ≤ b}`.
//!
//! Sampling runs in decorrelated coordinates `φ = Q·θ` with `Q = L⁻¹`, `Σ = L·Lᵀ`, where the
//! target is `N(Q·μ, I)` restricted to `{D·φ ≤ b}`, `D = A·L`. Coordinates are then
//! conditionally independent apart from the constraints, which keeps Gibbs mixing
//! insensitive to the correlation in `Σ`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;

use crate::error::{Error, Result};
use crate::polytope::{BoundAccumulator, Polytope, FEAS_TOL};
use crate::samplers1d::trunc_normal_sample;

const EIGEN_FLOOR: f64 = 1e-10;
const DECORRELATION_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct TruncNormalTarget {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    constraints: Polytope,
}

impl TruncNormalTarget {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, constraints: Polytope) -> Result<Self> {
        let k = mu.len();
        if sigma.shape() != (k, k) || constraints.dim() != k {
            return Err(Error::Dimension(format!(
                "mean has {k} entries, covariance is {:?}, constraints act on {}",
                sigma.shape(),
                constraints.dim()
            )));
        }
        let asym = (&sigma - sigma.transpose()).amax();
        if asym > 1e-12 * (1.0 + sigma.amax()) {
            return Err(Error::InvalidArgument(format!("covariance is not symmetric (‖Σ−Σᵀ‖ = {asym:e})")));
        }
        let floor = EIGEN_FLOOR * sigma.trace() / k as f64;
        let min_eig = sigma.clone().symmetric_eigenvalues().min();
        if !(min_eig > floor) {
            return Err(Error::NotPositiveDefinite(format!(
                "smallest eigenvalue {min_eig:e} is not above {floor:e}"
            )));
        }
        Ok(Self {
            mu,
            sigma,
            constraints,
        })
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn constraints(&self) -> &Polytope {
        &self.constraints
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// The target in whitened coordinates.
#[derive(Clone, Debug)]
pub struct DecorrelatedSystem {
    /// `Q = L⁻¹`, so `Q·Σ·Qᵀ = I`.
    pub q: DMatrix<f64>,
    /// `Q⁻¹ = L`.
    pub q_inv: DMatrix<f64>,
    /// `D = A·Q⁻¹`.
    pub d: DMatrix<f64>,
    pub b: DVector<f64>,
    /// `α = Q·μ`.
    pub alpha: DVector<f64>,
    /// Nonnegativity of θ becomes the rows `−L_k·φ ≤ 0`.
    theta_nonneg: Vec<usize>,
}

impl DecorrelatedSystem {
    /// Whitening with an already factored covariance. Used when the mean or the
    /// constraints change every step but `Σ` does not.
    pub fn from_cholesky(
        chol: &Cholesky<f64, Dyn>,
        q: &DMatrix<f64>,
        mu: &DVector<f64>,
        constraints: &Polytope,
    ) -> Self {
        let l = chol.l();
        let theta_nonneg = (0..mu.len()).filter(|&k| constraints.nonneg()[k]).collect();
        Self {
            d: constraints.a() * &l,
            b: constraints.b().clone(),
            alpha: q * mu,
            q: q.clone(),
            q_inv: l,
            theta_nonneg,
        }
    }

    pub fn to_theta(&self, phi: &DVector<f64>) -> DVector<f64> {
        &self.q_inv * phi
    }

    pub fn to_phi(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.q * theta
    }

    /// Largest violation of `D·φ ≤ b` and of any θ nonnegativity.
    pub fn violation(&self, phi: &DVector<f64>) -> f64 {
        let mut v = if self.d.nrows() > 0 {
            (&self.d * phi - &self.b).max()
        } else {
            f64::NEG_INFINITY
        };
        for &k in &self.theta_nonneg {
            v = v.max(-self.q_inv.row(k).dot(&phi.transpose()));
        }
        v
    }

    pub fn dim(&self) -> usize {
        self.alpha.len()
    }

    fn bounds(&self, phi: &DVector<f64>, j: usize) -> Result<crate::Interval> {
        let mut acc = BoundAccumulator::new(f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..self.d.nrows() {
            let dij = self.d[(i, j)];
            let rest = self.d.row(i).dot(&phi.transpose()) - dij * phi[j];
            acc.add(i, dij, self.b[i] - rest, self.b[i]);
        }
        let n = self.d.nrows();
        for (r, &k) in self.theta_nonneg.iter().enumerate() {
            let lkj = self.q_inv[(k, j)];
            let rest = self.q_inv.row(k).dot(&phi.transpose()) - lkj * phi[j];
            acc.add(n + r, -lkj, rest, 0.0);
        }
        acc.finish(j, phi[j])
    }
}

pub fn decorrelate(target: &TruncNormalTarget) -> Result<DecorrelatedSystem> {
    let chol = Cholesky::new(target.sigma.clone()).ok_or_else(|| {
        Error::NotPositiveDefinite("Cholesky factorization failed".into())
    })?;
    let l = chol.l();
    let q = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(target.dim(), target.dim()))
        .ok_or_else(|| Error::NotPositiveDefinite("Cholesky factor is singular".into()))?;
    let check = (&q * &target.sigma * q.transpose() - DMatrix::<f64>::identity(target.dim(), target.dim())).amax();
    if check >= DECORRELATION_TOL {
        return Err(Error::NotPositiveDefinite(format!(
            "whitening residual ‖QΣQᵀ − I‖ = {check:e}"
        )));
    }
    Ok(DecorrelatedSystem::from_cholesky(&chol, &q, &target.mu, &target.constraints))
}

/// One systematic Gibbs sweep of `φ_j | φ_{−j} ∼ N(α_j, 1)` on its conditional interval.
pub fn gibbs_sweep_truncnorm<R: Rng + ?Sized>(
    sys: &DecorrelatedSystem,
    phi: &mut DVector<f64>,
    rng: &mut R,
) -> Result<()> {
    if phi.len() != sys.dim() {
        return Err(Error::Dimension(format!("state has {} entries, system {}", phi.len(), sys.dim())));
    }
    for j in 0..sys.dim() {
        let iv = sys.bounds(phi, j)?;
        phi[j] = if iv.is_degenerate() {
            iv.lo()
        } else {
            trunc_normal_sample(sys.alpha[j], 1.0, iv, rng)?
        };
    }
    let v = sys.violation(phi);
    if v > FEAS_TOL * (1.0 + sys.b.amax()) {
        return Err(Error::Infeasible(format!("sweep left the region (violation {v:e})")));
    }
    Ok(())
}

/// Runs `sweeps` sweeps from the constraint witness and returns the θ draws after `burnin`.
pub fn sample_truncnorm<R: Rng + ?Sized>(
    target: &TruncNormalTarget,
    sweeps: usize,
    burnin: usize,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    if sweeps <= burnin {
        return Err(Error::InvalidArgument(format!(
            "sweeps ({sweeps}) must exceed burn-in ({burnin})"
        )));
    }
    let sys = decorrelate(target)?;
    let mut phi = sys.to_phi(target.constraints.witness());
    let mut out = Vec::with_capacity(sweeps - burnin);
    for s in 0..sweeps {
        gibbs_sweep_truncnorm(&sys, &mut phi, rng)?;
        if s >= burnin {
            out.push(sys.to_theta(&phi));
        }
    }
    Ok(out)
}

/// Conditional mean and variance of `θ_k | θ_{−k}` under `N(μ, Σ)`, without truncation.
///
/// This is the textbook update in the original coordinates; it is kept as a reference for
/// tests only, since mixing degrades badly with strong correlation.
pub fn raw_conditional(
    mu: &DVector<f64>,
    sigma: &DMatrix<f64>,
    theta: &DVector<f64>,
    k: usize,
) -> Result<(f64, f64)> {
    let prec = sigma
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NotPositiveDefinite("covariance is singular".into()))?;
    let pkk = prec[(k, k)];
    let mut shift = 0.0;
    for j in 0..mu.len() {
        if j != k {
            shift += prec[(k, j)] * (theta[j] - mu[j]);
        }
    }
    Ok((mu[k] - shift / pkk, 1.0 / pkk))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use nalgebra::{dmatrix, dvector};

    fn free(k: usize) -> Polytope {
        Polytope::new(DMatrix::zeros(0, k), DVector::zeros(0), vec![false; k], DVector::zeros(k)).unwrap()
    }

    #[test]
    fn identity_covariance_is_a_no_op() {
        let t = TruncNormalTarget::new(dvector![0.5, -1.0], DMatrix::identity(2, 2), free(2)).unwrap();
        let s = decorrelate(&t).unwrap();
        assert_eq!(s.q, DMatrix::<f64>::identity(2, 2));
        assert_eq!(s.alpha, dvector![0.5, -1.0]);
    }

    #[test]
    fn correlated_whitening() {
        let sig = dmatrix![1.0, 0.9; 0.9, 1.0];
        let t = TruncNormalTarget::new(dvector![0.0, 0.0], sig.clone(), free(2)).unwrap();
        let s = decorrelate(&t).unwrap();
        let r = &s.q * &sig * s.q.transpose() - DMatrix::<f64>::identity(2, 2);
        assert!(r.amax() < 1e-10);
    }

    #[test]
    fn singular_covariance_is_refused() {
        let r = TruncNormalTarget::new(dvector![0.0, 0.0], dmatrix![1.0, 1.0; 1.0, 1.0], free(2));
        assert!(matches!(r, Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn raw_conditional_bivariate() {
        let sig = dmatrix![1.0, 0.9; 0.9, 1.0];
        let (m, v) = raw_conditional(&dvector![0.0, 0.0], &sig, &dvector![0.0, 2.0], 0).unwrap();
        assert!((m - 1.8).abs() < 1e-12 && (v - 0.19).abs() < 1e-12);
    }

    #[test]
    fn draws_respect_box_and_transform() {
        let sig = dmatrix![1.0, 0.9; 0.9, 1.0];
        let a = dmatrix![1.0, 0.0; 0.0, 1.0];
        let p = Polytope::new(a.clone(), dvector![1.0, 1.0], vec![true, true], dvector![0.5, 0.5]).unwrap();
        let t = TruncNormalTarget::new(dvector![0.0, 0.0], sig, p).unwrap();
        let sys = decorrelate(&t).unwrap();
        let mut rng = RngStream::new(3, 0);
        let mut phi = sys.to_phi(&dvector![0.5, 0.5]);
        for _ in 0..2000 {
            gibbs_sweep_truncnorm(&sys, &mut phi, &mut rng).unwrap();
            let th = sys.to_theta(&phi);
            assert!(th.iter().all(|v| *v >= -1e-9 && *v <= 1.0 + 1e-9));
            assert!((&a * &th - &sys.d * &phi).amax() < 1e-8);
        }
    }
}
