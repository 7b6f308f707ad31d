//! Brute-force vertex enumeration for small linear programs.
//!
//! Used to certify the annealed solvers and to check that a linear Boltzmann target is
//! normalizable before any sampling starts. Cost is `C(rows, K)` small LU solves, so
//! this is only for desk-scale problems.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::polytope::Polytope;

/// Upper limit on the number of row subsets examined.
pub const MAX_SUBSETS: usize = 2_000_000;

const VERTEX_TOL: f64 = 1e-9;

/// Vertices of `{x : g·x ≤ h}`, deduplicated. `None` if there are too many subsets.
pub fn enumerate_vertices(g: &DMatrix<f64>, h: &DVector<f64>) -> Option<Vec<DVector<f64>>> {
    let (n, k) = g.shape();
    if n < k {
        return Some(Vec::new());
    }
    if binomial(n, k) > MAX_SUBSETS as f64 {
        return None;
    }
    let scale = 1.0 + h.amax();
    let mut out: Vec<DVector<f64>> = Vec::new();
    for rows in (0..n).combinations(k) {
        let sub = g.select_rows(&rows);
        let rhs = h.select_rows(&rows);
        let norms: f64 = rows.iter().map(|&i| g.row(i).norm()).product();
        let lu = sub.lu();
        if lu.determinant().abs() <= 1e-10 * norms {
            continue;
        }
        let Some(x) = lu.solve(&rhs) else { continue };
        let viol = (g * &x - h).max();
        if viol > VERTEX_TOL * scale {
            continue;
        }
        if !out.iter().any(|v| (v - &x).amax() <= 1e-8 * (1.0 + x.amax())) {
            out.push(x);
        }
    }
    Some(out)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Outcome of the recession-cone test for `exp(c·x)` on a polytope.
#[derive(Clone, Debug, PartialEq)]
pub enum Normalizability {
    /// Every recession direction strictly decreases `c·x` (or the region is bounded).
    Proper,
    /// `c·d ≥ 0` along this nonzero recession direction.
    Improper(DVector<f64>),
    /// Too many constraints to enumerate.
    Unchecked,
}

/// Nonzero vertices of the recession cone `{d : g·d ≤ 0}` cut by the box `[-1, 1]^K`.
pub fn recession_directions(poly: &Polytope) -> Option<Vec<DVector<f64>>> {
    let (g, _) = poly.to_rows();
    let k = poly.dim();
    let n = g.nrows();
    let mut gg = DMatrix::zeros(n + 2 * k, k);
    gg.rows_mut(0, n).copy_from(&g);
    let mut hh = DVector::zeros(n + 2 * k);
    for j in 0..k {
        gg[(n + 2 * j, j)] = 1.0;
        gg[(n + 2 * j + 1, j)] = -1.0;
        hh[n + 2 * j] = 1.0;
        hh[n + 2 * j + 1] = 1.0;
    }
    let verts = enumerate_vertices(&gg, &hh)?;
    Some(verts.into_iter().filter(|d| d.amax() > 1e-9).collect())
}

/// Checks whether `∫ exp(c·x) dx` over the polytope is finite.
pub fn check_normalizable(poly: &Polytope, c: &DVector<f64>) -> Normalizability {
    let Some(dirs) = recession_directions(poly) else {
        return Normalizability::Unchecked;
    };
    let cn = c.amax().max(1.0);
    dirs.into_iter()
        .find(|d| c.dot(d) >= -1e-12 * cn)
        .map_or(Normalizability::Proper, Normalizability::Improper)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: DVector<f64>,
    pub value: f64,
}

/// `max c·x` over the polytope by checking every vertex.
pub fn maximize_by_vertices(poly: &Polytope, c: &DVector<f64>) -> Result<LpSolution> {
    if c.len() != poly.dim() {
        return Err(Error::Dimension(format!(
            "objective has {} entries, polytope dimension {}",
            c.len(),
            poly.dim()
        )));
    }
    let (g, h) = poly.to_rows();
    let dirs = recession_directions(poly)
        .ok_or_else(|| Error::InvalidArgument("too many constraints for vertex enumeration".into()))?;
    if let Some(d) = dirs.iter().find(|d| c.dot(d) > 1e-12 * c.amax().max(1.0)) {
        return Err(Error::Unbounded(format!(
            "objective increases along direction {:?}",
            d.as_slice()
        )));
    }
    let verts = enumerate_vertices(&g, &h)
        .ok_or_else(|| Error::InvalidArgument("too many constraints for vertex enumeration".into()))?;
    verts
        .into_iter()
        .map(|x| LpSolution {
            value: c.dot(&x),
            x,
        })
        .max_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::Infeasible("polytope has no vertices".into()))
}
