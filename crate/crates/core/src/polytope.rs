//! Feasible regions `{x : A·x ≤ b, x_k ≥ 0 for flagged k}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::samplers1d::Interval;

/// Coefficients below this magnitude do not bound a coordinate.
pub const ZERO_COEF: f64 = 1e-12;

/// Relative slack allowed before a conditional interval is declared empty.
pub const EMPTY_TOL: f64 = 1e-10;

/// Slack allowed when checking a point against a row.
pub const FEAS_TOL: f64 = 1e-9;

/// Running intersection of the half-lines implied by rows `a·t ≤ r`.
#[derive(Clone, Debug)]
pub struct BoundAccumulator {
    lo: f64,
    hi: f64,
    lo_row: Option<usize>,
    hi_row: Option<usize>,
    lo_scale: f64,
    hi_scale: f64,
}

impl BoundAccumulator {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_row: None,
            hi_row: None,
            lo_scale: 0.0,
            hi_scale: 0.0,
        }
    }

    /// Adds the row `coef·t ≤ rhs`; `scale` is the row's `|b_i|` for the empty-interval tolerance.
    #[inline]
    pub fn add(&mut self, row: usize, coef: f64, rhs: f64, scale: f64) {
        if coef.abs() < ZERO_COEF {
            return;
        }
        let v = rhs / coef;
        if coef > 0.0 {
            if v < self.hi {
                self.hi = v;
                self.hi_row = Some(row);
                self.hi_scale = scale / coef;
            }
        } else if v > self.lo {
            self.lo = v;
            self.lo_row = Some(row);
            self.lo_scale = scale / -coef;
        }
    }

    /// The interval, collapsing tiny negative widths to the point nearest `current`.
    pub fn finish(self, coord: usize, current: f64) -> Result<Interval> {
        if self.lo <= self.hi {
            return Interval::new(self.lo, self.hi);
        }
        let tol = EMPTY_TOL * (1.0 + self.lo_scale.abs().max(self.hi_scale.abs()));
        if self.lo - self.hi <= tol {
            let p = current.max(self.hi).min(self.lo);
            return Ok(Interval::point(p));
        }
        let rows = self.lo_row.into_iter().chain(self.hi_row).collect();
        Err(Error::EmptyInterval { coord, rows })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    a: DMatrix<f64>,
    b: DVector<f64>,
    nonneg: Vec<bool>,
    witness: DVector<f64>,
}

impl Polytope {
    /// Builds the region and certifies it with `witness`, which must be feasible.
    pub fn new(
        a: DMatrix<f64>,
        b: DVector<f64>,
        nonneg: Vec<bool>,
        witness: DVector<f64>,
    ) -> Result<Self> {
        let p = Self::unchecked(a, b, nonneg, witness)?;
        let v = p.violation(&p.witness);
        if v > FEAS_TOL * (1.0 + p.b.amax()) {
            return Err(Error::Infeasible(format!(
                "witness point violates the constraints by {v:e}"
            )));
        }
        Ok(p)
    }

    fn unchecked(
        a: DMatrix<f64>,
        b: DVector<f64>,
        nonneg: Vec<bool>,
        witness: DVector<f64>,
    ) -> Result<Self> {
        let k = a.ncols();
        if k == 0 {
            return Err(Error::Dimension("polytope needs at least one coordinate".into()));
        }
        if a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "A has {} rows but b has {} entries",
                a.nrows(),
                b.len()
            )));
        }
        if nonneg.len() != k || witness.len() != k {
            return Err(Error::Dimension(format!(
                "A has {k} columns, nonneg flags {} and witness {}",
                nonneg.len(),
                witness.len()
            )));
        }
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("A and b must be finite".into()));
        }
        Ok(Self {
            a,
            b,
            nonneg,
            witness,
        })
    }

    /// Like [`Polytope::new`] but finds a feasible point itself, starting from `start`
    /// (or the origin), by cyclic projection onto violated half-spaces.
    pub fn with_search(
        a: DMatrix<f64>,
        b: DVector<f64>,
        nonneg: Vec<bool>,
        start: Option<DVector<f64>>,
    ) -> Result<Self> {
        let k = a.ncols();
        let x0 = start.unwrap_or_else(|| DVector::zeros(k));
        let mut p = Self::unchecked(a, b, nonneg, x0)?;
        p.witness = p.phase_one(p.witness.clone())?;
        Ok(p)
    }

    fn phase_one(&self, mut x: DVector<f64>) -> Result<DVector<f64>> {
        let scale = 1.0 + self.b.amax();
        // Aim slightly inside each half-space so the witness has room to move.
        let margin = 1e-7 * scale;
        for _ in 0..20_000 {
            let mut moved = false;
            for i in 0..self.a.nrows() {
                let row = self.a.row(i);
                let s = row.dot(&x.transpose()) - self.b[i];
                if s > -margin * 0.5 {
                    let nn = row.norm_squared();
                    if nn < ZERO_COEF {
                        if self.b[i] < -FEAS_TOL * scale {
                            return Err(Error::Infeasible(format!("row {i} reads 0 ≤ {}", self.b[i])));
                        }
                        continue;
                    }
                    if s > 0.0 {
                        moved = true;
                    }
                    let step = (s + margin) / nn;
                    x -= row.transpose() * step;
                }
            }
            for k in 0..x.len() {
                if self.nonneg[k] && x[k] < margin * 0.5 {
                    if x[k] < 0.0 {
                        moved = true;
                    }
                    x[k] = margin;
                }
            }
            if !moved && self.violation(&x) <= 0.0 {
                return Ok(x);
            }
        }
        if self.violation(&x) <= FEAS_TOL * scale {
            return Ok(x);
        }
        Err(Error::Infeasible(format!(
            "no feasible point found; best violation {:e}",
            self.violation(&x)
        )))
    }

    pub fn dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn nonneg(&self) -> &[bool] {
        &self.nonneg
    }

    pub fn witness(&self) -> &DVector<f64> {
        &self.witness
    }

    /// Largest constraint violation at `x` (≤ 0 means feasible).
    pub fn violation(&self, x: &DVector<f64>) -> f64 {
        let mut v = f64::NEG_INFINITY;
        if self.a.nrows() > 0 {
            let r = &self.a * x - &self.b;
            v = r.max();
        }
        for (k, &nn) in self.nonneg.iter().enumerate() {
            if nn {
                v = v.max(-x[k]);
            }
        }
        if v == f64::NEG_INFINITY {
            0.0
        } else {
            v
        }
    }

    pub fn is_feasible(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim() && self.violation(x) <= FEAS_TOL * (1.0 + self.b.amax())
    }

    /// `{t : x with x_k := t is feasible}`.
    pub fn conditional_bounds(&self, x: &DVector<f64>, k: usize) -> Result<Interval> {
        self.conditional_accumulator(x, k)?.finish(k, x[k])
    }

    pub(crate) fn conditional_accumulator(&self, x: &DVector<f64>, k: usize) -> Result<BoundAccumulator> {
        if k >= self.dim() || x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "coordinate {k} of a {}-dimensional point in a {}-dimensional polytope",
                x.len(),
                self.dim()
            )));
        }
        let lo = if self.nonneg[k] { 0.0 } else { f64::NEG_INFINITY };
        let mut acc = BoundAccumulator::new(lo, f64::INFINITY);
        for i in 0..self.a.nrows() {
            let aik = self.a[(i, k)];
            if aik.abs() < ZERO_COEF {
                continue;
            }
            let mut rest = 0.0;
            for j in 0..self.dim() {
                if j != k {
                    rest += self.a[(i, j)] * x[j];
                }
            }
            acc.add(i, aik, self.b[i] - rest, self.b[i]);
        }
        Ok(acc)
    }

    /// The same region with one more row `row·x ≤ rhs`. The witness is kept but not rechecked.
    pub fn with_row(&self, row: &[f64], rhs: f64) -> Result<Polytope> {
        if row.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "extra row has {} entries, expected {}",
                row.len(),
                self.dim()
            )));
        }
        let n = self.a.nrows();
        let mut a = self.a.clone().insert_row(n, 0.0);
        for (j, v) in row.iter().enumerate() {
            a[(n, j)] = *v;
        }
        let b = self.b.clone().push(rhs);
        Ok(Polytope {
            a,
            b,
            nonneg: self.nonneg.clone(),
            witness: self.witness.clone(),
        })
    }

    /// Replaces the witness with another feasible point.
    pub fn with_witness(mut self, witness: DVector<f64>) -> Result<Polytope> {
        if !self.is_feasible(&witness) {
            return Err(Error::Infeasible(format!(
                "witness violates the constraints by {:e}",
                self.violation(&witness)
            )));
        }
        self.witness = witness;
        Ok(self)
    }

    /// All constraints as rows `g·x ≤ h`, nonnegativity included.
    pub fn to_rows(&self) -> (DMatrix<f64>, DVector<f64>) {
        let k = self.dim();
        let extra: Vec<usize> = (0..k).filter(|&j| self.nonneg[j]).collect();
        let n = self.a.nrows() + extra.len();
        let mut g = DMatrix::zeros(n, k);
        let mut h = DVector::zeros(n);
        g.rows_mut(0, self.a.nrows()).copy_from(&self.a);
        h.rows_mut(0, self.a.nrows()).copy_from(&self.b);
        for (r, &j) in extra.iter().enumerate() {
            g[(self.a.nrows() + r, j)] = -1.0;
        }
        (g, h)
    }
}
