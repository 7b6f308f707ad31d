use crate::error::{Error, Result};

/// A closed interval on the extended real line. Either end may be infinite.
///
/// `lo == hi` is allowed: Gibbs conditionals on a face of a polytope collapse to a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::InvalidArgument("interval endpoint is NaN".into()));
        }
        if lo > hi {
            return Err(Error::InvalidArgument(format!(
                "interval lower end {lo} exceeds upper end {hi}"
            )));
        }
        if lo == f64::INFINITY || hi == f64::NEG_INFINITY {
            return Err(Error::InvalidArgument(format!(
                "interval [{lo}, {hi}] is empty on the real line"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn lower_half_line(hi: f64) -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi,
        }
    }

    pub fn upper_half_line(lo: f64) -> Self {
        Self {
            lo,
            hi: f64::INFINITY,
        }
    }

    pub(crate) fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lo).min(self.hi)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}
