//! Densities `∝ exp(κ·h(y))` on an interval, with `h` concave and piecewise linear.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::open01;
use crate::samplers1d::{trunc_exp_log_normalizer, trunc_exp_sample, Interval};

/// `h(y) = c + m·y` on `[a, b]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m: f64,
}

impl Segment {
    fn h(&self, y: f64) -> f64 {
        self.c + self.m * y
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseExp {
    kappa: f64,
    segments: Vec<Segment>,
    /// `ln ∫ exp(κ(h − shift))` per segment.
    log_mass: Vec<f64>,
    /// `max h`, factored out of every exponent.
    shift: f64,
    log_z: f64,
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl PiecewiseExp {
    /// `h(y) = base(y) + weight·min_i line_i(y)` on `[lo, hi]`; each line is `(intercept, slope)`.
    pub fn from_min_of_lines(
        base: (f64, f64),
        weight: f64,
        lines: &[(f64, f64)],
        lo: f64,
        hi: f64,
        kappa: f64,
    ) -> Result<Self> {
        if lines.is_empty() || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "need at least one line and a bounded interval, got [{lo}, {hi}]"
            )));
        }
        if !(weight >= 0.0) {
            return Err(Error::InvalidArgument("weight must be ≥ 0 to keep h concave".into()));
        }
        let mut cuts = vec![lo, hi];
        for (i, l1) in lines.iter().enumerate() {
            for l2 in &lines[i + 1..] {
                let dm = l1.1 - l2.1;
                if dm.abs() > 1e-300 {
                    let y = (l2.0 - l1.0) / dm;
                    if y > lo && y < hi {
                        cuts.push(y);
                    }
                }
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * (1.0 + b.abs()));
        let mut segments: Vec<Segment> = Vec::new();
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let &(c, m) = lines
                .iter()
                .min_by(|p, q| (p.0 + p.1 * mid).total_cmp(&(q.0 + q.1 * mid)))
                .expect("nonempty");
            let seg = Segment {
                a: w[0],
                b: w[1],
                c: base.0 + weight * c,
                m: base.1 + weight * m,
            };
            match segments.last_mut() {
                Some(prev) if prev.m == seg.m && prev.c == seg.c => prev.b = seg.b,
                _ => segments.push(seg),
            }
        }
        Self::from_segments(segments, kappa)
    }

    pub fn from_segments(segments: Vec<Segment>, kappa: f64) -> Result<Self> {
        if segments.is_empty() || !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(Error::InvalidArgument("need segments and a finite κ ≥ 0".into()));
        }
        let shift = segments
            .iter()
            .map(|s| s.h(s.a).max(s.h(s.b)))
            .fold(f64::NEG_INFINITY, f64::max);
        let log_mass = segments
            .iter()
            .map(|s| seg_log_mass(s, s.a, s.b, kappa, shift))
            .collect::<Result<Vec<_>>>()?;
        let log_z = log_sum_exp(&log_mass);
        Ok(Self {
            kappa,
            segments,
            log_mass,
            shift,
            log_z,
        })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn lo(&self) -> f64 {
        self.segments[0].a
    }

    pub fn hi(&self) -> f64 {
        self.segments[self.segments.len() - 1].b
    }

    pub fn h(&self, y: f64) -> Option<f64> {
        self.segments
            .iter()
            .find(|s| y >= s.a && y <= s.b)
            .map(|s| s.h(y))
    }

    /// `ln Z_κ = ln ∫ exp(κ h(y)) dy`.
    pub fn log_normalizer(&self) -> f64 {
        self.log_z + self.kappa * self.shift
    }

    pub fn log_density(&self, y: f64) -> f64 {
        match self.h(y) {
            Some(h) => self.kappa * h - self.log_normalizer(),
            None => f64::NEG_INFINITY,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        self.sample_within(Interval::new(self.lo(), self.hi())?, rng)
    }

    /// `{y : h(y) ≥ level}`, an interval because `h` is concave. `None` if empty.
    pub fn superlevel(&self, level: f64) -> Option<Interval> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.segments {
            let (ha, hb) = (s.h(s.a), s.h(s.b));
            if ha < level && hb < level {
                continue;
            }
            let cross = if s.m != 0.0 { (level - s.c) / s.m } else { s.a };
            let a = if ha >= level { s.a } else { cross.clamp(s.a, s.b) };
            let b = if hb >= level { s.b } else { cross.clamp(s.a, s.b) };
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo <= hi).then(|| Interval::new(lo, hi).ok()).flatten()
    }

    /// Draw from the density restricted to `iv`.
    pub fn sample_within<R: Rng + ?Sized>(&self, iv: Interval, rng: &mut R) -> Result<f64> {
        let parts: Vec<(Segment, f64, f64, f64)> = self
            .segments
            .iter()
            .filter_map(|s| {
                let a = s.a.max(iv.lo());
                let b = s.b.min(iv.hi());
                (b > a).then(|| seg_log_mass(s, a, b, self.kappa, self.shift).map(|lm| (*s, a, b, lm)))
            })
            .collect::<Result<Vec<_>>>()?;
        if parts.is_empty() {
            if iv.is_degenerate() && self.h(iv.lo()).is_some() {
                return Ok(iv.lo());
            }
            return Err(Error::InvalidArgument(format!("{iv} misses the support [{}, {}]", self.lo(), self.hi())));
        }
        let lm: Vec<f64> = parts.iter().map(|p| p.3).collect();
        let total = log_sum_exp(&lm);
        let u = open01(rng);
        let mut acc = 0.0;
        let mut pick = parts.len() - 1;
        for (i, l) in lm.iter().enumerate() {
            acc += (l - total).exp();
            if u < acc {
                pick = i;
                break;
            }
        }
        let (s, a, b, _) = parts[pick];
        trunc_exp_sample(self.kappa * s.m, Interval::new(a, b)?, rng)
    }
}

fn seg_log_mass(s: &Segment, a: f64, b: f64, kappa: f64, shift: f64) -> Result<f64> {
    if b <= a {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(kappa * (s.c - shift) + trunc_exp_log_normalizer(kappa * s.m, Interval::new(a, b)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn tent() -> PiecewiseExp {
        // h = min(y, 2 − y) on [0, 2]
        PiecewiseExp::from_min_of_lines((0.0, 0.0), 1.0, &[(0.0, 1.0), (2.0, -1.0)], 0.0, 2.0, 3.0).unwrap()
    }

    #[test]
    fn tent_normalizer() {
        let p = tent();
        assert_eq!(p.segments().len(), 2);
        let z = 2.0 * ((3.0f64).exp() - 1.0) / 3.0;
        assert!((p.log_normalizer() - z.ln()).abs() < 1e-12);
    }

    #[test]
    fn superlevel_of_tent() {
        let iv = tent().superlevel(0.5).unwrap();
        assert!((iv.lo() - 0.5).abs() < 1e-12 && (iv.hi() - 1.5).abs() < 1e-12);
        assert!(tent().superlevel(1.5).is_none());
    }

    #[test]
    fn restricted_draws_stay_inside() {
        let p = tent();
        let mut rng = RngStream::new(0, 0);
        let iv = Interval::new(0.2, 0.7).unwrap();
        for _ in 0..1000 {
            let y = p.sample_within(iv, &mut rng).unwrap();
            assert!(iv.contains(y));
        }
    }
}
