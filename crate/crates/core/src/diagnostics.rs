//! Chain summaries: means, batch-means standard errors, histograms and KS statistics.

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Unbiased sample variance.
pub fn variance(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return f64::NAN;
    }
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

/// Standard error of the mean of a correlated series, from ⌊√n⌋ non-overlapping batches.
pub fn batch_means_se(v: &[f64]) -> f64 {
    let n = v.len();
    if n < 4 {
        return f64::NAN;
    }
    let nb = (n as f64).sqrt().floor() as usize;
    let size = n / nb;
    let means: Vec<f64> = (0..nb).map(|i| mean(&v[i * size..(i + 1) * size])).collect();
    (variance(&means) / nb as f64).sqrt()
}

pub fn lag1_autocorrelation(v: &[f64]) -> f64 {
    if v.len() < 3 {
        return f64::NAN;
    }
    let m = mean(v);
    let den: f64 = v.iter().map(|x| (x - m) * (x - m)).sum();
    let num: f64 = v.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
    num / den
}

fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    /// `counts.len() + 1` bin edges.
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// Equal-width bins on `[lo, hi]`; values outside are dropped.
    pub fn fixed(data: &[f64], bins: usize, lo: f64, hi: f64) -> Histogram {
        let bins = bins.max(1);
        let w = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + w * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &x in data {
            if x < lo || x > hi || !x.is_finite() {
                continue;
            }
            let i = if w > 0.0 { ((x - lo) / w).floor() as usize } else { 0 };
            counts[i.min(bins - 1)] += 1;
        }
        Histogram { edges, counts }
    }

    /// Freedman–Diaconis bin width `2·IQR·n^{−1/3}` over the data range.
    pub fn freedman_diaconis(data: &[f64]) -> Histogram {
        let mut s: Vec<f64> = data.iter().copied().filter(|x| x.is_finite()).collect();
        if s.is_empty() {
            return Histogram {
                edges: vec![0.0, 1.0],
                counts: vec![0],
            };
        }
        s.sort_by(f64::total_cmp);
        let (lo, hi) = (s[0], s[s.len() - 1]);
        let iqr = quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25);
        let w = 2.0 * iqr / (s.len() as f64).cbrt();
        let bins = if w > 0.0 && hi > lo {
            (((hi - lo) / w).ceil() as usize).clamp(1, 10_000)
        } else {
            1
        };
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        Histogram::fixed(&s, bins, lo, hi)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Index and edges of the fullest bin (the first one on ties).
    pub fn mode_bin(&self) -> (usize, f64, f64) {
        let mut best = 0;
        for (i, &c) in self.counts.iter().enumerate() {
            if c > self.counts[best] {
                best = i;
            }
        }
        (best, self.edges[best], self.edges[best + 1])
    }

    pub fn bin_of(&self, x: f64) -> Option<usize> {
        let n = self.counts.len();
        if x < self.edges[0] || x > self.edges[n] {
            return None;
        }
        Some(self.edges[1..].iter().position(|e| x < *e).unwrap_or(n - 1))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov tail `P(K > λ)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut s = 0.0;
    for k in 1..=200 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

fn ks_p(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)
}

/// One-sample KS test against a continuous cdf.
pub fn ks_one_sample(data: &[f64], cdf: impl Fn(f64) -> f64) -> KsResult {
    let mut s = data.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    KsResult {
        statistic: d,
        p_value: ks_p(d, n),
    }
}

/// Two-sample KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len(), y.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = x[i].min(y[j]);
        while i < n && x[i] <= v {
            i += 1;
        }
        while j < m && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let ne = (n * m) as f64 / (n + m) as f64;
    KsResult {
        statistic: d,
        p_value: ks_p(d, ne),
    }
}

/// Total variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Normalized frequencies of indices `0..n`.
pub fn frequencies(idx: &[usize], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n];
    for &i in idx {
        c[i] += 1.0;
    }
    let t = idx.len().max(1) as f64;
    c.iter().map(|v| v / t).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_everything_in_range() {
        let d: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
        let h = Histogram::freedman_diaconis(&d);
        assert_eq!(h.total(), 1000);
        assert_eq!(h.edges.len(), h.counts.len() + 1);
    }

    #[test]
    fn kolmogorov_tail_values() {
        assert!((kolmogorov_q(1.36) - 0.0494).abs() < 1e-3);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 1e-3);
    }

    #[test]
    fn ks_two_identical_samples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }
}
