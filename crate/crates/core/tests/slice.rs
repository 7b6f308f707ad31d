use mc2_core::diagnostics::{frequencies, ks_one_sample, ks_two_sample, total_variation};
use mc2_core::slice::*;
use mc2_core::truncexp_mv::{gibbs_sweep_truncexp, ScanOrder};
use mc2_core::{Interval, Polytope, RngStream};
use mc2_oracles as oracle;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const N: usize = 100_000;

#[test]
fn exp_level_gap_is_exponential() {
    let mut rng = RngStream::new(401, 0);
    let kappa = 2.5;
    let gaps: Vec<f64> = (0..N).map(|_| 1.7 - exp_slice_level(1.7, kappa, &mut rng).unwrap()).collect();
    assert!(gaps.iter().all(|g| *g > 0.0));
    let ks = ks_one_sample(&gaps, |x| 1.0 - (-kappa * x).exp());
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn exp_level_tight_at_huge_kappa() {
    let mut rng = RngStream::new(402, 0);
    let close = (0..N).filter(|_| -exp_slice_level(0.0, 1e6, &mut rng).unwrap() < 1e-5).count();
    // P(gap ≥ 1e-5) = e^{-10}
    assert!(close as f64 >= N as f64 * (1.0 - 1e-4));
    assert_eq!(exp_slice_level(0.3, 0.0, &mut rng).unwrap(), f64::NEG_INFINITY);
    assert!(exp_slice_level(f64::NAN, 1.0, &mut rng).is_err());
}

#[test]
fn multi_slice_single_term_matches_single_level() {
    let mut a = RngStream::new(403, 0);
    let mut b = RngStream::new(403, 0);
    for _ in 0..100 {
        let m = multi_slice_levels(&[2.0], 3.0, &mut a).unwrap();
        assert_eq!(m[0], exp_slice_level(2.0, 3.0, &mut b).unwrap());
    }
}

/// Exact law `∝ exp(κ Σ_i f_i)` on a finite domain.
fn exact(terms: &[Vec<f64>], kappa: f64) -> Vec<f64> {
    let s: Vec<f64> = terms.iter().map(|t| t.iter().sum()).collect();
    oracle::boltzmann_weights(&s, kappa)
}

fn run_discrete(terms: &[Vec<f64>], kappa: f64, n: usize, seed: u64) -> Vec<usize> {
    let mut rng = RngStream::new(seed, 0);
    let mut p = 0;
    let mut out = Vec::with_capacity(n);
    for _ in 0..1000 {
        p = discrete_multi_slice_step(terms, p, kappa, &mut rng).unwrap();
    }
    for _ in 0..n {
        p = discrete_multi_slice_step(terms, p, kappa, &mut rng).unwrap();
        out.push(p);
    }
    out
}

#[test]
fn multi_slice_five_point_toy() {
    let terms = vec![
        vec![0.0, 1.0, 0.5],
        vec![1.0, 0.2, 0.1],
        vec![2.0, 0.0, 0.3],
        vec![0.4, 0.4, 0.4],
        vec![0.1, 1.5, 0.0],
    ];
    for &kappa in &[0.5, 1.0, 3.0] {
        let f = frequencies(&run_discrete(&terms, kappa, N, 404), terms.len());
        let tv = total_variation(&f, &exact(&terms, kappa));
        assert!(tv < 0.02, "κ={kappa}: TV {tv}");
    }
}

#[test]
fn single_slice_on_32_points() {
    let mut rng = RngStream::new(405, 0);
    let terms: Vec<Vec<f64>> = (0..32).map(|_| vec![rng.random_range(0.0..2.0)]).collect();
    let f = frequencies(&run_discrete(&terms, 2.0, N, 406), 32);
    let tv = total_variation(&f, &exact(&terms, 2.0));
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn three_state_detailed_balance() {
    let terms = vec![vec![0.0], vec![0.7], vec![1.5]];
    let path = run_discrete(&terms, 1.2, N, 407);
    let mut c = [[0.0f64; 3]; 3];
    for w in path.windows(2) {
        c[w[0]][w[1]] += 1.0;
    }
    for i in 0..3 {
        for j in i + 1..3 {
            // under reversibility N_ij − N_ji has mean 0 and variance ≈ N_ij + N_ji
            let sd = (c[i][j] + c[j][i]).sqrt();
            assert!((c[i][j] - c[j][i]).abs() < 3.0 * sd.max(1.0), "{i}->{j}: {} vs {}", c[i][j], c[j][i]);
        }
    }
}

#[test]
fn uniform_slice_mode_minimizes() {
    // exp(−κ f) on five points via ln v < −κ f
    let f = [0.3, 1.0, 0.0, 2.0, 0.6];
    let kappa = 1.5;
    let mut rng = RngStream::new(408, 0);
    let mut p = 0usize;
    let mut out = Vec::with_capacity(N);
    for _ in 0..N {
        let lv = uniform_slice_log_level(f[p], kappa, &mut rng).unwrap();
        let ok: Vec<usize> = (0..5).filter(|&q| -kappa * f[q] > lv).collect();
        p = ok[rng.random_range(0..ok.len())];
        out.push(p);
    }
    let neg: Vec<f64> = f.iter().map(|v| -v).collect();
    let tv = total_variation(&frequencies(&out, 5), &oracle::boltzmann_weights(&neg, kappa));
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn linear_slice_gibbs_matches_truncexp_gibbs() {
    let poly = Polytope::new(
        DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
        DVector::from_element(1, 1.0),
        vec![true, true],
        DVector::from_element(2, 0.2),
    )
    .unwrap();
    let c = DVector::from_vec(vec![1.0, -2.0]);
    let kappa = 2.0;
    let obj = LinearTerm::new(c.clone(), 0.0);
    let mut rng = RngStream::new(409, 0);
    let (mut x, mut y) = (poly.witness().clone(), poly.witness().clone());
    let rates = -&c * kappa;
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for i in 0..N * 5 {
        let u = slice_gibbs_sweep_linear(&poly, &obj, kappa, &mut x, &mut rng).unwrap();
        assert!(obj.eval(&x) >= u);
        gibbs_sweep_truncexp(&poly, &rates, &mut y, ScanOrder::Systematic, &mut rng).unwrap();
        if i % 5 == 0 {
            a.push(x[0]);
            b.push(y[0]);
        }
    }
    let ks = ks_two_sample(&a, &b);
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn stepping_out_targets_nonlinear_density() {
    // exp(κ g) with g(t) = −(t² − 1)² on [−2, 2]: two modes
    let g = |t: f64| -(t * t - 1.0).powi(2);
    let kappa = 2.0;
    let b = Interval::new(-2.0, 2.0).unwrap();
    let mut rng = RngStream::new(410, 0);
    let mut t = 0.5;
    let mut out = Vec::with_capacity(N);
    for i in 0..N * 3 {
        let u = exp_slice_level(g(t), kappa, &mut rng).unwrap();
        t = slice_set_sample_1d(g, u, t, b, &mut rng).unwrap();
        assert!(g(t) >= u);
        if i % 3 == 0 {
            out.push(t);
        }
    }
    let dens = |x: f64| (kappa * g(x)).exp();
    let z = oracle::integrate(&dens, -2.0, 2.0, 1e-13);
    let sub: Vec<f64> = out.iter().step_by(10).copied().collect();
    let ks = ks_one_sample(&sub, |x| oracle::integrate(&dens, -2.0, x.clamp(-2.0, 2.0), 1e-11) / z);
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn farmer_slice_row_from_level() {
    let p = Polytope::new(
        DMatrix::from_row_slice(3, 2, &[110.0, 30.0, 120.0, 210.0, 1.0, 1.0]),
        DVector::from_vec(vec![4000.0, 15000.0, 75.0]),
        vec![true, true],
        DVector::from_vec(vec![10.0, 10.0]),
    )
    .unwrap();
    let f = LinearTerm::new(DVector::from_vec(vec![143.0, 60.0]), 0.0);
    let x = DVector::from_vec(vec![10.0, 10.0]);
    for &u in &[0.0, 1000.0, 2000.0] {
        let iv = linear_slice_interval(&p, &x, 1, &[(&f, u)]).unwrap();
        let lo = ((u - 1430.0) / 60.0).max(0.0);
        let hi = ((4000.0 - 1100.0) / 30.0f64).min((15000.0 - 1200.0) / 210.0).min(65.0);
        assert!((iv.lo() - lo).abs() < 1e-12 && (iv.hi() - hi).abs() < 1e-12, "{iv}");
    }
}

#[test]
fn bimodal_visits_both_modes() {
    // diagnostic: the slice chain crosses between the modes of exp(κ g)
    let g = |t: f64| -(t * t - 1.0).powi(2);
    let b = Interval::new(-2.0, 2.0).unwrap();
    let mut rng = RngStream::new(411, 0);
    let mut t = 1.0;
    let (mut left, mut right) = (0, 0);
    for _ in 0..10_000 {
        let u = exp_slice_level(g(t), 8.0, &mut rng).unwrap();
        t = slice_set_sample_1d(g, u, t, b, &mut rng).unwrap();
        if t < 0.0 {
            left += 1;
        } else {
            right += 1;
        }
    }
    assert!(left > 1000 && right > 1000, "{left} / {right}");
}
