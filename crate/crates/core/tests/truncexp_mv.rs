use mc2_core::diagnostics::{ks_one_sample, ks_two_sample, mean};
use mc2_core::rng::exp1;
use mc2_core::samplers1d::{trunc_exp_sample, Interval};
use mc2_core::truncexp_mv::*;
use mc2_core::{Polytope, RngStream};
use mc2_oracles as oracle;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

const N: usize = 100_000;

fn triangle() -> Polytope {
    Polytope::new(DMatrix::from_row_slice(1, 2, &[1.0, 1.0]), DVector::from_element(1, 1.0), vec![true, true], DVector::from_vec(vec![0.2, 0.2])).unwrap()
}

#[test]
fn bounds_single_row() {
    let x = DVector::from_vec(vec![0.3, 0.4]);
    let iv = gibbs_conditional_bounds(&triangle(), &x, 0).unwrap();
    assert_eq!(iv.lo(), 0.0);
    assert!((iv.hi() - 0.6).abs() < 1e-15);
}

#[test]
fn bounds_farmer_rows() {
    let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 110.0, 30.0, 120.0, 210.0]);
    let b = DVector::from_vec(vec![75.0, 4000.0, 15000.0]);
    let y = DVector::from_vec(vec![10.0, 10.0]);
    let p = Polytope::new(a, b, vec![true, true], y.clone()).unwrap();
    let iv = gibbs_conditional_bounds(&p, &y, 0).unwrap();
    assert_eq!(iv.lo(), 0.0);
    assert!((iv.hi() - 3700.0 / 110.0).abs() < 1e-12, "{}", iv.hi());
}

#[test]
fn bounds_ignore_zero_rows() {
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 1.0]);
    let b = DVector::from_vec(vec![0.5, 2.0]);
    let x = DVector::from_vec(vec![0.1, 0.2]);
    let p = Polytope::new(a, b, vec![false, true], x.clone()).unwrap();
    let iv = gibbs_conditional_bounds(&p, &x, 0).unwrap();
    assert_eq!(iv.lo(), f64::NEG_INFINITY);
    assert!((iv.hi() - 1.8).abs() < 1e-15);
}

#[test]
fn bounds_are_exact_on_random_triples() {
    let mut rng = RngStream::new(201, 0);
    for _ in 0..1000 {
        let k = rng.random_range(1..=4);
        let m = rng.random_range(1..=6);
        let x = DVector::from_fn(k, |_, _| rng.random_range(0.0..1.0));
        let a = DMatrix::from_fn(m, k, |_, _| if rng.random::<f64>() < 0.15 { 0.0 } else { rng.random_range(-2.0..2.0) });
        // slack keeps x strictly inside
        let b = &a * &x + DVector::from_fn(m, |_, _| rng.random_range(0.01..1.0));
        let nonneg: Vec<bool> = (0..k).map(|_| rng.random()).collect();
        let p = Polytope::new(a, b.clone(), nonneg, x.clone()).unwrap();
        let j = rng.random_range(0..k);
        let iv = gibbs_conditional_bounds(&p, &x, j).unwrap();
        assert!(iv.contains(x[j]));
        let eps = 1e-8 * (1.0 + b.amax());
        for (end, dir) in [(iv.lo(), -1.0), (iv.hi(), 1.0)] {
            if !end.is_finite() {
                continue;
            }
            let mut y = x.clone();
            y[j] = end;
            assert!(p.violation(&y) <= 1e-12 * (1.0 + b.amax()), "endpoint infeasible");
            y[j] = end + dir * eps;
            assert!(p.violation(&y) > 0.0, "endpoint not tight");
        }
    }
}

fn chain(poly: &Polytope, rates: &[f64], n: usize, thin: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = RngStream::new(seed, 0);
    let rates = DVector::from_column_slice(rates);
    let mut x = poly.witness().clone();
    for _ in 0..200 {
        gibbs_sweep_truncexp(poly, &rates, &mut x, ScanOrder::Systematic, &mut rng).unwrap();
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        for _ in 0..thin {
            gibbs_sweep_truncexp(poly, &rates, &mut x, ScanOrder::Systematic, &mut rng).unwrap();
            assert!(poly.is_feasible(&x));
        }
        out.push(x.clone());
    }
    out
}

#[test]
fn zero_rates_give_uniform_triangle() {
    let d = chain(&triangle(), &[0.0, 0.0], N, 3, 202);
    let x1: Vec<f64> = d.iter().map(|v| v[0]).collect();
    // marginal of a uniform triangle: 1 − (1 − x)²
    let ks = ks_one_sample(&x1, |x| 1.0 - (1.0 - x).powi(2));
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn box_marginal_mean() {
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
    let p = Polytope::new(a, DVector::from_element(2, 1.0), vec![true, true], DVector::from_element(2, 0.5)).unwrap();
    let d = chain(&p, &[1.0, 1.0], N, 1, 203);
    let m = mean(&d.iter().map(|v| v[0]).collect::<Vec<_>>());
    let exact = 1.0 - 1.0 / (1f64.exp() - 1.0);
    assert!((exact - 0.418).abs() < 1e-3);
    assert!((m - exact).abs() < 0.005, "{m}");
}

#[test]
fn sweep_matches_rejection_on_triangle() {
    let d = chain(&triangle(), &[1.0, 2.0], N, 5, 204);
    let mut rng = RngStream::new(205, 0);
    let mut o = Vec::with_capacity(N);
    while o.len() < N {
        let (a, b) = (exp1(&mut rng), exp1(&mut rng) / 2.0);
        if a + b <= 1.0 {
            o.push((a, b));
        }
    }
    for (j, pick) in [|p: &(f64, f64)| p.0, |p: &(f64, f64)| p.1].iter().enumerate() {
        let g: Vec<f64> = d.iter().map(|v| v[j]).collect();
        let r: Vec<f64> = o.iter().map(pick).collect();
        let ks = ks_two_sample(&g, &r);
        assert!(ks.p_value > 0.01, "coordinate {j}: {ks:?}");
    }
}

#[test]
fn sweep_on_general_polytope_vs_weighted_rejection() {
    // x₁ − x₂ ≤ 0.5, x₁ + 2x₂ ≤ 2, x ≥ 0, x₁ ≤ 1.5
    let a = DMatrix::from_row_slice(3, 2, &[1.0, -1.0, 1.0, 2.0, 1.0, 0.0]);
    let b = DVector::from_vec(vec![0.5, 2.0, 1.5]);
    let p = Polytope::with_search(a, b, vec![true, true], None).unwrap();
    let d = chain(&p, &[0.7, -0.4], N, 5, 206);
    let mut rng = RngStream::new(207, 0);
    let inside = |x: &[f64]| x[0] - x[1] <= 0.5 && x[0] + 2.0 * x[1] <= 2.0;
    let w = |x: &[f64]| if inside(x) { (-0.7 * x[0] + 0.4 * x[1]).exp() } else { 0.0 };
    let o: Vec<Vec<f64>> = (0..N).map(|_| oracle::weighted_rejection_in_box(&[0.0, 0.0], &[1.5, 1.0], &w, 1.5, &mut rng)).collect();
    for j in 0..2 {
        let g: Vec<f64> = d.iter().map(|v| v[j]).collect();
        let r: Vec<f64> = o.iter().map(|v| v[j]).collect();
        let ks = ks_two_sample(&g, &r);
        assert!(ks.p_value > 0.01, "coordinate {j}: {ks:?}");
    }
}

#[test]
fn random_scan_is_also_stationary() {
    let mut rng = RngStream::new(208, 0);
    let p = triangle();
    let rates = DVector::from_vec(vec![0.0, 0.0]);
    let mut x = p.witness().clone();
    let mut s = Vec::new();
    for i in 0..N * 3 {
        gibbs_sweep_truncexp(&p, &rates, &mut x, ScanOrder::Random, &mut rng).unwrap();
        if i % 3 == 0 {
            s.push(x[1]);
        }
    }
    assert!(ks_one_sample(&s, |x| 1.0 - (1.0 - x).powi(2)).p_value > 0.01);
}

#[test]
fn simplex_uniform_cases() {
    let mut rng = RngStream::new(209, 0);
    let one: Vec<f64> = (0..N).map(|_| simplex_uniform(1, &mut rng).unwrap()[0]).collect();
    assert!(ks_one_sample(&one, |x| x).p_value > 0.01);
    let draws: Vec<DVector<f64>> = (0..N).map(|_| simplex_uniform(3, &mut rng).unwrap()).collect();
    assert!(draws.iter().all(|d| d.iter().all(|v| *v >= 0.0) && d.sum() <= 1.0));
    // Dirichlet(1,1,1,1) coordinate: mean 1/4, sd √(3/80)
    let se = (3.0f64 / 80.0).sqrt() / (N as f64).sqrt();
    for j in 0..3 {
        let m = mean(&draws.iter().map(|d| d[j]).collect::<Vec<_>>());
        assert!((m - 0.25).abs() < 3.0 * se, "{j}: {m}");
    }
    assert!(simplex_uniform(0, &mut rng).is_err());
}

#[test]
fn kent_equal_reduces_to_trunc_exp() {
    let t = SimplexExpTarget::equal_rates(1, 2.0).unwrap();
    let mut rng = RngStream::new(210, 0);
    let d: Vec<f64> = (0..N).map(|_| kent_equal_lambda_sample(&t, &mut rng).unwrap()[0]).collect();
    let ks = ks_one_sample(&d, |x| (1.0 - (-2.0 * x).exp()) / (1.0 - (-2f64).exp()));
    assert!(ks.p_value > 0.01, "{ks:?}");
}

#[test]
fn kent_equal_mass_below_half() {
    let t = SimplexExpTarget::equal_rates(2, 3.0).unwrap();
    let mut rng = RngStream::new(211, 0);
    let hits = (0..N).filter(|_| kent_equal_lambda_sample(&t, &mut rng).unwrap().sum() < 0.5).count() as f64 / N as f64;
    let f = |x: f64, y: f64| (-3.0 * (x + y)).exp();
    let tri = |s: f64| oracle::integrate(&|x| oracle::integrate(&|y| f(x, y), 0.0, s - x, 1e-12), 0.0, s, 1e-12);
    let exact = tri(0.5) / tri(1.0);
    assert!((hits - exact).abs() < 0.01, "{hits} vs {exact}");
    assert!((t.normalizer().unwrap() - tri(1.0)).abs() < 1e-9);
}

#[test]
fn kent_small_rate_approaches_uniform() {
    let t = SimplexExpTarget::equal_rates(3, 1e-6).unwrap();
    let mut rng = RngStream::new(212, 0);
    let a: Vec<f64> = (0..N).map(|_| kent_equal_lambda_sample(&t, &mut rng).unwrap()[0]).collect();
    let b: Vec<f64> = (0..N).map(|_| simplex_uniform(3, &mut rng).unwrap()[0]).collect();
    assert!((mean(&a) - mean(&b)).abs() < 0.005);
    assert!(ks_two_sample(&a, &b).p_value > 0.01);
}

#[test]
fn kent_unequal_agrees_with_equal_route() {
    let t = SimplexExpTarget::new(DVector::from_vec(vec![1.0, 1.0])).unwrap();
    let mut rng = RngStream::new(213, 0);
    let a: Vec<DVector<f64>> = (0..N).map(|_| kent_unequal_lambda_sample(&t, &mut rng).unwrap().x).collect();
    let b: Vec<DVector<f64>> = (0..N).map(|_| kent_equal_lambda_sample(&t, &mut rng).unwrap()).collect();
    for j in 0..2 {
        let ks = ks_two_sample(&a.iter().map(|v| v[j]).collect::<Vec<_>>(), &b.iter().map(|v| v[j]).collect::<Vec<_>>());
        assert!(ks.p_value > 0.01, "{j}: {ks:?}");
    }
    let s = ks_two_sample(&a.iter().map(|v| v.sum()).collect::<Vec<_>>(), &b.iter().map(|v| v.sum()).collect::<Vec<_>>());
    assert!(s.p_value > 0.01, "{s:?}");
}

#[test]
fn kent_unequal_first_moment() {
    let t = SimplexExpTarget::new(DVector::from_vec(vec![1.0, 2.0])).unwrap();
    let mut rng = RngStream::new(214, 0);
    let m = mean(&(0..N).map(|_| kent_unequal_lambda_sample(&t, &mut rng).unwrap().x[0]).collect::<Vec<_>>());
    let f = |x: f64, y: f64| (-x - 2.0 * y).exp();
    let z = oracle::integrate(&|x| oracle::integrate(&|y| f(x, y), 0.0, 1.0 - x, 1e-13), 0.0, 1.0, 1e-13);
    let m1 = oracle::integrate(&|x| x * oracle::integrate(&|y| f(x, y), 0.0, 1.0 - x, 1e-13), 0.0, 1.0, 1e-13) / z;
    assert!((m - m1).abs() < 0.005, "{m} vs {m1}");
    assert!((t.normalizer().unwrap() - z).abs() < 1e-9);
}

#[test]
fn kent_one_dim_accepts_every_proposal() {
    let t = SimplexExpTarget::new(DVector::from_vec(vec![4.0])).unwrap();
    let mut rng = RngStream::new(215, 0);
    assert!((0..1000).all(|_| kent_unequal_lambda_sample(&t, &mut rng).unwrap().trials == 1));
}

#[test]
fn kent_dispatch() {
    let th = KentThresholds::default();
    assert_eq!(select_method(&SimplexExpTarget::equal_rates(3, 0.1).unwrap(), th), KentMethod::CubeRejection);
    assert_eq!(select_method(&SimplexExpTarget::equal_rates(3, 2.0).unwrap(), th), KentMethod::SizeDirection);
    assert_eq!(select_method(&SimplexExpTarget::equal_rates(3, 20.0).unwrap(), th), KentMethod::SizeDirection);
    assert_eq!(
        select_method(&SimplexExpTarget::new(DVector::from_vec(vec![1.0, 9.0])).unwrap(), th),
        KentMethod::CubeRejection
    );
    let mut rng = RngStream::new(216, 0);
    let x = kent_sample(&SimplexExpTarget::equal_rates(4, 8.0).unwrap(), th, &mut rng).unwrap();
    assert!(x.iter().all(|v| *v >= 0.0) && x.sum() <= 1.0);
}

#[test]
fn simplex_prob_values() {
    let one = SimplexExpTarget::new(DVector::from_vec(vec![1.3])).unwrap();
    assert!((one.simplex_prob().unwrap() - (1.0 - (-1.3f64).exp())).abs() < 1e-14);
    let two = SimplexExpTarget::new(DVector::from_vec(vec![1.0, 2.0])).unwrap();
    assert!((two.simplex_prob().unwrap() - 0.3996).abs() < 1e-4);
    let eq = SimplexExpTarget::equal_rates(3, 2.0).unwrap();
    // P(Poisson(2) ≥ 3) by direct summation
    let tail = 1.0 - (-2f64).exp() * (1.0 + 2.0 + 2.0);
    assert!((tail - 0.3233).abs() < 1e-4);
    assert!((eq.simplex_prob().unwrap() - tail).abs() < 1e-12);
}

#[test]
fn simplex_prob_continuous_at_coalescing_rates() {
    for &(k, lam) in &[(2usize, 1.0), (3, 2.0), (4, 0.7)] {
        let eq = SimplexExpTarget::equal_rates(k, lam).unwrap().simplex_prob().unwrap();
        let mut r: Vec<f64> = vec![lam; k];
        for (j, v) in r.iter_mut().enumerate() {
            *v *= 1.0 + 1e-4 * j as f64;
        }
        let un = SimplexExpTarget::new(DVector::from_vec(r)).unwrap().simplex_prob().unwrap();
        assert!((un - eq).abs() < 1e-3, "k={k}: {un} vs {eq}");
    }
}

#[test]
fn normalizer_identity() {
    for rates in [vec![1.0, 2.0], vec![2.0, 2.0, 2.0], vec![0.5, 3.0, 1.5]] {
        let t = SimplexExpTarget::new(DVector::from_vec(rates.clone())).unwrap();
        let prod: f64 = rates.iter().product();
        assert!((t.normalizer().unwrap() * prod - t.simplex_prob().unwrap()).abs() < 1e-14);
        let x = DVector::from_element(rates.len(), 0.1);
        let ld = t.log_density(&x).unwrap();
        assert!((ld + rates.iter().sum::<f64>() * 0.1 + t.normalizer().unwrap().ln()).abs() < 1e-12);
    }
}

#[test]
fn halfplane_sampler_vs_rejection() {
    let (q, a, b) = ([1.5, 0.5], [1.0, 2.0], 2.0);
    let mut rng = RngStream::new(217, 0);
    let d: Vec<DVector<f64>> = (0..N).map(|_| two_var_halfplane_sample(q, a, b, &mut rng).unwrap().0).collect();
    assert!(d.iter().all(|x| x[0] >= 0.0 && x[1] >= 0.0 && a[0] * x[0] + a[1] * x[1] <= b + 1e-12));
    let mut o = Vec::with_capacity(N);
    let (i0, i1) = (Interval::new(0.0, b / a[0]).unwrap(), Interval::new(0.0, b / a[1]).unwrap());
    while o.len() < N {
        let x0 = trunc_exp_sample(-q[0], i0, &mut rng).unwrap();
        let x1 = trunc_exp_sample(-q[1], i1, &mut rng).unwrap();
        if a[0] * x0 + a[1] * x1 <= b {
            o.push((x0, x1));
        }
    }
    let ks0 = ks_two_sample(&d.iter().map(|v| v[0]).collect::<Vec<_>>(), &o.iter().map(|p| p.0).collect::<Vec<_>>());
    let ks1 = ks_two_sample(&d.iter().map(|v| v[1]).collect::<Vec<_>>(), &o.iter().map(|p| p.1).collect::<Vec<_>>());
    assert!(ks0.p_value > 0.01 && ks1.p_value > 0.01, "{ks0:?} {ks1:?}");
}
