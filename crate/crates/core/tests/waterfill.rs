use mc2_core::waterfill::*;
use mc2_core::RngStream;
use rand::Rng;

const R: usize = 100_000;

fn replicate(q: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = RngStream::new(seed, 0);
    (0..R).map(|_| collapse_weights(q, n, &mut rng).unwrap().dense(q.len())).collect()
}

fn col_mean_se(rows: &[Vec<f64>], j: usize) -> (f64, f64) {
    let n = rows.len() as f64;
    let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
    let v = rows.iter().map(|r| (r[j] - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

#[test]
fn alpha_for_three_weights() {
    let a = solve_alpha(&[0.7, 0.2, 0.1], 2).unwrap();
    assert!((a - 10.0 / 3.0).abs() < 1e-14, "{a}");
}

#[test]
fn alpha_root_is_exact_on_random_inputs() {
    let mut rng = RngStream::new(601, 0);
    for _ in 0..500 {
        let m = rng.random_range(2..40);
        let mut q: Vec<f64> = (0..m).map(|_| rng.random::<f64>().powi(3)).collect();
        let s: f64 = q.iter().sum();
        q.iter_mut().for_each(|v| *v /= s);
        for n in 1..=m {
            let a = solve_alpha(&q, n).unwrap();
            let cov: f64 = q.iter().map(|v| (a * v).min(1.0)).sum();
            assert!((cov - n as f64).abs() < 1e-10, "m={m} n={n}: {cov}");
        }
    }
    // ties at a breakpoint
    let q = [0.25; 4];
    assert!((solve_alpha(&q, 2).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn alpha_errors() {
    assert!(solve_alpha(&[0.5, 0.5, 0.0], 3).is_err());
    assert!(solve_alpha(&[1.0], 0).is_err());
    assert!(solve_alpha(&[0.5, -0.1, 0.6], 1).is_err());
}

#[test]
fn identity_collapse() {
    let q = [0.1, 0.4, 0.3, 0.2];
    let mut rng = RngStream::new(602, 0);
    let cs = collapse_weights(&q, 4, &mut rng).unwrap();
    assert_eq!(cs.indices, vec![0, 1, 2, 3]);
    assert_eq!(cs.weights, q.to_vec());
}

#[test]
fn three_weight_example() {
    let q = [0.7, 0.2, 0.1];
    let rows = replicate(&q, 2, 603);
    // the heavy particle always survives untouched
    assert!(rows.iter().all(|r| r[0] == 0.7));
    assert!(rows.iter().all(|r| r.iter().filter(|v| **v > 0.0).count() == 2));
    assert!(rows.iter().all(|r| r[1] == 0.0 || (r[1] - 0.3).abs() < 1e-15));
    let kept2 = rows.iter().filter(|r| r[1] > 0.0).count() as f64 / R as f64;
    assert!((kept2 - 2.0 / 3.0).abs() < 3.0 * (2.0 / 9.0 / R as f64).sqrt());
    for j in 1..3 {
        let (m, se) = col_mean_se(&rows, j);
        assert!((m - q[j]).abs() <= 3.0 * se, "j={j}: {m} ± {se}");
    }
    // indicator of particle 1 is estimated exactly
    let mut rng = RngStream::new(604, 0);
    for _ in 0..1000 {
        let cs = collapse_weights(&q, 2, &mut rng).unwrap();
        assert_eq!(estimate_functional(&cs, &[1.0, 0.0, 0.0]).unwrap(), 0.7);
    }
}

#[test]
fn mse_matches_closed_form_and_beats_multinomial() {
    let q = [0.7, 0.2, 0.1];
    let rows = replicate(&q, 2, 605);
    let per: Vec<f64> = rows.iter().map(|r| r.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum()).collect();
    let n = per.len() as f64;
    let mse = per.iter().sum::<f64>() / n;
    let se = (per.iter().map(|v| (v - mse).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    let exact = theoretical_mse(&q, 2).unwrap();
    // 0.2²·(3/2 − 1) + 0.1²·(3 − 1)
    assert!((exact - 0.04).abs() < 1e-14);
    assert!((mse - exact).abs() < 3.0 * se, "{mse} vs {exact}");
    let mut rng = RngStream::new(606, 0);
    let multi = (0..R)
        .map(|_| multinomial_resample(&q, 2, &mut rng).iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        .sum::<f64>()
        / R as f64;
    assert!(mse <= multi, "{mse} > {multi}");
}

#[test]
fn barker_reduction() {
    let mut rng = RngStream::new(607, 0);
    for &q1 in &[0.5, 0.3, 0.9] {
        let q = [q1, 1.0 - q1];
        let a = solve_alpha(&q, 1).unwrap();
        assert!((1.0 / a - 1.0).abs() < 1e-14);
        // survivor j with probability q_j, carrying weight 1/α = 1
        let hits = (0..R).filter(|_| collapse_weights(&q, 1, &mut rng).unwrap().indices[0] == 0).count() as f64 / R as f64;
        assert!((hits - q1).abs() < 3.0 * (q1 * (1.0 - q1) / R as f64).sqrt());
    }
}

#[test]
fn ten_point_functional_unbiased() {
    let mut rng = RngStream::new(608, 0);
    let mut q: Vec<f64> = (0..10).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= s);
    let f: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
    let truth: f64 = f.iter().zip(&q).map(|(a, b)| a * b).sum();
    let est: Vec<f64> = (0..R).map(|_| estimate_functional(&collapse_weights(&q, 4, &mut rng).unwrap(), &f).unwrap()).collect();
    let m = est.iter().sum::<f64>() / R as f64;
    let se = (est.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (R as f64 - 1.0) / R as f64).sqrt();
    assert!((m - truth).abs() < 3.0 * se, "{m} vs {truth}");
    let ones: Vec<f64> = (0..R).map(|_| estimate_functional(&collapse_weights(&q, 4, &mut rng).unwrap(), &[1.0; 10]).unwrap()).collect();
    let m1 = ones.iter().sum::<f64>() / R as f64;
    assert!((m1 - 1.0).abs() < 0.01);
}

#[test]
fn uniform_weights_have_no_winners() {
    let q = vec![0.01; 100];
    let a = solve_alpha(&q, 10).unwrap();
    assert!((a - 10.0).abs() < 1e-10);
    let mut rng = RngStream::new(609, 0);
    let cs = collapse_weights(&q, 10, &mut rng).unwrap();
    assert_eq!(cs.indices.len(), 10);
    assert!(cs.weights.iter().all(|w| (w - 0.1).abs() < 1e-12));
}

#[test]
fn per_index_unbiased_on_random_sets() {
    let mut rng = RngStream::new(610, 0);
    let mut q: Vec<f64> = (0..8).map(|_| rng.random::<f64>().powi(2)).collect();
    let s: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= s);
    let rows = replicate(&q, 3, 611);
    assert!(rows.iter().all(|r| r.iter().filter(|v| **v > 0.0).count() == 3));
    let alpha = solve_alpha(&q, 3).unwrap();
    for j in 0..q.len() {
        let (m, se) = col_mean_se(&rows, j);
        if alpha * q[j] >= 1.0 {
            assert!(rows.iter().all(|r| r[j] == q[j]));
        } else {
            assert!((m - q[j]).abs() < 3.0 * se, "j={j}: {m} vs {}", q[j]);
        }
    }
}
