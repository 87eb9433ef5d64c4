mod common;

use common::random_instance;
use nssvm::linear::{dual_objective, grad_g, DualIterate, Penalties};
use nssvm::newton::{check_eta_stationarity, solve_fixed_s, SolverConfig};
use nssvm::oracle::{enumerate_global, oracle_objective, solve_restricted};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn restricted_solution_satisfies_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let d = random_instance(&mut rng, 6, 3);
        let t = sample(&mut rng, 6, 3).into_vec();
        let p = Penalties::default();
        let sol = solve_restricted(&d, &t, &p).unwrap();
        let g = grad_g(&d, &DualIterate { alpha: sol.alpha.clone(), b: sol.b }, &p).unwrap();
        let kkt: f64 = t.iter().map(|&i| g[i] * g[i]).sum::<f64>().sqrt();
        let feas: f64 = sol.alpha.iter().zip(d.labels()).map(|(a, y)| a * y).sum();
        assert!(kkt <= 1e-10 && feas.abs() <= 1e-10, "kkt {kkt:e} feas {feas:e}");
    }
}

#[test]
fn internal_objective_matches_library() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..30 {
        let m = rng.random_range(3..=8);
        let d = random_instance(&mut rng, m, 2);
        let p = Penalties::default();
        let res = enumerate_global(&d, 2.min(m), &p).unwrap();
        let lib = dual_objective(&d, &res.best_alpha, &p).unwrap();
        assert!((lib - res.best_objective).abs() <= 1e-12 * (1.0 + lib.abs()));
        let sample_alpha: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = dual_objective(&d, &sample_alpha, &p).unwrap();
        let b = oracle_objective(&d, &sample_alpha, &p);
        assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }
}

#[test]
fn full_support_equals_unconstrained_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let d = random_instance(&mut rng, 4, 2);
    let p = Penalties::default();
    let global = enumerate_global(&d, 4, &p).unwrap();
    let full = solve_restricted(&d, &[0, 1, 2, 3], &p).unwrap();
    assert!((global.best_objective - full.objective).abs() <= 1e-12);
}

#[test]
fn global_minimum_beats_random_feasible_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let d = random_instance(&mut rng, 4, 2);
    let p = Penalties::default();
    let s = 2;
    let res = enumerate_global(&d, s, &p).unwrap();
    assert!(res.best_alpha.iter().filter(|a| **a != 0.0).count() <= s);
    for _ in 0..10_000 {
        let t = sample(&mut rng, 4, s).into_vec();
        // feasible two-point combination: y_i a_i + y_j a_j = 0
        let a = rng.random_range(-2.0..2.0);
        let mut alpha = vec![0.0; 4];
        alpha[t[0]] = a;
        alpha[t[1]] = -a * d.labels()[t[0]] * d.labels()[t[1]];
        let obj = dual_objective(&d, &alpha, &p).unwrap();
        assert!(obj >= res.best_objective - 1e-12);
    }
}

#[test]
fn newton_never_beats_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    let mut certified = 0;
    for _ in 0..50 {
        let m = rng.random_range(4..=12);
        let s = rng.random_range(1..=3);
        let n = rng.random_range(1..=4);
        let d = random_instance(&mut rng, m, n);
        let p = Penalties::default();
        let mut cfg = SolverConfig::defaults(m, d.n(), s);
        cfg.eta = p.big_c;
        let fit = solve_fixed_s(&d, &cfg, DualIterate::zero_start(d.labels())).unwrap();
        let oracle = enumerate_global(&d, s, &p).unwrap();
        let obj = dual_objective(&d, &fit.alpha, &p).unwrap();
        assert!(obj >= oracle.best_objective - 1e-9);
        if check_eta_stationarity(&d, &fit.dual_iterate(), &cfg).unwrap().passed() {
            certified += 1;
            assert!(obj - oracle.best_objective <= 1e-7, "gap {:e}", obj - oracle.best_objective);
        }
    }
    assert!(certified > 0);
}
