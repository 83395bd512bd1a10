use hadamard_perturb::expansion::{
    breakdown_scan, homogeneous_x, random_assignment, truncated_unitarity_residual, trial_rng, Assignment,
    ConstraintPattern, ScanConfig, SeriesState,
};
use hadamard_perturb::hcore::{fourier, shift, ComplexMatrix};
use hadamard_perturb::numtheory::param_keys;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn state(n: usize, a: &Assignment) -> SeriesState {
    SeriesState::new(n, a, ()).unwrap()
}

fn scaled(a: &Assignment, f: f64) -> Assignment {
    a.iter().map(|(k, v)| (*k, v * f)).collect()
}

/// `max |H_ij (H⁻¹)_ji - 1/N|` for `H = (1 - X) F`; zero iff `diag(H Dⁿ H⁻¹) = 0` for all `n ≠ 0`.
fn spectral_defect(x: &ComplexMatrix) -> f64 {
    let n = x.nrows();
    let h = (ComplexMatrix::identity(n, n) - x) * fourier(n);
    let hinv = h.clone().try_inverse().unwrap();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((h[(i, j)] * hinv[(j, i)] - Complex64::new(1.0 / n as f64, 0.0)).norm());
        }
    }
    worst
}

#[test]
fn order_two_residuals_vanish() {
    for n in 2..=30 {
        for t in 0..5 {
            let mut rng = trial_rng(n as u64, t);
            let a = random_assignment(n, &mut rng);
            let rep = state(n, &a).consistency_residuals(2).unwrap();
            assert!(rep.relative <= 1e-10, "N={n} trial {t}: {:.3e}", rep.relative);
        }
    }
}

#[test]
fn first_order_solution_space_dimension() {
    // Nullity of X ↦ (diag([Pⁿ, X]))_{n=1..N-1} over all N² entries.
    for n in 2..=12 {
        let p = shift(n);
        let rows = n * (n - 1);
        let mut a = DMatrix::<Complex64>::zeros(rows, n * n);
        for e in 0..n * n {
            let mut x = ComplexMatrix::zeros(n, n);
            x[(e / n, e % n)] = Complex64::new(1.0, 0.0);
            for s in 1..n {
                let ps = p.pow(s as u32);
                let c = &ps * &x - &x * &ps;
                for i in 0..n {
                    a[((s - 1) * n + i, e)] = c[(i, i)];
                }
            }
        }
        let sv = a.svd(false, false).singular_values;
        let rank = sv.iter().filter(|&&s| s > 1e-10 * sv[0]).count();
        assert_eq!(n * n - rank, param_keys(n).len(), "N={n}");
    }
}

#[test]
fn homogeneous_solution_solves_first_order() {
    for n in 2..=16 {
        let a = random_assignment(n, &mut trial_rng(7, n));
        let x = homogeneous_x(n, &a);
        let p = shift(n);
        for s in 1..n {
            let ps = p.pow(s as u32);
            let c = &ps * &x - &x * &ps;
            assert!((0..n).all(|i| c[(i, i)].norm() < 1e-12), "N={n} shift {s}");
        }
    }
}

#[test]
fn prime_first_order_is_trivial() {
    // −(XF)_ij / F_ij must split as α_i + β_j, i.e. be removable by dephasing.
    for n in [2usize, 3, 5, 7, 11, 13] {
        let a = random_assignment(n, &mut trial_rng(3, n));
        let f = fourier(n);
        let d = -(homogeneous_x(n, &a) * &f);
        let g = ComplexMatrix::from_fn(n, n, |i, j| d[(i, j)] / f[(i, j)]);
        for i in 0..n {
            for j in 0..n {
                let r = g[(i, j)] - g[(i, 0)] - g[(0, j)] + g[(0, 0)];
                assert!(r.norm() < 1e-12, "N={n} ({i},{j})");
            }
        }
    }
    let n = 6;
    let a = random_assignment(n, &mut trial_rng(3, n));
    let f = fourier(n);
    let d = -(homogeneous_x(n, &a) * &f);
    let g = ComplexMatrix::from_fn(n, n, |i, j| d[(i, j)] / f[(i, j)]);
    let worst = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| (g[(i, j)] - g[(i, 0)] - g[(0, j)] + g[(0, 0)]).norm())
        .fold(0.0, f64::max);
    assert!(worst > 1e-3);
}

#[test]
fn residuals_scale_homogeneously() {
    let n = 12;
    let a = random_assignment(n, &mut trial_rng(21, 0));
    let mut s1 = state(n, &a);
    let mut s2 = state(n, &scaled(&a, 2.0));
    for s in 2..=4 {
        let r1 = s1.consistency_residuals(s).unwrap().max_abs;
        let r2 = s2.consistency_residuals(s).unwrap().max_abs;
        let expect = 2f64.powi(s as i32);
        if r1 > 1e-9 {
            assert!((r2 / r1 / expect - 1.0).abs() < 1e-8, "order {s}: {}", r2 / r1);
        } else {
            assert!(r2 <= 1e-9 * expect);
        }
        if s < 4 {
            s1.advance().unwrap();
            s2.advance().unwrap();
        }
    }
}

#[test]
fn truncated_series_solves_conditions_to_order() {
    let n = 6;
    let a = random_assignment(n, &mut trial_rng(4, 0));
    for order in [2usize, 3, 4] {
        let spread = |eps: f64| {
            let mut st = state(n, &scaled(&a, eps));
            while st.order() < order {
                assert!(!st.advance().unwrap().broken);
            }
            spectral_defect(&st.x_sum(order))
        };
        let ratio = spread(1e-2) / spread(5e-3);
        let expect = 2f64.powi(order as i32 + 1);
        assert!(ratio / expect > 1.0 / 1.5 && ratio / expect < 1.5, "order {order}: {ratio}");
    }
}

#[test]
fn unitary_truncation_scales() {
    let n = 6;
    let a = random_assignment(n, &mut trial_rng(9, 0));
    for order in [2usize, 3] {
        let r1 = truncated_unitarity_residual(n, &a, 1e-2, order).unwrap();
        let r2 = truncated_unitarity_residual(n, &a, 5e-3, order).unwrap();
        let expect = 2f64.powi(order as i32 + 1);
        assert!((r1 / r2 / expect - 1.0).abs() < 0.5, "order {order}: {}", r1 / r2);
    }
}

#[test]
fn scans_are_deterministic() {
    let mut cfg = ScanConfig::new(12, 5, 42);
    cfg.trials = 3;
    let p = ConstraintPattern::none(12);
    let a = serde_json::to_string(&breakdown_scan(&cfg, &p).unwrap()).unwrap();
    let b = serde_json::to_string(&breakdown_scan(&cfg, &p).unwrap()).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn order_two_vanishes_for_any_seed(n in 2usize..=20, seed in any::<u64>()) {
        let a = random_assignment(n, &mut trial_rng(seed, 0));
        let rep = state(n, &a).consistency_residuals(2).unwrap();
        prop_assert!(rep.relative <= 1e-10);
    }

    #[test]
    fn second_order_scales_quadratically(seed in any::<u64>(), lambda in 0.25f64..4.0) {
        let n = 8;
        let a = random_assignment(n, &mut trial_rng(seed, 1));
        let mut s1 = state(n, &a);
        let mut s2 = state(n, &scaled(&a, lambda));
        s1.advance().unwrap();
        s2.advance().unwrap();
        let x1 = s1.x(2).unwrap();
        let x2 = s2.x(2).unwrap();
        let d = (x2 - x1 * Complex64::new(lambda * lambda, 0.0)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(d < 1e-10 * lambda.max(1.0).powi(2));
    }
}
