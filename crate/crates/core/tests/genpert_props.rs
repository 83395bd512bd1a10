use hadamard_perturb::genpert::{
    origin_closed_form, origin_series, pseudo_inverse, pseudo_inverse_exact, rat, rat_mul, shifted_series,
    solve_order, toy_series, PerturbOrders, PolySystem, RatMatrix, ToyBranch,
};
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

fn max_diff<T: nalgebra::ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    (a - b).iter().fold(0.0f64, |m, z| m.max(z.modulus()))
}

fn penrose<T: nalgebra::ComplexField<RealField = f64> + Copy>(a: &DMatrix<T>) -> f64 {
    let p = pseudo_inverse(a, 1e-12);
    let apa = a * &p * a;
    let pap = &p * a * &p;
    let ap = a * &p;
    let pa = &p * a;
    let scale = a.iter().fold(1.0f64, |m, z| m.max(z.modulus()));
    let pscale = p.iter().fold(1.0f64, |m, z| m.max(z.modulus()));
    [
        max_diff(&apa, a) / scale,
        max_diff(&pap, &p) / pscale,
        max_diff(&ap, &ap.adjoint()),
        max_diff(&pa, &pa.adjoint()),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// `m × n` matrix of rank at most `r` with entries in `[-1, 1)`.
fn low_rank(m: usize, n: usize, r: usize, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(m, r, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    let b = DMatrix::from_fn(r, n, |_, _| 2.0 * rng.random::<f64>() - 1.0);
    a * b
}

#[test]
fn penrose_identities_on_random_matrices() {
    let mut rng = ChaCha20Rng::seed_from_u64(99);
    for k in 0..100 {
        let m = rng.random_range(1..=20);
        let n = rng.random_range(1..=30);
        let r = rng.random_range(1..=m.min(n));
        let real = low_rank(m, n, r, &mut rng);
        let e = penrose(&real);
        assert!(e <= 1e-10, "real #{k} {m}x{n} rank {r}: {e:.3e}");
        let imag = low_rank(m, n, r, &mut rng);
        let c = DMatrix::from_fn(m, n, |i, j| Complex64::new(real[(i, j)], imag[(i, j)]));
        assert!(penrose(&c) <= 1e-10, "complex #{k} {m}x{n}");
    }
}

#[test]
fn exact_pseudo_inverse_identities() {
    let a: RatMatrix = vec![
        vec![rat(1, 1), rat(2, 1), rat(0, 1), rat(-1, 3)],
        vec![rat(2, 1), rat(4, 1), rat(0, 1), rat(-2, 3)],
        vec![rat(0, 1), rat(1, 2), rat(1, 1), rat(0, 1)],
    ];
    let p = pseudo_inverse_exact(&a, 4);
    assert_eq!(rat_mul(&rat_mul(&a, &p), &a), a);
    assert_eq!(rat_mul(&rat_mul(&p, &a), &p), p);
    let ap = rat_mul(&a, &p);
    let pa = rat_mul(&p, &a);
    for i in 0..3 {
        for j in 0..3 {
            assert_eq!(ap[i][j], ap[j][i]);
        }
    }
    for i in 0..4 {
        for j in 0..4 {
            assert_eq!(pa[i][j], pa[j][i]);
        }
    }
}

#[test]
fn toy_branches_exact() {
    let o = toy_series(ToyBranch::Origin).unwrap();
    assert_eq!(o.x, vec![rat(0, 1), rat(1, 1), rat(1, 1), rat(31, 12)]);
    assert_eq!(o.y, vec![rat(1, 1), rat(0, 1), rat(0, 1), rat(0, 1)]);
    let a = toy_series(ToyBranch::ShiftedI).unwrap();
    assert_eq!(a.y, vec![rat(1, 1), rat(0, 1), rat(-7, 24)]);
    let b = toy_series(ToyBranch::ShiftedII).unwrap();
    assert_eq!(b.y, vec![rat(-1, 1), rat(-1, 1), rat(-17, 24)]);
}

#[test]
fn origin_alternate_parametrization() {
    let s = origin_series(&[rat(1, 1), rat(-1, 2), rat(-2, 3), rat(0, 1)]).unwrap();
    assert_eq!(s.x, vec![rat(0, 1), rat(1, 1), rat(0, 1), rat(0, 1)]);
}

#[test]
fn branch_two_with_y_as_parameter() {
    // Inverting Y = -u - u² - 17u³/24 gives u = -Y - Y² - 31Y³/24.
    let s = shifted_series(&[rat(-1, 1), rat(-1, 1), rat(-31, 24)], -1).unwrap();
    assert_eq!(s.y, vec![rat(1, 1), rat(0, 1), rat(0, 1)]);
    let s = shifted_series(&[rat(-1, 1), rat(-1, 1), rat(-7, 24)], -1).unwrap();
    assert_eq!(s.y, vec![rat(1, 1), rat(0, 1), rat(-1, 1)]);
}

#[test]
fn origin_series_matches_closed_form() {
    let o = toy_series(ToyBranch::Origin).unwrap();
    let y = 0.01f64;
    let series: f64 = o.x.iter().enumerate().map(|(k, c)| c.to_f64().unwrap() * y.powi(k as i32 + 1)).sum();
    let diff = (series - origin_closed_form(y)).abs();
    assert!(diff <= 5.0 * y.powi(5), "{diff:.3e}");
    assert!(diff >= 3.0 * y.powi(5), "{diff:.3e}");
}

/// Random system with full-row-rank linear part: every order is solvable.
fn random_system(rng: &mut ChaCha20Rng, eqs: usize, vars: usize) -> PolySystem<f64> {
    let mut sys = PolySystem::new(eqs, vars, 3).unwrap();
    for e in 0..eqs {
        sys.add_term(e, &[e], 1.0).unwrap();
        for _ in 0..4 {
            let d = rng.random_range(1..=3);
            let mono: Vec<usize> = (0..d).map(|_| rng.random_range(0..vars)).collect();
            sys.add_term(e, &mono, 2.0 * rng.random::<f64>() - 1.0).unwrap();
        }
    }
    sys
}

fn kernel_vector(sys: &PolySystem<f64>, rng: &mut ChaCha20Rng) -> Vec<f64> {
    let a = sys.linear();
    let (m, n) = (sys.num_eqs, sys.num_vars);
    let am = DMatrix::from_fn(m, n, |i, j| a[i][j]);
    let z = nalgebra::DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
    let p = pseudo_inverse(&am, 1e-12);
    let k = &z - &p * (&am * &z);
    k.iter().copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn heterogeneous_part_scales_with_degree(seed in any::<u64>(), lambda in 0.2f64..3.0) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, 2, 4);
        let h1 = kernel_vector(&sys, &mut rng);
        let run = |h: Vec<f64>| {
            let mut o = PerturbOrders::new(h);
            let mut hets = Vec::new();
            for s in 2..=4 {
                let sol = solve_order(&sys, &o, s, 1e-9).unwrap();
                hets.push(sol.het.clone());
                o.push(&sol, vec![0.0; 4]);
            }
            hets
        };
        let base = run(h1.clone());
        let big = run(h1.iter().map(|v| v * lambda).collect());
        for (k, (b, g)) in base.iter().zip(&big).enumerate() {
            let f = lambda.powi(k as i32 + 2);
            for (x, y) in b.iter().zip(g) {
                prop_assert!((y - x * f).abs() <= 1e-9 * (1.0 + x.abs()) * f);
            }
        }
    }

    #[test]
    fn truncated_series_solves_to_order(seed in any::<u64>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let sys = random_system(&mut rng, 2, 4);
        let mut o = PerturbOrders::new(kernel_vector(&sys, &mut rng));
        for s in 2..=3 {
            let sol = solve_order(&sys, &o, s, 1e-9).unwrap();
            prop_assert!(sol.solvable);
            o.push(&sol, vec![0.0; 4]);
        }
        let resid = |t: f64| {
            let x: Vec<f64> = (0..4).map(|v| (0..3).map(|s| o.x[s][v] * t.powi(s as i32 + 1)).sum()).collect();
            sys.eval(&x).iter().fold(0.0f64, |m, r| m.max(r.abs()))
        };
        let (r1, r2) = (resid(1e-2), resid(5e-3));
        prop_assume!(r1 > 1e-13);
        prop_assert!(r1 / r2 > 16.0 / 1.5, "ratio {}", r1 / r2);
    }

    #[test]
    fn exact_and_float_pseudo_inverse_agree(entries in proptest::collection::vec(-5i64..5, 12)) {
        let a: RatMatrix = entries.chunks(4).map(|r| r.iter().map(|&v| rat(v, 1)).collect()).collect();
        let af = DMatrix::from_row_slice(3, 4, &entries.iter().map(|&v| v as f64).collect::<Vec<_>>());
        let p = pseudo_inverse_exact(&a, 4);
        let pf = pseudo_inverse(&af, 1e-12);
        for i in 0..4 {
            for j in 0..3 {
                let v: &BigRational = &p[i][j];
                prop_assert!((v.to_f64().unwrap() - pf[(i, j)]).abs() < 1e-10);
            }
        }
    }
}
