use hadamard_perturb::families::{haagerup_family, prime_power_family, AffineFamily};
use hadamard_perturb::hcore::{
    dephase, diag_conditions, fourier, h_of_x, haar_unitary, is_hadamard, transpose_x, unitarity_residual, x_of_h,
    ComplexMatrix,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

const TOL: f64 = 1e-8;

fn family(n: usize) -> AffineFamily {
    match n {
        4 => prime_power_family(2, 2).unwrap(),
        6 => haagerup_family(),
        8 => prime_power_family(2, 3).unwrap(),
        _ => unreachable!(),
    }
}

fn random_phases(h: &ComplexMatrix, rng: &mut ChaCha20Rng, size: f64) -> ComplexMatrix {
    h.map(|z| z * Complex64::from_polar(1.0, size * (rng.random::<f64>() - 0.5)))
}

/// Half the draws are family members, half are phase-perturbed off the family.
fn sample(n: usize, k: usize, rng: &mut ChaCha20Rng) -> ComplexMatrix {
    let fam = family(n);
    let member = fam.member(&fam.random_params(rng)).unwrap();
    let left = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
        Complex64::from_polar(1.0, rng.random::<f64>() * 6.0)
    }));
    let h = left * member;
    if k % 2 == 0 {
        h
    } else {
        random_phases(&h, rng, 0.5)
    }
}

#[test]
fn hadamard_iff_unitary_with_zero_diagonals() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for n in [4, 6, 8] {
        let mut seen = [0usize; 2];
        for k in 0..50 {
            let h = sample(n, k, &mut rng);
            let m = &h * fourier(n).adjoint();
            let direct = is_hadamard(&h, TOL).passes;
            let via = unitarity_residual(&m) <= TOL && diag_conditions(&m) <= TOL;
            assert_eq!(direct, via, "N={n} draw {k}");
            seen[direct as usize] += 1;
        }
        assert!(seen[0] > 0 && seen[1] > 0, "N={n} both outcomes represented");
    }
}

#[test]
fn fourier_is_hadamard_and_x_vanishes() {
    for n in 1..=20 {
        assert!(is_hadamard(&fourier(n), 1e-12).passes);
        let x = x_of_h(&fourier(n));
        assert!(x.iter().all(|z| z.norm() < 1e-12));
    }
}

#[test]
fn haar_unitary_is_unitary_but_not_hadamard() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let u = haar_unitary(6, &mut rng);
    assert!(unitarity_residual(&u) < 1e-12);
    assert!(!is_hadamard(&u, 1e-8).passes);
}

#[test]
fn dephase_first_row_and_column_positive() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let h = sample(6, 0, &mut rng);
    let d = dephase(&h).unwrap();
    for k in 0..6 {
        assert!(d[(0, k)].im.abs() < 1e-12 && d[(0, k)].re > 0.0);
        assert!(d[(k, 0)].im.abs() < 1e-12 && d[(k, 0)].re > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn x_h_round_trip(seed in any::<u64>(), n in 2usize..10) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let h = haar_unitary(n, &mut rng);
        let back = h_of_x(&x_of_h(&h));
        prop_assert!((back - h).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn dephase_preserves_hadamard(seed in any::<u64>(), idx in 0usize..3, k in 0usize..2) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let n = [4, 6, 8][idx];
        let h = sample(n, k, &mut rng);
        prop_assert_eq!(is_hadamard(&h, TOL).passes, is_hadamard(&dephase(&h).unwrap(), TOL).passes);
    }

    #[test]
    fn transposition_preserves_hadamard(seed in any::<u64>(), idx in 0usize..3, k in 0usize..2) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let n = [4, 6, 8][idx];
        let h = sample(n, k, &mut rng);
        let x = x_of_h(&h);
        let t = h_of_x(&transpose_x(&x));
        prop_assert!((&t - h.transpose()).iter().all(|z| z.norm() < 1e-12));
        prop_assert_eq!(is_hadamard(&h_of_x(&x), TOL).passes, is_hadamard(&t, TOL).passes);
    }
}
