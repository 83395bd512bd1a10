//! Dense complex matrices, the Hadamard test and the `X = 1 - H F†` transform.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Default tolerance for analytically constructed matrices.
pub const DEFAULT_TOL: f64 = 1e-10;

/// `e^{2πi k / n}`.
pub fn root_of_unity(k: i64, n: usize) -> Complex64 {
    let k = k.rem_euclid(n as i64);
    Complex64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)
}

/// `F_ij = ω^{ij} / √n`.
pub fn fourier(n: usize) -> ComplexMatrix {
    let s = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, n, |i, j| root_of_unity((i * j % n) as i64, n) * s)
}

/// Cyclic shift `P_ij = δ_{i+1,j}`.
pub fn shift(n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |i, j| {
        if (i + 1) % n == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    max_abs(&(a - b))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HadamardReport {
    pub unitarity_residual: f64,
    pub modulus_residual: f64,
    pub tol: f64,
    pub passes: bool,
}

/// Max-norm unitarity and equal-modulus residuals.
pub fn is_hadamard(h: &ComplexMatrix, tol: f64) -> HadamardReport {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return HadamardReport {
            unitarity_residual: f64::INFINITY,
            modulus_residual: f64::INFINITY,
            tol,
            passes: false,
        };
    }
    let unitarity_residual = unitarity_residual(h);
    let sq = (n as f64).sqrt();
    let modulus_residual = h.iter().fold(0.0f64, |acc, z| acc.max((z.norm() * sq - 1.0).abs()));
    HadamardReport {
        unitarity_residual,
        modulus_residual,
        tol,
        passes: unitarity_residual <= tol && modulus_residual <= tol,
    }
}

/// `max |(U U† - 1)_ij|`.
pub fn unitarity_residual(u: &ComplexMatrix) -> f64 {
    let n = u.nrows();
    max_abs(&(u * u.adjoint() - ComplexMatrix::identity(n, n)))
}

/// `max_{n ∈ [1,N), i} |(M Pⁿ M†)_ii|`.
pub fn diag_conditions(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for shift in 1..n {
        for i in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                acc += m[(i, k)] * m[(i, (k + shift) % n)].conj();
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

/// `X = 1 - H F†`.
pub fn x_of_h(h: &ComplexMatrix) -> ComplexMatrix {
    let n = h.nrows();
    ComplexMatrix::identity(n, n) - h * fourier(n).adjoint()
}

/// `H = (1 - X) F`.
pub fn h_of_x(x: &ComplexMatrix) -> ComplexMatrix {
    let n = x.nrows();
    (ComplexMatrix::identity(n, n) - x) * fourier(n)
}

/// Makes the first row and column real positive.
///
/// Row `i` is divided by the phase of `H_i0`, then column `j` by the phase of the
/// row-fixed `H_0j`.
pub fn dephase(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = h.nrows();
    let mut out = h.clone();
    for i in 0..n {
        let z = out[(i, 0)];
        if z.norm() == 0.0 {
            return Err(Error::Domain(format!("zero entry at ({i}, 0)")));
        }
        let ph = z / z.norm();
        for j in 0..n {
            out[(i, j)] /= ph;
        }
    }
    for j in 0..n {
        let z = out[(0, j)];
        if z.norm() == 0.0 {
            return Err(Error::Domain(format!("zero entry at (0, {j})")));
        }
        let ph = z / z.norm();
        for i in 0..n {
            out[(i, j)] /= ph;
        }
    }
    Ok(out)
}

/// `X ↦ F Xᵀ F†`, the image of `H ↦ Hᵀ` on `X`.
pub fn transpose_x(x: &ComplexMatrix) -> ComplexMatrix {
    let f = fourier(x.nrows());
    &f * x.transpose() * f.adjoint()
}

/// Haar-distributed unitary via QR of a complex Ginibre matrix.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im)
    });
    let qr = g.qr();
    let (q, r) = (qr.q(), qr.r());
    let mut q = q;
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= ph;
        }
    }
    q
}

/// JSON matrix interchange: `{"n": N, "re": [[..]], "im": [[..]]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixFile {
    pub n: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixFile {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let n = m.nrows();
        MatrixFile {
            n,
            re: (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect(),
            im: (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect(),
        }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let n = self.n;
        let ok = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if n == 0 || !ok(&self.re) || !ok(&self.im) {
            return Err(Error::Domain(format!("matrix file is not {n}x{n}")));
        }
        Ok(ComplexMatrix::from_fn(n, n, |i, j| Complex64::new(self.re[i][j], self.im[i][j])))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn small_fourier() {
        assert_eq!(fourier(1)[(0, 0)], c(1.0, 0.0));
        let f2 = fourier(2);
        let s = 1.0 / 2f64.sqrt();
        let want = [[s, s], [s, -s]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((f2[(i, j)] - c(want[i][j], 0.0)).norm() < 1e-15);
            }
        }
        assert!(unitarity_residual(&fourier(12)) < 1e-12);
    }

    #[test]
    fn shift_properties() {
        let p2 = shift(2);
        assert_eq!(p2[(0, 1)], c(1.0, 0.0));
        assert_eq!(p2[(1, 0)], c(1.0, 0.0));
        assert_eq!(p2[(0, 0)], c(0.0, 0.0));
        let p7 = shift(7);
        let mut acc = ComplexMatrix::identity(7, 7);
        for _ in 0..7 {
            acc = &acc * &p7;
        }
        assert_eq!(acc, ComplexMatrix::identity(7, 7));
        let f = fourier(6);
        let d = f.adjoint() * shift(6) * &f;
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!(d[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn hadamard_checks() {
        assert!(is_hadamard(&fourier(5), DEFAULT_TOL).passes);
        let mut f = fourier(5);
        f[(0, 0)] *= 2.0;
        let r = is_hadamard(&f, DEFAULT_TOL);
        assert!(!r.passes && r.modulus_residual > 0.5);
    }

    #[test]
    fn diag_conditions_identity_and_random() {
        assert_eq!(diag_conditions(&ComplexMatrix::identity(6, 6)), 0.0);
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let u = haar_unitary(6, &mut rng);
        assert!(unitarity_residual(&u) < 1e-12);
        assert!(diag_conditions(&u) > 1e-3);
        assert!(!is_hadamard(&(&u * fourier(6)), 1e-8).passes);
    }

    #[test]
    fn transform_round_trip() {
        let n = 10;
        assert!(max_abs(&x_of_h(&fourier(n))) < 1e-14);
        assert!(max_abs_diff(&h_of_x(&ComplexMatrix::zeros(n, n)), &fourier(n)) < 1e-15);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let h = ComplexMatrix::from_fn(n, n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        assert!(max_abs_diff(&h_of_x(&x_of_h(&h)), &h) < 1e-13);
    }

    #[test]
    fn dephasing() {
        let f = fourier(6);
        assert!(max_abs_diff(&dephase(&f).unwrap(), &f) < 1e-14);
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let mut g = f.clone();
        for i in 0..6 {
            let a = Complex64::from_polar(1.0, rng.random::<f64>() * 6.0);
            let b = Complex64::from_polar(1.0, rng.random::<f64>() * 6.0);
            for k in 0..6 {
                g[(i, k)] *= a;
                g[(k, i)] *= b;
            }
        }
        assert!(max_abs_diff(&dephase(&g).unwrap(), &f) < 1e-13);
        let mut z = f.clone();
        z[(3, 0)] = c(0.0, 0.0);
        assert!(dephase(&z).is_err());
    }

    #[test]
    fn transposition_map() {
        assert_eq!(transpose_x(&ComplexMatrix::zeros(4, 4)), ComplexMatrix::zeros(4, 4));
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let x = ComplexMatrix::from_fn(8, 8, |_, _| c(rng.random(), rng.random()));
        assert!(max_abs_diff(&transpose_x(&transpose_x(&x)), &x) < 1e-13);
        let h = h_of_x(&x);
        assert!(max_abs_diff(&h_of_x(&transpose_x(&x_of_h(&h))), &h.transpose()) < 1e-12);
        let row: Vec<Complex64> = (0..6).map(|_| c(rng.random(), rng.random())).collect();
        let circ = ComplexMatrix::from_fn(6, 6, |i, j| row[(j + 6 - i) % 6]);
        let d = transpose_x(&circ);
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!(d[(i, j)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn matrix_file_round_trip() {
        let f = fourier(3);
        let mf = MatrixFile::from_matrix(&f);
        let txt = serde_json::to_string(&mf).unwrap();
        let back: MatrixFile = serde_json::from_str(&txt).unwrap();
        assert_eq!(back.to_matrix().unwrap(), f);
        let bad = MatrixFile { n: 2, re: vec![vec![1.0]], im: vec![vec![0.0]] };
        assert!(bad.to_matrix().is_err());
    }
}
