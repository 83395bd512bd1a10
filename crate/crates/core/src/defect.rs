//! Linear defect of the Fourier matrix, affine dimensions and the numeric defect.

use nalgebra::DMatrix;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::genpert::checked_svd;
use crate::hcore::{is_hadamard, ComplexMatrix};
use crate::numtheory::{diag_gcd, factorize, is_prime, split_p1_p2sq};

/// Default relative singular-value cutoff.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Straddling singular values closer than this ratio make the rank unreliable.
pub const GAP_RATIO_MIN: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearDefect {
    /// `Σ_n gcd(n, N)`: complex first-order parameters.
    pub total: u64,
    /// `total - (2N - 1)`.
    pub defect: i64,
}

pub fn linear_defect(n: usize) -> LinearDefect {
    assert!(n >= 1, "dimension must be positive");
    let total: u64 = (0..n).map(|d| diag_gcd(d, n) as u64).sum();
    LinearDefect { total, defect: total as i64 - (2 * n as i64 - 1) }
}

/// Product form `Π(1 + k - k/p)·N - 2N + 1`, in exact rationals.
pub fn linear_defect_product(n: usize) -> i64 {
    assert!(n >= 2, "dimension must be at least 2");
    let nn = n as i64;
    let prod = factorize(n as u64)
        .into_iter()
        .fold(Ratio::from_integer(1i64), |acc, (p, k)| {
            let k = k as i64;
            acc * (Ratio::from_integer(1 + k) - Ratio::new(k, p as i64))
        });
    let v = prod * Ratio::from_integer(nn) - Ratio::from_integer(2 * nn - 1);
    assert!(v.is_integer(), "product formula must be integral");
    v.to_integer()
}

/// `(Σk - 1)N - Σ k·N/p + 1`.
pub fn affine_max_dim(n: usize) -> i64 {
    assert!(n >= 2, "dimension must be at least 2");
    let nn = n as i64;
    let f = factorize(n as u64);
    let ksum: i64 = f.iter().map(|&(_, k)| k as i64).sum();
    let sub: i64 = f.iter().map(|&(p, k)| k as i64 * nn / p as i64).sum();
    (ksum - 1) * nn - sub + 1
}

/// `(d1 + dA) / 2` for `N = p1 · p2²`, checked against both closed forms.
pub fn conjectured_dim(p1: u64, p2: u64) -> Result<i64> {
    if p1 == p2 || !is_prime(p1) || !is_prime(p2) {
        return Err(Error::Domain(format!("({p1}, {p2}) are not two distinct primes")));
    }
    let n = (p1 * p2 * p2) as i64;
    let (p1, p2) = (p1 as i64, p2 as i64);
    let d1 = linear_defect(n as usize).defect;
    let da = affine_max_dim(n as usize);
    if (d1 + da) % 2 != 0 {
        return Err(Error::Numerical(format!("d1 + dA = {} is odd", d1 + da)));
    }
    let half = (d1 + da) / 2;
    let closed = 3 * n - 3 * p1 * p2 - 2 * p2 * p2 + p2 + 1;
    let via_d1 = d1 - (p1 - 1) * (p2 - 1) * p2;
    if half != closed || half != via_d1 {
        return Err(Error::Numerical(format!(
            "closed forms disagree: {half}, {closed}, {via_d1}"
        )));
    }
    Ok(half)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectSummary {
    pub n: usize,
    pub total: u64,
    pub d1: i64,
    pub d_a: i64,
    pub d_conj: Option<i64>,
}

pub fn summary(n: usize) -> DefectSummary {
    let ld = linear_defect(n);
    let d_conj = split_p1_p2sq(n as u64).and_then(|(p1, p2)| conjectured_dim(p1, p2).ok());
    DefectSummary { n, total: ld.total, d1: ld.defect, d_a: affine_max_dim(n), d_conj }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NumericDefect {
    pub defect: i64,
    pub nullity: usize,
    pub rank: usize,
    /// Ratio of the last kept to the first dropped singular value.
    pub gap_ratio: f64,
    pub reliable: bool,
}

/// Real rank by relative singular-value cutoff, with the straddling gap.
pub fn numeric_rank(a: &DMatrix<f64>, rank_tol: f64) -> (usize, f64) {
    if a.nrows() == 0 || a.ncols() == 0 {
        return (0, f64::INFINITY);
    }
    let mut sv: Vec<f64> = checked_svd(a).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    let smax = sv[0];
    if smax == 0.0 {
        return (0, f64::INFINITY);
    }
    let rank = sv.iter().filter(|&&s| s > rank_tol * smax).count();
    let gap = if rank == 0 || rank == sv.len() {
        f64::INFINITY
    } else if sv[rank] == 0.0 {
        f64::INFINITY
    } else {
        sv[rank - 1] / sv[rank]
    };
    (rank, gap)
}

/// Dimension of dephased first-order deformations `H ∘ EXP(iR)` of a Hadamard `H`.
pub fn numeric_defect(h: &ComplexMatrix, rank_tol: f64) -> Result<NumericDefect> {
    if !is_hadamard(h, 1e-8).passes {
        return Err(Error::Domain("numeric_defect requires a Hadamard matrix".into()));
    }
    let n = h.nrows();
    let rows = n * (n - 1);
    let mut a = DMatrix::<f64>::zeros(rows, n * n);
    let mut row = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in 0..n {
                let w = h[(i, k)] * h[(j, k)].conj();
                a[(row, i * n + k)] += w.re;
                a[(row, j * n + k)] -= w.re;
                a[(row + 1, i * n + k)] += w.im;
                a[(row + 1, j * n + k)] -= w.im;
            }
            row += 2;
        }
    }
    let (rank, gap_ratio) = numeric_rank(&a, rank_tol);
    let nullity = n * n - rank;
    Ok(NumericDefect {
        defect: nullity as i64 - (2 * n as i64 - 1),
        nullity,
        rank,
        gap_ratio,
        reliable: gap_ratio >= GAP_RATIO_MIN,
    })
}
