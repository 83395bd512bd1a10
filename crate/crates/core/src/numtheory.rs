//! Exact integer arithmetic for the displaced-diagonal parametrization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a free first-order parameter `x_{row_class, diag}`.
///
/// Ordering is by `diag`, then `row_class`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParamKey {
    pub diag: usize,
    pub row_class: usize,
}

impl ParamKey {
    pub fn new(diag: usize, row_class: usize) -> Self {
        ParamKey { diag, row_class }
    }
}

impl std::fmt::Display for ParamKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "x[{},{}]", self.row_class, self.diag)
    }
}

fn gcd_raw(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Greatest common divisor with `gcd(0, n) = n`.
pub fn gcd(a: u64, b: u64) -> Result<u64> {
    if a == 0 && b == 0 {
        return Err(Error::Domain("gcd(0, 0) is undefined".into()));
    }
    Ok(gcd_raw(a, b))
}

/// Least common multiple.
pub fn lcm(a: u64, b: u64) -> Result<u64> {
    let g = gcd(a, b)?;
    (a / g)
        .checked_mul(b)
        .ok_or_else(|| Error::Domain(format!("lcm({a}, {b}) overflows u64")))
}

/// `gcd(d mod n, n)` for a diagonal offset, so the main diagonal gives `n`.
///
/// # Panics
/// Panics if `n == 0`.
pub fn diag_gcd(d: usize, n: usize) -> usize {
    assert!(n > 0, "dimension must be positive");
    gcd_raw((d % n) as u64, n as u64) as usize
}

/// Inverse of `a` modulo `m`, in `[0, m)`.
pub fn mod_inverse(a: i64, m: u64) -> Result<u64> {
    if m == 0 {
        return Err(Error::Domain("modulus must be positive".into()));
    }
    if m == 1 {
        return Ok(0);
    }
    let m_i = m as i128;
    let a = (a as i128).rem_euclid(m_i);
    let (mut r0, mut r1) = (m_i, a);
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 != 1 {
        return Err(Error::Domain(format!(
            "{a} has no inverse modulo {m} (gcd = {r0})"
        )));
    }
    Ok(t0.rem_euclid(m_i) as u64)
}

/// Number of accumulated diagonal terms in the particular solution at `(i, j)`.
///
/// With `d = (i - j) mod n` and `g = gcd(d, n)` this is the unique `m` in
/// `[0, n/g)` with `m·d ≡ (i mod g) - i (mod n)`.
pub fn particular_steps(i: usize, j: usize, n: usize) -> Result<usize> {
    if n == 0 || i >= n || j >= n {
        return Err(Error::Domain(format!("indices ({i}, {j}) out of range for N = {n}")));
    }
    if i == j {
        return Err(Error::Domain("particular_steps is undefined on the main diagonal".into()));
    }
    let d = (i + n - j) % n;
    let g = diag_gcd(d, n);
    let period = n / g;
    // (i mod g) - i is a non-positive multiple of g.
    let t = -(((i - i % g) / g) as i64);
    let inv = mod_inverse((d / g) as i64, period as u64)? as i64;
    Ok((t * inv).rem_euclid(period as i64) as usize)
}

/// Canonical parameter key of matrix position `(i, j)`.
pub fn canonical_key(i: usize, j: usize, n: usize) -> ParamKey {
    let diag = (j + n - i % n) % n;
    let g = diag_gcd(diag, n);
    ParamKey { diag, row_class: i % g }
}

/// All parameter keys of dimension `n`, sorted.
pub fn param_keys(n: usize) -> Vec<ParamKey> {
    (0..n)
        .flat_map(|d| (0..diag_gcd(d, n)).map(move |c| ParamKey::new(d, c)))
        .collect()
}

/// Prime factorization by trial division, ascending primes.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut k = 0;
            while n % p == 0 {
                n /= p;
                k += 1;
            }
            out.push((p, k));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == vec![(n, 1)]
}

/// If `n = p1 · p2²` with distinct primes, returns `(p1, p2)`.
pub fn split_p1_p2sq(n: u64) -> Option<(u64, u64)> {
    match factorize(n).as_slice() {
        [(a, 1), (b, 2)] => Some((*a, *b)),
        [(a, 2), (b, 1)] => Some((*b, *a)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gcd_examples() {
        assert_eq!(gcd(4, 12).unwrap(), 4);
        assert_eq!(gcd(0, 6).unwrap(), 6);
        assert_eq!(gcd(7, 10).unwrap(), 1);
        assert!(gcd(0, 0).is_err());
        assert_eq!(lcm(4, 6).unwrap(), 12);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(mod_inverse(1, 6).unwrap(), 1);
        assert_eq!(mod_inverse(3, 7).unwrap(), 5);
        assert!(mod_inverse(2, 4).is_err());
        assert_eq!(mod_inverse(-1, 7).unwrap(), 6);
    }

    #[test]
    fn inverse_exhaustive_oracle() {
        for m in 1..40u64 {
            for a in 0..m {
                let brute = (0..m).find(|b| (a * b) % m == 1 % m);
                match mod_inverse(a as i64, m) {
                    Ok(b) => {
                        assert!(b < m && (a * b) % m == 1 % m);
                        assert!(brute.is_some());
                    }
                    Err(_) => assert!(brute.is_none()),
                }
            }
        }
    }

    #[test]
    fn steps_examples() {
        assert_eq!(particular_steps(2, 0, 6).unwrap(), 2);
        assert_eq!(particular_steps(1, 0, 6).unwrap(), 5);
        assert_eq!(particular_steps(0, 3, 6).unwrap(), 0);
        assert!(particular_steps(3, 3, 6).is_err());
    }

    #[test]
    fn key_examples() {
        assert_eq!(canonical_key(5, 3, 6), ParamKey::new(4, 1));
        assert_eq!(canonical_key(1, 2, 6), ParamKey::new(1, 0));
        for i in 0..9 {
            assert_eq!(canonical_key(i, i, 9), ParamKey::new(0, i));
        }
    }

    #[test]
    fn factorization() {
        assert_eq!(factorize(12), vec![(2, 2), (3, 1)]);
        assert_eq!(factorize(97), vec![(97, 1)]);
        assert_eq!(factorize(1), vec![]);
        assert_eq!(split_p1_p2sq(12), Some((3, 2)));
        assert_eq!(split_p1_p2sq(18), Some((2, 3)));
        assert_eq!(split_p1_p2sq(20), Some((5, 2)));
        assert_eq!(split_p1_p2sq(8), None);
        assert!(is_prime(13) && !is_prime(1) && !is_prime(9));
    }
}
