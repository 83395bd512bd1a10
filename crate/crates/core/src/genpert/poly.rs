//! Graded polynomial systems `f_m(x) = A_{m;n} x_n + A_{m;n1n2} x_{n1} x_{n2} + …` with `f(0) = 0`.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::pinv::{pseudo_inverse, pseudo_inverse_exact};
use crate::error::{Error, Result};

/// Highest degree accepted in a [`PolySystem`].
pub const MAX_DEGREE: usize = 4;

/// Coefficient field: exact rationals or floating point.
pub trait Coeff:
    Clone
    + PartialEq
    + Debug
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    /// Moore–Penrose inverse of an `m × n` row-major matrix (result `n × m`).
    fn pinv(a: &[Vec<Self>], cols: usize) -> Vec<Vec<Self>>;
    fn magnitude(&self) -> f64;
}

fn dense_pinv<T>(a: &[Vec<T>], cols: usize) -> Vec<Vec<T>>
where
    T: nalgebra::ComplexField<RealField = f64> + Copy,
{
    let m = a.len();
    let d = DMatrix::from_fn(m, cols, |i, j| a[i][j]);
    let p = pseudo_inverse(&d, 1e-12);
    (0..cols).map(|i| (0..m).map(|j| p[(i, j)]).collect()).collect()
}

impl Coeff for f64 {
    fn pinv(a: &[Vec<f64>], cols: usize) -> Vec<Vec<f64>> {
        dense_pinv(a, cols)
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Coeff for Complex64 {
    fn pinv(a: &[Vec<Complex64>], cols: usize) -> Vec<Vec<Complex64>> {
        dense_pinv(a, cols)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl Coeff for BigRational {
    fn pinv(a: &[Vec<BigRational>], cols: usize) -> Vec<Vec<BigRational>> {
        pseudo_inverse_exact(&a.to_vec(), cols)
    }
    fn magnitude(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
}

/// Sorted multi-index of variables (a multiset).
pub type Monomial = Vec<usize>;

#[derive(Debug, Clone, PartialEq)]
pub struct PolySystem<T> {
    pub num_eqs: usize,
    pub num_vars: usize,
    pub max_degree: usize,
    /// Per equation: monomial → coefficient.
    pub terms: Vec<BTreeMap<Monomial, T>>,
}

impl<T: Coeff> PolySystem<T> {
    pub fn new(num_eqs: usize, num_vars: usize, max_degree: usize) -> Result<Self> {
        if max_degree == 0 || max_degree > MAX_DEGREE {
            return Err(Error::Domain(format!("degree must be in 1..={MAX_DEGREE}")));
        }
        Ok(PolySystem { num_eqs, num_vars, max_degree, terms: vec![BTreeMap::new(); num_eqs] })
    }

    /// Adds `c · Π x_vars` to equation `eq`; the variable order is irrelevant.
    pub fn add_term(&mut self, eq: usize, vars: &[usize], c: T) -> Result<()> {
        if vars.is_empty() {
            return Err(Error::Domain("constant terms are not allowed".into()));
        }
        if vars.len() > self.max_degree {
            return Err(Error::Domain(format!("degree {} exceeds {}", vars.len(), self.max_degree)));
        }
        if eq >= self.num_eqs || vars.iter().any(|&v| v >= self.num_vars) {
            return Err(Error::Domain("equation or variable index out of range".into()));
        }
        let mut key = vars.to_vec();
        key.sort_unstable();
        let slot = self.terms[eq].entry(key.clone()).or_insert_with(T::zero);
        *slot = slot.clone() + c;
        if self.terms[eq][&key].is_zero() {
            self.terms[eq].remove(&key);
        }
        Ok(())
    }

    pub fn coeff(&self, eq: usize, vars: &[usize]) -> T {
        let mut key = vars.to_vec();
        key.sort_unstable();
        self.terms[eq].get(&key).cloned().unwrap_or_else(T::zero)
    }

    /// Linear part `A_{m;n}`.
    pub fn linear(&self) -> Vec<Vec<T>> {
        (0..self.num_eqs).map(|m| (0..self.num_vars).map(|n| self.coeff(m, &[n])).collect()).collect()
    }

    pub fn eval(&self, x: &[T]) -> Vec<T> {
        self.terms
            .iter()
            .map(|eq| {
                eq.iter().fold(T::zero(), |acc, (mono, c)| {
                    acc + mono.iter().fold(c.clone(), |p, &v| p * x[v].clone())
                })
            })
            .collect()
    }

    /// Order-`s` part of the nonlinear terms for `x = Σ_r x^(r) tʳ`.
    pub fn nonlinear_order(&self, xs: &[Vec<T>], s: usize) -> Vec<T> {
        self.terms
            .iter()
            .map(|eq| {
                let mut acc = T::zero();
                for (mono, c) in eq.iter().filter(|(m, _)| m.len() >= 2) {
                    acc = acc + c.clone() * compositions(mono, xs, s);
                }
                acc
            })
            .collect()
    }
}

/// `Σ_{r_1+…+r_d = s, r_i ≥ 1} Π_i x^(r_i)_{mono_i}` with `x^(r)` absent treated as zero.
fn compositions<T: Coeff>(mono: &[usize], xs: &[Vec<T>], s: usize) -> T {
    match mono.split_first() {
        None => {
            if s == 0 {
                T::one()
            } else {
                T::zero()
            }
        }
        Some((&v, rest)) => {
            let mut acc = T::zero();
            for r in 1..=s.saturating_sub(rest.len()) {
                if let Some(xr) = xs.get(r - 1) {
                    if !xr[v].is_zero() {
                        acc = acc + xr[v].clone() * compositions(rest, xs, s - r);
                    }
                }
            }
            acc
        }
    }
}

/// Order-by-order data: `x^(s) = h^(s) + H^(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbOrders<T> {
    pub x: Vec<Vec<T>>,
    pub h: Vec<Vec<T>>,
    pub het: Vec<Vec<T>>,
    pub residual: Vec<Vec<T>>,
}

impl<T: Coeff> PerturbOrders<T> {
    /// Starts from a first-order solution `h^(1)` (which should lie in ker A).
    pub fn new(h1: Vec<T>) -> Self {
        let zero = vec![T::zero(); h1.len()];
        PerturbOrders { x: vec![h1.clone()], h: vec![h1], het: vec![zero], residual: vec![Vec::new()] }
    }

    pub fn order(&self) -> usize {
        self.x.len()
    }

    /// Appends order `s = order()+1` as `H^(s) + h`.
    pub fn push(&mut self, sol: &OrderSolution<T>, h: Vec<T>) {
        let x = sol.het.iter().zip(&h).map(|(a, b)| a.clone() + b.clone()).collect();
        self.x.push(x);
        self.h.push(h);
        self.het.push(sol.het.clone());
        self.residual.push(sol.residual.clone());
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderSolution<T> {
    pub source: Vec<T>,
    pub het: Vec<T>,
    pub residual: Vec<T>,
    pub solvable: bool,
}

fn mat_vec<T: Coeff>(a: &[Vec<T>], v: &[T]) -> Vec<T> {
    a.iter()
        .map(|row| row.iter().zip(v).fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone()))
        .collect()
}

/// Solves `A x^(s) = -B` in the least-squares sense: `H^(s) = -Â B`, residual `(1 - AÂ) B`.
pub fn solve_order<T: Coeff>(
    sys: &PolySystem<T>,
    orders: &PerturbOrders<T>,
    s: usize,
    tol: f64,
) -> Result<OrderSolution<T>> {
    if s < 2 || orders.order() + 1 < s {
        return Err(Error::State(format!("order {s} needs orders 1..{} (have {})", s - 1, orders.order())));
    }
    let b = sys.nonlinear_order(&orders.x[..s - 1], s);
    let a = sys.linear();
    let ahat = T::pinv(&a, sys.num_vars);
    let ab = mat_vec(&ahat, &b);
    let het: Vec<T> = ab.iter().map(|v| -v.clone()).collect();
    let proj = mat_vec(&a, &ab);
    let residual: Vec<T> = b.iter().zip(&proj).map(|(x, y)| x.clone() - y.clone()).collect();
    let solvable = residual.iter().all(|r| r.magnitude() <= tol);
    Ok(OrderSolution { source: b, het, residual, solvable })
}

/// `1 - ÂA`, the projector onto `ker A` used for the free part `Z`.
pub fn kernel_projector<T: Coeff>(sys: &PolySystem<T>) -> Vec<Vec<T>> {
    let a = sys.linear();
    let ahat = T::pinv(&a, sys.num_vars);
    let n = sys.num_vars;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let aa = (0..sys.num_eqs).fold(T::zero(), |acc, m| acc + ahat[i][m].clone() * a[m][j].clone());
                    if i == j {
                        T::one() - aa
                    } else {
                        -aa
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compositions_count() {
        let xs = vec![vec![1.0], vec![1.0], vec![1.0], vec![1.0]];
        // ordered compositions of 4 into 2 parts: 3
        assert_eq!(compositions(&[0, 0], &xs, 4), 3.0);
        assert_eq!(compositions(&[0, 0, 0], &xs, 4), 3.0);
        assert_eq!(compositions(&[0, 0, 0], &xs, 2), 0.0);
    }

    #[test]
    fn linear_only_system() {
        let mut sys = PolySystem::<f64>::new(1, 2, 2).unwrap();
        sys.add_term(0, &[0], 1.0).unwrap();
        let mut o = PerturbOrders::new(vec![0.0, 1.0]);
        for s in 2..5 {
            let sol = solve_order(&sys, &o, s, 1e-12).unwrap();
            assert!(sol.het.iter().all(|v| *v == 0.0) && sol.solvable);
            o.push(&sol, vec![0.0, 0.0]);
        }
    }

    #[test]
    fn rejects_bad_terms() {
        let mut sys = PolySystem::<f64>::new(1, 2, 3).unwrap();
        assert!(sys.add_term(0, &[], 1.0).is_err());
        assert!(sys.add_term(0, &[0, 0, 0, 0], 1.0).is_err());
        assert!(sys.add_term(0, &[2], 1.0).is_err());
        assert!(PolySystem::<f64>::new(1, 1, 5).is_err());
        sys.add_term(0, &[1, 0], 2.0).unwrap();
        assert_eq!(sys.coeff(0, &[0, 1]), 2.0);
        sys.add_term(0, &[0, 1], -2.0).unwrap();
        assert!(sys.terms[0].is_empty());
    }

    #[test]
    fn kernel_projector_row() {
        let mut sys = PolySystem::<f64>::new(1, 2, 1).unwrap();
        sys.add_term(0, &[0], 1.0).unwrap();
        let p = kernel_projector(&sys);
        assert_eq!(p, vec![vec![0.0, 0.0], vec![0.0, 1.0]]);
    }
}
