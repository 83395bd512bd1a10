//! Order-by-order solution of `diag([Pⁿ, X^(s)] + B^(s,n)) = 0`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scalar::Scalar;
use crate::error::{Error, Result};
use crate::genpert::{checked_svd, pseudo_inverse};
use crate::hcore::ComplexMatrix;
use crate::numtheory::{canonical_key, diag_gcd, param_keys, particular_steps, ParamKey};

/// First-order (or order-s homogeneous) parameter values. Missing keys read as zero.
pub type Assignment = BTreeMap<ParamKey, Complex64>;

/// Relative residual above which an order counts as broken.
pub const BREAKDOWN_THRESHOLD: f64 = 1e-6;

/// Dense row-major square matrix over an engine scalar.
#[derive(Clone, Debug)]
pub struct Mat<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(n: usize, ctx: S::Ctx) -> Self {
        Mat { n, data: vec![S::zero(ctx); n * n] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.data[i * self.n + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut S {
        &mut self.data[i * self.n + j]
    }

    pub fn from_complex(m: &ComplexMatrix, ctx: S::Ctx) -> Self {
        let n = m.nrows();
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(S::from_c64(m[(i, j)], ctx));
            }
        }
        Mat { n, data }
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.n, self.n, |i, j| self.at(i, j).to_c64())
    }

    /// `[Pⁿ, self] + extra`, with `[Pⁿ, X]_ij = X_{i+n,j} - X_{i,j-n}`.
    fn commutator_plus(&self, shift: usize, extra: &Mat<S>, ctx: S::Ctx) -> Mat<S> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let c = self.at((i + shift) % n, j).sub(self.at(i, (j + n - shift) % n), ctx);
                out.push(c.add(extra.at(i, j), ctx));
            }
        }
        Mat { n, data: out }
    }

    /// `self += a · b`.
    fn add_product(&mut self, a: &Mat<S>, b: &Mat<S>, ctx: S::Ctx) {
        S::gemm_acc(&mut self.data, &a.data, &b.data, self.n, ctx);
    }
}

fn validate_assignment(n: usize, a: &Assignment) -> Result<()> {
    for k in a.keys() {
        if k.diag >= n || k.row_class >= diag_gcd(k.diag, n) {
            return Err(Error::Domain(format!("{k} is not a parameter key for N = {n}")));
        }
    }
    Ok(())
}

fn homogeneous_mat<S: Scalar>(n: usize, a: &Assignment, ctx: S::Ctx) -> Mat<S> {
    let mut m = Mat::zeros(n, ctx);
    for i in 0..n {
        for j in 0..n {
            if let Some(z) = a.get(&canonical_key(i, j, n)) {
                *m.at_mut(i, j) = S::from_c64(*z, ctx);
            }
        }
    }
    m
}

/// `X_ij = a[canonical_key(i, j)]`.
pub fn homogeneous_x(n: usize, a: &Assignment) -> ComplexMatrix {
    homogeneous_mat::<Complex64>(n, a, ()).to_complex()
}

/// Reads an assignment off a matrix at the canonical positions `(c, c + diag)`,
/// together with the largest deviation from homogeneity.
pub fn extract_assignment(x: &ComplexMatrix) -> (Assignment, f64) {
    let n = x.nrows();
    let mut a = Assignment::new();
    for k in param_keys(n) {
        a.insert(k, x[(k.row_class, (k.row_class + k.diag) % n)]);
    }
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((x[(i, j)] - a[&canonical_key(i, j, n)]).norm());
        }
    }
    (a, dev)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualEntry {
    pub n: usize,
    pub i: usize,
    pub re: f64,
    pub im: f64,
}

impl ResidualEntry {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub order: usize,
    pub residuals: Vec<ResidualEntry>,
    pub max_abs: f64,
    /// `(max |x^(1)|)^s`.
    pub scale: f64,
    pub relative: f64,
    /// Largest single diagonal term entering a residual, relative to `scale`.
    pub term_magnitude: f64,
    pub threshold: f64,
    pub broken: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrectionInfo {
    /// Order whose residual was corrected.
    pub order: usize,
    /// Order `k` whose homogeneous part `h^(k)` was solved for.
    pub fixed_order: usize,
    pub unknowns: usize,
    pub equations: usize,
    pub rank: usize,
    pub residual_before: f64,
    pub residual_after: f64,
    pub success: bool,
}

/// Truncated series `X = Σ X^(s)` around the Fourier matrix.
#[derive(Clone, Debug)]
pub struct SeriesState<S: Scalar = Complex64> {
    n: usize,
    ctx: S::Ctx,
    assignment: Assignment,
    higher: BTreeMap<usize, Assignment>,
    x: Vec<Mat<S>>,
    /// `b[s-1][n-1] = B^(s,n)` for `n` in `1..N`.
    b: Vec<Vec<Mat<S>>>,
    scale: f64,
    threshold: f64,
    unitarity: bool,
    corrections: Vec<CorrectionInfo>,
}

impl<S: Scalar> SeriesState<S> {
    /// Order-1 state with `X^(1)` the homogeneous solution for `assignment`.
    pub fn new(n: usize, assignment: &Assignment, ctx: S::Ctx) -> Result<Self> {
        Self::build(n, assignment, ctx, false)
    }

    /// Like [`SeriesState::new`] but every order is made unitary; the free values
    /// supply imaginary parts on diagonals `0`, `N/2` and full values on `0 < n < N/2`.
    pub fn new_unitary(n: usize, assignment: &Assignment, ctx: S::Ctx) -> Result<Self> {
        Self::build(n, assignment, ctx, true)
    }

    fn build(n: usize, assignment: &Assignment, ctx: S::Ctx, unitarity: bool) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("dimension must be positive".into()));
        }
        validate_assignment(n, assignment)?;
        let mut st = SeriesState {
            n,
            ctx,
            assignment: assignment.clone(),
            higher: BTreeMap::new(),
            x: Vec::new(),
            b: vec![(1..n).map(|_| Mat::zeros(n, ctx)).collect()],
            scale: 0.0,
            threshold: BREAKDOWN_THRESHOLD,
            unitarity,
            corrections: Vec::new(),
        };
        let x1 = if unitarity {
            let a = st.unitary_values(1, &Mat::zeros(n, ctx), assignment)?;
            st.assignment = a;
            homogeneous_mat(n, &st.assignment, ctx)
        } else {
            homogeneous_mat(n, assignment, ctx)
        };
        st.scale = st.assignment.values().fold(0.0f64, |m, z| m.max(z.norm()));
        st.x.push(x1);
        Ok(st)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Highest computed order.
    pub fn order(&self) -> usize {
        self.x.len()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn unitarity(&self) -> bool {
        self.unitarity
    }

    /// Effective first-order parameters (after unitarity, if imposed).
    pub fn assignment(&self) -> &Assignment {
        &self.assignment
    }

    pub fn corrections(&self) -> &[CorrectionInfo] {
        &self.corrections
    }

    pub fn higher_homogeneous(&self, s: usize) -> Option<&Assignment> {
        self.higher.get(&s)
    }

    /// Sets `h^(s)` for an order not yet computed.
    pub fn set_higher_homogeneous(&mut self, s: usize, h: Assignment) -> Result<()> {
        if s <= self.order() {
            return Err(Error::State(format!("order {s} is already computed")));
        }
        validate_assignment(self.n, &h)?;
        self.higher.insert(s, h);
        Ok(())
    }

    /// `X^(s)` as a double-precision matrix.
    pub fn x(&self, s: usize) -> Option<ComplexMatrix> {
        s.checked_sub(1).and_then(|i| self.x.get(i)).map(Mat::to_complex)
    }

    /// `Σ_{r ≤ s} X^(r)` in double precision.
    pub fn x_sum(&self, s: usize) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.n, self.n);
        for m in self.x.iter().take(s) {
            acc += m.to_complex();
        }
        acc
    }

    fn ensure_b(&mut self, s: usize) -> Result<()> {
        if s == 0 {
            return Err(Error::Domain("orders start at 1".into()));
        }
        if s <= self.b.len() {
            return Ok(());
        }
        if s > self.x.len() + 1 || self.b.len() + 1 < s {
            return Err(Error::State(format!(
                "B at order {s} needs X up to order {} (have {})",
                s - 1,
                self.x.len()
            )));
        }
        let n = self.n;
        let ctx = self.ctx;
        let x = &self.x;
        let b = &self.b;
        let one = |shift: usize| -> Mat<S> {
            let mut acc = Mat::zeros(n, ctx);
            for r in 1..s {
                let c = x[r - 1].commutator_plus(shift, &b[r - 1][shift - 1], ctx);
                acc.add_product(&c, &x[s - r - 1], ctx);
            }
            acc
        };
        let work = n * n * n * s;
        let row: Vec<Mat<S>> = if work > 20_000 {
            (1..n).into_par_iter().map(one).collect()
        } else {
            (1..n).map(one).collect()
        };
        self.b.push(row);
        Ok(())
    }

    /// `B^(s,n)`; needs `X^(1..s-1)`.
    pub fn compute_b(&mut self, s: usize, shift: usize) -> Result<ComplexMatrix> {
        if shift % self.n == 0 {
            return Ok(ComplexMatrix::zeros(self.n, self.n));
        }
        self.ensure_b(s)?;
        Ok(self.b[s - 1][shift % self.n - 1].to_complex())
    }

    fn residual_entries(&self, s: usize) -> (Vec<ResidualEntry>, f64) {
        let n = self.n;
        let mut out = Vec::new();
        let mut term = 0.0f64;
        for shift in 1..n {
            let g = diag_gcd(shift, n);
            let bm = &self.b[s - 1][shift - 1];
            for i in 0..g {
                let mut acc = S::zero(self.ctx);
                for q in 0..n / g {
                    let d = bm.at(i + q * g, i + q * g);
                    term = term.max(d.norm());
                    acc = acc.add(d, self.ctx);
                }
                let z = acc.to_c64();
                out.push(ResidualEntry { n: shift, i, re: z.re, im: z.im });
            }
        }
        (out, term)
    }

    fn report(&self, s: usize) -> ConsistencyReport {
        let (residuals, term) = self.residual_entries(s);
        let max_abs = residuals.iter().fold(0.0f64, |m, r| m.max(r.value().norm()));
        let scale = self.scale.powi(s as i32);
        let rel = |v: f64| {
            if scale > 0.0 {
                v / scale
            } else if v == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        let relative = rel(max_abs);
        ConsistencyReport {
            order: s,
            residuals,
            max_abs,
            scale,
            relative,
            term_magnitude: rel(term),
            threshold: self.threshold,
            broken: relative > self.threshold,
        }
    }

    /// Consistency residuals `Σ_q B^(s,n)_{i+qg, i+qg}` for every string.
    pub fn consistency_residuals(&mut self, s: usize) -> Result<ConsistencyReport> {
        self.ensure_b(s)?;
        Ok(self.report(s))
    }

    /// Heterogeneous part of `X^(s)` plus the homogeneous values `h`.
    fn particular_mat(&self, s: usize, h: Option<&Assignment>) -> Mat<S> {
        let n = self.n;
        let ctx = self.ctx;
        let mut m = match h {
            Some(h) => homogeneous_mat(n, h, ctx),
            None => Mat::zeros(n, ctx),
        };
        if s == 1 {
            return m;
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let steps = particular_steps(i, j, n).expect("valid off-diagonal position");
                if steps == 0 {
                    continue;
                }
                let d = (i + n - j) % n;
                let bm = &self.b[s - 1][d - 1];
                let mut acc = m.at(i, j).clone();
                for q in 0..steps {
                    let p = (i + q * d) % n;
                    acc = acc.add(bm.at(p, p), ctx);
                }
                *m.at_mut(i, j) = acc;
            }
        }
        m
    }

    /// `X^(s)` from the particular solution and `h^(s)`; refuses a broken order.
    pub fn particular_x(&mut self, s: usize) -> Result<ComplexMatrix> {
        let rep = self.consistency_residuals(s)?;
        if s > 1 && rep.broken {
            return Err(Error::Inconsistent(Box::new(rep)));
        }
        Ok(self.particular_mat(s, self.higher.get(&s)).to_complex())
    }

    /// Largest `|diag([Pⁿ, X] + B^(s,n))|` over all `n`, `i`.
    fn higher_violation(&self, s: usize, xm: &Mat<S>) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        for shift in 1..n {
            let bm = &self.b[s - 1][shift - 1];
            for i in 0..n {
                let v = xm
                    .at((i + shift) % n, i)
                    .sub(xm.at(i, (i + n - shift) % n), self.ctx)
                    .add(bm.at(i, i), self.ctx);
                worst = worst.max(v.norm());
            }
        }
        worst
    }

    /// Unitarity-constrained parameter values for order `s` given the
    /// heterogeneous part `hpart`; `free` supplies the unconstrained data.
    fn unitary_values(&self, s: usize, hpart: &Mat<S>, free: &Assignment) -> Result<Assignment> {
        let n = self.n;
        let ctx = self.ctx;
        let mut f = Mat::<S>::zeros(n, ctx);
        for r in 1..s {
            let a = &self.x[s - r - 1];
            let b = &self.x[r - 1];
            for i in 0..n {
                for j in 0..n {
                    let mut acc = f.at(i, j).clone();
                    for k in 0..n {
                        acc.mul_acc(a.at(i, k), &b.at(j, k).conj(), ctx);
                    }
                    *f.at_mut(i, j) = acc;
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = f.at(i, j).sub(hpart.at(i, j), ctx).sub(&hpart.at(j, i).conj(), ctx);
                *f.at_mut(i, j) = v;
            }
        }
        let mut fmax = 0.0f64;
        let mut viol = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                fmax = fmax.max(f.at(i, j).norm());
            }
        }
        for shift in 1..n {
            for i in 0..n {
                let v = f.at((i + shift) % n, i).sub(f.at(i, (i + n - shift) % n), ctx);
                viol = viol.max(v.norm());
            }
        }
        let tol = 1e-9 * (fmax + self.scale.powi(s as i32)).max(f64::MIN_POSITIVE);
        if viol > tol {
            return Err(Error::Numerical(format!(
                "unitarity data at order {s} is not string-constant (deviation {viol:.3e})"
            )));
        }
        let get = |k: ParamKey| free.get(&k).copied().unwrap_or_default();
        let mut out = Assignment::new();
        for k in param_keys(n) {
            let c = k.row_class;
            let d = k.diag;
            let val = if d == 0 || 2 * d == n {
                let fv = f.at(c, (c + d) % n).to_c64();
                Complex64::new(fv.re / 2.0, get(k).im)
            } else if 2 * d < n {
                get(k)
            } else {
                let partner = ParamKey::new(n - d, c);
                let fv = f.at(c, (c + d) % n).to_c64();
                fv - get(partner).conj()
            };
            out.insert(k, val);
        }
        Ok(out)
    }

    /// The constrained order-`s` parameters that make `X^(s)` unitary at that order.
    pub fn unitary_assignment(&mut self, s: usize) -> Result<Assignment> {
        if s != self.order() + 1 {
            return Err(Error::State(format!("next order is {}, not {s}", self.order() + 1)));
        }
        self.ensure_b(s)?;
        let hpart = self.particular_mat(s, None);
        let free = self.higher.get(&s).cloned().unwrap_or_default();
        self.unitary_values(s, &hpart, &free)
    }

    /// Appends `X^(s)` whether or not order `s` is consistent.
    fn push_order(&mut self, s: usize) -> Result<()> {
        debug_assert_eq!(s, self.order() + 1);
        self.ensure_b(s)?;
        let xm = if self.unitarity {
            let hpart = self.particular_mat(s, None);
            let free = self.higher.get(&s).cloned().unwrap_or_default();
            let vals = self.unitary_values(s, &hpart, &free)?;
            let mut m = homogeneous_mat::<S>(self.n, &vals, self.ctx);
            for (o, p) in m.data.iter_mut().zip(&hpart.data) {
                *o = o.add(p, self.ctx);
            }
            self.higher.insert(s, vals);
            m
        } else {
            self.particular_mat(s, self.higher.get(&s))
        };
        self.x.push(xm);
        Ok(())
    }

    /// Computes order `order()+1`. A consistent order is appended; a broken one is
    /// reported and left out.
    pub fn advance(&mut self) -> Result<ConsistencyReport> {
        let s = self.order() + 1;
        let rep = self.consistency_residuals(s)?;
        if !rep.broken {
            let xm_check = {
                self.push_order(s)?;
                self.x.last().expect("just pushed").clone()
            };
            let viol = self.higher_violation(s, &xm_check);
            if viol > 1e-10 * rep.scale.max(f64::MIN_POSITIVE) + 2.0 * rep.max_abs {
                return Err(Error::Numerical(format!(
                    "order {s} particular solution misses its equation by {viol:.3e}"
                )));
            }
        }
        Ok(rep)
    }

    /// Appends `X^(s)` even when order `s` is broken.
    pub fn force_advance(&mut self) -> Result<ConsistencyReport> {
        let s = self.order() + 1;
        let rep = self.consistency_residuals(s)?;
        self.push_order(s)?;
        Ok(rep)
    }

    fn residual_vec(&self, s: usize) -> Vec<Complex64> {
        self.residual_entries(s).0.iter().map(ResidualEntry::value).collect()
    }

    /// State recomputed from order `k` with `h^(k) = hk`, through `B^(s)`.
    fn rebuilt(&self, k: usize, hk: &Assignment, s: usize) -> Result<Self> {
        let mut st = self.clone();
        st.x.truncate(k - 1);
        st.b.truncate(k);
        st.higher.insert(k, hk.clone());
        for _ in k..s {
            st.push_order(st.order() + 1)?;
        }
        st.ensure_b(s)?;
        Ok(st)
    }

    fn rel_max(&self, r: &[Complex64], s: usize) -> f64 {
        let m = r.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        m / self.scale.powi(s as i32)
    }

    /// Repairs a broken order `s = order()+1` by solving the linear system
    /// `U h^(k) = -r` for the highest unfixed `k < s` that enters the residual.
    ///
    /// Returns `None` if no such `k` exists. On success the state is replaced by
    /// the recomputed one (order `s` not yet appended).
    pub fn correct(&mut self) -> Result<Option<CorrectionInfo>> {
        let s = self.order() + 1;
        self.ensure_b(s)?;
        if self.unitarity || self.scale == 0.0 || s < 3 {
            return Ok(None);
        }
        let r0 = self.residual_vec(s);
        let before = self.rel_max(&r0, s);
        let keys = param_keys(self.n);
        let used: Vec<usize> = self.corrections.iter().map(|c| c.fixed_order).collect();
        for k in (2..s).rev() {
            if used.contains(&k) {
                continue;
            }
            let base = self.higher.get(&k).cloned().unwrap_or_default();
            let step = self.scale.powi(k as i32);
            let response = |dir: &dyn Fn(usize) -> Complex64| -> Result<Vec<Complex64>> {
                let mut plus = base.clone();
                let mut minus = base.clone();
                for (c, key) in keys.iter().enumerate() {
                    let v = dir(c) * step;
                    if v.norm() == 0.0 {
                        continue;
                    }
                    *plus.entry(*key).or_default() += v;
                    *minus.entry(*key).or_default() -= v;
                }
                let rp = self.rebuilt(k, &plus, s)?.residual_vec(s);
                let rm = self.rebuilt(k, &minus, s)?.residual_vec(s);
                Ok(rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * step)).collect())
            };
            let probe = response(&|c| Complex64::from_polar(1.0, 2.399963229728653 * c as f64))?;
            if self.rel_max(&probe, s) * step <= self.threshold {
                continue;
            }
            let cols: Vec<Vec<Complex64>> = (0..keys.len())
                .into_par_iter()
                .map(|c| response(&|cc| if cc == c { Complex64::new(1.0, 0.0) } else { Complex64::default() }))
                .collect::<Result<_>>()?;
            let m = r0.len();
            let u = DMatrix::from_fn(m, keys.len(), |i, j| cols[j][i]);
            let sv = checked_svd(&u).singular_values;
            let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
            let rank = sv.iter().filter(|&&x| x > 1e-8 * smax).count();
            let pinv = pseudo_inverse(&u, 1e-10);
            let mut h = base.clone();
            let mut best: Option<(f64, Self)> = None;
            let mut r = r0.clone();
            for _ in 0..4 {
                let rv = nalgebra::DVector::from_vec(r.clone());
                let dh = &pinv * rv;
                for (c, key) in keys.iter().enumerate() {
                    *h.entry(*key).or_default() -= dh[c];
                }
                let st = self.rebuilt(k, &h, s)?;
                r = st.residual_vec(s);
                let rel = st.rel_max(&r, s);
                let improved = best.as_ref().is_none_or(|(b, _)| rel < 0.5 * *b);
                if !improved {
                    break;
                }
                best = Some((rel, st));
                if rel < 1e-14 {
                    break;
                }
            }
            let (after, st) = best.expect("at least one iterate");
            let info = CorrectionInfo {
                order: s,
                fixed_order: k,
                unknowns: keys.len(),
                equations: m,
                rank,
                residual_before: before,
                residual_after: after,
                success: after <= self.threshold,
            };
            if info.success {
                *self = st;
            }
            self.corrections.push(info.clone());
            return Ok(Some(info));
        }
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::pattern::random_assignment;
    use crate::hcore::{max_abs, shift};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    /// `[Pⁿ, X]` by dense matrix products.
    fn dense_comm(x: &ComplexMatrix, k: usize) -> ComplexMatrix {
        let n = x.nrows();
        let mut p = ComplexMatrix::identity(n, n);
        for _ in 0..k {
            p = &p * shift(n);
        }
        &p * x - x * &p
    }

    #[test]
    fn homogeneous_n6_symbols() {
        let mut a = Assignment::new();
        for (idx, k) in param_keys(6).into_iter().enumerate() {
            a.insert(k, Complex64::new(idx as f64 + 1.0, 0.0));
        }
        let x = homogeneous_x(6, &a);
        let distinct: std::collections::BTreeSet<i64> = x.iter().map(|z| z.re as i64).collect();
        assert_eq!(distinct.len(), 6 + 1 + 2 + 3 + 2 + 1);
        assert_eq!(x[(5, 3)], a[&ParamKey::new(4, 1)]);
        assert_eq!(x[(1, 2)], a[&ParamKey::new(1, 0)]);
        assert_eq!(homogeneous_x(6, &Assignment::new()), ComplexMatrix::zeros(6, 6));
        for k in 1..6 {
            let d = dense_comm(&x, k);
            assert!((0..6).all(|i| d[(i, i)].norm() == 0.0));
        }
    }

    #[test]
    fn prime_dimension_is_circulant() {
        let a = random_assignment(5, &mut rng(2));
        let x = homogeneous_x(5, &a);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert_eq!(x[(i, j)], x[((i + 1) % 5, (j + 1) % 5)]);
                }
            }
        }
    }

    #[test]
    fn b_recursion_order_two() {
        let a = random_assignment(8, &mut rng(4));
        let mut st = SeriesState::<Complex64>::new(8, &a, ()).unwrap();
        let x1 = st.x(1).unwrap();
        assert_eq!(st.compute_b(1, 3).unwrap(), ComplexMatrix::zeros(8, 8));
        for k in 1..8 {
            let want = dense_comm(&x1, k) * &x1;
            assert!(max_abs(&(st.compute_b(2, k).unwrap() - want)) < 1e-13);
        }
        assert!(st.compute_b(4, 1).is_err());
    }

    #[test]
    fn b_is_homogeneous_in_scale() {
        let a = random_assignment(12, &mut rng(5));
        let a2: Assignment = a.iter().map(|(k, v)| (*k, v * 2.0)).collect();
        let mut s1 = SeriesState::<Complex64>::new(12, &a, ()).unwrap();
        let mut s2 = SeriesState::<Complex64>::new(12, &a2, ()).unwrap();
        for s in 2..=4 {
            let r1 = s1.consistency_residuals(s).unwrap();
            let r2 = s2.consistency_residuals(s).unwrap();
            for (x, y) in r1.residuals.iter().zip(&r2.residuals) {
                let want = x.value() * 2f64.powi(s as i32);
                assert!((y.value() - want).norm() <= 1e-11 * (1.0 + want.norm()));
            }
            s1.force_advance().unwrap();
            s2.force_advance().unwrap();
        }
    }

    #[test]
    fn particular_solution_solves_its_equation() {
        let a = random_assignment(10, &mut rng(6));
        let mut st = SeriesState::<Complex64>::new(10, &a, ()).unwrap();
        st.advance().unwrap();
        let rep = st.consistency_residuals(3).unwrap();
        assert!(!rep.broken);
        let x3 = st.particular_x(3).unwrap();
        for k in 1..10 {
            let c = dense_comm(&x3, k) + st.compute_b(3, k).unwrap();
            for i in 0..10 {
                assert!(c[(i, i)].norm() <= 1e-10 * rep.scale);
            }
        }
    }

    #[test]
    fn particular_solution_n6_entries() {
        let a = random_assignment(6, &mut rng(8));
        let mut st = SeriesState::<Complex64>::new(6, &a, ()).unwrap();
        let x2 = st.particular_x(2).unwrap();
        let b = |k: usize, i: usize| st.b[1][k - 1].at(i % 6, i % 6).to_c64();
        // (2,0): B^(2)_{2,2} + B^(2)_{4,4} on diagonal 2
        assert!((x2[(2, 0)] - (b(2, 2) + b(2, 4))).norm() < 1e-14);
        let want: Complex64 = (0..5).map(|q| b(1, 1 + q)).sum();
        assert!((x2[(1, 0)] - want).norm() < 1e-14);
        assert_eq!(x2[(0, 3)], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn n12_breaks_at_four() {
        let a = random_assignment(12, &mut rng(9));
        let mut st = SeriesState::<Complex64>::new(12, &a, ()).unwrap();
        assert!(!st.advance().unwrap().broken);
        assert!(!st.advance().unwrap().broken);
        let rep = st.advance().unwrap();
        assert!(rep.broken && rep.order == 4);
        assert_eq!(st.order(), 3);
        assert!(matches!(st.particular_x(4), Err(Error::Inconsistent(_))));
    }

    #[test]
    fn unitarity_first_order_structure() {
        let a = random_assignment(6, &mut rng(10));
        let st = SeriesState::<Complex64>::new_unitary(6, &a, ()).unwrap();
        let x = st.x(1).unwrap();
        assert!(max_abs(&(&x + x.adjoint())) < 1e-15);
        for (k, v) in st.assignment() {
            if k.diag == 0 || k.diag == 3 {
                assert_eq!(v.re, 0.0);
            }
        }
        let real_params: usize = param_keys(6)
            .iter()
            .map(|k| if k.diag == 0 || k.diag == 3 { 1 } else if k.diag < 3 { 2 } else { 0 })
            .sum();
        assert_eq!(real_params, param_keys(6).len());
    }

    #[test]
    fn unitarity_holds_order_by_order() {
        let a = random_assignment(6, &mut rng(12));
        let small: Assignment = a.iter().map(|(k, v)| (*k, v * 0.3)).collect();
        let mut st = SeriesState::<Complex64>::new_unitary(6, &small, ()).unwrap();
        for s in 2..=5 {
            st.force_advance().unwrap();
            let mut g = ComplexMatrix::zeros(6, 6);
            for r in 1..s {
                g += st.x(s - r).unwrap() * st.x(r).unwrap().adjoint();
            }
            let xs = st.x(s).unwrap();
            assert!(max_abs(&(&xs + xs.adjoint() - g)) < 1e-13, "order {s}");
        }
    }

    #[test]
    fn extraction_inverts_homogeneous() {
        let a = random_assignment(9, &mut rng(14));
        let (b, dev) = extract_assignment(&homogeneous_x(9, &a));
        assert_eq!(dev, 0.0);
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_foreign_keys() {
        let mut a = Assignment::new();
        a.insert(ParamKey::new(1, 1), Complex64::new(1.0, 0.0));
        assert!(SeriesState::<Complex64>::new(6, &a, ()).is_err());
    }
}
