//! Affine families `H ∘ EXP(iR)`, the Diţă construction and its Fourier point,
//! prime-power families and the self-cognate family for `N = p₁p₂²`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::defect::numeric_rank;
use crate::error::{Error, Result};
use crate::hcore::{fourier, is_hadamard, root_of_unity, ComplexMatrix};
use crate::numtheory::is_prime;

/// Tolerance on inputs that must already be Hadamard.
pub const INPUT_TOL: f64 = 1e-8;
const RANK_TOL: f64 = 1e-9;

/// Real matrix with integer entries spanning one direction of `R`.
pub type Generator = DMatrix<f64>;

#[derive(Debug, Clone, PartialEq)]
pub struct AffineFamily {
    pub base: ComplexMatrix,
    pub basis: Vec<Generator>,
    pub dim: usize,
}

fn check_hadamard(h: &ComplexMatrix, what: &str) -> Result<()> {
    if !h.is_square() || h.nrows() == 0 {
        return Err(Error::Domain(format!("{what} is not a nonempty square matrix")));
    }
    let rep = is_hadamard(h, INPUT_TOL);
    if !rep.passes {
        return Err(Error::Domain(format!(
            "{what} is not Hadamard (unitarity {:.1e}, modulus {:.1e})",
            rep.unitarity_residual, rep.modulus_residual
        )));
    }
    Ok(())
}

/// `R ↦ R - R_{i0} - R_{0j} + R_{00}`, which zeroes the first row and column.
pub fn dephase_generator(r: &Generator) -> Generator {
    Generator::from_fn(r.nrows(), r.ncols(), |i, j| r[(i, j)] - r[(i, 0)] - r[(0, j)] + r[(0, 0)])
}

/// Rank of a list of generators viewed as vectors.
pub fn generator_rank(gens: &[Generator]) -> usize {
    if gens.is_empty() {
        return 0;
    }
    let len = gens[0].len();
    let m = DMatrix::from_fn(gens.len(), len, |r, c| gens[r][c]);
    numeric_rank(&m, RANK_TOL).0
}

impl AffineFamily {
    /// Requires a dephased Hadamard base and generators with zero first row and column.
    pub fn new(base: ComplexMatrix, basis: Vec<Generator>) -> Result<Self> {
        check_hadamard(&base, "base")?;
        let n = base.nrows();
        let one = Complex64::new(1.0, 0.0) / (n as f64).sqrt();
        if (0..n).any(|k| (base[(0, k)] - one).norm() > INPUT_TOL || (base[(k, 0)] - one).norm() > INPUT_TOL) {
            return Err(Error::Domain("base is not dephased".into()));
        }
        for (idx, g) in basis.iter().enumerate() {
            if g.shape() != (n, n) {
                return Err(Error::Domain(format!("generator {idx} has shape {:?}", g.shape())));
            }
            if (0..n).any(|k| g[(0, k)] != 0.0 || g[(k, 0)] != 0.0) {
                return Err(Error::Domain(format!("generator {idx} touches the first row or column")));
            }
        }
        let dim = basis.len();
        Ok(AffineFamily { base, basis, dim })
    }

    /// Dephases the generators and keeps a maximal independent subset, in order.
    pub fn from_generators(base: ComplexMatrix, gens: &[Generator]) -> Result<Self> {
        let mut kept: Vec<Generator> = Vec::new();
        for g in gens {
            let d = dephase_generator(g);
            kept.push(d);
            if generator_rank(&kept) < kept.len() {
                kept.pop();
            }
        }
        Self::new(base, kept)
    }

    pub fn size(&self) -> usize {
        self.base.nrows()
    }

    /// `R = Σ_k params_k · basis_k`.
    pub fn phase_matrix(&self, params: &[f64]) -> Result<Generator> {
        if params.len() != self.dim {
            return Err(Error::LengthMismatch { expected: self.dim, got: params.len() });
        }
        let n = self.size();
        let mut r = Generator::zeros(n, n);
        for (p, g) in params.iter().zip(&self.basis) {
            r += g * *p;
        }
        Ok(r)
    }

    /// `H_ij · exp(i R_ij)`.
    pub fn member(&self, params: &[f64]) -> Result<ComplexMatrix> {
        let r = self.phase_matrix(params)?;
        Ok(self.base.zip_map(&r, |h, x| h * Complex64::from_polar(1.0, x)))
    }

    /// Parameters uniform in `[0, 2π)`.
    pub fn random_params<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect()
    }

    /// Rank of the basis; equals `dim` for a proper parametrization.
    pub fn rank(&self) -> usize {
        generator_rank(&self.basis)
    }
}

fn indicator(n: usize, pred: impl Fn(usize, usize) -> bool) -> Generator {
    Generator::from_fn(n, n, |i, j| if pred(i, j) { 1.0 } else { 0.0 })
}

/// The two-parameter `N = 6` family through the Fourier matrix, parameters `(a, b)`.
pub fn haagerup_family() -> AffineFamily {
    let odd = |i: usize| i % 2 == 1;
    let a = indicator(6, |i, j| odd(i) && (j == 1 || j == 4));
    let b = indicator(6, |i, j| odd(i) && (j == 2 || j == 5));
    AffineFamily::new(fourier(6), vec![a, b]).expect("valid family")
}

/// Inputs of the block construction; `phases[k-1]` is the diagonal of `D^(k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DitaSpec {
    pub h0: ComplexMatrix,
    pub blocks: Vec<ComplexMatrix>,
    pub phases: Vec<Vec<Complex64>>,
}

impl DitaSpec {
    /// All `D^(k) = 1`.
    pub fn trivial(h0: ComplexMatrix, blocks: Vec<ComplexMatrix>) -> Self {
        let n1 = h0.nrows();
        let n2 = blocks.first().map_or(0, |b| b.nrows());
        DitaSpec { h0, blocks, phases: vec![vec![Complex64::new(1.0, 0.0); n2]; n1.saturating_sub(1)] }
    }

    pub fn outer(&self) -> usize {
        self.h0.nrows()
    }

    pub fn inner(&self) -> usize {
        self.blocks.first().map_or(0, |b| b.nrows())
    }

    fn validate(&self) -> Result<()> {
        check_hadamard(&self.h0, "H0")?;
        let (n1, n2) = (self.outer(), self.inner());
        if self.blocks.len() != n1 {
            return Err(Error::LengthMismatch { expected: n1, got: self.blocks.len() });
        }
        for (k, b) in self.blocks.iter().enumerate() {
            if b.nrows() != n2 {
                return Err(Error::Domain(format!("block {k} has size {}, expected {n2}", b.nrows())));
            }
            check_hadamard(b, &format!("block {k}"))?;
        }
        if self.phases.len() != n1 - 1 {
            return Err(Error::LengthMismatch { expected: n1 - 1, got: self.phases.len() });
        }
        for (k, d) in self.phases.iter().enumerate() {
            if d.len() != n2 {
                return Err(Error::LengthMismatch { expected: n2, got: d.len() });
            }
            if (d[0] - Complex64::new(1.0, 0.0)).norm() > INPUT_TOL {
                return Err(Error::Domain(format!("D^({}) must start with 1", k + 1)));
            }
            if d.iter().any(|z| (z.norm() - 1.0).abs() > INPUT_TOL) {
                return Err(Error::Domain(format!("D^({}) is not unimodular", k + 1)));
            }
        }
        Ok(())
    }
}

/// Block `(a, b)` equals `H0_{ab} · D^(b) H^(b+1)` with `D^(0) = 1`.
pub fn dita(spec: &DitaSpec) -> Result<ComplexMatrix> {
    spec.validate()?;
    let (n1, n2) = (spec.outer(), spec.inner());
    let one = Complex64::new(1.0, 0.0);
    Ok(ComplexMatrix::from_fn(n1 * n2, n1 * n2, |i, j| {
        let (a, m) = (i / n2, i % n2);
        let (b, n) = (j / n2, j % n2);
        let d = if b == 0 { one } else { spec.phases[b - 1][m] };
        spec.h0[(a, b)] * d * spec.blocks[b][(m, n)]
    }))
}

/// Checks that `perm` is a permutation of `0..n`.
pub fn validate_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: perm.len() });
    }
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::Domain("not a permutation".into()));
        }
        seen[p] = true;
    }
    Ok(())
}

/// Column `c` of `m` becomes column `perm[c]`.
pub fn permute_columns(m: &ComplexMatrix, perm: &[usize]) -> Result<ComplexMatrix> {
    validate_permutation(perm, m.ncols())?;
    let mut out = m.clone();
    for (c, &p) in perm.iter().enumerate() {
        out.set_column(p, &m.column(c));
    }
    Ok(out)
}

/// Fourier seeds with `x_m^(s) = ω^{ms}`, `ω = e^{2πi/(N1·N2)}`, and the column
/// permutation `sN2 + n ↦ nN1 + s` taking the Diţă matrix to `F_{N1·N2}`.
pub fn dita_fourier_point(n1: usize, n2: usize) -> Result<(DitaSpec, Vec<usize>)> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::Domain("both factors must be at least 2".into()));
    }
    let n = n1 * n2;
    let phases = (1..n1).map(|s| (0..n2).map(|m| root_of_unity((m * s) as i64, n)).collect()).collect();
    let spec = DitaSpec { h0: fourier(n1), blocks: vec![fourier(n2); n1], phases };
    let perm = (0..n).map(|c| (c % n2) * n1 + c / n2).collect();
    Ok((spec, perm))
}

/// Diţă matrix of affine families with every `D^(k)` entry beyond the first free.
///
/// Parameters are ordered: phases `D^(1) … D^(N1-1)` (entries `1..N2`), then
/// the parameters of `h0`, then those of each block in turn.
pub fn dita_affine(h0: &AffineFamily, blocks: &[AffineFamily]) -> Result<AffineFamily> {
    let n1 = h0.size();
    if blocks.len() != n1 {
        return Err(Error::LengthMismatch { expected: n1, got: blocks.len() });
    }
    let n2 = blocks[0].size();
    if blocks.iter().any(|b| b.size() != n2) {
        return Err(Error::Domain("blocks differ in size".into()));
    }
    let spec = DitaSpec::trivial(h0.base.clone(), blocks.iter().map(|b| b.base.clone()).collect());
    let base = dita(&spec)?;
    let n = n1 * n2;
    let mut basis = Vec::new();
    for k in 1..n1 {
        for m in 1..n2 {
            basis.push(indicator(n, |i, j| i % n2 == m && j / n2 == k));
        }
    }
    for g in &h0.basis {
        basis.push(Generator::from_fn(n, n, |i, j| g[(i / n2, j / n2)]));
    }
    for (b, fam) in blocks.iter().enumerate() {
        for g in &fam.basis {
            basis.push(Generator::from_fn(n, n, |i, j| if j / n2 == b { g[(i % n2, j % n2)] } else { 0.0 }));
        }
    }
    AffineFamily::new(base, basis)
}

/// The zero-dimensional family `{F_n}`.
pub fn fourier_point_family(n: usize) -> AffineFamily {
    AffineFamily::new(fourier(n), Vec::new()).expect("Fourier matrix is dephased Hadamard")
}

/// Iterated Diţă families built from Fourier seeds: each step enlarges the previous
/// family by a factor `q` using `H0 = F_q` and `q` independent copies as blocks.
pub fn dita_sequence(factors: &[usize]) -> Result<AffineFamily> {
    let (&first, rest) =
        factors.split_first().ok_or_else(|| Error::Domain("empty factor sequence".into()))?;
    let mut fam = fourier_point_family(first);
    for &q in rest {
        fam = dita_affine(&fourier_point_family(q), &vec![fam; q])?;
    }
    Ok(fam)
}

/// The non-self-cognate orderings `p₂ → p₂² → p₁p₂²` and `p₁ → p₂p₁ → p₂²p₁`.
pub fn dita_variant_factors(p1: usize, p2: usize) -> [[usize; 3]; 2] {
    [[p2, p2, p1], [p1, p2, p2]]
}

/// Dephased family of `F_{p^k}` with `R_ij = Σ_{n=1}^{k-1} φ_{n, i mod pⁿ, j mod p^{k-n}}`.
///
/// Parameters are ordered by `n`, then `i ∈ [p^{n-1}, pⁿ)`, then `j ∈ [1, p^{k-n})`.
pub fn prime_power_family(p: usize, k: u32) -> Result<AffineFamily> {
    if !is_prime(p as u64) {
        return Err(Error::Domain(format!("{p} is not prime")));
    }
    if k < 2 || p.checked_pow(k).is_none_or(|n| n > 64) {
        return Err(Error::Domain("need k ≥ 2 and p^k ≤ 64".into()));
    }
    let n = p.pow(k);
    let mut basis = Vec::new();
    for e in 1..k {
        let (rows, cols) = (p.pow(e), p.pow(k - e));
        for i in rows / p..rows {
            for j in 1..cols {
                basis.push(indicator(n, |a, b| a % rows == i && b % cols == j));
            }
        }
    }
    AffineFamily::new(fourier(n), basis)
}

/// `F ∘ EXP(iR)` parameter index of `φ_{1,i,k}` in the `N = p²` family.
pub fn prime_square_param(p: usize, i: usize, k: usize) -> Option<usize> {
    (i >= 1 && i < p && k >= 1 && k < p).then(|| (i - 1) * (p - 1) + (k - 1))
}

/// The self-cognate family for `N = p₁p₂²`:
/// `H_{p1p2·u + r·p2 + m, p1p2·n + s·p2 + v} = q₁^{rs} q₂^{mn+uv} x_m^{(s,v)} y_{r·p2+m}^{(v)} / √N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelfCognate {
    pub p1: usize,
    pub p2: usize,
}

/// Phases `x[(s·p2 + v)·p2 + m] = x_m^{(s,v)}` and `y[v·p1·p2 + t] = y_t^{(v)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCognateParams {
    pub x: Vec<Complex64>,
    pub y: Vec<Complex64>,
}

impl SelfCognate {
    pub fn new(p1: usize, p2: usize) -> Result<Self> {
        if !is_prime(p1 as u64) || !is_prime(p2 as u64) {
            return Err(Error::Domain(format!("{p1} and {p2} must be prime")));
        }
        if p1 == p2 {
            return Err(Error::Domain("p1 and p2 must differ".into()));
        }
        Ok(SelfCognate { p1, p2 })
    }

    pub fn size(&self) -> usize {
        self.p1 * self.p2 * self.p2
    }

    pub fn num_x(&self) -> usize {
        self.p1 * self.p2 * self.p2
    }

    pub fn num_y(&self) -> usize {
        self.p2 * self.p1 * self.p2
    }

    fn x_index(&self, s: usize, v: usize, m: usize) -> usize {
        (s * self.p2 + v) * self.p2 + m
    }

    fn y_index(&self, v: usize, t: usize) -> usize {
        v * self.p1 * self.p2 + t
    }

    pub fn trivial_params(&self) -> SelfCognateParams {
        let one = Complex64::new(1.0, 0.0);
        SelfCognateParams { x: vec![one; self.num_x()], y: vec![one; self.num_y()] }
    }

    /// Unimodular phases; with `dephased`, the entries fixed to 1 by dephasing stay 1.
    pub fn random_params<R: Rng + ?Sized>(&self, rng: &mut R, dephased: bool) -> SelfCognateParams {
        let mut out = self.trivial_params();
        let mut phase = || Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
        for s in 0..self.p1 {
            for v in 0..self.p2 {
                for m in 0..self.p2 {
                    if !dephased || (s > 0 && m > 0) {
                        out.x[self.x_index(s, v, m)] = phase();
                    }
                }
            }
        }
        for v in 0..self.p2 {
            for t in 0..self.p1 * self.p2 {
                if !dephased || (v > 0 && t > 0) {
                    out.y[self.y_index(v, t)] = phase();
                }
            }
        }
        out
    }

    /// Phases at which the member equals `F_N`.
    pub fn fourier_params(&self) -> SelfCognateParams {
        let mut out = self.trivial_params();
        let (n1, n) = (self.p1 * self.p2, self.size());
        for s in 0..self.p1 {
            for v in 0..self.p2 {
                for m in 0..self.p2 {
                    out.x[self.x_index(s, v, m)] = root_of_unity((m * s) as i64, n1);
                }
            }
        }
        for v in 0..self.p2 {
            for t in 0..n1 {
                out.y[self.y_index(v, t)] = root_of_unity((t * v) as i64, n);
            }
        }
        out
    }

    fn check(&self, params: &SelfCognateParams) -> Result<()> {
        if params.x.len() != self.num_x() {
            return Err(Error::LengthMismatch { expected: self.num_x(), got: params.x.len() });
        }
        if params.y.len() != self.num_y() {
            return Err(Error::LengthMismatch { expected: self.num_y(), got: params.y.len() });
        }
        Ok(())
    }

    /// Digits `(u, r, m)` of a row and `(n, s, v)` of a column.
    fn split(&self, i: usize, j: usize) -> ([usize; 3], [usize; 3]) {
        let (p1, p2) = (self.p1, self.p2);
        let b = p1 * p2;
        ([i / b, (i % b) / p2, i % p2], [j / b, (j % b) / p2, j % p2])
    }

    pub fn member(&self, params: &SelfCognateParams) -> Result<ComplexMatrix> {
        self.check(params)?;
        let n = self.size();
        let norm = 1.0 / (n as f64).sqrt();
        Ok(ComplexMatrix::from_fn(n, n, |i, j| {
            let ([u, r, m], [nn, s, v]) = self.split(i, j);
            let q1 = root_of_unity((r * s) as i64, self.p1);
            let q2 = root_of_unity((m * nn + u * v) as i64, self.p2);
            q1 * q2 * params.x[self.x_index(s, v, m)] * params.y[self.y_index(v, r * self.p2 + m)] * norm
        }))
    }

    /// `x̃_m^{(s,v)} = y_{s·p2+v}^{(m)}`, `ỹ_{r·p2+m}^{(v)} = x_v^{(r,m)}`.
    pub fn transpose_partner(&self, params: &SelfCognateParams) -> Result<SelfCognateParams> {
        self.check(params)?;
        let mut out = self.trivial_params();
        for s in 0..self.p1 {
            for v in 0..self.p2 {
                for m in 0..self.p2 {
                    out.x[self.x_index(s, v, m)] = params.y[self.y_index(m, s * self.p2 + v)];
                    out.y[self.y_index(v, s * self.p2 + m)] = params.x[self.x_index(s, m, v)];
                }
            }
        }
        Ok(out)
    }

    /// The dephased affine family: the log-phase of each `x` and `y` entry is one generator.
    pub fn affine(&self) -> Result<AffineFamily> {
        let n = self.size();
        let mut gens = Vec::with_capacity(self.num_x() + self.num_y());
        for s in 0..self.p1 {
            for v in 0..self.p2 {
                for m in 0..self.p2 {
                    gens.push(indicator(n, |i, j| {
                        let ([_, _, mi], [_, sj, vj]) = self.split(i, j);
                        (sj, vj, mi) == (s, v, m)
                    }));
                }
            }
        }
        for v in 0..self.p2 {
            for t in 0..self.p1 * self.p2 {
                gens.push(indicator(n, |i, j| {
                    let ([_, ri, mi], [_, _, vj]) = self.split(i, j);
                    (vj, ri * self.p2 + mi) == (v, t)
                }));
            }
        }
        AffineFamily::from_generators(self.member(&self.trivial_params())?, &gens)
    }
}

/// `d_A = (Σk_i - 1)N - Σ k_i N/p_i + 1` for `N = p₁p₂²`.
pub fn self_cognate_dim(p1: usize, p2: usize) -> usize {
    let n = p1 * p2 * p2;
    2 * n - n / p1 - 2 * (n / p2) + 1
}
