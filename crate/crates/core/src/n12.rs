//! The fourth-order consistency system for `N = 12` in reduced variables.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::defect::numeric_rank;
use crate::error::{Error, Result};
use crate::expansion::{
    apply_pattern, extract_assignment, homogeneous_x, random_assignment, unit_disc, Assignment,
    AssignmentSampler, PatternLabel, SeriesState,
};
use crate::hcore::{fourier, transpose_x, ComplexMatrix};
use crate::numtheory::{param_keys, ParamKey};

pub const N: usize = 12;
pub const NUM_EQUATIONS: usize = 13;

/// The fifteen reduced variables; `x3c` and `x9c` are fixed by the other two of their triple.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct N12Vars {
    pub x2: Complex64,
    pub x10: Complex64,
    pub x4a: Complex64,
    pub x4b: Complex64,
    pub x8a: Complex64,
    pub x8b: Complex64,
    pub x6a: Complex64,
    pub x6b: Complex64,
    pub x6c: Complex64,
    pub x3a: Complex64,
    pub x3b: Complex64,
    pub x3c: Complex64,
    pub x9a: Complex64,
    pub x9b: Complex64,
    pub x9c: Complex64,
}

impl N12Vars {
    /// Sets `x3c = -x3a - x3b` and `x9c = -x9a - x9b`.
    pub fn with_dependents(mut self) -> Self {
        self.x3c = -self.x3a - self.x3b;
        self.x9c = -self.x9a - self.x9b;
        self
    }

    /// `max(|x3a + x3b + x3c|, |x9a + x9b + x9c|)`.
    pub fn dependent_violation(&self) -> f64 {
        (self.x3a + self.x3b + self.x3c).norm().max((self.x9a + self.x9b + self.x9c).norm())
    }

    pub fn values(&self) -> [Complex64; 15] {
        [
            self.x2, self.x10, self.x4a, self.x4b, self.x8a, self.x8b, self.x6a, self.x6b, self.x6c, self.x3a,
            self.x3b, self.x3c, self.x9a, self.x9b, self.x9c,
        ]
    }

    pub fn max_abs(&self) -> f64 {
        self.values().iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn scaled(&self, f: f64) -> Self {
        let s = |z: Complex64| z * f;
        N12Vars {
            x2: s(self.x2),
            x10: s(self.x10),
            x4a: s(self.x4a),
            x4b: s(self.x4b),
            x8a: s(self.x8a),
            x8b: s(self.x8b),
            x6a: s(self.x6a),
            x6b: s(self.x6b),
            x6c: s(self.x6c),
            x3a: s(self.x3a),
            x3b: s(self.x3b),
            x3c: s(self.x3c),
            x9a: s(self.x9a),
            x9b: s(self.x9b),
            x9c: s(self.x9c),
        }
    }
}

fn key(diag: usize, class: usize) -> ParamKey {
    ParamKey::new(diag, class)
}

/// Reduced variables of an `N = 12` first-order assignment; missing keys count as zero.
pub fn reduce(a: &Assignment) -> N12Vars {
    let g = |class: usize, diag: usize| a.get(&key(diag, class)).copied().unwrap_or_default();
    let third = |d: usize, i: usize, j: usize, k: usize| g(i, d) * 2.0 - g(j, d) - g(k, d);
    N12Vars {
        x2: g(0, 2) - g(1, 2),
        x10: g(0, 10) - g(1, 10),
        x4a: g(0, 4) - g(2, 4),
        x4b: g(1, 4) - g(3, 4),
        x8a: g(0, 8) - g(2, 8),
        x8b: g(1, 8) - g(3, 8),
        x6a: g(0, 6) - g(3, 6),
        x6b: g(4, 6) - g(1, 6),
        x6c: g(2, 6) - g(5, 6),
        x3a: third(3, 0, 1, 2),
        x3b: third(3, 1, 0, 2),
        x3c: third(3, 2, 0, 1),
        x9a: third(9, 0, 1, 2),
        x9b: third(9, 1, 0, 2),
        x9c: third(9, 2, 0, 1),
    }
}

/// Overwrites the keys entering the reduced variables so that `reduce(lift(a, v)) = v`.
///
/// Keys `(2,1)`, `(10,1)`, `(4,2)`, `(4,3)`, `(8,2)`, `(8,3)`, `(6,1)`, `(6,3)`, `(6,5)`,
/// `(3,2)` and `(9,2)` are kept from `a`. Requires `v` to satisfy the triple sums.
pub fn lift(a: &Assignment, v: &N12Vars) -> Result<Assignment> {
    if v.dependent_violation() > 1e-12 * (1.0 + v.max_abs()) {
        return Err(Error::Domain("x3a + x3b + x3c and x9a + x9b + x9c must vanish".into()));
    }
    let mut out = a.clone();
    let g = |class: usize, diag: usize| a.get(&key(diag, class)).copied().unwrap_or_default();
    let mut set = |class: usize, diag: usize, z: Complex64| {
        out.insert(key(diag, class), z);
    };
    set(0, 2, g(1, 2) + v.x2);
    set(0, 10, g(1, 10) + v.x10);
    set(0, 4, g(2, 4) + v.x4a);
    set(1, 4, g(3, 4) + v.x4b);
    set(0, 8, g(2, 8) + v.x8a);
    set(1, 8, g(3, 8) + v.x8b);
    set(0, 6, g(3, 6) + v.x6a);
    set(4, 6, g(1, 6) + v.x6b);
    set(2, 6, g(5, 6) + v.x6c);
    for (d, xa, xb) in [(3, v.x3a, v.x3b), (9, v.x9a, v.x9b)] {
        let c = g(2, d);
        set(0, d, c + (xa * 2.0 + xb) / 3.0);
        set(1, d, c + (xa + xb * 2.0) / 3.0);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxPolys {
    pub p1: Complex64,
    pub p2: Complex64,
    pub p3: Complex64,
    pub p4: Complex64,
    pub p5: Complex64,
    pub p6: Complex64,
}

pub fn aux_polys(v: &N12Vars) -> AuxPolys {
    AuxPolys {
        p1: v.x3a * v.x3a + v.x9a * v.x9a,
        p2: v.x3b * v.x3b + v.x9b * v.x9b,
        p3: v.x3c * v.x3c + v.x9c * v.x9c,
        p4: v.x4a * v.x4a - v.x4b * v.x4b,
        p5: v.x8a * v.x8a - v.x8b * v.x8b,
        p6: v.x4a * v.x8a - v.x4b * v.x8b,
    }
}

/// Factor symbols of the equation table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sym {
    X2,
    X10,
    X4a,
    X4b,
    X8a,
    X8b,
    X6a,
    X6b,
    X6c,
    X3a,
    X3b,
    X9a,
    X9b,
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
}

impl Sym {
    fn value(self, v: &N12Vars, p: &AuxPolys) -> Complex64 {
        match self {
            Sym::X2 => v.x2,
            Sym::X10 => v.x10,
            Sym::X4a => v.x4a,
            Sym::X4b => v.x4b,
            Sym::X8a => v.x8a,
            Sym::X8b => v.x8b,
            Sym::X6a => v.x6a,
            Sym::X6b => v.x6b,
            Sym::X6c => v.x6c,
            Sym::X3a => v.x3a,
            Sym::X3b => v.x3b,
            Sym::X9a => v.x9a,
            Sym::X9b => v.x9b,
            Sym::P1 => p.p1,
            Sym::P2 => p.p2,
            Sym::P3 => p.p3,
            Sym::P4 => p.p4,
            Sym::P5 => p.p5,
            Sym::P6 => p.p6,
        }
    }
}

type Term = (f64, &'static [Sym]);

use Sym::*;

/// Each equation as a sum of `coefficient · Π factors`.
const SYSTEM: [&[Term]; NUM_EQUATIONS] = [
    &[(1.0, &[P1, P6])],
    &[(1.0, &[P2, P6])],
    &[(1.0, &[P3, P6])],
    &[(1.0, &[P1, P4]), (1.0, &[P2, P4]), (1.0, &[P3, P4])],
    &[(1.0, &[P1, P5]), (1.0, &[P2, P5]), (1.0, &[P3, P5])],
    &[
        (1.0, &[X4a, X10, P1]),
        (1.0, &[X4a, X10, P2]),
        (1.0, &[X4a, X10, P3]),
        (1.0, &[X8a, X6a, P1]),
        (1.0, &[X8a, X6b, P2]),
        (1.0, &[X8a, X6c, P3]),
    ],
    &[
        (1.0, &[X4b, X10, P1]),
        (1.0, &[X4b, X10, P2]),
        (1.0, &[X4b, X10, P3]),
        (1.0, &[X8b, X6a, P1]),
        (1.0, &[X8b, X6b, P2]),
        (1.0, &[X8b, X6c, P3]),
    ],
    &[
        (1.0, &[X8a, X2, P1]),
        (1.0, &[X8a, X2, P2]),
        (1.0, &[X8a, X2, P3]),
        (1.0, &[X4a, X6a, P1]),
        (1.0, &[X4a, X6b, P2]),
        (1.0, &[X4a, X6c, P3]),
    ],
    &[
        (1.0, &[X8b, X2, P1]),
        (1.0, &[X8b, X2, P2]),
        (1.0, &[X8b, X2, P3]),
        (1.0, &[X4b, X6a, P1]),
        (1.0, &[X4b, X6b, P2]),
        (1.0, &[X4b, X6c, P3]),
    ],
    &[
        (3.0, &[X3a, X10, P4]),
        (3.0, &[X3a, X2, P5]),
        (4.0, &[P6, X3a, X6a]),
        (2.0, &[P6, X3a, X6c]),
        (2.0, &[P6, X3b, X6c]),
        (-2.0, &[P6, X3b, X6b]),
    ],
    &[
        (3.0, &[X3b, X10, P4]),
        (3.0, &[X3b, X2, P5]),
        (4.0, &[P6, X3b, X6b]),
        (2.0, &[P6, X3b, X6c]),
        (2.0, &[P6, X3a, X6c]),
        (-2.0, &[P6, X3a, X6a]),
    ],
    &[
        (3.0, &[X9a, X10, P4]),
        (3.0, &[X9a, X2, P5]),
        (4.0, &[P6, X9a, X6a]),
        (2.0, &[P6, X9a, X6c]),
        (2.0, &[P6, X9b, X6c]),
        (-2.0, &[P6, X9b, X6b]),
    ],
    &[
        (3.0, &[X9b, X10, P4]),
        (3.0, &[X9b, X2, P5]),
        (4.0, &[P6, X9b, X6b]),
        (2.0, &[P6, X9b, X6c]),
        (2.0, &[P6, X9a, X6c]),
        (-2.0, &[P6, X9a, X6a]),
    ],
];

/// Left-hand sides of the thirteen consistency conditions.
pub fn evaluate_system(v: &N12Vars) -> [Complex64; NUM_EQUATIONS] {
    let p = aux_polys(v);
    SYSTEM.map(|eq| {
        eq.iter().map(|(c, f)| f.iter().fold(Complex64::new(*c, 0.0), |acc, s| acc * s.value(v, &p))).sum()
    })
}

/// `max_m |f_m(v)| / max|v|⁴`, zero at the origin.
pub fn relative_system_residual(v: &N12Vars) -> f64 {
    let m = v.max_abs();
    if m == 0.0 {
        return 0.0;
    }
    let w = v.scaled(1.0 / m);
    evaluate_system(&w).iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum N12Type {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
    #[serde(rename = "generic")]
    Generic,
}

impl fmt::Display for N12Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            N12Type::I => "I",
            N12Type::II => "II",
            N12Type::One => "1",
            N12Type::Two => "2",
            N12Type::Three => "3",
            N12Type::Generic => "generic",
        })
    }
}

impl FromStr for N12Type {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "I" | "typeI" => Ok(N12Type::I),
            "II" | "typeII" => Ok(N12Type::II),
            "1" | "type1" => Ok(N12Type::One),
            "2" | "type2" => Ok(N12Type::Two),
            "3" | "type3" => Ok(N12Type::Three),
            "generic" => Ok(N12Type::Generic),
            _ => Err(format!("unknown type '{s}' (I, II, 1, 2, 3, generic)")),
        }
    }
}

/// Labels `v` after scaling it to `max|v| = 1`; checks run in the order I, II, 1, 2, 3.
pub fn classify(v: &N12Vars, tol: f64) -> N12Type {
    let m = v.max_abs();
    if m == 0.0 {
        return N12Type::I;
    }
    let w = v.scaled(1.0 / m);
    let small = |zs: &[Complex64]| zs.iter().all(|z| z.norm() <= tol);
    let p = aux_polys(&w);
    if small(&[w.x4a, w.x4b, w.x8a, w.x8b]) {
        return N12Type::I;
    }
    if small(&[w.x3a, w.x3b, w.x9a, w.x9b]) {
        return N12Type::II;
    }
    if small(&[p.p4, p.p5, p.p6]) {
        return N12Type::One;
    }
    if small(&[p.p1, p.p2, p.p3]) {
        return N12Type::Two;
    }
    let sum = p.p1 + p.p2 + p.p3;
    let weighted = w.x6a * p.p1 + w.x6b * p.p2 + w.x6c * p.p3;
    let k = w.x10 * p.p4 + w.x2 * p.p5;
    if small(&[sum, p.p6, weighted, k]) {
        return N12Type::Three;
    }
    N12Type::Generic
}

/// Random points on one solution branch, or unconstrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum N12Branch {
    #[serde(rename = "typeI")]
    TypeI,
    #[serde(rename = "typeII")]
    TypeII,
    #[serde(rename = "type1")]
    Type1,
    #[serde(rename = "type2")]
    Type2,
    #[serde(rename = "type3")]
    Type3,
    #[serde(rename = "generic")]
    Generic,
}

impl N12Branch {
    pub const ALL: [N12Branch; 6] =
        [N12Branch::TypeI, N12Branch::TypeII, N12Branch::Type1, N12Branch::Type2, N12Branch::Type3, N12Branch::Generic];

    pub fn expected(self) -> N12Type {
        match self {
            N12Branch::TypeI => N12Type::I,
            N12Branch::TypeII => N12Type::II,
            N12Branch::Type1 => N12Type::One,
            N12Branch::Type2 => N12Type::Two,
            N12Branch::Type3 => N12Type::Three,
            N12Branch::Generic => N12Type::Generic,
        }
    }
}

impl fmt::Display for N12Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            N12Branch::TypeI => "typeI",
            N12Branch::TypeII => "typeII",
            N12Branch::Type1 => "type1",
            N12Branch::Type2 => "type2",
            N12Branch::Type3 => "type3",
            N12Branch::Generic => "generic",
        })
    }
}

impl FromStr for N12Branch {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        N12Branch::ALL
            .into_iter()
            .find(|b| b.to_string() == s)
            .ok_or_else(|| format!("unknown branch '{s}' (typeI, typeII, type1, type2, type3, generic)"))
    }
}

/// Denominators below this are redrawn.
const MIN_PIVOT: f64 = 1e-3;
const MAX_DRAWS: usize = 1000;
const MAX_SOLVED: f64 = 3.0;

fn draw_free<R: Rng + ?Sized>(rng: &mut R) -> N12Vars {
    let mut d = || unit_disc(rng);
    N12Vars {
        x2: d(),
        x10: d(),
        x4a: d(),
        x4b: d(),
        x8a: d(),
        x8b: d(),
        x6a: d(),
        x6b: d(),
        x6c: d(),
        x3a: d(),
        x3b: d(),
        x9a: d(),
        x9b: d(),
        ..Default::default()
    }
    .with_dependents()
}

fn nonzero(zs: &[Complex64]) -> bool {
    zs.iter().all(|z| z.norm() >= MIN_PIVOT)
}

fn try_branch<R: Rng + ?Sized>(branch: N12Branch, rng: &mut R) -> Option<N12Vars> {
    let mut v = draw_free(rng);
    let zero = Complex64::default();
    match branch {
        N12Branch::Generic => {}
        N12Branch::TypeI => {
            v.x4a = zero;
            v.x4b = zero;
            v.x8a = zero;
            v.x8b = zero;
        }
        N12Branch::TypeII => {
            v.x3a = zero;
            v.x3b = zero;
            v.x9a = zero;
            v.x9b = zero;
            v = v.with_dependents();
        }
        N12Branch::Type1 => {
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            v.x4b = v.x4a * sign;
            v.x8b = v.x8a * sign;
            let p = aux_polys(&v);
            let sum = p.p1 + p.p2 + p.p3;
            let weighted = v.x6a * p.p1 + v.x6b * p.p2 + v.x6c * p.p3;
            if !nonzero(&[v.x4a, v.x8a, sum]) {
                return None;
            }
            v.x10 = -v.x8a * weighted / (v.x4a * sum);
            v.x2 = -v.x4a * weighted / (v.x8a * sum);
        }
        N12Branch::Type2 => {
            let i = Complex64::new(0.0, if rng.random::<bool>() { 1.0 } else { -1.0 });
            v.x3a = v.x9a * i;
            v.x3b = v.x9b * i;
            v = v.with_dependents();
            let p = aux_polys(&v);
            let (a, b) = (v.x3a, v.x3b);
            if !nonzero(&[a - b, a + b, p.p4, p.p6]) {
                return None;
            }
            let k = -p.p6 * 2.0 * (a * v.x6a - b * v.x6b) / (a - b);
            v.x6c = -(a * k * 3.0 + p.p6 * 2.0 * (a * v.x6a * 2.0 - b * v.x6b)) / (p.p6 * 2.0 * (a + b));
            v.x10 = (k - v.x2 * p.p5) / p.p4;
        }
        N12Branch::Type3 => {
            let q3 = v.x3a * v.x3a + v.x3b * v.x3b + v.x3a * v.x3b;
            let a = v.x9a;
            let disc = (a * a - (a * a + q3) * 4.0).sqrt();
            v.x9b = (-a + disc) / 2.0;
            v = v.with_dependents();
            if !nonzero(&[v.x4b]) {
                return None;
            }
            v.x8b = v.x4a * v.x8a / v.x4b;
            let p = aux_polys(&v);
            if !nonzero(&[p.p3, p.p4]) {
                return None;
            }
            v.x6c = -(v.x6a * p.p1 + v.x6b * p.p2) / p.p3;
            v.x10 = -v.x2 * p.p5 / p.p4;
        }
    }
    Some(v)
}

/// Random reduced variables on `branch` with free parts uniform on the unit disc;
/// draws whose solved parts exceed `MAX_SOLVED` in modulus are rejected.
pub fn sample_branch<R: Rng + ?Sized>(branch: N12Branch, rng: &mut R) -> Result<N12Vars> {
    for _ in 0..MAX_DRAWS {
        if let Some(v) = try_branch(branch, rng).filter(|v| v.max_abs() <= MAX_SOLVED) {
            return Ok(v);
        }
    }
    Err(Error::Numerical(format!("no admissible {branch} point in {MAX_DRAWS} draws")))
}

/// Full `N = 12` assignments whose reduced variables lie on a branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct N12Sampler {
    pub branch: N12Branch,
}

impl AssignmentSampler for N12Sampler {
    fn dim(&self) -> usize {
        N
    }

    fn label(&self) -> String {
        self.branch.to_string()
    }

    fn sample(&self, rng: &mut ChaCha20Rng) -> Result<Assignment> {
        let base = random_assignment(N, rng);
        let v = sample_branch(self.branch, rng)?;
        lift(&base, &v)
    }
}

/// Order-4 consistency residual of the engine, relative to the order-4 term size.
pub fn engine_relative_residual(a: &Assignment) -> Result<f64> {
    let mut st = SeriesState::<Complex64>::new(N, a, ())?;
    for s in 2..=3 {
        let rep = st.advance()?;
        if rep.broken {
            return Err(Error::Numerical(format!("unexpected breakdown at order {s}")));
        }
    }
    Ok(st.consistency_residuals(4)?.relative)
}

/// Reduced variables of the assignment obtained by transposing `H`.
pub fn transposed(a: &Assignment) -> Result<N12Vars> {
    let (b, dev) = extract_assignment(&transpose_x(&homogeneous_x(N, a)));
    if dev > 1e-10 * (1.0 + a.values().fold(0.0f64, |m, z| m.max(z.norm()))) {
        return Err(Error::Numerical(format!("transposed first-order matrix is not homogeneous ({dev:.2e})")));
    }
    Ok(reduce(&b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestCase {
    pub branch: N12Branch,
    pub engine_relative: f64,
    pub system_relative: f64,
    pub agree: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelftestReport {
    pub points: usize,
    pub tol: f64,
    pub disagreements: usize,
    pub cases: Vec<SelftestCase>,
    pub passes: bool,
}

/// Checks that the engine's order-4 conditions and the table vanish together on
/// `points` random assignments spread over all branches.
pub fn selftest(points: usize, tol: f64, rng: &mut ChaCha20Rng) -> Result<SelftestReport> {
    let mut cases = Vec::with_capacity(points);
    for idx in 0..points {
        let branch = N12Branch::ALL[idx % N12Branch::ALL.len()];
        let a = N12Sampler { branch }.sample(rng)?;
        let engine_relative = engine_relative_residual(&a)?;
        let system_relative = relative_system_residual(&reduce(&a));
        let agree = (engine_relative <= tol) == (system_relative <= tol);
        cases.push(SelftestCase { branch, engine_relative, system_relative, agree });
    }
    let disagreements = cases.iter().filter(|c| !c.agree).count();
    Ok(SelftestReport { points, tol, disagreements, cases, passes: disagreements == 0 })
}

/// Trivial first-order directions: diagonal and circulant `X`.
pub fn trivial_directions() -> Vec<Assignment> {
    let f = fourier(N);
    let mut out = Vec::new();
    for k in 0..N {
        let mut d = ComplexMatrix::zeros(N, N);
        d[(k, k)] = Complex64::new(1.0, 0.0);
        out.push(extract_assignment(&d).0);
        out.push(extract_assignment(&(&f * &d * f.adjoint())).0);
    }
    out
}

/// Real embedding `[[Re, -Im], [Im, Re]]` of the complex rows over all keys.
fn functional_matrix(rows: &[Assignment]) -> DMatrix<f64> {
    let keys = param_keys(N);
    let k = keys.len();
    DMatrix::from_fn(2 * rows.len(), 2 * k, |r, c| {
        let z = rows[r / 2].get(&keys[c % k]).copied().unwrap_or_default();
        match (r % 2, c / k) {
            (0, 0) | (1, 1) => z.re,
            (0, _) => -z.im,
            _ => z.im,
        }
    })
}

/// Complex rank of a list of functionals.
fn complex_rank(rows: &[Assignment]) -> usize {
    numeric_rank(&functional_matrix(rows), 1e-10).0 / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionCount {
    pub params: usize,
    pub trivial: usize,
    pub nontrivial: usize,
    pub removed: usize,
    pub remaining: usize,
}

/// Counts the nontrivial first-order parameters removed by a pattern.
pub fn dimension_count(label: PatternLabel) -> Result<DimensionCount> {
    let keys = param_keys(N);
    let params = keys.len();
    let triv = trivial_directions();
    let trivial = complex_rank(&triv);
    let pattern = apply_pattern(N, label)?;
    let mut conds = Vec::new();
    for class in &pattern.classes {
        for k in &class[1..] {
            let mut row = Assignment::new();
            row.insert(class[0], Complex64::new(1.0, 0.0));
            row.insert(*k, Complex64::new(-1.0, 0.0));
            conds.push(row);
        }
    }
    let annihilates = triv.iter().all(|t| {
        conds.iter().all(|c| c.iter().map(|(k, z)| z * t.get(k).copied().unwrap_or_default()).sum::<Complex64>().norm() < 1e-12)
    });
    if !annihilates {
        return Err(Error::Numerical("pattern constrains trivial directions".into()));
    }
    let removed = complex_rank(&conds);
    let nontrivial = params - trivial;
    Ok(DimensionCount { params, trivial, nontrivial, removed, remaining: nontrivial - removed })
}
