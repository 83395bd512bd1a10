//! Complex scalars for the series engine: `f64` pairs or arbitrary-precision floats.

use std::fmt;
use std::str::FromStr;

use astro_float::{BigFloat, RoundingMode, Sign};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const RM: RoundingMode = RoundingMode::ToEven;

/// Arithmetic used inside the engine. `Ctx` carries the working precision.
pub trait Scalar: Clone + Send + Sync + fmt::Debug + 'static {
    type Ctx: Copy + Send + Sync + fmt::Debug;

    fn zero(ctx: Self::Ctx) -> Self;
    fn from_c64(z: Complex64, ctx: Self::Ctx) -> Self;
    fn to_c64(&self) -> Complex64;
    fn add(&self, o: &Self, ctx: Self::Ctx) -> Self;
    fn sub(&self, o: &Self, ctx: Self::Ctx) -> Self;
    fn mul(&self, o: &Self, ctx: Self::Ctx) -> Self;
    fn conj(&self) -> Self;
    fn scale(&self, r: f64, ctx: Self::Ctx) -> Self;
    /// Real part as a scalar with zero imaginary part.
    fn re_part(&self, ctx: Self::Ctx) -> Self;
    /// `i·Im(z)`.
    fn im_part(&self, ctx: Self::Ctx) -> Self;

    fn norm(&self) -> f64 {
        self.to_c64().norm()
    }

    /// `self += a·b`.
    fn mul_acc(&mut self, a: &Self, b: &Self, ctx: Self::Ctx) {
        *self = self.add(&a.mul(b, ctx), ctx);
    }

    /// `out += a·b` for row-major `n×n` slices.
    fn gemm_acc(out: &mut [Self], a: &[Self], b: &[Self], n: usize, ctx: Self::Ctx) {
        for i in 0..n {
            for k in 0..n {
                let aik = &a[i * n + k];
                for j in 0..n {
                    out[i * n + j].mul_acc(aik, &b[k * n + j], ctx);
                }
            }
        }
    }
}

impl Scalar for Complex64 {
    type Ctx = ();

    fn zero(_: ()) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn from_c64(z: Complex64, _: ()) -> Self {
        z
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn add(&self, o: &Self, _: ()) -> Self {
        self + o
    }
    fn sub(&self, o: &Self, _: ()) -> Self {
        self - o
    }
    fn mul(&self, o: &Self, _: ()) -> Self {
        self * o
    }
    fn conj(&self) -> Self {
        Complex64::conj(self)
    }
    fn scale(&self, r: f64, _: ()) -> Self {
        self * r
    }
    fn re_part(&self, _: ()) -> Self {
        Complex64::new(self.re, 0.0)
    }
    fn im_part(&self, _: ()) -> Self {
        Complex64::new(0.0, self.im)
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    fn mul_acc(&mut self, a: &Self, b: &Self, _: ()) {
        *self += a * b;
    }
    fn gemm_acc(out: &mut [Self], a: &[Self], b: &[Self], n: usize, _: ()) {
        for (orow, arow) in out.chunks_exact_mut(n).zip(a.chunks_exact(n)) {
            for (aik, brow) in arow.iter().zip(b.chunks_exact(n)) {
                for (o, bkj) in orow.iter_mut().zip(brow) {
                    *o += aik * bkj;
                }
            }
        }
    }
}

/// Complex number with `BigFloat` parts.
#[derive(Clone, Debug)]
pub struct BigComplex {
    pub re: BigFloat,
    pub im: BigFloat,
}

/// Nearest `f64` to a `BigFloat` (two leading mantissa words are enough).
pub fn big_to_f64(x: &BigFloat) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    match x.as_raw_parts() {
        None => f64::NAN,
        Some((words, _, sign, exp, _)) => {
            const W: f64 = 18446744073709551616.0;
            let top = words.last().copied().unwrap_or(0) as f64 / W;
            let next = if words.len() > 1 { words[words.len() - 2] as f64 / W / W } else { 0.0 };
            let mag = (top + next) * 2f64.powi(exp);
            if sign == Sign::Neg {
                -mag
            } else {
                mag
            }
        }
    }
}

impl Scalar for BigComplex {
    type Ctx = usize;

    fn zero(p: usize) -> Self {
        BigComplex { re: BigFloat::from_f64(0.0, p), im: BigFloat::from_f64(0.0, p) }
    }
    fn from_c64(z: Complex64, p: usize) -> Self {
        BigComplex { re: BigFloat::from_f64(z.re, p), im: BigFloat::from_f64(z.im, p) }
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(big_to_f64(&self.re), big_to_f64(&self.im))
    }
    fn add(&self, o: &Self, p: usize) -> Self {
        BigComplex { re: self.re.add(&o.re, p, RM), im: self.im.add(&o.im, p, RM) }
    }
    fn sub(&self, o: &Self, p: usize) -> Self {
        BigComplex { re: self.re.sub(&o.re, p, RM), im: self.im.sub(&o.im, p, RM) }
    }
    fn mul(&self, o: &Self, p: usize) -> Self {
        let ac = self.re.mul(&o.re, p, RM);
        let bd = self.im.mul(&o.im, p, RM);
        let ad = self.re.mul(&o.im, p, RM);
        let bc = self.im.mul(&o.re, p, RM);
        BigComplex { re: ac.sub(&bd, p, RM), im: ad.add(&bc, p, RM) }
    }
    fn conj(&self) -> Self {
        BigComplex { re: self.re.clone(), im: self.im.neg() }
    }
    fn scale(&self, r: f64, p: usize) -> Self {
        let r = BigFloat::from_f64(r, p);
        BigComplex { re: self.re.mul(&r, p, RM), im: self.im.mul(&r, p, RM) }
    }
    fn re_part(&self, p: usize) -> Self {
        BigComplex { re: self.re.clone(), im: BigFloat::from_f64(0.0, p) }
    }
    fn im_part(&self, p: usize) -> Self {
        BigComplex { re: BigFloat::from_f64(0.0, p), im: self.im.clone() }
    }
}

/// Working precision of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    Double,
    /// Mantissa length in bits.
    Big(usize),
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Precision::Double => write!(f, "double"),
            Precision::Big(b) => write!(f, "big:{b}"),
        }
    }
}

impl FromStr for Precision {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "double" {
            return Ok(Precision::Double);
        }
        let bits = s
            .strip_prefix("big:")
            .ok_or_else(|| format!("unknown precision '{s}' (expected double or big:<bits>)"))?;
        let bits: usize = bits.parse().map_err(|_| format!("bad bit count in '{s}'"))?;
        if !(64..=8192).contains(&bits) {
            return Err(format!("bit count {bits} outside [64, 8192]"));
        }
        Ok(Precision::Big(bits))
    }
}

impl Serialize for Precision {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Precision {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
