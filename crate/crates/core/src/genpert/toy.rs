//! The two-variable model `f(X, Y) = X(X-1)² - (e^Y - 1)²` to fourth order.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::poly::{solve_order, PerturbOrders, PolySystem};
use crate::error::{Error, Result};

const ORDER: usize = 4;
const X: usize = 0;
const Y: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyBase {
    /// Expansion around `(0, 0)`.
    Origin,
    /// Expansion around `(1, 0)`.
    Shifted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyBranch {
    Origin,
    ShiftedI,
    ShiftedII,
}

impl std::str::FromStr for ToyBranch {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "origin" => Ok(ToyBranch::Origin),
            "shifted_I" | "shiftedI" | "I" => Ok(ToyBranch::ShiftedI),
            "shifted_II" | "shiftedII" | "II" => Ok(ToyBranch::ShiftedII),
            _ => Err(format!("unknown branch '{s}' (origin, shifted_I, shifted_II)")),
        }
    }
}

/// Coefficients of `t¹, t², …` of `X(t) - X₀` and `Y(t)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToySeries {
    pub x: Vec<BigRational>,
    pub y: Vec<BigRational>,
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Product of truncated univariate polynomials (index = degree).
fn poly_mul(a: &[BigRational], b: &[BigRational], deg: usize) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); deg + 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            if i + j <= deg {
                out[i + j] += x * y;
            }
        }
    }
    out
}

/// Degree-4 Taylor coefficients of `(b+X)(b+X-1)²` and of `(e^Y - 1)²`.
fn toy_univariate(base: ToyBase) -> (Vec<BigRational>, Vec<BigRational>) {
    let b = match base {
        ToyBase::Origin => int(0),
        ToyBase::Shifted => int(1),
    };
    let lin = vec![b.clone(), int(1)];
    let lin_m1 = vec![b - int(1), int(1)];
    let px = poly_mul(&lin, &poly_mul(&lin_m1, &lin_m1, ORDER), ORDER);
    let mut fact = BigRational::one();
    let mut expm1 = vec![BigRational::zero()];
    for k in 1..=ORDER {
        fact *= int(k as i64);
        expm1.push(BigRational::one() / fact.clone());
    }
    let py = poly_mul(&expm1, &expm1, ORDER);
    (px, py)
}

/// Fourth-order truncation of `X(X-1)² - (e^Y - 1)²` around the base point.
pub fn toy_system(base: ToyBase) -> PolySystem<BigRational> {
    let (px, py) = toy_univariate(base);
    assert!(px[0].is_zero() && py[0].is_zero(), "base point must be a zero of f");
    let mut sys = PolySystem::new(1, 2, ORDER).expect("degree within limits");
    for d in 1..=ORDER {
        if !px[d].is_zero() {
            sys.add_term(0, &vec![X; d], px[d].clone()).expect("valid term");
        }
        if !py[d].is_zero() {
            sys.add_term(0, &vec![Y; d], -py[d].clone()).expect("valid term");
        }
    }
    sys
}

/// Origin expansion with the free direction fixed: `Y` coefficients `y`, `X` solved.
pub fn origin_series(y: &[BigRational]) -> Result<ToySeries> {
    if y.len() != ORDER {
        return Err(Error::LengthMismatch { expected: ORDER, got: y.len() });
    }
    let sys = toy_system(ToyBase::Origin);
    let mut orders = PerturbOrders::new(vec![int(0), y[0].clone()]);
    for s in 2..=ORDER {
        let sol = solve_order(&sys, &orders, s, 0.0)?;
        if !sol.solvable {
            return Err(Error::Numerical(format!("origin expansion inconsistent at order {s}")));
        }
        orders.push(&sol, vec![int(0), y[s - 1].clone()]);
    }
    Ok(ToySeries { x: orders.x.iter().map(|v| v[X].clone()).collect(), y: orders.x.iter().map(|v| v[Y].clone()).collect() })
}

fn residual_at(sys: &PolySystem<BigRational>, orders: &PerturbOrders<BigRational>, s: usize) -> Result<BigRational> {
    Ok(solve_order(sys, orders, s, 0.0)?.residual[0].clone())
}

/// Expansion around `(1, 0)` with the `X` coefficients given and `y₁ = sign·x₁`;
/// each later `y_s` is fixed by the linear condition at order `s+1`.
pub fn shifted_series(x: &[BigRational], sign: i32) -> Result<ToySeries> {
    let k = ORDER - 1;
    if x.len() != k {
        return Err(Error::LengthMismatch { expected: k, got: x.len() });
    }
    if sign != 1 && sign != -1 {
        return Err(Error::Domain("branch sign must be ±1".into()));
    }
    let sys = toy_system(ToyBase::Shifted);
    let y1 = if sign > 0 { x[0].clone() } else { -x[0].clone() };
    let mut orders = PerturbOrders::new(vec![x[0].clone(), y1]);
    let r2 = residual_at(&sys, &orders, 2)?;
    if !r2.is_zero() {
        return Err(Error::Numerical(format!("order-2 residual {r2} does not vanish")));
    }
    for s in 2..=k {
        let sol = solve_order(&sys, &orders, s, 0.0)?;
        let with = |ys: BigRational| -> Result<BigRational> {
            let mut o = orders.clone();
            o.push(&sol, vec![x[s - 1].clone(), ys]);
            residual_at(&sys, &o, s + 1)
        };
        let r0 = with(int(0))?;
        let u = with(int(1))? - &r0;
        if u.is_zero() {
            return Err(Error::Numerical(format!("y at order {s} does not enter order {}", s + 1)));
        }
        let ys = -r0 / u;
        orders.push(&sol, vec![x[s - 1].clone(), ys]);
    }
    let last = residual_at(&sys, &orders, ORDER)?;
    if !last.is_zero() {
        return Err(Error::Numerical(format!("order-{ORDER} residual {last} does not vanish")));
    }
    Ok(ToySeries { x: orders.x.iter().map(|v| v[X].clone()).collect(), y: orders.x.iter().map(|v| v[Y].clone()).collect() })
}

/// The three standard branches with `t` = `Y` (origin) or `t = X - 1` (shifted).
pub fn toy_series(branch: ToyBranch) -> Result<ToySeries> {
    match branch {
        ToyBranch::Origin => origin_series(&[int(1), int(0), int(0), int(0)]),
        ToyBranch::ShiftedI => shifted_series(&[int(1), int(0), int(0)], 1),
        ToyBranch::ShiftedII => shifted_series(&[int(1), int(0), int(0)], -1),
    }
}

/// `X(Y) = (4/3) sin²[(1/3) arcsin((3√3/2)(e^Y - 1))]` on the origin branch.
pub fn origin_closed_form(y: f64) -> f64 {
    let arg = 1.5 * 3f64.sqrt() * y.exp_m1();
    let s = (arg.asin() / 3.0).sin();
    4.0 / 3.0 * s * s
}

/// Renders `c₁t + c₂t² + …` with exact fractions.
pub fn format_series(coeffs: &[BigRational], var: &str) -> String {
    let mut out = String::new();
    for (i, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let p = i + 1;
        let mono = if p == 1 { var.to_string() } else { format!("{var}^{p}") };
        let mag = c.abs();
        let body = if mag.is_one() { mono } else { format!("{mag}·{mono}") };
        if out.is_empty() {
            out = if c.is_negative() { format!("-{body}") } else { body };
        } else {
            out.push_str(if c.is_negative() { " - " } else { " + " });
            out.push_str(&body);
        }
    }
    if out.is_empty() {
        "0".into()
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genpert::pinv::rat;

    #[test]
    fn coefficients() {
        let o = toy_system(ToyBase::Origin);
        assert_eq!(o.coeff(0, &[X]), int(1));
        assert_eq!(o.coeff(0, &[X, X]), int(-2));
        assert_eq!(o.coeff(0, &[X, X, X]), int(1));
        assert_eq!(o.coeff(0, &[Y, Y]), int(-1));
        assert_eq!(o.coeff(0, &[Y, Y, Y]), int(-1));
        assert_eq!(o.coeff(0, &[Y, Y, Y, Y]), rat(-7, 12));
        assert_eq!(o.terms[0].len(), 6);
        let s = toy_system(ToyBase::Shifted);
        assert_eq!(s.coeff(0, &[X]), int(0));
        assert_eq!(s.coeff(0, &[X, X]), int(1));
        assert_eq!(s.coeff(0, &[X, X, X]), int(1));
        assert_eq!(s.terms[0].len(), 5);
        assert!(o.eval(&[int(0), int(0)])[0].is_zero() && s.eval(&[int(0), int(0)])[0].is_zero());
    }

    #[test]
    fn branches() {
        let o = toy_series(ToyBranch::Origin).unwrap();
        assert_eq!(o.x, vec![int(0), int(1), int(1), rat(31, 12)]);
        let a = toy_series(ToyBranch::ShiftedI).unwrap();
        assert_eq!(a.y, vec![int(1), int(0), rat(-7, 24)]);
        let b = toy_series(ToyBranch::ShiftedII).unwrap();
        assert_eq!(b.y, vec![int(-1), int(-1), rat(-17, 24)]);
    }

    #[test]
    fn order_two_condition_on_shifted_branch() {
        let sys = toy_system(ToyBase::Shifted);
        let o = PerturbOrders::new(vec![int(2), int(3)]);
        let sol = solve_order(&sys, &o, 2, 0.0).unwrap();
        // -x1² + y1² up to overall sign
        assert_eq!(sol.residual[0].abs(), int(5));
        assert!(shifted_series(&[int(1), int(0), int(0)], 0).is_err());
    }

    #[test]
    fn formatting() {
        assert_eq!(format_series(&[int(0), int(1), int(1), rat(31, 12)], "t"), "t^2 + t^3 + 31/12·t^4");
        assert_eq!(format_series(&[int(-1), int(-1), rat(-17, 24)], "u"), "-u - u^2 - 17/24·u^3");
        assert_eq!(format_series(&[int(0)], "t"), "0");
    }
}
