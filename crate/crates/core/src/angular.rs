//! Exact angular-momentum coupling coefficients.
//!
//! Quantum numbers are stored doubled ([`HalfInt`]) so that selection rules
//! compare integers. The Racah sum for the Wigner 3j symbol is evaluated in
//! exact rational arithmetic; the only floating-point step is the final
//! square root. Phases follow the Condon-Shortley convention.

use std::fmt;
use std::ops::{Add, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An integer or half-integer, stored as twice its value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HalfInt(i32);

impl HalfInt {
    pub const ZERO: HalfInt = HalfInt(0);
    pub const HALF: HalfInt = HalfInt(1);
    pub const ONE: HalfInt = HalfInt(2);

    pub const fn from_twice(twice: i32) -> Self {
        HalfInt(twice)
    }

    pub const fn integer(n: i32) -> Self {
        HalfInt(2 * n)
    }

    pub const fn twice(self) -> i32 {
        self.0
    }

    pub fn value(self) -> f64 {
        f64::from(self.0) / 2.0
    }

    pub const fn is_integer(self) -> bool {
        self.0 % 2 == 0
    }

    pub const fn abs(self) -> Self {
        HalfInt(self.0.abs())
    }

    /// The projections `-j, -j+1, ..., j`. Empty for negative `j`.
    pub fn projections(self) -> impl DoubleEndedIterator<Item = HalfInt> + Clone {
        let j = self.0;
        (0..(j + 1).max(0)).map(move |k| HalfInt(2 * k - j))
    }
}

impl Add for HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 + rhs.0)
    }
}

impl Sub for HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: HalfInt) -> HalfInt {
        HalfInt(self.0 - rhs.0)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt(-self.0)
    }
}

impl From<i32> for HalfInt {
    fn from(n: i32) -> Self {
        HalfInt::integer(n)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if f.sign_plus() && self.0 > 0 { "+" } else { "" };
        if self.is_integer() {
            write!(f, "{sign}{}", self.0 / 2)
        } else {
            write!(f, "{sign}{}/2", self.0)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;

    /// Accepts `"2"`, `"-1"`, `"5/2"`, `"+3/2"`, `"-1/2"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::QuantumNumber(format!("cannot parse `{s}` as a half-integer"));
        let t = s.trim();
        let t = t.strip_prefix('+').unwrap_or(t);
        match t.split_once('/') {
            Some((num, "2")) => {
                let n: i32 = num.trim().parse().map_err(|_| bad())?;
                Ok(HalfInt(n))
            }
            Some(_) => Err(bad()),
            None => {
                let n: i32 = t.parse().map_err(|_| bad())?;
                Ok(HalfInt::integer(n))
            }
        }
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn check_jm(j: HalfInt, m: HalfInt) -> Result<()> {
    if j.0 < 0 {
        return Err(Error::QuantumNumber(format!("negative angular momentum j = {j}")));
    }
    if m.0.abs() > j.0 {
        return Err(Error::QuantumNumber(format!("|m| > j for j = {j}, m = {m}")));
    }
    if (j.0 - m.0) % 2 != 0 {
        return Err(Error::QuantumNumber(format!("j - m must be an integer (j = {j}, m = {m})")));
    }
    Ok(())
}

fn factorial(n: i32) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn triangle(ta: i32, tb: i32, tc: i32) -> bool {
    tc >= (ta - tb).abs() && tc <= ta + tb && (ta + tb + tc) % 2 == 0
}

/// Exact square of the 3j symbol together with its sign.
///
/// Returned as `(sign, value²)` so callers can stay rational.
fn wigner3j_exact(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<(i32, BigRational)> {
    check_jm(j1, m1)?;
    check_jm(j2, m2)?;
    check_jm(j3, m3)?;
    let zero = (0, BigRational::zero());
    if m1.0 + m2.0 + m3.0 != 0 || !triangle(j1.0, j2.0, j3.0) {
        return Ok(zero);
    }
    // All of the following are integers once the checks above pass.
    let h = |x: i32| x / 2;
    let (a, b, c) = (j1.0, j2.0, j3.0);
    let delta_num = factorial(h(a + b - c)) * factorial(h(a - b + c)) * factorial(h(-a + b + c));
    let delta_den = factorial(h(a + b + c) + 1);
    let proj = factorial(h(a + m1.0))
        * factorial(h(a - m1.0))
        * factorial(h(b + m2.0))
        * factorial(h(b - m2.0))
        * factorial(h(c + m3.0))
        * factorial(h(c - m3.0));
    let prefactor = BigRational::new(delta_num * proj, delta_den);

    let kmin = 0.max(h(b - c - m1.0)).max(h(a - c + m2.0));
    let kmax = h(a + b - c).min(h(a - m1.0)).min(h(b + m2.0));
    let mut sum = BigRational::zero();
    for k in kmin..=kmax {
        let den = factorial(k)
            * factorial(h(c - b + m1.0) + k)
            * factorial(h(c - a - m2.0) + k)
            * factorial(h(a + b - c) - k)
            * factorial(h(a - m1.0) - k)
            * factorial(h(b + m2.0) - k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    if sum.is_zero() {
        return Ok(zero);
    }
    let phase = if h(a - b - m3.0).rem_euclid(2) == 0 { 1 } else { -1 };
    let sign = phase * if sum.is_negative() { -1 } else { 1 };
    Ok((sign, prefactor * &sum * &sum))
}

fn signed_sqrt(sign: i32, sq: &BigRational) -> f64 {
    if sign == 0 || sq.is_zero() {
        return 0.0;
    }
    let v = sq.to_f64().unwrap_or(f64::NAN).sqrt();
    if sign < 0 {
        -v
    } else {
        v
    }
}

/// Wigner 3j symbol `(j1 j2 j3; m1 m2 m3)`.
///
/// Exactly zero when the triangle condition fails or `m1 + m2 + m3 != 0`.
pub fn wigner3j(
    j1: HalfInt,
    j2: HalfInt,
    j3: HalfInt,
    m1: HalfInt,
    m2: HalfInt,
    m3: HalfInt,
) -> Result<f64> {
    let (sign, sq) = wigner3j_exact(j1, j2, j3, m1, m2, m3)?;
    Ok(signed_sqrt(sign, &sq))
}

/// Clebsch-Gordan coefficient `<j1 m1; j2 m2 | J M>`.
pub fn clebsch_gordan(
    j1: HalfInt,
    m1: HalfInt,
    j2: HalfInt,
    m2: HalfInt,
    j: HalfInt,
    m: HalfInt,
) -> Result<f64> {
    let (sign, sq) = wigner3j_exact(j1, j2, j, m1, m2, -m)?;
    if sign == 0 {
        return Ok(0.0);
    }
    let phase = if ((j1.0 - j2.0 + m.0) / 2).rem_euclid(2) == 0 { 1 } else { -1 };
    let scaled = sq * BigRational::from_integer(BigInt::from(j.0 + 1));
    Ok(signed_sqrt(sign * phase, &scaled))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hi(s: &str) -> HalfInt {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(hi("5/2").twice(), 5);
        assert_eq!(hi("+3/2").twice(), 3);
        assert_eq!(hi("-1/2").twice(), -1);
        assert_eq!(hi("2").twice(), 4);
        assert_eq!(hi("4/2"), HalfInt::integer(2));
        assert!("1/3".parse::<HalfInt>().is_err());
        assert!("x".parse::<HalfInt>().is_err());
        assert_eq!(format!("{:+}", hi("3/2")), "+3/2");
        assert_eq!(format!("{}", hi("-5/2")), "-5/2");
        assert_eq!(format!("{}", HalfInt::integer(1)), "1");
    }

    #[test]
    fn projections_cover_range() {
        let ms: Vec<i32> = hi("5/2").projections().map(HalfInt::twice).collect();
        assert_eq!(ms, vec![-5, -3, -1, 1, 3, 5]);
        assert_eq!(HalfInt::ZERO.projections().count(), 1);
    }

    #[test]
    fn three_j_one_one_zero() {
        let v = wigner3j(1.into(), 1.into(), 0.into(), 0.into(), 0.into(), 0.into()).unwrap();
        assert!((v + 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn selection_rules_give_exact_zero() {
        let v = wigner3j(1.into(), 1.into(), 1.into(), 1.into(), 0.into(), 0.into()).unwrap();
        assert_eq!(v, 0.0);
        let half = HalfInt::HALF;
        let v = wigner3j(half, half, 2.into(), half, -half, 0.into()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn invalid_quantum_numbers_are_errors() {
        assert!(wigner3j(1.into(), 1.into(), 0.into(), 2.into(), (-2).into(), 0.into()).is_err());
        assert!(wigner3j(HalfInt::from_twice(-2), 1.into(), 1.into(), 0.into(), 0.into(), 0.into()).is_err());
        // m = 1/2 is not a projection of j = 1
        assert!(clebsch_gordan(1.into(), HalfInt::HALF, 1.into(), 0.into(), 1.into(), HalfInt::HALF).is_err());
    }

    #[test]
    fn coupling_to_zero_is_identity() {
        for tj in 0..8 {
            let j = HalfInt::from_twice(tj);
            let v = clebsch_gordan(j, j, 0.into(), 0.into(), j, j).unwrap();
            assert!((v - 1.0).abs() < 1e-15, "j = {j}");
        }
    }

    #[test]
    fn projection_conservation() {
        let v = clebsch_gordan(hi("5/2"), hi("3/2"), 1.into(), 0.into(), hi("3/2"), hi("1/2")).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn qubit_manifold_ratio_five_three_two() {
        let a = clebsch_gordan(hi("5/2"), hi("5/2"), 1.into(), (-1).into(), hi("3/2"), hi("3/2")).unwrap();
        let b = clebsch_gordan(hi("5/2"), hi("3/2"), 1.into(), (-1).into(), hi("3/2"), hi("1/2")).unwrap();
        let c = clebsch_gordan(hi("5/2"), hi("3/2"), 1.into(), 0.into(), hi("3/2"), hi("3/2")).unwrap();
        let unit = c * c / 2.0;
        assert!((a * a / unit - 5.0).abs() < 1e-12);
        assert!((b * b / unit - 3.0).abs() < 1e-12);
        // absolute values: 2/3, 2/5, 4/15
        assert!((a * a - 2.0 / 3.0).abs() < 1e-15);
        assert!((b * b - 0.4).abs() < 1e-15);
        assert!((c * c - 4.0 / 15.0).abs() < 1e-15);
    }
}
