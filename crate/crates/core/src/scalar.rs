//! Complex scalars in two precision regimes.
//!
//! `Exact` values are Gaussian rationals (arbitrary-precision rational real and
//! imaginary parts) and never round. `Float` values are pairs of `f64` guarded
//! against overflow: any result whose magnitude is non-finite or exceeds
//! [`FLOAT_OVERFLOW_THRESHOLD`] is reported as [`ScalarError::Overflow`].

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use num::{BigInt, BigRational, BigUint, Complex, One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Float-regime results with a larger magnitude are treated as overflow.
pub const FLOAT_OVERFLOW_THRESHOLD: f64 = 1e100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Exact,
    Float,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Exact => f.write_str("exact"),
            Regime::Float => f.write_str("float"),
        }
    }
}

impl FromStr for Regime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(Regime::Exact),
            "float" => Ok(Regime::Float),
            other => Err(format!("unknown regime {other:?} (expected exact|float)")),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarError {
    #[error("mixed-regime arithmetic ({left} with {right})")]
    RegimeMismatch { left: Regime, right: Regime },
    #[error("division by zero")]
    DivisionByZero,
    #[error("floating-point overflow (magnitude {magnitude:e})")]
    Overflow { magnitude: f64 },
    #[error("invalid scalar text {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

/// A complex number, either exact (Gaussian rational) or double precision.
#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Complex<BigRational>),
    Float(Complex<f64>),
}

fn guard(c: Complex<f64>) -> Result<Scalar, ScalarError> {
    let magnitude = c.norm();
    if !magnitude.is_finite() || magnitude > FLOAT_OVERFLOW_THRESHOLD {
        return Err(ScalarError::Overflow { magnitude });
    }
    Ok(Scalar::Float(c))
}

impl Scalar {
    pub fn zero(regime: Regime) -> Self {
        match regime {
            Regime::Exact => Scalar::Exact(Complex::zero()),
            Regime::Float => Scalar::Float(Complex::zero()),
        }
    }

    pub fn one(regime: Regime) -> Self {
        match regime {
            Regime::Exact => Scalar::Exact(Complex::one()),
            Regime::Float => Scalar::Float(Complex::one()),
        }
    }

    pub fn from_integer(regime: Regime, value: i64) -> Self {
        match regime {
            Regime::Exact => Scalar::Exact(Complex::new(
                BigRational::from_integer(BigInt::from(value)),
                BigRational::zero(),
            )),
            Regime::Float => Scalar::Float(Complex::new(value as f64, 0.0)),
        }
    }

    /// Exact Gaussian integer `re + i·im`.
    pub fn gaussian(re: i64, im: i64) -> Self {
        Scalar::Exact(Complex::new(
            BigRational::from_integer(re.into()),
            BigRational::from_integer(im.into()),
        ))
    }

    /// Exact real rational `numer / denom`.
    ///
    /// Panics if `denom` is zero.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        Scalar::Exact(Complex::new(
            BigRational::new(numer.into(), denom.into()),
            BigRational::zero(),
        ))
    }

    pub fn exact(re: BigRational, im: BigRational) -> Self {
        Scalar::Exact(Complex::new(re, im))
    }

    /// Float scalar, rejecting values beyond the overflow threshold.
    pub fn float(re: f64, im: f64) -> Result<Self, ScalarError> {
        guard(Complex::new(re, im))
    }

    pub fn regime(&self) -> Regime {
        match self {
            Scalar::Exact(_) => Regime::Exact,
            Scalar::Float(_) => Regime::Float,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(c) => c.is_zero(),
            Scalar::Float(c) => c.re == 0.0 && c.im == 0.0,
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Exact(c) => c.is_one(),
            Scalar::Float(c) => c.re == 1.0 && c.im == 0.0,
        }
    }

    fn mismatch(&self, other: &Scalar) -> ScalarError {
        ScalarError::RegimeMismatch {
            left: self.regime(),
            right: other.regime(),
        }
    }

    pub fn checked_add(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(a + b)),
            (Scalar::Float(a), Scalar::Float(b)) => guard(a + b),
            _ => Err(self.mismatch(other)),
        }
    }

    pub fn checked_sub(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(a - b)),
            (Scalar::Float(a), Scalar::Float(b)) => guard(a - b),
            _ => Err(self.mismatch(other)),
        }
    }

    pub fn checked_mul(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(a * b)),
            (Scalar::Float(a), Scalar::Float(b)) => guard(a * b),
            _ => Err(self.mismatch(other)),
        }
    }

    pub fn checked_div(&self, other: &Scalar) -> Result<Scalar, ScalarError> {
        if self.regime() != other.regime() {
            return Err(self.mismatch(other));
        }
        if other.is_zero() {
            return Err(ScalarError::DivisionByZero);
        }
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Ok(Scalar::Exact(a / b)),
            (Scalar::Float(a), Scalar::Float(b)) => guard(a / b),
            _ => unreachable!(),
        }
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Exact(c) => Scalar::Exact(-c),
            Scalar::Float(c) => Scalar::Float(-c),
        }
    }

    /// `self^e` by repeated squaring, with `0^0 = 1`.
    pub fn pow(&self, e: &BigExponent) -> Result<Scalar, ScalarError> {
        let bits = e.0.bits();
        let mut result = Scalar::one(self.regime());
        let mut base = self.clone();
        for i in 0..bits {
            if e.0.bit(i) {
                result = result.checked_mul(&base)?;
            }
            if i + 1 < bits {
                base = base.checked_mul(&base)?;
            }
        }
        Ok(result)
    }

    pub fn pow_u64(&self, e: u64) -> Result<Scalar, ScalarError> {
        self.pow(&BigExponent::from(e))
    }

    /// Nearest double-precision value. Float scalars are returned unchanged.
    pub fn to_float(&self) -> Result<Scalar, ScalarError> {
        match self {
            Scalar::Float(_) => Ok(self.clone()),
            Scalar::Exact(c) => {
                let re = c.re.to_f64().unwrap_or(f64::NAN);
                let im = c.im.to_f64().unwrap_or(f64::NAN);
                if !re.is_finite() || !im.is_finite() {
                    return Err(ScalarError::Overflow {
                        magnitude: f64::INFINITY,
                    });
                }
                Ok(Scalar::Float(Complex::new(re, im)))
            }
        }
    }

    /// Approximate complex modulus; saturates to infinity for huge exact values.
    pub fn magnitude(&self) -> f64 {
        match self {
            Scalar::Float(c) => c.norm(),
            Scalar::Exact(c) => {
                let sq = &c.re * &c.re + &c.im * &c.im;
                sq.to_f64().map(f64::sqrt).unwrap_or(f64::INFINITY)
            }
        }
    }

    /// Squared modulus, exact in the exact regime.
    pub fn norm_sqr(&self) -> Scalar {
        match self {
            Scalar::Exact(c) => Scalar::Exact(Complex::new(c.norm_sqr(), BigRational::zero())),
            Scalar::Float(c) => Scalar::Float(Complex::new(c.norm_sqr(), 0.0)),
        }
    }

    /// Largest bit length among the numerators and denominators of the parts.
    /// Zero for float scalars.
    pub fn bit_size(&self) -> u64 {
        match self {
            Scalar::Float(_) => 0,
            Scalar::Exact(c) => [
                c.re.numer().bits(),
                c.re.denom().bits(),
                c.im.numer().bits(),
                c.im.denom().bits(),
            ]
            .into_iter()
            .max()
            .unwrap_or(0),
        }
    }

    pub fn as_exact(&self) -> Option<&Complex<BigRational>> {
        match self {
            Scalar::Exact(c) => Some(c),
            Scalar::Float(_) => None,
        }
    }

    pub fn as_float(&self) -> Option<Complex<f64>> {
        match self {
            Scalar::Float(c) => Some(*c),
            Scalar::Exact(_) => None,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(c) => {
                if c.im.is_zero() {
                    write!(f, "{}", c.re)
                } else if c.im.is_negative() {
                    write!(f, "{} - {}i", c.re, -&c.im)
                } else {
                    write!(f, "{} + {}i", c.re, c.im)
                }
            }
            Scalar::Float(c) => write!(f, "{c}"),
        }
    }
}

/// Arbitrary-precision nonnegative integer exponent.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BigExponent(pub BigUint);

impl BigExponent {
    pub fn zero() -> Self {
        BigExponent(BigUint::zero())
    }

    pub fn one() -> Self {
        BigExponent(BigUint::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn value(&self) -> &BigUint {
        &self.0
    }
}

impl From<u64> for BigExponent {
    fn from(v: u64) -> Self {
        BigExponent(BigUint::from(v))
    }
}

impl fmt::Display for BigExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Add for BigExponent {
    type Output = BigExponent;
    fn add(self, rhs: BigExponent) -> BigExponent {
        BigExponent(self.0 + rhs.0)
    }
}

impl<'a> Add<&'a BigExponent> for &'a BigExponent {
    type Output = BigExponent;
    fn add(self, rhs: &BigExponent) -> BigExponent {
        BigExponent(&self.0 + &rhs.0)
    }
}

impl Mul for BigExponent {
    type Output = BigExponent;
    fn mul(self, rhs: BigExponent) -> BigExponent {
        BigExponent(self.0 * rhs.0)
    }
}

impl<'a> Mul<&'a BigExponent> for &'a BigExponent {
    type Output = BigExponent;
    fn mul(self, rhs: &BigExponent) -> BigExponent {
        BigExponent(&self.0 * &rhs.0)
    }
}

/// Parse one exact component written as `"p/q"` or `"p"`.
pub fn parse_rational(text: &str) -> Result<BigRational, ScalarError> {
    BigRational::from_str(text.trim()).map_err(|e| ScalarError::Parse {
        text: text.to_string(),
        reason: e.to_string(),
    })
}

/// Fixed-point decimal rendering with `digits` places after the point,
/// rounding half away from zero.
pub fn format_decimal(value: &BigRational, digits: usize) -> String {
    let scale = BigInt::from(10u32).pow(digits as u32);
    let scaled = (value * BigRational::from_integer(scale.clone())).round();
    let n = scaled.to_integer();
    let sign = if n.is_negative() { "-" } else { "" };
    let abs = n.abs();
    if digits == 0 {
        return format!("{sign}{abs}");
    }
    let int_part = &abs / &scale;
    let frac_part = &abs % &scale;
    format!("{sign}{int_part}.{frac_part:0>digits$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_pow(x: &Scalar, e: u64) -> Scalar {
        let mut acc = Scalar::one(x.regime());
        for _ in 0..e {
            acc = acc.checked_mul(x).unwrap();
        }
        acc
    }

    #[test]
    fn zero_power_is_one() {
        for z in [Scalar::gaussian(0, 0), Scalar::gaussian(5, -2)] {
            assert_eq!(z.pow(&BigExponent::zero()).unwrap(), Scalar::gaussian(1, 0));
        }
        let zf = Scalar::float(0.0, 0.0).unwrap();
        assert!(zf.pow(&BigExponent::zero()).unwrap().is_one());
    }

    #[test]
    fn zero_base_positive_power() {
        let z = Scalar::gaussian(0, 0);
        assert!(z.pow_u64(1).unwrap().is_zero());
        assert!(z.pow_u64(77).unwrap().is_zero());
    }

    #[test]
    fn small_powers() {
        assert_eq!(Scalar::gaussian(2, 0).pow_u64(10).unwrap(), Scalar::gaussian(1024, 0));
        // (1+i)^2 = 2i, (2i)^2 = -4
        assert_eq!(Scalar::gaussian(1, 1).pow_u64(4).unwrap(), Scalar::gaussian(-4, 0));
    }

    #[test]
    fn pow_matches_repeated_multiplication() {
        let x = Scalar::exact(
            BigRational::new(3.into(), 7.into()),
            BigRational::new((-5).into(), 4.into()),
        );
        for e in 0..=64 {
            assert_eq!(x.pow_u64(e).unwrap(), naive_pow(&x, e), "e = {e}");
        }
    }

    #[test]
    fn to_float_rounds() {
        assert_eq!(
            Scalar::ratio(1, 2).to_float().unwrap(),
            Scalar::Float(Complex::new(0.5, 0.0))
        );
        assert_eq!(
            Scalar::ratio(1, 3).to_float().unwrap(),
            Scalar::Float(Complex::new(1.0 / 3.0, 0.0))
        );
        assert!(Scalar::gaussian(0, 0).to_float().unwrap().is_zero());
    }

    #[test]
    fn to_float_rejects_out_of_range() {
        let huge = Scalar::gaussian(2, 0).pow_u64(2000).unwrap();
        assert!(matches!(huge.to_float(), Err(ScalarError::Overflow { .. })));
    }

    #[test]
    fn float_overflow_is_reported() {
        let big = Scalar::float(1e60, 0.0).unwrap();
        match big.checked_mul(&big) {
            Err(ScalarError::Overflow { magnitude }) => assert!(magnitude > 1e100),
            other => panic!("expected overflow, got {other:?}"),
        }
        assert!(Scalar::float(f64::NAN, 0.0).is_err());
        assert!(Scalar::float(2.0, 0.0).unwrap().pow_u64(400).is_err());
    }

    #[test]
    fn division_by_zero_rejected() {
        assert_eq!(
            Scalar::gaussian(1, 1).checked_div(&Scalar::gaussian(0, 0)),
            Err(ScalarError::DivisionByZero)
        );
        let f = Scalar::float(1.0, 0.0).unwrap();
        assert_eq!(
            f.checked_div(&Scalar::float(0.0, 0.0).unwrap()),
            Err(ScalarError::DivisionByZero)
        );
    }

    #[test]
    fn mixed_regime_rejected() {
        let a = Scalar::gaussian(1, 0);
        let b = Scalar::float(1.0, 0.0).unwrap();
        assert!(matches!(a.checked_add(&b), Err(ScalarError::RegimeMismatch { .. })));
        assert!(matches!(b.checked_mul(&a), Err(ScalarError::RegimeMismatch { .. })));
    }

    #[test]
    fn decimal_formatting() {
        let third = BigRational::new(1.into(), 3.into());
        assert_eq!(format_decimal(&third, 4), "0.3333");
        let neg = BigRational::new((-2).into(), 3.into());
        assert_eq!(format_decimal(&neg, 3), "-0.667");
        assert_eq!(format_decimal(&BigRational::from_integer(27.into()), 2), "27.00");
        assert_eq!(format_decimal(&BigRational::new(5.into(), 2.into()), 0), "3");
    }

    #[test]
    fn parse_exact_text() {
        assert_eq!(parse_rational("3/6").unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_rational("-7").unwrap(), BigRational::from_integer((-7).into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }
}
