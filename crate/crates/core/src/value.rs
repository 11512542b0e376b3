//! The exponent `s` and the two value domains of `f_s`: exact rationals for
//! integer `s`, certified enclosures for fractional `s`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::real::{format_rational, BoundedReal};

/// Significant digits used for decimal renderings.
pub const DECIMAL_DIGITS: usize = 20;

/// The exponent `s >= 0`. Integer exponents select exact arithmetic; any
/// other non-negative rational (parsed from a decimal literal) selects
/// bounded arithmetic.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Exponent {
    Integer(u32),
    Real(Rational),
}

impl Exponent {
    pub fn int(s: u32) -> Self {
        Exponent::Integer(s)
    }

    /// Normalizes integral rationals to [`Exponent::Integer`].
    pub fn from_rational(q: Rational) -> Result<Self> {
        if q < 0 {
            return Err(Error::Domain(format!("negative exponent {q}")));
        }
        if *q.denom() == 1 {
            let n = q
                .numer()
                .to_u32()
                .ok_or_else(|| Error::Domain(format!("exponent {q} too large")))?;
            Ok(Exponent::Integer(n))
        } else {
            Ok(Exponent::Real(q))
        }
    }

    pub fn as_rational(&self) -> Rational {
        match self {
            Exponent::Integer(n) => Rational::from(*n),
            Exponent::Real(q) => q.clone(),
        }
    }

    pub fn as_integer(&self) -> Option<u32> {
        match self {
            Exponent::Integer(n) => Some(*n),
            Exponent::Real(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Exponent::Integer(_))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Exponent::Integer(0))
    }

    pub fn to_f64(&self) -> f64 {
        self.as_rational().to_f64()
    }

    pub fn enclosure(&self, prec: u32) -> BoundedReal {
        BoundedReal::from_rational(&self.as_rational(), prec)
    }

    /// `s > 1`
    pub fn exceeds_one(&self) -> bool {
        self.as_rational() > 1
    }

    /// `0 < s <= 1`
    pub fn in_unit_interval(&self) -> bool {
        let q = self.as_rational();
        q > 0 && q <= 1
    }

    /// `p^s` as a bounded enclosure.
    pub fn pow_enclosure(&self, p: u64, prec: u32) -> BoundedReal {
        match self {
            Exponent::Integer(n) => BoundedReal::from_u64(p, prec).powi(*n),
            Exponent::Real(q) => BoundedReal::from_u64(p, prec)
                .pow(&BoundedReal::from_rational(q, prec))
                .expect("p >= 1"),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Integer(n) => write!(f, "{n}"),
            Exponent::Real(q) => write!(f, "{}", decimal_literal(q)),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Exponent::from_rational(parse_decimal(s)?)
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Exact rational from a decimal literal (`1.9`, `-3`, `2.5e-3`) or a
/// fraction (`7/4`).
pub fn parse_decimal(s: &str) -> Result<Rational> {
    let t = s.trim();
    let bad = || Error::Parse(format!("not a decimal or fraction: `{s}`"));
    if let Some((n, d)) = t.split_once('/') {
        let n: Integer = n.trim().parse().map_err(|_| bad())?;
        let d: Integer = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(Error::Domain("zero denominator".into()));
        }
        return Ok(Rational::from((n, d)));
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad());
    }
    let digits: Integer = format!("{int_part}{frac_part}0")
        .parse()
        .map_err(|_| bad())?;
    let digits = digits / 10;
    let scale = exp - frac_part.len() as i32;
    let mut q = Rational::from(digits);
    if scale >= 0 {
        q *= Integer::from(10).pow(scale as u32);
    } else {
        q /= Integer::from(10).pow((-scale) as u32);
    }
    if neg {
        q = -q;
    }
    Ok(q)
}

/// Renders a rational as a finite decimal when it has one, otherwise as
/// a fraction.
pub fn decimal_literal(q: &Rational) -> String {
    let mut d = q.denom().clone();
    let twos = d.find_one(0).unwrap_or(0);
    d >>= twos;
    let mut fives = 0u32;
    while d.is_divisible_u(5) {
        d /= 5;
        fives += 1;
    }
    if d != 1 {
        return q.to_string();
    }
    let places = twos.max(fives);
    let scaled = Rational::from(q * Integer::from(10).pow(places));
    let n = scaled.numer().clone();
    let neg = n < 0;
    let mut digits = n.abs().to_string();
    if places == 0 {
        return if neg { format!("-{digits}") } else { digits };
    }
    while digits.len() <= places as usize {
        digits.insert(0, '0');
    }
    let split = digits.len() - places as usize;
    let out = format!("{}.{}", &digits[..split], &digits[split..]);
    if neg {
        format!("-{out}")
    } else {
        out
    }
}

/// A value of `f_s`: exact for integer `s`, an enclosure otherwise.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Exact(Rational),
    Bounded(BoundedReal),
}

impl Value {
    pub fn one_for(s: &Exponent, prec: u32) -> Value {
        if s.is_exact() {
            Value::Exact(Rational::from(1))
        } else {
            Value::Bounded(BoundedReal::one(prec))
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Value::Exact(q) => Some(q),
            Value::Bounded(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    fn prec_hint(&self, other: &Value) -> u32 {
        match (self, other) {
            (Value::Bounded(a), Value::Bounded(b)) => a.prec().max(b.prec()),
            (Value::Bounded(a), _) | (_, Value::Bounded(a)) => a.prec(),
            _ => crate::real::DEFAULT_PRECISION,
        }
    }

    pub fn enclosure(&self, prec: u32) -> BoundedReal {
        match self {
            Value::Exact(q) => BoundedReal::from_rational(q, prec),
            Value::Bounded(b) => b.clone(),
        }
    }

    pub fn mul(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(Rational::from(a * b)),
            _ => {
                let p = self.prec_hint(other);
                Value::Bounded(&self.enclosure(p) * &other.enclosure(p))
            }
        }
    }

    pub fn sub(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(Rational::from(a - b)),
            _ => {
                let p = self.prec_hint(other);
                Value::Bounded(&self.enclosure(p) - &other.enclosure(p))
            }
        }
    }

    pub fn div(&self, other: &Value) -> Result<Value> {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => {
                if *b == 0 {
                    Err(Error::Domain("division by zero".into()))
                } else {
                    Ok(Value::Exact(Rational::from(a / b)))
                }
            }
            _ => {
                let p = self.prec_hint(other);
                Ok(Value::Bounded((&self.enclosure(p) / &other.enclosure(p))?))
            }
        }
    }

    pub fn mul_rational(&self, q: &Rational) -> Value {
        self.mul(&Value::Exact(q.clone()))
    }

    pub fn abs(&self) -> Value {
        match self {
            Value::Exact(q) => Value::Exact(q.clone().abs()),
            Value::Bounded(b) => Value::Bounded(b.abs()),
        }
    }

    /// Decided comparison against a rational (`None` when an enclosure
    /// straddles `q`).
    pub fn cmp_rational(&self, q: &Rational) -> Option<Ordering> {
        match self {
            Value::Exact(a) => Some(a.cmp(q)),
            Value::Bounded(b) => b.cmp_rational(q),
        }
    }

    pub fn cmp_value(&self, other: &Value) -> Option<Ordering> {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => Some(a.cmp(b)),
            (Value::Exact(a), Value::Bounded(b)) => b.cmp_rational(a).map(Ordering::reverse),
            (Value::Bounded(a), Value::Exact(b)) => a.cmp_rational(b),
            (Value::Bounded(a), Value::Bounded(b)) => a.partial_cmp_real(b),
        }
    }

    /// Equality that is exact for rationals and "enclosures overlap" for
    /// bounded values.
    pub fn consistent_with(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a == b,
            _ => {
                let p = self.prec_hint(other);
                self.enclosure(p).overlaps(&other.enclosure(p))
            }
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => q.to_f64(),
            Value::Bounded(b) => b.to_f64(),
        }
    }

    pub fn decimal(&self) -> String {
        match self {
            Value::Exact(q) => format_rational(q, DECIMAL_DIGITS),
            Value::Bounded(b) => b.to_decimal(DECIMAL_DIGITS),
        }
    }

    pub fn fraction(&self) -> Option<String> {
        self.as_exact().map(|q| q.to_string())
    }

    pub fn abs_error_decimal(&self) -> String {
        match self {
            Value::Exact(_) => "0".to_string(),
            Value::Bounded(b) => crate::real::format_float(&b.abs_error(), 3),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(q) => write!(f, "{q}"),
            Value::Bounded(b) => write!(f, "{b}"),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("Value", 3)?;
        st.serialize_field("decimal", &self.decimal())?;
        st.serialize_field("fraction", &self.fraction())?;
        st.serialize_field("abs_error", &self.abs_error_decimal())?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_parsing() {
        assert_eq!("1".parse::<Exponent>().unwrap(), Exponent::Integer(1));
        assert_eq!("2.0".parse::<Exponent>().unwrap(), Exponent::Integer(2));
        assert_eq!(
            "0.7".parse::<Exponent>().unwrap(),
            Exponent::Real(Rational::from((7, 10)))
        );
        assert_eq!(
            "1.0001".parse::<Exponent>().unwrap().as_rational(),
            Rational::from((10001, 10000))
        );
        assert!("-1".parse::<Exponent>().is_err());
        assert!("abc".parse::<Exponent>().is_err());
        assert_eq!("0.5".parse::<Exponent>().unwrap().to_string(), "0.5");
    }

    #[test]
    fn decimal_parsing() {
        assert_eq!(parse_decimal("1.9").unwrap(), Rational::from((19, 10)));
        assert_eq!(parse_decimal("1e-3").unwrap(), Rational::from((1, 1000)));
        assert_eq!(parse_decimal("-2.50").unwrap(), Rational::from((-5, 2)));
        assert_eq!(parse_decimal("7/4").unwrap(), Rational::from((7, 4)));
        assert_eq!(parse_decimal(".5").unwrap(), Rational::from((1, 2)));
        assert!(parse_decimal("1/0").is_err());
        assert!(parse_decimal("1.2.3").is_err());
        assert!(parse_decimal("").is_err());
    }

    #[test]
    fn literal_rendering() {
        assert_eq!(decimal_literal(&Rational::from((7, 10))), "0.7");
        assert_eq!(decimal_literal(&Rational::from((1, 3))), "1/3");
        assert_eq!(decimal_literal(&Rational::from((-1, 8))), "-0.125");
        assert_eq!(decimal_literal(&Rational::from(3)), "3");
    }

    #[test]
    fn mixed_value_arithmetic() {
        let a = Value::Exact(Rational::from((3, 2)));
        let b = Value::Bounded(BoundedReal::from_rational(&Rational::from((1, 3)), 128));
        let c = a.mul(&b);
        assert!(!c.is_exact());
        assert!(c.consistent_with(&Value::Exact(Rational::from((1, 2)))));
        assert_eq!(a.cmp_rational(&Rational::from(1)), Some(Ordering::Greater));
    }
}
