//! Interval-backed reals with a certified absolute error.
//!
//! A [`BoundedReal`] is a closed interval `[lo, hi]` of MPFR floats. Every
//! operation rounds the lower endpoint down and the upper endpoint up, so the
//! true quantity is always enclosed. The public view is `value ± abs_error`
//! (midpoint and radius).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// Default working precision in significant bits.
pub const DEFAULT_PRECISION: u32 = 128;

/// Number of times a comparison is retried at doubled precision before
/// [`Error::Undecidable`] is raised.
pub const ESCALATION_RETRIES: u32 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundedReal {
    lo: Float,
    hi: Float,
}

macro_rules! rounded {
    ($prec:expr, $val:expr, $round:expr) => {
        Float::with_val_round($prec, $val, $round).0
    };
}

impl BoundedReal {
    pub fn from_rational(q: &Rational, prec: u32) -> Self {
        BoundedReal {
            lo: rounded!(prec, q, Round::Down),
            hi: rounded!(prec, q, Round::Up),
        }
    }

    pub fn from_integer(n: &Integer, prec: u32) -> Self {
        BoundedReal {
            lo: rounded!(prec, n, Round::Down),
            hi: rounded!(prec, n, Round::Up),
        }
    }

    pub fn from_u64(n: u64, prec: u32) -> Self {
        BoundedReal {
            lo: rounded!(prec, n, Round::Down),
            hi: rounded!(prec, n, Round::Up),
        }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_u64(1, prec)
    }

    pub fn zero(prec: u32) -> Self {
        Self::from_u64(0, prec)
    }

    /// Encloses `value ± err`, for quantities computed outside MPFR.
    pub fn from_f64_with_error(value: f64, err: f64, prec: u32) -> Self {
        assert!(value.is_finite() && err.is_finite() && err >= 0.0);
        let v = Float::with_val(prec, value);
        let e = Float::with_val(prec, err);
        BoundedReal {
            lo: rounded!(prec, &v - &e, Round::Down),
            hi: rounded!(prec, &v + &e, Round::Up),
        }
    }

    pub fn from_bounds(lo: Float, hi: Float) -> Self {
        assert!(lo <= hi, "inverted interval");
        BoundedReal { lo, hi }
    }

    /// Working precision (bits) of the endpoints.
    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    pub fn lower(&self) -> &Float {
        &self.lo
    }

    pub fn upper(&self) -> &Float {
        &self.hi
    }

    /// Midpoint of the enclosure.
    pub fn value(&self) -> Float {
        let p = self.prec() + 1;
        let mut m = Float::with_val(p, &self.lo + &self.hi);
        m /= 2;
        m
    }

    /// Radius of the enclosure, rounded up.
    pub fn abs_error(&self) -> Float {
        let p = self.prec();
        let mut r = rounded!(p, &self.hi - &self.lo, Round::Up);
        r /= 2;
        r
    }

    pub fn to_f64(&self) -> f64 {
        self.value().to_f64()
    }

    pub fn contains_rational(&self, q: &Rational) -> bool {
        self.lo <= *q && self.hi >= *q
    }

    /// `Some(ordering)` when the enclosure lies strictly on one side of `q`
    /// (or is the exact point `q`), `None` otherwise.
    pub fn cmp_rational(&self, q: &Rational) -> Option<Ordering> {
        if self.hi < *q {
            Some(Ordering::Less)
        } else if self.lo > *q {
            Some(Ordering::Greater)
        } else if self.lo == *q && self.hi == *q {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn partial_cmp_real(&self, other: &BoundedReal) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && other.lo == other.hi && self.lo == other.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn overlaps(&self, other: &BoundedReal) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    /// True when `other` is entirely inside `self`.
    pub fn encloses(&self, other: &BoundedReal) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn is_positive(&self) -> bool {
        self.lo > 0
    }

    /// Widens the enclosure by `r` on both sides.
    pub fn widen(&self, r: &Float) -> Self {
        let p = self.prec();
        BoundedReal {
            lo: rounded!(p, &self.lo - r, Round::Down),
            hi: rounded!(p, &self.hi + r, Round::Up),
        }
    }

    pub fn hull(&self, other: &BoundedReal) -> Self {
        let lo = if self.lo <= other.lo {
            &self.lo
        } else {
            &other.lo
        };
        let hi = if self.hi >= other.hi {
            &self.hi
        } else {
            &other.hi
        };
        BoundedReal {
            lo: lo.clone(),
            hi: hi.clone(),
        }
    }

    pub fn abs(&self) -> Self {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            -self
        } else {
            let nlo = Float::with_val(self.prec(), -&self.lo);
            let hi = if nlo > self.hi { nlo } else { self.hi.clone() };
            BoundedReal {
                lo: Float::with_val(self.prec(), 0),
                hi,
            }
        }
    }

    pub fn recip(&self) -> Result<Self> {
        if self.lo <= 0 && self.hi >= 0 {
            return Err(Error::Domain(
                "reciprocal of an interval containing 0".into(),
            ));
        }
        let p = self.prec();
        Ok(BoundedReal {
            lo: rounded!(p, self.hi.recip_ref(), Round::Down),
            hi: rounded!(p, self.lo.recip_ref(), Round::Up),
        })
    }

    pub fn ln(&self) -> Result<Self> {
        if self.lo <= 0 {
            return Err(Error::Domain(
                "logarithm of a non-positive enclosure".into(),
            ));
        }
        let p = self.prec();
        Ok(BoundedReal {
            lo: rounded!(p, self.lo.ln_ref(), Round::Down),
            hi: rounded!(p, self.hi.ln_ref(), Round::Up),
        })
    }

    pub fn exp(&self) -> Self {
        let p = self.prec();
        BoundedReal {
            lo: rounded!(p, self.lo.exp_ref(), Round::Down),
            hi: rounded!(p, self.hi.exp_ref(), Round::Up),
        }
    }

    /// `self^k` for a non-negative enclosure.
    pub fn powi(&self, k: u32) -> Self {
        assert!(self.lo >= 0, "powi expects a non-negative base");
        let p = self.prec();
        BoundedReal {
            lo: rounded!(p, (&self.lo).pow(k), Round::Down),
            hi: rounded!(p, (&self.hi).pow(k), Round::Up),
        }
    }

    /// `self^e` for a strictly positive base. `x^y` is monotone in each
    /// argument separately, so the extremes sit at the corners.
    pub fn pow(&self, e: &BoundedReal) -> Result<Self> {
        if self.lo <= 0 {
            return Err(Error::Domain("real power of a non-positive base".into()));
        }
        let p = self.prec().max(e.prec());
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for b in [&self.lo, &self.hi] {
            for x in [&e.lo, &e.hi] {
                let l = rounded!(p, b.pow(x), Round::Down);
                let h = rounded!(p, b.pow(x), Round::Up);
                if lo.as_ref().is_none_or(|c| l < *c) {
                    lo = Some(l);
                }
                if hi.as_ref().is_none_or(|c| h > *c) {
                    hi = Some(h);
                }
            }
        }
        Ok(BoundedReal {
            lo: lo.unwrap(),
            hi: hi.unwrap(),
        })
    }

    /// Re-rounds the enclosure to `prec` bits (outward).
    pub fn with_prec(&self, prec: u32) -> Self {
        BoundedReal {
            lo: rounded!(prec, &self.lo, Round::Down),
            hi: rounded!(prec, &self.hi, Round::Up),
        }
    }

    /// ln 2 enclosure at `prec` bits.
    pub fn ln2(prec: u32) -> Self {
        let two = Self::from_u64(2, prec);
        two.ln().expect("2 > 0")
    }

    /// Decimal rendering of the midpoint with `digits` significant digits.
    pub fn to_decimal(&self, digits: usize) -> String {
        format_float(&self.value(), digits)
    }
}

impl Serialize for BoundedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("BoundedReal", 2)?;
        st.serialize_field("decimal", &self.to_decimal(20))?;
        st.serialize_field("abs_error", &format_float(&self.abs_error(), 3))?;
        st.end()
    }
}

impl fmt::Display for BoundedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ± {}",
            format_float(&self.value(), 20),
            format_float(&self.abs_error(), 3)
        )
    }
}

fn interval_mul(a: &BoundedReal, b: &BoundedReal) -> BoundedReal {
    let p = a.prec().max(b.prec());
    let pairs = [
        (&a.lo, &b.lo),
        (&a.lo, &b.hi),
        (&a.hi, &b.lo),
        (&a.hi, &b.hi),
    ];
    let mut lo: Option<Float> = None;
    let mut hi: Option<Float> = None;
    for (x, y) in pairs {
        let l = rounded!(p, x * y, Round::Down);
        let h = rounded!(p, x * y, Round::Up);
        if lo.as_ref().is_none_or(|c| l < *c) {
            lo = Some(l);
        }
        if hi.as_ref().is_none_or(|c| h > *c) {
            hi = Some(h);
        }
    }
    BoundedReal {
        lo: lo.unwrap(),
        hi: hi.unwrap(),
    }
}

impl Add<&BoundedReal> for &BoundedReal {
    type Output = BoundedReal;
    fn add(self, rhs: &BoundedReal) -> BoundedReal {
        let p = self.prec().max(rhs.prec());
        BoundedReal {
            lo: rounded!(p, &self.lo + &rhs.lo, Round::Down),
            hi: rounded!(p, &self.hi + &rhs.hi, Round::Up),
        }
    }
}

impl Sub<&BoundedReal> for &BoundedReal {
    type Output = BoundedReal;
    fn sub(self, rhs: &BoundedReal) -> BoundedReal {
        let p = self.prec().max(rhs.prec());
        BoundedReal {
            lo: rounded!(p, &self.lo - &rhs.hi, Round::Down),
            hi: rounded!(p, &self.hi - &rhs.lo, Round::Up),
        }
    }
}

impl Mul<&BoundedReal> for &BoundedReal {
    type Output = BoundedReal;
    fn mul(self, rhs: &BoundedReal) -> BoundedReal {
        interval_mul(self, rhs)
    }
}

impl Div<&BoundedReal> for &BoundedReal {
    type Output = Result<BoundedReal>;
    fn div(self, rhs: &BoundedReal) -> Result<BoundedReal> {
        Ok(interval_mul(self, &rhs.recip()?))
    }
}

impl Neg for &BoundedReal {
    type Output = BoundedReal;
    fn neg(self) -> BoundedReal {
        BoundedReal {
            lo: Float::with_val(self.hi.prec(), -&self.hi),
            hi: Float::with_val(self.lo.prec(), -&self.lo),
        }
    }
}

impl Mul<&Rational> for &BoundedReal {
    type Output = BoundedReal;
    fn mul(self, rhs: &Rational) -> BoundedReal {
        interval_mul(self, &BoundedReal::from_rational(rhs, self.prec()))
    }
}

/// Runs `attempt` at `bits`, doubling the precision up to
/// [`ESCALATION_RETRIES`] times while it reports `None` (ambiguous).
pub fn decide<T>(
    what: &str,
    bits: u32,
    mut attempt: impl FnMut(u32) -> Result<Option<T>>,
) -> Result<T> {
    let mut b = bits;
    for _ in 0..=ESCALATION_RETRIES {
        if let Some(v) = attempt(b)? {
            return Ok(v);
        }
        b *= 2;
    }
    Err(Error::Undecidable {
        what: what.to_string(),
        bits: b / 2,
    })
}

/// Decimal string of a float: plain notation for moderate exponents,
/// scientific (`1.23e-45`) otherwise.
pub fn format_float(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "NaN".into()
        } else if x.is_sign_negative() {
            "-inf".into()
        } else {
            "inf".into()
        };
    }
    let raw = x.to_string_radix_round(10, Some(digits.max(1)), Round::Nearest);
    let (neg, body) = match raw.strip_prefix('-') {
        Some(b) => (true, b),
        None => (false, raw.as_str()),
    };
    let (mant, exp) = match body.split_once('e') {
        Some((m, e)) => (m, e.parse::<i64>().unwrap_or(0)),
        None => (body, 0),
    };
    let digits_str: String = mant.chars().filter(|c| c.is_ascii_digit()).collect();
    // rug prints d.ddd with exponent relative to the first digit
    let point = mant.find('.').unwrap_or(mant.len()) as i64 + exp;
    let trimmed = digits_str.trim_end_matches('0');
    let ds = if trimmed.is_empty() { "0" } else { trimmed };
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    if (-5..=16).contains(&point) {
        if point <= 0 {
            out.push_str("0.");
            for _ in 0..(-point) {
                out.push('0');
            }
            out.push_str(ds);
        } else if point as usize >= ds.len() {
            out.push_str(ds);
            for _ in 0..(point as usize - ds.len()) {
                out.push('0');
            }
        } else {
            out.push_str(&ds[..point as usize]);
            out.push('.');
            out.push_str(&ds[point as usize..]);
        }
    } else {
        out.push_str(&ds[..1]);
        if ds.len() > 1 {
            out.push('.');
            out.push_str(&ds[1..]);
        }
        out.push('e');
        out.push_str(&(point - 1).to_string());
    }
    out
}

/// Decimal rendering of an exact rational with `digits` significant digits.
pub fn format_rational(q: &Rational, digits: usize) -> String {
    let bits = (digits as f64 * 3.33) as u32 + 32;
    format_float(&Float::with_val(bits, q), digits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn rational_enclosure_contains_value() {
        let x = BoundedReal::from_rational(&q(1, 3), 64);
        assert!(x.contains_rational(&q(1, 3)));
        assert!(x.abs_error() > 0);
        assert_eq!(x.cmp_rational(&q(1, 2)), Some(Ordering::Less));
        assert_eq!(x.cmp_rational(&q(1, 3)), None);
    }

    #[test]
    fn ln_and_exp_are_inverse_within_error() {
        let x = BoundedReal::from_u64(7, 128);
        let round = x.ln().unwrap().exp();
        assert!(round.contains_rational(&q(7, 1)));
        assert!(round.abs_error() < Float::with_val(64, 1e-30));
    }

    #[test]
    fn subtraction_is_conservative() {
        let a = BoundedReal::from_rational(&q(2, 3), 64);
        let b = BoundedReal::from_rational(&q(1, 3), 64);
        let d = &a - &b;
        assert!(d.contains_rational(&q(1, 3)));
    }

    #[test]
    fn pow_matches_sqrt() {
        let two = BoundedReal::from_u64(2, 128);
        let half = BoundedReal::from_rational(&q(1, 2), 128);
        let r = two.pow(&half).unwrap();
        let sq = &r * &r;
        assert!(sq.contains_rational(&q(2, 1)));
    }

    #[test]
    fn recip_rejects_zero() {
        let z = BoundedReal::from_f64_with_error(0.0, 1e-3, 64);
        assert!(z.recip().is_err());
    }

    #[test]
    fn decide_escalates_then_gives_up() {
        let mut seen = Vec::new();
        let r: Result<()> = decide("never", 64, |b| {
            seen.push(b);
            Ok(None)
        });
        assert!(matches!(r, Err(Error::Undecidable { .. })));
        assert_eq!(seen, vec![64, 128, 256, 512, 1024]);
    }

    #[test]
    fn formatting() {
        let p = 128;
        assert_eq!(format_rational(&q(3, 2), 10), "1.5");
        assert_eq!(format_rational(&q(2, 1), 10), "2");
        assert_eq!(format_rational(&q(-1, 8), 10), "-0.125");
        assert_eq!(format_rational(&q(1, 1000000000), 5), "1e-9");
        assert_eq!(format_float(&Float::with_val(p, 12345), 10), "12345");
        assert_eq!(format_float(&Float::with_val(p, 1.0e20), 3), "1e20");
        assert_eq!(format_rational(&q(1, 3), 5), "0.33333");
    }
}
