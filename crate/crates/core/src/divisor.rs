//! Evaluation of `sigma_s` and `f_s = sigma_s(n)/n^s` on factored integers.
//!
//! `f_s` is multiplicative, and on a prime power
//! `f_s(p^k) = (p^((k+1)s) - 1) / ((p^s - 1) p^(ks)) = 1 + p^-s + ... + p^-ks`.
//! Integer `s` gives exact rationals; fractional `s` gives enclosures.
//! `s = 0` is the divisor count and never goes through the closed form.

use rug::ops::Pow;
use rug::{Integer, Rational};

use crate::error::{domain, resource, Result};
use crate::factorization::Factorization;
use crate::real::BoundedReal;
use crate::value::{Exponent, Value};

/// Largest `n` accepted by [`f_s_brute`].
pub const BRUTE_MAX: u64 = 10_000_000;

/// `f_s(p^k)` via the geometric closed form.
pub fn f_prime_power(p: u64, k: u32, s: &Exponent, prec: u32) -> Result<Value> {
    if k == 0 {
        return Err(domain("prime-power exponent must be >= 1"));
    }
    match s {
        Exponent::Integer(0) => Err(domain(
            "closed form divides by p^s - 1 = 0 at s = 0; use the divisor count",
        )),
        Exponent::Integer(si) => {
            let ps = Integer::from(p).pow(*si);
            let num = ps.clone().pow(k + 1) - 1u32;
            let den = Integer::from(&ps - 1u32) * ps.pow(k);
            Ok(Value::Exact(Rational::from((num, den))))
        }
        Exponent::Real(_) => Ok(Value::Bounded(bounded_prime_power(p, k, s, prec))),
    }
}

/// `sum_{j<=k} y^j` with `y = p^-s` is increasing in `y`, so the enclosure
/// is evaluated at the two endpoints of `y` separately.
fn bounded_prime_power(p: u64, k: u32, s: &Exponent, prec: u32) -> BoundedReal {
    let y = s.pow_enclosure(p, prec).recip().expect("p^s > 0");
    let one = BoundedReal::one(prec);
    let h = |y0: &rug::Float| {
        let yp = BoundedReal::from_bounds(y0.clone(), y0.clone());
        let num = &one - &yp.powi(k + 1);
        let den = &one - &yp;
        (&num / &den).expect("y < 1")
    };
    let lo = h(y.lower());
    let hi = h(y.upper());
    BoundedReal::from_bounds(lo.lower().clone(), hi.upper().clone())
}

/// `f_s(p) = 1 + p^-s`.
pub fn f_prime(p: u64, s: &Exponent, prec: u32) -> Value {
    match s {
        Exponent::Integer(0) => Value::Exact(Rational::from(2)),
        Exponent::Integer(si) => {
            let ps = Integer::from(p).pow(*si);
            Value::Exact(Rational::from((Integer::from(&ps + 1u32), ps)))
        }
        Exponent::Real(_) => Value::Bounded(bounded_prime_power(p, 1, s, prec)),
    }
}

/// `f_s(n)` as the product of prime-power factors; `f_s(1) = 1`.
pub fn f_s(fact: &Factorization, s: &Exponent, prec: u32) -> Value {
    if s.is_zero() {
        let count: Integer = fact.iter().map(|(_, k)| Integer::from(k + 1)).product();
        return Value::Exact(Rational::from(count));
    }
    let mut acc = Value::one_for(s, prec);
    for (p, k) in fact.iter() {
        let term = f_prime_power(p, k, s, prec).expect("k >= 1 and s > 0");
        acc = acc.mul(&term);
    }
    acc
}

/// `f_s(n)` for a machine-sized `n`.
pub fn f_s_u64(n: u64, s: &Exponent, prec: u32) -> Result<Value> {
    Ok(f_s(&crate::primes::factorize(n)?, s, prec))
}

/// `sigma_s(n)` exactly; `sigma_0` is the number of divisors.
/// `max_bits` bounds the size of the result.
pub fn sigma_s(fact: &Factorization, s: u32, max_bits: u64) -> Result<Integer> {
    let est: f64 = fact
        .iter()
        .map(|(p, k)| ((k + 1) as f64) * (s as f64) * (p as f64).log2())
        .sum();
    if est > max_bits as f64 {
        return Err(resource(format!(
            "sigma_{s} of {fact} needs about {est:.0} bits (budget {max_bits})"
        )));
    }
    let mut acc = Integer::from(1);
    for (p, k) in fact.iter() {
        if s == 0 {
            acc *= k + 1;
        } else {
            let ps = Integer::from(p).pow(s);
            let num = ps.clone().pow(k + 1) - 1u32;
            acc *= num / (ps - 1u32);
        }
    }
    Ok(acc)
}

/// `sum_{d | n} d^s / n^s` by explicit divisor enumeration, without using
/// multiplicativity. An independent oracle for the product formula.
pub fn f_s_brute(n: u64, s: &Exponent, prec: u32) -> Result<Value> {
    if n == 0 || n > BRUTE_MAX {
        return Err(domain(format!(
            "brute-force evaluation needs 1 <= n <= {BRUTE_MAX}"
        )));
    }
    let mut divisors = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n.is_multiple_of(d) {
            divisors.push(d);
            if d * d != n {
                divisors.push(n / d);
            }
        }
        d += 1;
    }
    match s {
        Exponent::Integer(si) => {
            let sum: Integer = divisors.iter().map(|&d| Integer::from(d).pow(*si)).sum();
            Ok(Value::Exact(Rational::from((
                sum,
                Integer::from(n).pow(*si),
            ))))
        }
        Exponent::Real(q) => {
            let e = BoundedReal::from_rational(q, prec);
            let pow = |x: u64| BoundedReal::from_u64(x, prec).pow(&e).expect("x >= 1");
            let mut sum = BoundedReal::zero(prec);
            for &d in &divisors {
                sum = &sum + &pow(d);
            }
            Ok(Value::Bounded((&sum / &pow(n))?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Value {
        Value::Exact(Rational::from((n, d)))
    }

    fn fs(n: u64, s: u32) -> Value {
        f_s_u64(n, &Exponent::int(s), 128).unwrap()
    }

    #[test]
    fn prime_power_examples() {
        let one = Exponent::int(1);
        assert_eq!(f_prime_power(2, 1, &one, 128).unwrap(), q(3, 2));
        assert_eq!(f_prime_power(3, 2, &one, 128).unwrap(), q(13, 9));
        assert_eq!(
            f_prime_power(2, 2, &Exponent::int(2), 128).unwrap(),
            q(21, 16)
        );
        assert!(f_prime_power(2, 1, &Exponent::int(0), 128).is_err());
        assert!(f_prime_power(2, 0, &one, 128).is_err());
    }

    #[test]
    fn f_examples() {
        assert_eq!(fs(6, 1), q(2, 1));
        assert_eq!(fs(10, 1), q(9, 5));
        assert_eq!(fs(28, 1), q(2, 1));
        assert_eq!(fs(1, 1), q(1, 1));
        assert_eq!(fs(1, 3), q(1, 1));
        assert_eq!(fs(12, 0), q(6, 1));
    }

    #[test]
    fn sigma_examples() {
        let f = |n: u64| Factorization::from(n);
        assert_eq!(sigma_s(&f(10), 1, 1 << 20).unwrap(), 18);
        assert_eq!(sigma_s(&f(12), 0, 1 << 20).unwrap(), 6);
        assert_eq!(sigma_s(&f(97), 1, 1 << 20).unwrap(), 98);
        assert_eq!(sigma_s(&f(6), 2, 1 << 20).unwrap(), 1 + 4 + 9 + 36);
        let huge: Factorization = "2^100000".parse().unwrap();
        assert!(sigma_s(&huge, 3, 1 << 16).is_err());
    }

    #[test]
    fn brute_examples() {
        let one = Exponent::int(1);
        assert_eq!(f_s_brute(6, &one, 128).unwrap(), q(2, 1));
        assert_eq!(f_s_brute(496, &one, 128).unwrap(), q(2, 1));
        assert_eq!(f_s_brute(30, &one, 128).unwrap(), q(12, 5));
        assert!(f_s_brute(0, &one, 128).is_err());
        assert!(f_s_brute(BRUTE_MAX + 1, &one, 128).is_err());
    }

    #[test]
    fn oracle_equivalence_small_range() {
        for s in 0..=3 {
            let e = Exponent::int(s);
            for n in 1..=3000u64 {
                assert_eq!(
                    f_s_u64(n, &e, 128).unwrap(),
                    f_s_brute(n, &e, 128).unwrap(),
                    "n={n} s={s}"
                );
            }
        }
    }

    #[test]
    fn fractional_matches_brute_and_high_precision() {
        let s: Exponent = "0.7".parse().unwrap();
        for n in [2u64, 12, 360, 9973, 65536, 720720] {
            let v = f_s_u64(n, &s, 128).unwrap();
            let b = f_s_brute(n, &s, 128).unwrap();
            assert!(v.consistent_with(&b), "n={n}");
            let hi = f_s_u64(n, &s, 512).unwrap().enclosure(512);
            let lo = v.enclosure(128);
            let mid = hi.value();
            assert!(lo.lower() <= &mid && &mid <= lo.upper(), "n={n}");
            assert!(hi.abs_error() < lo.abs_error());
        }
    }

    #[test]
    fn prime_shortcut() {
        for p in [2u64, 3, 5, 101, 7919] {
            for s in [Exponent::int(1), Exponent::int(2), "0.5".parse().unwrap()] {
                let a = f_prime(p, &s, 128);
                let b = f_s(&Factorization::prime(p), &s, 128);
                assert!(a.consistent_with(&b));
            }
        }
    }

    #[test]
    fn increasing_in_k_towards_limit() {
        let s = Exponent::int(1);
        let limit = Rational::from((7, 6));
        let mut prev = Rational::from(0);
        for k in 1..40 {
            let v = f_prime_power(7, k, &s, 128)
                .unwrap()
                .as_exact()
                .unwrap()
                .clone();
            assert!(v > prev && v < limit);
            prev = v;
        }
    }
}
