use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rug::ops::Pow;
use rug::Integer;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::primes::{factorize, is_prime};
use crate::real::BoundedReal;

/// A positive integer held as its prime factorization, so that integers far
/// beyond machine range can be manipulated without being materialized.
///
/// Keys are primes in ascending order, exponents are `>= 1`; the empty map is
/// `n = 1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Factorization {
    factors: BTreeMap<u64, u32>,
}

impl Factorization {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn prime(p: u64) -> Self {
        let mut factors = BTreeMap::new();
        factors.insert(p, 1);
        Factorization { factors }
    }

    /// Builds from a multiset of primes (callers guarantee primality).
    pub(crate) fn from_prime_list(primes: impl IntoIterator<Item = u64>) -> Self {
        let mut factors = BTreeMap::new();
        for p in primes {
            *factors.entry(p).or_insert(0) += 1;
        }
        Factorization { factors }
    }

    /// Builds from `(prime, exponent)` pairs, checking every base for
    /// primality. Zero exponents are dropped; repeated primes merge.
    pub fn from_prime_powers(pairs: impl IntoIterator<Item = (u64, u32)>) -> Result<Self> {
        let mut factors = BTreeMap::new();
        for (p, k) in pairs {
            if !is_prime(p) {
                return Err(Error::Domain(format!("{p} is not prime")));
            }
            if k > 0 {
                *factors.entry(p).or_insert(0) += k;
            }
        }
        Ok(Factorization { factors })
    }

    pub(crate) fn from_map_unchecked(factors: BTreeMap<u64, u32>) -> Self {
        Factorization { factors }
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u32)> + '_ {
        self.factors.iter().map(|(&p, &k)| (p, k))
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.factors.keys().copied()
    }

    pub fn exponent(&self, p: u64) -> u32 {
        self.factors.get(&p).copied().unwrap_or(0)
    }

    pub fn contains(&self, p: u64) -> bool {
        self.factors.contains_key(&p)
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    /// Number of distinct prime factors.
    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn largest_prime(&self) -> Option<u64> {
        self.factors.keys().next_back().copied()
    }

    pub fn is_squarefree(&self) -> bool {
        self.factors.values().all(|&k| k == 1)
    }

    /// Composite means at least two prime factors counted with multiplicity.
    pub fn is_composite(&self) -> bool {
        self.factors.values().sum::<u32>() >= 2
    }

    pub fn is_prime(&self) -> bool {
        self.factors.len() == 1 && self.factors.values().all(|&k| k == 1)
    }

    pub fn is_coprime(&self, other: &Factorization) -> bool {
        self.primes().all(|p| !other.contains(p))
    }

    /// `self * p^k`.
    pub fn times_prime_power(&self, p: u64, k: u32) -> Self {
        let mut f = self.clone();
        if k > 0 {
            *f.factors.entry(p).or_insert(0) += k;
        }
        f
    }

    pub fn times_prime(&self, p: u64) -> Self {
        self.times_prime_power(p, 1)
    }

    pub fn mul(&self, other: &Factorization) -> Self {
        let mut f = self.clone();
        for (p, k) in other.iter() {
            *f.factors.entry(p).or_insert(0) += k;
        }
        f
    }

    pub fn to_integer(&self) -> Integer {
        let mut n = Integer::from(1);
        for (p, k) in self.iter() {
            n *= Integer::from(p).pow(k);
        }
        n
    }

    pub fn to_u64(&self) -> Option<u64> {
        let mut n: u64 = 1;
        for (p, k) in self.iter() {
            for _ in 0..k {
                n = n.checked_mul(p)?;
            }
        }
        Some(n)
    }

    /// Enclosure of `ln n = sum k_i ln p_i`.
    pub fn ln(&self, prec: u32) -> BoundedReal {
        let mut acc = BoundedReal::zero(prec);
        for (p, k) in self.iter() {
            let lp = BoundedReal::from_u64(p, prec).ln().expect("p >= 2");
            acc = &acc + &(&lp * &BoundedReal::from_u64(k as u64, prec));
        }
        acc
    }

    /// Approximate `log10 n`; for display only.
    pub fn log10_f64(&self) -> f64 {
        self.iter()
            .map(|(p, k)| k as f64 * (p as f64).log10())
            .sum()
    }
}

impl From<u64> for Factorization {
    /// Factorizes `n`. Panics on `n = 0` or `n >= 2^63`.
    fn from(n: u64) -> Self {
        factorize(n).expect("factorizable integer")
    }
}

impl fmt::Display for Factorization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for (p, k) in self.iter() {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if k == 1 {
                write!(f, "{p}")?;
            } else {
                write!(f, "{p}^{k}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Factorization {
    type Err = Error;

    /// Accepts a plain integer (`360`) or a product of powers (`2^3*5^2*11`).
    /// Composite bases are factorized and their exponents distributed.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::Parse("empty integer".into()));
        }
        let mut acc = Factorization::one();
        for term in s.split('*') {
            let term = term.trim();
            let (base, exp) = match term.split_once('^') {
                Some((b, e)) => (b.trim(), e.trim()),
                None => (term, "1"),
            };
            let base: u64 = base
                .parse()
                .map_err(|_| Error::Parse(format!("bad base `{base}` in `{s}`")))?;
            let exp: u32 = exp
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent `{exp}` in `{s}`")))?;
            if base == 0 {
                return Err(Error::Domain("0 is not a positive integer".into()));
            }
            let bf = factorize(base)?;
            for (p, k) in bf.iter() {
                let e = k
                    .checked_mul(exp)
                    .ok_or_else(|| Error::Parse(format!("exponent overflow in `{s}`")))?;
                acc = acc.times_prime_power(p, e);
            }
        }
        Ok(acc)
    }
}

impl Serialize for Factorization {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Factorization {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_print() {
        let f: Factorization = "2^3*5^2*11".parse().unwrap();
        assert_eq!(f.to_u64(), Some(2200));
        assert_eq!(f.to_string(), "2^3*5^2*11");
        let g: Factorization = "6^2*3".parse().unwrap();
        assert_eq!(g.to_string(), "2^2*3^3");
        assert_eq!("1".parse::<Factorization>().unwrap(), Factorization::one());
        assert_eq!(
            "360".parse::<Factorization>().unwrap().to_string(),
            "2^3*3^2*5"
        );
        assert!("2^x".parse::<Factorization>().is_err());
        assert!("0".parse::<Factorization>().is_err());
    }

    #[test]
    fn huge_factored_integer() {
        let f: Factorization = "2^100".parse().unwrap();
        assert_eq!(f.to_u64(), None);
        assert_eq!(f.to_integer(), Integer::from(1) << 100);
    }

    #[test]
    fn ln_encloses_direct_log() {
        for n in [1u64, 2, 12, 360, 999_983, 1 << 40] {
            let f = Factorization::from(n);
            let l = f.ln(128);
            let direct = BoundedReal::from_u64(n, 256).ln().unwrap();
            assert!(l.overlaps(&direct), "{n}");
        }
    }

    #[test]
    fn prime_validation() {
        assert!(Factorization::from_prime_powers([(4, 1)]).is_err());
        let f = Factorization::from_prime_powers([(3, 1), (2, 2), (3, 1)]).unwrap();
        assert_eq!(f.to_string(), "2^2*3^2");
    }

    #[test]
    fn predicates() {
        let f = Factorization::from(30);
        assert!(f.is_squarefree() && f.is_composite() && !f.is_prime());
        assert!(Factorization::from(7).is_prime());
        assert!(!Factorization::one().is_composite());
        assert!(Factorization::from(4).is_composite());
        assert!(f.is_coprime(&Factorization::from(49)));
        assert!(!f.is_coprime(&Factorization::from(9)));
    }
}
