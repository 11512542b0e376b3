//! Rationals outside the range of `f_s` for integer `s >= 1`.
//!
//! `1 + 1/n^s` is never attained for composite `n`: if `f_s(m)` equals it
//! then `(m/n)^s = sigma_s(m) - m^s` is an integer, so `m/n` is a divisor of
//! `m` and the proper divisors of `m` contribute only `1` and `(m/n)^s`,
//! forcing `m = n` prime. The shifted family `(1 + 1/n^s) f_s(N)` is not
//! excluded in general (`(16/15) f_1(2) = f_1(15)`), so every shifted value
//! goes through a branch-and-bound search and, failing a proof, a bounded
//! membership scan.

use std::cmp::Ordering;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::Serialize;

use crate::density::{approximate, ser_rational};
use crate::divisor::{f_s, sigma_s};
use crate::error::{domain, resource, Result};
use crate::factorization::Factorization;
use crate::par::{map_chunks, Strategy};
use crate::primes::factorize;
use crate::value::Exponent;
use crate::Lab;

/// Largest `N` tried by the direct search for range points when `s >= 2`.
pub const DIRECT_SEARCH_MAX: u64 = 1_000_000;
/// Exponents tried per prime above its forced minimum before a branch is
/// left open.
const EXPONENT_SPAN: u32 = 12;
/// Candidates per membership-scan chunk.
const SCAN_CHUNK: u64 = 4096;
/// Primes `q` tried by [`complement_point`] before giving up.
const POINT_ATTEMPTS: usize = 32;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Witness {
    /// `1 + 1/n^s`, `n` composite.
    Simple { n: u64 },
    /// `(1 + 1/n^s) f_s(N)`, `n` composite and coprime to `N`.
    Shifted {
        n: u64,
        #[serde(rename = "N")]
        big_n: Factorization,
    },
}

/// How exclusion was established.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "method")]
pub enum Proof {
    /// The composite-`n` argument in the module docs.
    Composite,
    /// Exhaustive branch-and-bound over the forced prime powers.
    Search { nodes: usize },
    /// No proof found; no preimage up to `bound` either.
    ScannedTo { bound: u64, nodes: usize },
}

impl Proof {
    pub fn is_proof(&self) -> bool {
        !matches!(self, Proof::ScannedTo { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcludedValue {
    #[serde(serialize_with = "ser_rational")]
    pub value: Rational,
    pub s: u32,
    pub witness: Witness,
    pub proof: Proof,
}

impl ExcludedValue {
    /// Recomputes `value` from the witness.
    pub fn check(&self) -> bool {
        let shift = one_plus_inverse_power(self.witness_n(), self.s);
        let expect = match &self.witness {
            Witness::Simple { .. } => shift,
            Witness::Shifted { big_n, .. } => shift * exact_f(big_n, self.s),
        };
        expect == self.value
    }

    pub fn witness_n(&self) -> u64 {
        match self.witness {
            Witness::Simple { n } | Witness::Shifted { n, .. } => n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome")]
pub enum Outcome {
    InRange { m: u64 },
    NotFoundUpTo { bound: u64 },
    ProvablyExcluded { proof: Proof },
}

#[derive(Clone, Debug, Serialize)]
pub struct MembershipVerdict {
    #[serde(serialize_with = "ser_rational")]
    pub query: Rational,
    pub s: u32,
    #[serde(flatten)]
    pub outcome: Outcome,
}

fn check_s(s: u32) -> Result<()> {
    if s == 0 {
        return Err(domain("f_0 takes only integer values; nothing to certify"));
    }
    Ok(())
}

fn exact_f(n: &Factorization, s: u32) -> Rational {
    match f_s(n, &Exponent::int(s), 64) {
        crate::Value::Exact(q) => q,
        crate::Value::Bounded(_) => unreachable!("integer s evaluates exactly"),
    }
}

fn one_plus_inverse_power(n: u64, s: u32) -> Rational {
    Rational::from((1, Integer::from(n).pow(s))) + 1u32
}

fn composite(n: u64) -> Result<Factorization> {
    if n < 2 {
        return Err(domain(format!("n = {n} is not composite")));
    }
    let f = factorize(n)?;
    if f.is_prime() {
        return Err(domain(format!(
            "n = {n} is prime; f_s(n) = 1 + 1/n^s is attained"
        )));
    }
    Ok(f)
}

/// `1 + 1/n^s` for composite `n`.
pub fn excluded_simple(n: u64, s: u32) -> Result<ExcludedValue> {
    check_s(s)?;
    composite(n)?;
    Ok(ExcludedValue {
        value: one_plus_inverse_power(n, s),
        s,
        witness: Witness::Simple { n },
        proof: Proof::Composite,
    })
}

/// `(1 + 1/n^s) f_s(N)` for composite `n` coprime to `N`.
///
/// Fails with a domain error when the value turns out to be attained.
pub fn excluded_shifted(lab: &Lab, n: u64, big_n: &Factorization, s: u32) -> Result<ExcludedValue> {
    check_s(s)?;
    let nf = composite(n)?;
    if !nf.is_coprime(big_n) {
        return Err(domain(format!("n = {n} shares a prime with N = {big_n}")));
    }
    let value = one_plus_inverse_power(n, s) * exact_f(big_n, s);
    let (search, nodes) = search_preimage(lab, &value, s);
    let proof = match search {
        Search::Attained(m) => {
            return Err(domain(format!(
                "(1 + 1/{n}^{s}) f_{s}({big_n}) = {value} is attained at m = {}",
                m.to_integer()
            )))
        }
        Search::Excluded => Proof::Search { nodes },
        Search::Open => {
            let bound = lab.limits.member_bound;
            match membership_scan(&value, s, bound, Strategy::Parallel)?.outcome {
                Outcome::InRange { m } => {
                    return Err(domain(format!(
                        "(1 + 1/{n}^{s}) f_{s}({big_n}) = {value} is attained at m = {m}"
                    )))
                }
                _ => Proof::ScannedTo { bound, nodes },
            }
        }
    };
    Ok(ExcludedValue {
        value,
        s,
        witness: Witness::Shifted {
            n,
            big_n: big_n.clone(),
        },
        proof,
    })
}

/// Smallest `M` with `v | M^s`; any preimage of `u/v` is a multiple of it.
fn forced_part(v: &Integer, s: u32) -> Option<Factorization> {
    let v = v.to_u64()?;
    let f = factorize(v).ok()?;
    Some(
        Factorization::from_prime_powers(f.iter().map(|(p, e)| (p, e.div_ceil(s))))
            .expect("primes from factorize"),
    )
}

enum Search {
    Excluded,
    Attained(Factorization),
    Open,
}

/// Depth-first search for `m` with `f_s(m) = q`.
///
/// A node fixes the exact exponents of some primes (`fixed`) and asks for
/// `m'` coprime to them with `f_s(m') = r`. The denominator of `r` forces
/// primes into `m'`; a node dies when one of them is already fixed or when
/// the forced part alone overshoots `r`. Branches whose denominator cannot
/// be factored, which have no forced primes, or whose exponent runs past
/// [`EXPONENT_SPAN`] are left open.
fn search_preimage(lab: &Lab, q: &Rational, s: u32) -> (Search, usize) {
    let mut stack = vec![(Factorization::one(), q.clone())];
    let mut nodes = 0;
    let mut open = false;
    while let Some((fixed, r)) = stack.pop() {
        nodes += 1;
        if nodes > lab.limits.search_nodes {
            return (Search::Open, nodes - 1);
        }
        match r.cmp(&Rational::from(1)) {
            Ordering::Less => continue,
            Ordering::Equal => return (Search::Attained(fixed), nodes),
            Ordering::Greater => {}
        }
        if *r.denom() == 1 {
            open = true;
            continue;
        }
        let Some(forced) = forced_part(r.denom(), s) else {
            open = true;
            continue;
        };
        if !forced.is_coprime(&fixed) {
            continue;
        }
        let lb = exact_f(&forced, s);
        match lb.cmp(&r) {
            Ordering::Greater => continue,
            Ordering::Equal => return (Search::Attained(fixed.mul(&forced)), nodes),
            Ordering::Less => {}
        }
        // Branch on the exact exponent of the smallest forced prime.
        let (p, k0) = forced.iter().next().expect("denominator > 1");
        let rest = Factorization::from_prime_powers(forced.iter().filter(|&(x, _)| x != p))
            .expect("subset");
        let rest_f = exact_f(&rest, s);
        let mut children = Vec::new();
        for k in k0.. {
            if k > k0 + EXPONENT_SPAN || (k as f64) * (p as f64).log2() > 60.0 {
                open = true;
                break;
            }
            let pk = Factorization::from_prime_powers([(p, k)]).expect("prime power");
            let fk = exact_f(&pk, s);
            if Rational::from(&fk * &rest_f) > r {
                break;
            }
            children.push((fixed.mul(&pk), Rational::from(&r / &fk)));
        }
        stack.extend(children.into_iter().rev());
    }
    (if open { Search::Open } else { Search::Excluded }, nodes)
}

/// Searches `m <= bound` with `f_s(m) = q` exactly, returning the smallest.
///
/// Only multiples of the smallest `M` with `v | M^s` are tested, where
/// `q = u/v` in lowest terms.
pub fn membership_scan(
    q: &Rational,
    s: u32,
    bound: u64,
    strategy: Strategy,
) -> Result<MembershipVerdict> {
    check_s(s)?;
    if *q < 1 {
        return Err(domain(format!("f_s takes no values below 1, got {q}")));
    }
    let verdict = |outcome| MembershipVerdict {
        query: q.clone(),
        s,
        outcome,
    };
    let not_found = verdict(Outcome::NotFoundUpTo { bound });
    let Some(step) = forced_part(q.denom(), s).and_then(|f| f.to_u64()) else {
        // The forced part exceeds u64 and hence any bound.
        return Ok(not_found);
    };
    if step > bound {
        return Ok(not_found);
    }
    let count = bound / step;
    let chunks = count.div_ceil(SCAN_CHUNK) as usize;
    let (u, v) = (q.numer(), q.denom());
    let found = map_chunks(strategy, chunks, |c| -> Result<Option<u64>> {
        let lo = c as u64 * SCAN_CHUNK + 1;
        let hi = (lo + SCAN_CHUNK - 1).min(count);
        for j in lo..=hi {
            let m = j * step;
            let fact = factorize(m)?;
            let sigma = sigma_s(&fact, s, u64::MAX)?;
            if sigma * v == Integer::from(m).pow(s) * u {
                return Ok(Some(m));
            }
        }
        Ok(None)
    });
    for r in found {
        if let Some(m) = r? {
            return Ok(verdict(Outcome::InRange { m }));
        }
    }
    Ok(not_found)
}

/// Scan up to `bound`, then try to prove exclusion if nothing was found.
pub fn decide_membership(
    lab: &Lab,
    q: &Rational,
    s: u32,
    bound: u64,
    strategy: Strategy,
) -> Result<MembershipVerdict> {
    let scanned = membership_scan(q, s, bound, strategy)?;
    if !matches!(scanned.outcome, Outcome::NotFoundUpTo { .. }) {
        return Ok(scanned);
    }
    let (search, nodes) = search_preimage(lab, q, s);
    let outcome = match search {
        Search::Excluded => Outcome::ProvablyExcluded {
            proof: Proof::Search { nodes },
        },
        Search::Attained(m) => match m.to_u64() {
            Some(m) => Outcome::InRange { m },
            None => scanned.outcome,
        },
        Search::Open => scanned.outcome,
    };
    Ok(MembershipVerdict { outcome, ..scanned })
}

/// A certified non-value strictly inside `(lo, hi)`.
///
/// Picks a range point `x0 = f_s(N)` in the interval, then the smallest prime
/// `q` not dividing `N` with `x0 (1 + 1/q^{2s}) < hi`, returning
/// `(1 + 1/q^{2s}) x0`. Attained candidates are skipped in favour of the next
/// prime.
pub fn complement_point(lab: &Lab, lo: &Rational, hi: &Rational, s: u32) -> Result<ExcludedValue> {
    check_s(s)?;
    if *lo < 1 || lo >= hi {
        return Err(domain(format!("need 1 <= lo < hi, got ({lo}, {hi})")));
    }
    let big_n = range_point(lab, lo, hi, s)?;
    let x0 = exact_f(&big_n, s);
    let mut q = 1;
    let mut tried = 0;
    while tried < POINT_ATTEMPTS {
        q = lab.primes.next_prime(q)?;
        if big_n.contains(q) {
            continue;
        }
        let n = q
            .checked_mul(q)
            .ok_or_else(|| resource("q^2 overflows u64"))?;
        let candidate = Rational::from(&x0 * &one_plus_inverse_power(n, s));
        if candidate >= *hi {
            continue;
        }
        tried += 1;
        match excluded_shifted(lab, n, &big_n, s) {
            Ok(e) => return Ok(e),
            Err(crate::Error::Domain(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(resource(format!(
        "no certified value found in ({lo}, {hi}) after {POINT_ATTEMPTS} primes"
    )))
}

/// `N` with `lo < f_s(N) < hi`.
fn range_point(lab: &Lab, lo: &Rational, hi: &Rational, s: u32) -> Result<Factorization> {
    if s == 1 {
        let mid = Rational::from(lo + hi) / 2u32;
        let eps = Rational::from(hi - lo) / 2u32;
        let sol = approximate(lab, &mid, &Exponent::int(1), &eps)?;
        let x = exact_f(&sol.n, 1);
        if x > *lo && x < *hi {
            return Ok(sol.n);
        }
        return Err(crate::error::invariant(format!(
            "approximation {x} left ({lo}, {hi})"
        )));
    }
    let cap = DIRECT_SEARCH_MAX.min(lab.limits.scan_cap);
    let (lo_f, hi_f) = (lo.to_f64(), hi.to_f64());
    let exp = Exponent::int(s);
    for (a, b) in crate::par::split_range(1, cap, 1 << 15) {
        let vals = crate::stats::f_values_f64(a, b, &exp);
        for (i, &x) in vals.iter().enumerate() {
            if x > lo_f * (1.0 - 1e-12) && x < hi_f * (1.0 + 1e-12) {
                let n = factorize(a + i as u64)?;
                let e = exact_f(&n, s);
                if e > *lo && e < *hi {
                    return Ok(n);
                }
            }
        }
    }
    Err(resource(format!(
        "no n <= {cap} has f_{s}(n) in ({lo}, {hi}); the interval may lie in a gap of the range"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn simple_examples() {
        assert_eq!(excluded_simple(4, 1).unwrap().value, r(5, 4));
        assert_eq!(excluded_simple(6, 2).unwrap().value, r(37, 36));
        assert!(matches!(
            excluded_simple(5, 1),
            Err(crate::Error::Domain(_))
        ));
        assert!(excluded_simple(1, 1).is_err());
        assert!(excluded_simple(4, 0).is_err());
    }

    #[test]
    fn shifted_examples() {
        let lab = Lab::default();
        let e = excluded_shifted(&lab, 25, &Factorization::from(2), 1).unwrap();
        assert_eq!(e.value, r(39, 25));
        assert!(e.check());
        assert!(matches!(
            excluded_shifted(&lab, 4, &Factorization::from(2), 1),
            Err(crate::Error::Domain(_))
        ));
        assert!(excluded_shifted(&lab, 7, &Factorization::from(2), 1).is_err());
    }

    #[test]
    fn five_thirds_not_refuted() {
        let lab = Lab::default();
        let e = excluded_shifted(&lab, 4, &Factorization::from(3), 1).unwrap();
        assert_eq!(e.value, r(5, 3));
        assert!(matches!(e.proof, Proof::ScannedTo { .. }));
    }

    #[test]
    fn shifted_counterexample_is_refused() {
        let lab = Lab::default();
        // (16/15) * 3/2 = 8/5 = f_1(15).
        let err = excluded_shifted(&lab, 15, &Factorization::from(2), 1).unwrap_err();
        assert!(err.to_string().contains("m = 15"), "{err}");
    }

    #[test]
    fn scan_examples() {
        let v = membership_scan(&r(2, 1), 1, 10_000, Strategy::Parallel).unwrap();
        assert_eq!(v.outcome, Outcome::InRange { m: 6 });
        let v = membership_scan(&r(5, 4), 1, 1_000_000, Strategy::Parallel).unwrap();
        assert_eq!(v.outcome, Outcome::NotFoundUpTo { bound: 1_000_000 });
        let v = membership_scan(&r(6, 5), 1, 10, Strategy::Sequential).unwrap();
        assert_eq!(v.outcome, Outcome::InRange { m: 5 });
        let v = membership_scan(&r(39, 25), 1, 1_000_000, Strategy::Parallel).unwrap();
        assert_eq!(v.outcome, Outcome::NotFoundUpTo { bound: 1_000_000 });
    }

    #[test]
    fn search_proves_small_cases() {
        let lab = Lab::default();
        // 5/4 needs 4 | m, and f_1(4) = 7/4 already overshoots.
        let v = decide_membership(&lab, &r(5, 4), 1, 100, Strategy::Sequential).unwrap();
        assert!(
            matches!(v.outcome, Outcome::ProvablyExcluded { .. }),
            "{v:?}"
        );
        let v = decide_membership(&lab, &r(8, 5), 1, 10, Strategy::Sequential).unwrap();
        assert_eq!(v.outcome, Outcome::InRange { m: 15 });
    }

    #[test]
    fn points() {
        let lab = Lab::default();
        let e = complement_point(&lab, &r(14, 10), &r(16, 10), 1).unwrap();
        assert!(e.value > r(14, 10) && e.value < r(16, 10));
        assert!(e.check());
        let e = complement_point(&lab, &r(1, 1), &r(11, 10), 1).unwrap();
        assert!(e.value > 1 && e.value < r(11, 10));
        let e = complement_point(&lab, &r(2, 1), &r(22, 10), 1).unwrap();
        assert!(e.value > 2 && e.value < r(22, 10));
        let e = complement_point(&lab, &r(12, 10), &r(13, 10), 2).unwrap();
        assert!(e.value > r(12, 10) && e.value < r(13, 10));
        // 1.645 lies above zeta(2), so no range point exists.
        assert!(matches!(
            complement_point(&lab, &r(165, 100), &r(17, 10), 2),
            Err(crate::Error::Resource(_))
        ));
    }
}
