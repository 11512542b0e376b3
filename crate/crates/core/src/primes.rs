//! Prime generation, navigation and factorization of machine-sized integers.
//!
//! [`Primes`] owns a lazily grown [`PrimeTable`] (segmented sieve of
//! Eratosthenes). Queries past the sieving horizon fall back to a
//! deterministic Miller-Rabin test, which is exact below 2^64. Every search is
//! bounded by the configured prime cap.

use std::sync::{OnceLock, RwLock};

use crate::error::{domain, resource, Result};
use crate::factorization::Factorization;

/// Default hard cap on any prime returned by a search.
pub const DEFAULT_PRIME_CAP: u64 = 1_000_000_000;

/// Largest limit the shared table is sieved to; beyond it primes are found
/// candidate by candidate.
pub const SIEVE_HORIZON: u64 = 1 << 26;

/// Largest `limit` accepted by [`sieve_upto`] (about 1 GiB of output at worst).
pub const SIEVE_BUDGET: u64 = 4_000_000_000;

const SEGMENT: u64 = 1 << 18;
const INITIAL_LIMIT: u64 = 1 << 16;

/// Largest input accepted by [`factorize`].
pub const FACTORIZE_MAX: u64 = 1 << 63;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrimeTable {
    limit: u64,
    primes: Vec<u64>,
}

impl PrimeTable {
    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.primes.is_empty()
    }

    /// Number of primes `<= x` (only meaningful for `x <= limit`).
    pub fn count_upto(&self, x: u64) -> usize {
        self.primes.partition_point(|&p| p <= x)
    }

    pub fn contains(&self, n: u64) -> bool {
        self.primes.binary_search(&n).is_ok()
    }

    fn next_after(&self, p: u64) -> Option<u64> {
        let i = self.primes.partition_point(|&q| q <= p);
        self.primes.get(i).copied()
    }

    fn prev_before(&self, p: u64) -> Option<u64> {
        let i = self.primes.partition_point(|&q| q < p);
        if i == 0 {
            None
        } else {
            Some(self.primes[i - 1])
        }
    }
}

fn simple_sieve(limit: u64) -> Vec<u64> {
    let n = limit as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Primes in `[lo, hi)`, given every prime up to `sqrt(hi)` in `base`.
fn sieve_segment(lo: u64, hi: u64, base: &[u64], out: &mut Vec<u64>) {
    let lo = lo.max(2);
    if lo >= hi {
        return;
    }
    let mut composite = vec![false; (hi - lo) as usize];
    for &p in base {
        if p * p >= hi {
            break;
        }
        let start = (p * p).max(lo.div_ceil(p) * p);
        let mut m = start;
        while m < hi {
            composite[(m - lo) as usize] = true;
            m += p;
        }
    }
    out.extend(
        composite
            .iter()
            .enumerate()
            .filter(|(_, &c)| !c)
            .map(|(i, _)| lo + i as u64),
    );
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// All primes `<= limit`, ascending.
pub fn sieve_upto(limit: u64) -> Result<PrimeTable> {
    if limit < 2 {
        return Err(domain(format!("sieve limit must be >= 2, got {limit}")));
    }
    if limit > SIEVE_BUDGET {
        return Err(resource(format!(
            "sieve limit {limit} exceeds the memory budget {SIEVE_BUDGET}"
        )));
    }
    let root = isqrt(limit);
    let base = simple_sieve(root.max(2));
    if limit <= root.max(2) {
        return Ok(PrimeTable {
            limit,
            primes: base.into_iter().filter(|&p| p <= limit).collect(),
        });
    }
    let mut primes = base.clone();
    let mut lo = root.max(2) + 1;
    while lo <= limit {
        let hi = (lo + SEGMENT).min(limit + 1);
        sieve_segment(lo, hi, &base, &mut primes);
        lo = hi;
    }
    Ok(PrimeTable { limit, primes })
}

fn small_primes() -> &'static [u64] {
    static SMALL: OnceLock<Vec<u64>> = OnceLock::new();
    SMALL.get_or_init(|| simple_sieve(INITIAL_LIMIT))
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic primality for every `u64`: trial division by small primes,
/// then Miller-Rabin with the first twelve prime bases (no pseudoprimes
/// exist below 3.3e24 for this base set).
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for &p in &small_primes()[..50] {
        if n == p {
            return true;
        }
        if n.is_multiple_of(p) {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        r += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Brent's variant of Pollard rho; returns a non-trivial divisor of the odd
/// composite `n`. Deterministic: the polynomial constant walks 1, 2, 3, ...
fn pollard_brent(n: u64) -> u64 {
    for c in 1u64.. {
        let f = |x: u64| (mul_mod(x, x, n) + c) % n;
        let (mut y, mut r, mut q) = (2u64, 1u64, 1u64);
        let m = 128;
        let mut g = 1;
        let mut x = y;
        let mut ys = y;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y);
                    q = mul_mod(q, x.abs_diff(y), n);
                }
                g = gcd(q, n);
                k += m;
            }
            r *= 2;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
    }
    unreachable!()
}

fn split_into(n: u64, out: &mut Vec<u64>) {
    if n == 1 {
        return;
    }
    if is_prime(n) {
        out.push(n);
        return;
    }
    let d = pollard_brent(n);
    split_into(d, out);
    split_into(n / d, out);
}

/// Prime factorization of `1 <= n < 2^63`.
pub fn factorize(n: u64) -> Result<Factorization> {
    if n == 0 {
        return Err(domain("cannot factorize 0"));
    }
    if n >= FACTORIZE_MAX {
        return Err(domain(format!(
            "{n} is outside the factorizable range (< 2^63)"
        )));
    }
    let mut rest = n;
    let mut found = Vec::new();
    for &p in small_primes() {
        if p * p > rest {
            break;
        }
        while rest.is_multiple_of(p) {
            found.push(p);
            rest /= p;
        }
    }
    split_into(rest, &mut found);
    Ok(Factorization::from_prime_list(found))
}

/// Shared, lazily extended prime source with a hard cap.
#[derive(Debug)]
pub struct Primes {
    cap: u64,
    table: RwLock<PrimeTable>,
}

impl Default for Primes {
    fn default() -> Self {
        Self::new(DEFAULT_PRIME_CAP)
    }
}

impl Primes {
    pub fn new(cap: u64) -> Self {
        let initial = small_primes().to_vec();
        Primes {
            cap: cap.max(2),
            table: RwLock::new(PrimeTable {
                limit: INITIAL_LIMIT,
                primes: initial,
            }),
        }
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    /// Current sieved limit of the shared table.
    pub fn table_limit(&self) -> u64 {
        self.table.read().unwrap().limit
    }

    /// Grows the table to cover `target` (bounded by horizon and cap).
    fn ensure(&self, target: u64) {
        let want = target.min(SIEVE_HORIZON).min(self.cap);
        if self.table.read().unwrap().limit >= want {
            return;
        }
        let mut t = self.table.write().unwrap();
        if t.limit >= want {
            return;
        }
        let new_limit = want.max(t.limit.saturating_mul(2)).min(SIEVE_HORIZON);
        let base_len = t.count_upto(isqrt(new_limit) + 1);
        let base = t.primes[..base_len].to_vec();
        let mut lo = t.limit + 1;
        while lo <= new_limit {
            let hi = (lo + SEGMENT).min(new_limit + 1);
            sieve_segment(lo, hi, &base, &mut t.primes);
            lo = hi;
        }
        t.limit = new_limit;
    }

    fn check_cap(&self, q: u64) -> Result<u64> {
        if q > self.cap {
            Err(resource(format!(
                "prime {q} exceeds the prime cap {}",
                self.cap
            )))
        } else {
            Ok(q)
        }
    }

    /// Smallest prime strictly greater than `p`.
    pub fn next_prime(&self, p: u64) -> Result<u64> {
        if p < 2 {
            return Ok(2);
        }
        if p < SIEVE_HORIZON {
            // the gap after p is far below p/2 here, so 2p+64 always covers it
            self.ensure(p.saturating_mul(2).saturating_add(64));
            if let Some(q) = self.table.read().unwrap().next_after(p) {
                return self.check_cap(q);
            }
        }
        let mut c = p + 1;
        loop {
            if c > self.cap {
                return Err(resource(format!(
                    "no prime above {p} within the prime cap {}",
                    self.cap
                )));
            }
            if is_prime(c) {
                return Ok(c);
            }
            c = c
                .checked_add(1)
                .ok_or_else(|| resource("prime search overflowed u64"))?;
        }
    }

    /// Largest prime strictly less than `p` (requires `p >= 3`).
    pub fn prev_prime(&self, p: u64) -> Result<u64> {
        if p <= 2 {
            return Err(domain(format!("no prime below {p}")));
        }
        if p <= SIEVE_HORIZON {
            self.ensure(p);
            let t = self.table.read().unwrap();
            if t.limit >= p - 1 {
                return Ok(t.prev_before(p).expect("2 < p"));
            }
        }
        let mut c = p - 1;
        while !is_prime(c) {
            c -= 1;
        }
        Ok(c)
    }

    /// Smallest prime `>= x`.
    pub fn prime_at_or_above(&self, x: u64) -> Result<u64> {
        if x <= 2 {
            return Ok(2);
        }
        self.next_prime(x - 1)
    }

    /// A snapshot table of all primes `<= limit` (uses the shared table when
    /// it already covers `limit`).
    pub fn table_upto(&self, limit: u64) -> Result<PrimeTable> {
        if limit <= SIEVE_HORIZON {
            self.ensure(limit);
            let t = self.table.read().unwrap();
            if t.limit >= limit {
                let n = t.count_upto(limit);
                return Ok(PrimeTable {
                    limit,
                    primes: t.primes[..n].to_vec(),
                });
            }
        }
        sieve_upto(limit)
    }

    /// Ascending primes strictly greater than `after`.
    pub fn iter_after(&self, after: u64) -> PrimeIter<'_> {
        PrimeIter {
            primes: self,
            last: after,
        }
    }

    /// Smallest prime that is not a factor of `fact`.
    pub fn smallest_prime_not_in(&self, fact: &Factorization) -> Result<u64> {
        let mut p = 2;
        while fact.contains(p) {
            p = self.next_prime(p)?;
        }
        Ok(p)
    }
}

pub struct PrimeIter<'a> {
    primes: &'a Primes,
    last: u64,
}

impl Iterator for PrimeIter<'_> {
    type Item = Result<u64>;
    fn next(&mut self) -> Option<Result<u64>> {
        match self.primes.next_prime(self.last) {
            Ok(p) => {
                self.last = p;
                Some(Ok(p))
            }
            Err(e) => Some(Err(e)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn trial_is_prime(n: u64) -> bool {
        n >= 2
            && (2..)
                .take_while(|d| d * d <= n)
                .all(|d| !n.is_multiple_of(d))
    }

    #[test]
    fn small_sieves() {
        assert_eq!(sieve_upto(10).unwrap().primes(), &[2, 3, 5, 7]);
        assert_eq!(sieve_upto(2).unwrap().primes(), &[2]);
        assert!(matches!(sieve_upto(1), Err(Error::Domain(_))));
        assert!(matches!(
            sieve_upto(SIEVE_BUDGET + 1),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn sieve_matches_trial_division() {
        let t = sieve_upto(100_000).unwrap();
        let oracle: Vec<u64> = (2..=100_000).filter(|&n| trial_is_prime(n)).collect();
        assert_eq!(t.primes(), oracle.as_slice());
        assert_eq!(t.primes()[0], 2);
        assert!(t.primes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn pi_of_a_million() {
        let t = sieve_upto(1_000_000).unwrap();
        assert_eq!(t.len(), 78498);
        // independent route: Miller-Rabin count
        let mr = (2..=1_000_000u64).filter(|&n| is_prime(n)).count();
        assert_eq!(mr, 78498);
    }

    #[test]
    fn navigation_examples() {
        let p = Primes::default();
        assert_eq!(p.next_prime(7).unwrap(), 11);
        assert_eq!(p.next_prime(1).unwrap(), 2);
        assert_eq!(p.next_prime(1_000_000).unwrap(), 1_000_003);
        assert_eq!(p.prev_prime(11).unwrap(), 7);
        assert_eq!(p.prev_prime(3).unwrap(), 2);
        assert_eq!(p.prev_prime(1_000_003).unwrap(), 999_983);
        assert!(matches!(p.prev_prime(2), Err(Error::Domain(_))));
    }

    #[test]
    fn navigation_past_the_horizon() {
        let p = Primes::new(u64::MAX);
        let x = 1_000_000_000_000u64;
        let q = p.next_prime(x).unwrap();
        assert_eq!(q, 1_000_000_000_039);
        assert_eq!(p.prev_prime(q).unwrap(), 999_999_999_989);
        assert!(trial_is_prime(999_999_999_989));
    }

    #[test]
    fn cap_is_enforced() {
        let p = Primes::new(100);
        assert_eq!(p.next_prime(96).unwrap(), 97);
        assert!(matches!(p.next_prime(97), Err(Error::Resource(_))));
    }

    #[test]
    fn prime_above_large_trial_oracle() {
        let p = Primes::default();
        for x in [1_000_000u64, 25_000_000, 999_999_000] {
            let q = p.next_prime(x).unwrap();
            assert!(trial_is_prime(q));
            assert!((x + 1..q).all(|c| !trial_is_prime(c)));
        }
    }

    #[test]
    fn next_and_prev_agree_with_table() {
        let p = Primes::default();
        let t = sieve_upto(200_000).unwrap();
        for w in t.primes().windows(2) {
            assert_eq!(p.next_prime(w[0]).unwrap(), w[1]);
            assert_eq!(p.prev_prime(w[1]).unwrap(), w[0]);
        }
        for n in 3..5000u64 {
            let up = p.next_prime(n).unwrap();
            assert!(p.prev_prime(up).unwrap() <= n && n < up);
        }
    }

    #[test]
    fn bertrand_step_for_primes_below_a_million() {
        let p = Primes::default();
        let t = sieve_upto(1_000_000).unwrap();
        for &q in &t.primes()[1..] {
            let prev = p.prev_prime(q).unwrap();
            assert!(2 * prev > q, "prev_prime({q}) = {prev}");
        }
    }

    #[test]
    fn miller_rabin_on_known_values() {
        assert!(is_prime(18_446_744_073_709_551_557)); // largest u64 prime
        assert!(!is_prime(3_215_031_751)); // strong pseudoprime to bases 2,3,5,7
        assert!(!is_prime(341_550_071_728_321));
        assert!(is_prime(2_305_843_009_213_693_951)); // 2^61 - 1
    }

    #[test]
    fn factorize_examples() {
        assert_eq!(factorize(360).unwrap().to_string(), "2^3*3^2*5");
        assert!(factorize(1).unwrap().is_one());
        assert_eq!(factorize(784).unwrap().to_string(), "2^4*7^2");
        assert!(factorize(0).is_err());
        assert!(factorize(1 << 63).is_err());
        let semiprime = 3_037_000_493u64 * 3_037_000_453;
        assert_eq!(
            factorize(semiprime).unwrap().to_string(),
            "3037000453*3037000493"
        );
    }

    #[test]
    fn factorize_reconstructs() {
        for n in 1..=100_000u64 {
            let f = factorize(n).unwrap();
            assert_eq!(f.to_u64(), Some(n));
            assert!(f.iter().all(|(p, k)| k >= 1 && trial_is_prime(p)));
        }
    }

    #[test]
    fn smallest_missing_prime() {
        let p = Primes::default();
        assert_eq!(p.smallest_prime_not_in(&factorize(6).unwrap()).unwrap(), 5);
        assert_eq!(p.smallest_prime_not_in(&Factorization::one()).unwrap(), 2);
        assert_eq!(p.smallest_prime_not_in(&factorize(2).unwrap()).unwrap(), 3);
        assert_eq!(
            p.smallest_prime_not_in(&factorize(30030).unwrap()).unwrap(),
            17
        );
    }

    #[test]
    fn concurrent_extension_is_consistent() {
        let p = Primes::default();
        std::thread::scope(|s| {
            for t in 0..4u64 {
                let p = &p;
                s.spawn(move || {
                    for i in 0..50u64 {
                        let x = 1_000_000 * (t + 1) + i * 7919;
                        let q = p.next_prime(x).unwrap();
                        assert!(is_prime(q) && (x + 1..q).all(|c| !is_prime(c)));
                    }
                });
            }
        });
    }
}
