//! Moments of `f_s` over `1..=N` and certified values of `zeta`.
//!
//! `f_s(n) = sum_{d | n} d^-s`, so a divisor sieve produces every `f_s(n)`
//! of a block at once. The sieve runs in `f64`, but each block also carries
//! a rigorous bound on its accumulated rounding error, so the reported
//! means are enclosures rather than bare estimates.

use std::sync::Mutex;

use rug::{Integer, Rational};

use crate::divisor::f_s_u64;
use crate::error::{domain, resource, Result};
use crate::par::{map_chunks, split_range, Strategy};
use crate::real::BoundedReal;
use crate::value::{Exponent, Value};
use crate::Lab;

/// Sieve block length. Fixed, so the reduction order never depends on the
/// thread count.
pub const BLOCK: u64 = 1 << 15;

/// Largest `N` accepted by [`exact_moments`].
pub const EXACT_MAX: u64 = 10_000;

const U: f64 = f64::EPSILON / 2.0;

static BERNOULLI: Mutex<Vec<Rational>> = Mutex::new(Vec::new());

/// `B_0 ..= B_m` (with `B_1 = -1/2`), cached across calls.
pub fn bernoulli_upto(m: usize) -> Vec<Rational> {
    let mut cache = BERNOULLI.lock().unwrap();
    if cache.is_empty() {
        cache.push(Rational::from(1));
    }
    while cache.len() <= m {
        let n = cache.len();
        // B_n = -1/(n+1) * sum_{k<n} C(n+1, k) B_k
        let mut acc = Rational::new();
        let mut binom = Integer::from(1);
        for (k, b) in cache.iter().enumerate() {
            acc += Rational::from(b * &binom);
            binom *= (n + 1 - k) as u32;
            binom /= (k + 1) as u32;
        }
        cache.push(-acc / Rational::from((n + 1) as u32));
    }
    cache[..=m].to_vec()
}

/// `zeta(t)` for `t > 1` by Euler-Maclaurin summation.
///
/// With the correction series truncated after `J` terms, the remainder is
/// bounded by the first omitted term (valid for real `t`); that bound is
/// added to the enclosure.
pub fn zeta(t: &Rational, prec: u32) -> Result<BoundedReal> {
    if *t <= 1 {
        return Err(domain(format!("zeta needs t > 1, got {t}")));
    }
    let wp = prec + 32;
    let n = (prec as u64 / 2).max(16) + t.to_f64().ceil() as u64;
    let te = BoundedReal::from_rational(t, wp);
    let neg_t = -&te;

    let mut sum = BoundedReal::zero(wp);
    for k in 1..n {
        sum = &sum + &BoundedReal::from_u64(k, wp).pow(&neg_t)?;
    }
    let n_neg_t = BoundedReal::from_u64(n, wp).pow(&neg_t)?;
    let nr = Rational::from(n);
    let tm1 = Rational::from(t - 1u32);
    // N^(1-t)/(t-1) + N^(-t)/2
    sum = &sum + &(&n_neg_t * &Rational::from(&nr / &tm1));
    sum = &sum + &(&n_neg_t * &Rational::from((1, 2)));

    let tol = rug::Float::with_val(wp, rug::Float::i_exp(1, -(prec as i32) - 4));
    let max_j = 4 * n as usize;
    let bern = bernoulli_upto(2 * max_j + 2);
    let mut rising = t.clone(); // t (t+1) ... (t+2j-2)
    let mut fact = Integer::from(2); // (2j)!
    let mut npow = Rational::from((1, Integer::from(n))); // N^(1-2j)
    let mut j = 1usize;
    loop {
        let coeff = Rational::from(&bern[2 * j] * &rising) / Rational::from(fact.clone()) * &npow;
        let term = &n_neg_t * &coeff;
        let mag = term.abs();
        if mag.upper() < &tol || j >= max_j {
            return Ok(sum.widen(mag.upper()).with_prec(prec.max(64)));
        }
        sum = &sum + &term;
        // advance to j+1
        rising *= Rational::from(t + (2 * j - 1) as u32);
        rising *= Rational::from(t + (2 * j) as u32);
        fact *= ((2 * j + 1) * (2 * j + 2)) as u32;
        npow /= Rational::from(&nr * &nr);
        j += 1;
    }
}

/// Moments of `f_s` over `1..=N`, with enclosures covering the sieve's
/// floating-point error.
#[derive(Clone, Debug)]
pub struct MomentReport {
    pub n: u64,
    pub s: Exponent,
    pub mean: BoundedReal,
    pub second_moment: BoundedReal,
    pub variance: BoundedReal,
    pub zeta_ref: BoundedReal,
    pub deviation: BoundedReal,
}

#[derive(Default, Clone, Copy)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Default, Clone, Copy)]
struct BlockSums {
    s1: Neumaier,
    s2: Neumaier,
    /// Bounds on `sum |f^(n) - f(n)|` and `sum |f^(n)^2 - f(n)^2|`.
    err1: f64,
    err2: f64,
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

/// Sieves `f_s(n)` for `n` in `[lo, hi]` into `out`, pairing each divisor
/// `d <= sqrt(n)` with its cofactor. Returns the divisor counts.
fn sieve_block(lo: u64, hi: u64, s: &Exponent, out: &mut Vec<f64>) -> Vec<u32> {
    let len = (hi - lo + 1) as usize;
    out.clear();
    out.resize(len, 0.0);
    let mut tau = vec![0u32; len];
    let pow = |x: u64| -> f64 {
        match s {
            Exponent::Integer(k) => (x as f64).powi(-(*k as i32)),
            Exponent::Real(_) => (x as f64).powf(-s.to_f64()),
        }
    };
    for d in 1..=isqrt(hi) {
        let dterm = pow(d);
        let m0 = d.max(lo.div_ceil(d));
        for m in m0..=hi / d {
            let i = (d * m - lo) as usize;
            out[i] += dterm;
            tau[i] += 1;
            if m != d {
                out[i] += pow(m);
                tau[i] += 1;
            }
        }
    }
    tau
}

/// `f_s(n)` for `n` in `[lo, hi]` in `f64`, for plotting.
pub fn f_values_f64(lo: u64, hi: u64, s: &Exponent) -> Vec<f64> {
    let mut out = Vec::new();
    sieve_block(lo, hi, s, &mut out);
    out
}

fn moment_block(lo: u64, hi: u64, s: &Exponent) -> BlockSums {
    let mut f = Vec::new();
    let tau = sieve_block(lo, hi, s, &mut f);
    // each term d^-s carries relative error <= 4u from pow, plus
    // s ln(d) u from rounding s itself; summing tau terms adds (tau-1)u.
    let s_term = match s {
        Exponent::Integer(_) => 0.0,
        Exponent::Real(_) => s.to_f64() * (hi as f64).ln(),
    };
    let mut b = BlockSums::default();
    for (fi, &t) in f.iter().zip(&tau) {
        let rel = (t as f64 + 4.0 + s_term) * U * 1.01;
        let sq = fi * fi;
        b.s1.add(*fi);
        b.s2.add(sq);
        b.err1 += rel * fi;
        b.err2 += (2.0 * rel + rel * rel + U) * sq * 1.01;
    }
    b
}

/// Sum enclosure from a compensated total, its propagated error, and the
/// error of the compensated summation itself.
fn sum_enclosure(total: f64, err: f64, terms: u64, prec: u32) -> BoundedReal {
    let summation = 3.0 * U * total.abs() + 4.0 * (terms as f64) * U * U * total.abs();
    let bound = (err + summation) * (1.0 + 4.0 * U) + f64::MIN_POSITIVE;
    BoundedReal::from_f64_with_error(total, bound, prec)
}

/// Mean and second moment of `f_s` over `1..=N` via the divisor sieve.
pub fn moment_scan(lab: &Lab, n: u64, s: &Exponent, strategy: Strategy) -> Result<MomentReport> {
    if n == 0 {
        return Err(domain("moment scan needs N >= 1"));
    }
    if n > lab.limits.scan_cap {
        return Err(resource(format!(
            "N = {n} exceeds the scan cap {}",
            lab.limits.scan_cap
        )));
    }
    if s.is_zero() {
        return Err(domain(
            "moments are compared with zeta(s+1), which needs s > 0",
        ));
    }
    let prec = lab.prec();
    let blocks = split_range(1, n, BLOCK);
    let parts = map_chunks(strategy, blocks.len(), |i| {
        moment_block(blocks[i].0, blocks[i].1, s)
    });
    let mut s1 = Neumaier::default();
    let mut s2 = Neumaier::default();
    let (mut e1, mut e2) = (0.0, 0.0);
    for b in &parts {
        s1.add(b.s1.sum);
        s1.add(b.s1.comp);
        s2.add(b.s2.sum);
        s2.add(b.s2.comp);
        e1 += b.err1;
        e2 += b.err2;
    }
    let nn = BoundedReal::from_u64(n, prec);
    let sum1 = sum_enclosure(s1.total(), e1, 2 * n, prec);
    let sum2 = sum_enclosure(s2.total(), e2, 2 * n, prec);
    let mean = (&sum1 / &nn)?;
    let second_moment = (&sum2 / &nn)?;
    let variance = &second_moment - &(&mean * &mean);
    let zeta_ref = zeta(&(s.as_rational() + 1u32), prec)?;
    let deviation = (&mean - &zeta_ref).abs();
    Ok(MomentReport {
        n,
        s: s.clone(),
        mean,
        second_moment,
        variance,
        zeta_ref,
        deviation,
    })
}

/// Exact mean and second moment over `1..=N` for integer `s`, `N <= 10^4`.
pub fn exact_moments(n: u64, s: u32) -> Result<(Rational, Rational)> {
    if n == 0 || n > EXACT_MAX {
        return Err(domain(format!("exact moments need 1 <= N <= {EXACT_MAX}")));
    }
    let e = Exponent::int(s);
    let mut s1 = Rational::new();
    let mut s2 = Rational::new();
    for k in 1..=n {
        let Value::Exact(v) = f_s_u64(k, &e, 64)? else {
            unreachable!("integer s evaluates exactly")
        };
        s2 += Rational::from(&v * &v);
        s1 += v;
    }
    Ok((s1 / Rational::from(n), s2 / Rational::from(n)))
}

#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub s: Exponent,
    pub mean: BoundedReal,
    pub zeta_ref: BoundedReal,
    pub deviation: BoundedReal,
}

/// One moment scan per `s`, for plotting the mean against `zeta(s+1)`.
pub fn expectation_curve(
    lab: &Lab,
    s_values: &[Exponent],
    n: u64,
    strategy: Strategy,
) -> Result<Vec<CurvePoint>> {
    s_values
        .iter()
        .map(|s| {
            let r = moment_scan(lab, n, s, strategy)?;
            Ok(CurvePoint {
                s: r.s,
                mean: r.mean,
                zeta_ref: r.zeta_ref,
                deviation: r.deviation,
            })
        })
        .collect()
}

/// Finite-`N` variances of `f_s`, one per `s`.
pub fn variance_report(
    lab: &Lab,
    n: u64,
    s_values: &[Exponent],
    strategy: Strategy,
) -> Result<Vec<(Exponent, BoundedReal)>> {
    s_values
        .iter()
        .map(|s| Ok((s.clone(), moment_scan(lab, n, s, strategy)?.variance)))
        .collect()
}

/// `E[f_s^2] = zeta(1+s)^2 zeta(1+2s) / zeta(2+2s)`, the limit of the
/// second moment. Exposed for comparison with the finite-`N` scans.
pub fn limiting_second_moment(s: &Rational, prec: u32) -> Result<BoundedReal> {
    let z = |t: Rational| zeta(&t, prec);
    let a = z(Rational::from(s + 1u32))?;
    let b = z(Rational::from(s * 2u32) + 1u32)?;
    let c = z(Rational::from(s * 2u32) + 2u32)?;
    &(&(&a * &a) * &b) / &c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(x: &BoundedReal, want: f64, tol: f64) -> bool {
        (x.to_f64() - want).abs() < tol
    }

    #[test]
    fn bernoulli_values() {
        let b = bernoulli_upto(12);
        assert_eq!(b[1], Rational::from((-1, 2)));
        assert_eq!(b[2], Rational::from((1, 6)));
        assert_eq!(b[3], 0);
        assert_eq!(b[4], Rational::from((-1, 30)));
        assert_eq!(b[12], Rational::from((-691, 2730)));
    }

    #[test]
    fn zeta_known_values() {
        let pi = rug::Float::with_val(256, rug::float::Constant::Pi);
        let pi2 = BoundedReal::from_bounds(pi.clone(), pi.clone());
        let z2 = zeta(&Rational::from(2), 128).unwrap();
        let want = &(&pi2 * &pi2) * &Rational::from((1, 6));
        assert!(z2.overlaps(&want));
        assert!(z2.abs_error() < 1e-30);
        let z4 = zeta(&Rational::from(4), 128).unwrap();
        assert!(approx(&z4, 1.082_323_233_711_138, 1e-14));
        let z3 = zeta(&Rational::from(3), 128).unwrap();
        assert!(approx(&z3, 1.202_056_903_159_594, 1e-14));
        assert!(zeta(&Rational::from(1), 128).is_err());
    }

    #[test]
    fn zeta_near_one() {
        let t = Rational::from((10001, 10000));
        let z = zeta(&t, 128).unwrap();
        // zeta(1 + e) = 1/e + gamma + O(e)
        assert!(approx(&z, 10000.0 + 0.577_215_664_9, 1e-3));
        assert!(z.abs_error() < 1e-20);
    }

    #[test]
    fn zeta_precision_consistent() {
        let t = Rational::from((7, 5));
        let a = zeta(&t, 96).unwrap();
        let b = zeta(&t, 384).unwrap();
        assert!(a.encloses(&b) || a.overlaps(&b));
        assert!(b.abs_error() < a.abs_error());
    }

    #[test]
    fn small_scans() {
        let lab = Lab::default();
        let r = moment_scan(&lab, 1, &Exponent::int(1), Strategy::Sequential).unwrap();
        assert!(r.mean.contains_rational(&Rational::from(1)));
        for s in 1..=3 {
            let (m, m2) = exact_moments(2000, s).unwrap();
            let r = moment_scan(&lab, 2000, &Exponent::int(s), Strategy::Parallel).unwrap();
            assert!(r.mean.contains_rational(&m), "s={s}");
            assert!(r.second_moment.contains_rational(&m2), "s={s}");
        }
    }

    #[test]
    fn sieve_matches_direct() {
        let s: Exponent = "0.5".parse().unwrap();
        let f = f_values_f64(99_000, 100_000, &s);
        for (i, v) in f.iter().enumerate().step_by(37) {
            let n = 99_000 + i as u64;
            let d = f_s_u64(n, &s, 128).unwrap().to_f64();
            assert!((v - d).abs() < 1e-12 * d, "n={n}");
        }
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let lab = Lab::default();
        let s = Exponent::int(2);
        let a = moment_scan(&lab, 100_000, &s, Strategy::Sequential).unwrap();
        let b = moment_scan(&lab, 100_000, &s, Strategy::Parallel).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.variance, b.variance);
    }

    #[test]
    fn scan_cap_enforced() {
        let mut limits = crate::Limits::default();
        limits.scan_cap = 10;
        let lab = Lab::new(limits);
        assert!(matches!(
            moment_scan(&lab, 11, &Exponent::int(1), Strategy::Sequential),
            Err(crate::Error::Resource(_))
        ));
    }
}
