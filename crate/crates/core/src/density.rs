//! Approximation of targets by values of `f_s`.
//!
//! For `0 < s <= 1` the product `prod_p p^s/(p^s - 1)` diverges, so any
//! `a > 1` can be approached from below by a greedy choice of primes
//! ([`greedy_select`]); finite exponents ([`choose_exponents`]) then turn
//! the infinite factors into an actual `f_s(n)`. For `s > 1` the range is
//! bounded by `zeta(s)` and has gaps; [`rupture_report`] certifies gaps
//! where it can.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rug::ops::Pow;
use rug::{Float, Integer, Rational};
use serde::Serialize;

use crate::divisor::{f_prime_power, f_s};
use crate::error::{domain, invariant, resource, Error, Result};
use crate::factorization::Factorization;
use crate::real::{decide, BoundedReal};
use crate::stats::zeta;
use crate::value::{Exponent, Value};
use crate::Lab;

/// `p^s / (p^s - 1)`, the limit of `f_s(p^k)` as `k` grows.
pub fn euler_factor(p: u64, s: &Exponent, prec: u32) -> Value {
    match s {
        Exponent::Integer(k) => {
            let ps = Integer::from(p).pow(*k);
            Value::Exact(Rational::from((ps.clone(), ps - 1u32)))
        }
        Exponent::Real(_) => {
            let ps = s.pow_enclosure(p, prec);
            let one = BoundedReal::one(prec);
            let inv = (&ps - &one).recip().expect("p^s > 1");
            Value::Bounded(&one + &inv)
        }
    }
}

fn euler_product(primes: &[u64], s: &Exponent, prec: u32) -> Value {
    primes.iter().fold(Value::one_for(s, prec), |acc, &p| {
        acc.mul(&euler_factor(p, s, prec))
    })
}

/// Decides `lhs(bits) ? rhs(bits)`, doubling the precision while the
/// enclosures overlap.
fn decide_cmp(
    what: &str,
    prec: u32,
    lhs: impl Fn(u32) -> Value,
    rhs: impl Fn(u32) -> Value,
) -> Result<Ordering> {
    decide(what, prec, |b| Ok(lhs(b).cmp_value(&rhs(b))))
}

fn rational(q: &Rational) -> impl Fn(u32) -> Value + '_ {
    move |_| Value::Exact(q.clone())
}

#[derive(Clone, Debug, Serialize)]
pub struct GreedySelection {
    pub s: Exponent,
    pub primes: Vec<u64>,
    #[serde(rename = "Q")]
    pub q: Value,
    #[serde(serialize_with = "ser_rational")]
    pub target: Rational,
    pub slack: Value,
    pub exact_hit: bool,
}

pub(crate) fn ser_rational<S: serde::Serializer>(
    q: &Rational,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    Value::Exact(q.clone()).serialize(s)
}

impl GreedySelection {
    fn start(a: &Rational, s: &Exponent, prec: u32) -> Self {
        let q = Value::one_for(s, prec);
        GreedySelection {
            s: s.clone(),
            primes: Vec::new(),
            slack: Value::Exact(a.clone()).sub(&q),
            q,
            target: a.clone(),
            exact_hit: *a == 1,
        }
    }

    fn push(&mut self, p: u64, prec: u32) {
        self.primes.push(p);
        self.q = self.q.mul(&euler_factor(p, &self.s, prec));
        self.slack = Value::Exact(self.target.clone()).sub(&self.q);
        if let Value::Exact(q) = &self.q {
            self.exact_hit = *q == self.target;
        }
    }

    /// `Q` recomputed at `bits`.
    pub fn q_at(&self, bits: u32) -> Value {
        euler_product(&self.primes, &self.s, bits)
    }

    /// Checks the bracket `lower < Q <= a` and greedy maximality: every
    /// prime skipped between consecutive choices would have overshot `a`.
    pub fn check(&self, lab: &Lab, lower: &Rational) -> Result<()> {
        let prec = lab.prec();
        if !self.primes.windows(2).all(|w| w[0] < w[1]) {
            return Err(invariant("greedy primes not strictly ascending"));
        }
        let a = &self.target;
        let above = decide_cmp("Q > a - eps", prec, |b| self.q_at(b), rational(lower))?;
        let below = decide_cmp("Q <= a", prec, |b| self.q_at(b), rational(a))?;
        if !self.exact_hit && above != Ordering::Greater || below == Ordering::Greater {
            return Err(invariant(format!("greedy bracket fails: Q = {}", self.q)));
        }
        // p^s/(p^s-1) falls with p, so the largest skipped prime decides.
        let mut prev = 1;
        for (i, &p) in self.primes.iter().enumerate() {
            let prefix = &self.primes[..i];
            let c = if p > 2 { lab.primes.prev_prime(p)? } else { 0 };
            if c > prev {
                let over = decide_cmp(
                    "skipped prime overshoots",
                    prec,
                    |b| euler_product(prefix, &self.s, b).mul(&euler_factor(c, &self.s, b)),
                    rational(a),
                )?;
                if over != Ordering::Greater {
                    return Err(invariant(format!("greedy skipped fitting prime {c}")));
                }
            }
            prev = p;
        }
        Ok(())
    }
}

/// Extends `sel` with the smallest fitting primes until `Q > lower`, an exact
/// hit, or `max_primes` choices.
fn greedy_extend(
    lab: &Lab,
    sel: &mut GreedySelection,
    lower: &Rational,
    max_primes: Option<usize>,
) -> Result<()> {
    let prec = lab.prec();
    let s = sel.s.clone();
    let a = sel.target.clone();
    loop {
        if sel.exact_hit {
            return Ok(());
        }
        let cur = sel.q.clone();
        let q_at = |b: u32| if b == prec { cur.clone() } else { sel.q_at(b) };
        if decide_cmp("Q > a - eps", prec, q_at, rational(lower))? == Ordering::Greater {
            return Ok(());
        }
        if max_primes.is_some_and(|m| sel.primes.len() >= m) {
            return Ok(());
        }
        let fits = |c: u64| -> Result<bool> {
            let o = decide_cmp(
                "Q * p^s/(p^s-1) <= a",
                prec,
                |b| q_at(b).mul(&euler_factor(c, &s, b)),
                rational(&a),
            )?;
            Ok(o != Ordering::Greater)
        };
        let last = sel.primes.last().copied().unwrap_or(1);
        let mut c = lab.primes.next_prime(last)?;
        if !fits(c)? {
            // p^s/(p^s-1) <= a/Q  <=>  p^s >= a/(a-Q)
            let slack_hi = Value::Exact(a.clone())
                .sub(&cur)
                .enclosure(prec)
                .upper()
                .to_f64();
            let t = (a.to_f64() / slack_hi).powf(1.0 / s.to_f64()) * (1.0 - 1e-9);
            if !t.is_finite() || t >= lab.primes.cap() as f64 {
                return Err(resource(format!(
                    "greedy needs a prime near {t:.3e}, beyond the prime cap {}",
                    lab.primes.cap()
                )));
            }
            c = lab.primes.prime_at_or_above((t as u64).max(c))?;
            while !fits(c)? {
                c = lab.primes.next_prime(c)?;
            }
        }
        sel.push(c, prec);
    }
}

/// Greedy prime selection with `a - eps < Q <= a`, `Q = prod q^s/(q^s-1)`.
pub fn greedy_select(
    lab: &Lab,
    a: &Rational,
    s: &Exponent,
    eps: &Rational,
) -> Result<GreedySelection> {
    if *a <= 1 {
        return Err(domain(format!("greedy selection needs a > 1, got {a}")));
    }
    if !s.in_unit_interval() {
        return Err(domain(format!(
            "greedy selection needs 0 < s <= 1, got {s}"
        )));
    }
    if *eps <= 0 {
        return Err(domain("eps must be positive"));
    }
    let mut sel = GreedySelection::start(a, s, lab.prec());
    let lower = Rational::from(a - eps);
    greedy_extend(lab, &mut sel, &lower, None)?;
    Ok(sel)
}

fn exponent_value(exps: &BTreeMap<u64, u32>, s: &Exponent, prec: u32) -> Value {
    let f = Factorization::from_map_unchecked(exps.clone());
    f_s(&f, s, prec)
}

/// Raises exponents in `exps` (largest deficit `q^-(k+1)s` first) until
/// `prod f_s(q^k) > Q - eps`. Primes of `sel` missing from `exps` start at 1.
fn refine_exponents(
    lab: &Lab,
    sel: &GreedySelection,
    eps: &Rational,
    exps: &mut BTreeMap<u64, u32>,
) -> Result<()> {
    let prec = lab.prec();
    let s = &sel.s;
    for &p in &sel.primes {
        exps.entry(p).or_insert(1);
    }
    let q_lo = |b: u32| sel.q_at(b).sub(&Value::Exact(eps.clone()));
    let mut cur = exponent_value(exps, s, prec);
    loop {
        let snapshot = exps.clone();
        let c = cur.clone();
        let o = decide_cmp(
            "f_s(n) > Q - eps",
            prec,
            |b| {
                if b == prec {
                    c.clone()
                } else {
                    exponent_value(&snapshot, s, b)
                }
            },
            q_lo,
        )?;
        if o == Ordering::Greater {
            return Ok(());
        }
        let (&p, &k) = exps
            .iter()
            .min_by(|x, y| {
                let wx = (*x.1 as f64 + 1.0) * (*x.0 as f64).ln();
                let wy = (*y.1 as f64 + 1.0) * (*y.0 as f64).ln();
                wx.total_cmp(&wy)
            })
            .ok_or_else(|| invariant("empty selection below Q - eps"))?;
        if k >= lab.limits.exponent_cap {
            return Err(resource(format!(
                "exponent of {p} would exceed the cap {}",
                lab.limits.exponent_cap
            )));
        }
        let old = f_prime_power(p, k, s, prec)?;
        let new = f_prime_power(p, k + 1, s, prec)?;
        cur = cur.mul(&new).div(&old)?;
        exps.insert(p, k + 1);
    }
}

/// Exponents `k_i` with `Q - eps < prod f_s(q_i^k_i) < Q`, starting from
/// all ones.
pub fn choose_exponents(
    lab: &Lab,
    sel: &GreedySelection,
    eps: &Rational,
) -> Result<BTreeMap<u64, u32>> {
    if *eps <= 0 {
        return Err(domain("eps must be positive"));
    }
    let mut exps = BTreeMap::new();
    if sel.primes.is_empty() {
        return Ok(exps);
    }
    refine_exponents(lab, sel, eps, &mut exps)?;
    Ok(exps)
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxSolution {
    pub n: Factorization,
    pub value: Value,
    #[serde(serialize_with = "ser_rational")]
    pub target: Rational,
    #[serde(serialize_with = "ser_rational")]
    pub eps: Rational,
    pub achieved_error: Value,
    pub selection: Option<GreedySelection>,
    pub exponents: BTreeMap<u64, u32>,
}

/// A factored `n` with `|f_s(n) - a| < eps`, for `a >= 1` and `0 < s <= 1`.
///
/// Half of `eps` goes to the prime selection and half to the exponents.
/// The work runs down the ladder `eps 2^J, ..., 2 eps, eps` (`eps 2^J >= 1`),
/// each rung continuing the previous one, so the result for `eps / 2` always
/// refines the result for `eps`. When `a - 1 < eps / 2` no prime fits the
/// selection and `n` is the smallest prime with `p^-s < eps / 2`.
pub fn approximate(
    lab: &Lab,
    a: &Rational,
    s: &Exponent,
    eps: &Rational,
) -> Result<ApproxSolution> {
    if *a < 1 {
        return Err(domain(format!("f_s takes no values below 1, got a = {a}")));
    }
    if !s.in_unit_interval() {
        return Err(domain(format!(
            "global density holds only for 0 < s <= 1 (got {s}); use the rupture report"
        )));
    }
    if *eps <= 0 {
        return Err(domain("eps must be positive"));
    }
    let prec = lab.prec();
    let mut rung = eps.clone();
    while rung < 1 {
        rung *= 2u32;
    }
    let mut sel = GreedySelection::start(a, s, prec);
    let mut exps = BTreeMap::new();
    loop {
        let half = Rational::from(&rung / 2u32);
        if !sel.exact_hit {
            greedy_extend(lab, &mut sel, &Rational::from(a - &half), None)?;
        }
        if !sel.primes.is_empty() {
            refine_exponents(lab, &sel, &half, &mut exps)?;
        }
        if rung == *eps {
            break;
        }
        rung /= 2u32;
    }
    let (n, selection) = if sel.primes.is_empty() {
        (Factorization::prime(near_one_prime(lab, s, eps)?), None)
    } else {
        (Factorization::from_map_unchecked(exps.clone()), Some(sel))
    };
    let value = f_s(&n, s, prec);
    let err_at = |b: u32| f_s(&n, s, b).sub(&Value::Exact(a.clone())).abs();
    if decide_cmp("|f_s(n) - a| < eps", prec, err_at, rational(eps))? != Ordering::Less {
        return Err(invariant(format!(
            "approximation of {a} missed eps by n = {n}"
        )));
    }
    Ok(ApproxSolution {
        achieved_error: err_at(prec),
        n,
        value,
        target: a.clone(),
        eps: eps.clone(),
        selection,
        exponents: exps,
    })
}

/// Smallest prime with `p^-s < eps / 2`.
fn near_one_prime(lab: &Lab, s: &Exponent, eps: &Rational) -> Result<u64> {
    let prec = lab.prec();
    let bound = Rational::from(2u32) / eps.clone();
    let t = bound.to_f64().powf(1.0 / s.to_f64()) * (1.0 - 1e-9);
    if !t.is_finite() || t >= lab.primes.cap() as f64 {
        return Err(resource(format!(
            "needs a prime near {t:.3e}, beyond the prime cap"
        )));
    }
    let mut p = lab.primes.prime_at_or_above(t.max(2.0) as u64)?;
    loop {
        let o = decide_cmp(
            "p^s > 2/eps",
            prec,
            |b| Value::Bounded(s.pow_enclosure(p, b)),
            rational(&bound),
        )?;
        if o == Ordering::Greater {
            return Ok(p);
        }
        p = lab.primes.next_prime(p)?;
    }
}

/// `zeta(s)`, the supremum of `f_s` for `s > 1`.
pub fn range_upper_bound(s: &Exponent, prec: u32) -> Result<BoundedReal> {
    if !s.exceeds_one() {
        return Err(domain(format!("the range is unbounded for s = {s} <= 1")));
    }
    zeta(&s.as_rational(), prec)
}

/// Upper bound for `sum_{n >= m} 1/(n^s - 1)` over all integers,
/// `m^s/(m^s - 1) * (m^-s + m^(1-s)/(s-1))`.
fn integer_tail_sum(m: u64, s: &Exponent, prec: u32) -> BoundedReal {
    let ms = s.pow_enclosure(m, prec);
    let one = BoundedReal::one(prec);
    let sm1 = BoundedReal::from_rational(&(s.as_rational() - 1u32), prec);
    let ratio = (&ms / &(&ms - &one)).expect("m^s > 1");
    let inv = ms.recip().expect("m^s > 0");
    let integral = (&(&BoundedReal::from_u64(m, prec) * &inv) / &sm1).expect("s > 1");
    &ratio * &(&inv + &integral)
}

/// `exp` of [`integer_tail_sum`], bounding `prod_{p >= m} p^s/(p^s - 1)`
/// via `ln(1 + x) <= x`.
fn tail_exp(m: u64, s: &Exponent, prec: u32) -> BoundedReal {
    let t = integer_tail_sum(m, s, prec).exp();
    let hi = t.upper().clone();
    BoundedReal::from_bounds(Float::with_val(prec, 1), hi)
}

/// Number of primes multiplied explicitly before the analytic tail.
pub const TAIL_WINDOW: usize = 4096;

/// Certified upper bound on `prod_{p >= q_start} p^s/(p^s - 1)` for `s > 1`:
/// an explicit product over the next [`TAIL_WINDOW`] primes times the
/// analytic tail bound beyond them.
pub fn tail_product_bound(lab: &Lab, q_start: u64, s: &Exponent, prec: u32) -> Result<BoundedReal> {
    if !s.exceeds_one() {
        return Err(domain(format!(
            "the Euler product diverges for s = {s} <= 1"
        )));
    }
    let mut acc = BoundedReal::one(prec);
    let mut p = lab.primes.prime_at_or_above(q_start.max(2))?;
    for _ in 0..TAIL_WINDOW {
        acc = &acc * &euler_factor(p, s, prec).enclosure(prec);
        match lab.primes.next_prime(p) {
            Ok(q) => p = q,
            Err(Error::Resource(_)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(&acc * &tail_exp(p, s, prec))
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "outcome")]
pub enum RuptureReport {
    /// No proof of unreachability; the best greedy product is reported.
    /// `witness` is set when the search met `f_s(m) = a` exactly.
    Feasible {
        best: Value,
        primes: Vec<u64>,
        witness: Option<Factorization>,
        nodes: usize,
    },
    /// `a` lies outside the closure of the range. `below` and `above`, when
    /// present, bound an open gap around `a` free of range values.
    ProvablyUnreachable {
        reason: String,
        bound: Value,
        below: Option<Value>,
        above: Option<Value>,
        nodes: usize,
    },
}

/// A search node: exponents fixed below prime index `next` (collected in
/// `fixed`, with `f = f_s(fixed)`), plus pending primes whose exponent is
/// only known to be `>= k`.
struct Node {
    f: Value,
    next: usize,
    fixed: BTreeMap<u64, u32>,
    pending: Vec<(u64, u32)>,
}

impl Node {
    fn fix(&self, p: u64, k: u32, s: &Exponent, prec: u32) -> Result<Node> {
        let mut fixed = self.fixed.clone();
        fixed.insert(p, k);
        Ok(Node {
            f: self.f.mul(&f_prime_power(p, k, s, prec)?),
            next: self.next,
            fixed,
            pending: self.pending.clone(),
        })
    }
}

struct Tails {
    primes: Vec<u64>,
    /// `suffix[i]` bounds `prod_{j >= i} p_j^s/(p_j^s - 1)`.
    suffix: Vec<BoundedReal>,
}

impl Tails {
    fn new(lab: &Lab, s: &Exponent, prec: u32) -> Result<Self> {
        let table = lab.primes.table_upto(1 << 16)?;
        let primes = table.primes().to_vec();
        let last = *primes.last().expect("primes below 2^16");
        let mut suffix = vec![tail_exp(last + 1, s, prec)];
        for &p in primes.iter().rev() {
            let t = &euler_factor(p, s, prec).enclosure(prec) * suffix.last().unwrap();
            suffix.push(t);
        }
        suffix.reverse();
        Ok(Tails { primes, suffix })
    }

    fn prime(&self, i: usize) -> Result<u64> {
        if i < self.primes.len() {
            Ok(self.primes[i])
        } else {
            Err(resource(format!(
                "gap search reached prime index {i} beyond 2^16"
            )))
        }
    }
}

/// Whether `a` can be approached by values of `f_s` for `s > 1`.
///
/// `a > zeta(s)` is unreachable outright. Otherwise a branch-and-bound over
/// prime exponents tries to cover the whole exponent space with intervals
/// that miss `a`; success proves `a` is not in the closure of the range.
/// Running out of `search_nodes`, or meeting `a` exactly, yields `Feasible`.
pub fn rupture_report(lab: &Lab, a: &Rational, s: &Exponent) -> Result<RuptureReport> {
    if !s.exceeds_one() {
        return Err(domain(format!("ruptures need s > 1, got {s}")));
    }
    let prec = lab.prec();
    let greedy_best = || -> Result<GreedySelection> {
        let mut sel = GreedySelection::start(a, s, prec);
        if *a > 1 {
            let lower = a - Rational::from((1, 1_000_000_000u64));
            match greedy_extend(lab, &mut sel, &lower, Some(64)) {
                Ok(()) | Err(Error::Resource(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(sel)
    };
    if *a < 1 {
        return Ok(RuptureReport::ProvablyUnreachable {
            reason: "f_s >= 1".into(),
            bound: Value::Exact(Rational::from(1)),
            below: None,
            above: Some(Value::Exact(Rational::from(1))),
            nodes: 0,
        });
    }
    let z = range_upper_bound(s, prec)?;
    if z.cmp_rational(a) == Some(Ordering::Less) {
        return Ok(RuptureReport::ProvablyUnreachable {
            reason: "a exceeds zeta(s), the supremum of f_s".into(),
            bound: Value::Bounded(z.clone()),
            below: Some(Value::Bounded(z)),
            above: None,
            nodes: 0,
        });
    }

    let tails = Tails::new(lab, s, prec)?;
    let target = Value::Exact(a.clone());
    let mut stack = vec![Node {
        f: Value::one_for(s, prec),
        next: 0,
        fixed: BTreeMap::new(),
        pending: Vec::new(),
    }];
    let mut nodes = 0usize;
    let mut below: Option<Value> = None;
    let mut above: Option<Value> = None;
    let budget = lab.limits.search_nodes;
    while let Some(node) = stack.pop() {
        nodes += 1;
        if nodes > budget {
            let sel = greedy_best()?;
            return Ok(RuptureReport::Feasible {
                best: sel.q,
                primes: sel.primes,
                witness: None,
                nodes: budget,
            });
        }
        let mut lo = node.f.clone();
        let mut hi = node.f.clone();
        for &(p, k) in &node.pending {
            lo = lo.mul(&f_prime_power(p, k, s, prec)?);
            hi = hi.mul(&euler_factor(p, s, prec));
        }
        let tail = tails.suffix[node.next].clone();
        let hi = hi.mul(&Value::Bounded(tail.clone()));
        if target.cmp_value(&lo) == Some(Ordering::Equal) {
            // lo is attained by the fixed part times the pending minima
            let mut m = node.fixed.clone();
            m.extend(node.pending.iter().copied());
            let sel = greedy_best()?;
            return Ok(RuptureReport::Feasible {
                best: sel.q,
                primes: sel.primes,
                witness: Some(Factorization::from_map_unchecked(m)),
                nodes,
            });
        }
        if target.cmp_value(&lo) == Some(Ordering::Less) {
            if above
                .as_ref()
                .is_none_or(|x| lo.cmp_value(x) == Some(Ordering::Less))
            {
                above = Some(lo);
            }
            continue;
        }
        if target.cmp_value(&hi) == Some(Ordering::Greater) {
            if below
                .as_ref()
                .is_none_or(|x| hi.cmp_value(x) == Some(Ordering::Greater))
            {
                below = Some(hi);
            }
            continue;
        }
        // refine the widest source of uncertainty: the tail or a pending group
        let tail_w = tail.upper().to_f64().ln();
        let widest = node
            .pending
            .iter()
            .enumerate()
            .map(|(j, &(p, k))| (j, (p as f64).powf(-(k as f64 + 1.0) * s.to_f64())))
            .max_by(|x, y| x.1.total_cmp(&y.1));
        match widest {
            Some((j, w)) if w > tail_w => {
                let (p, k) = node.pending[j];
                let mut more = node.pending.clone();
                more[j].1 = k + 1;
                let mut exact = node.fix(p, k, s, prec)?;
                exact.pending.remove(j);
                stack.push(Node {
                    pending: more,
                    ..node
                });
                stack.push(exact);
            }
            _ => {
                let Ok(p) = tails.prime(node.next) else {
                    let sel = greedy_best()?;
                    return Ok(RuptureReport::Feasible {
                        best: sel.q,
                        primes: sel.primes,
                        witness: None,
                        nodes,
                    });
                };
                let mut one = node.fix(p, 1, s, prec)?;
                one.next += 1;
                let mut grouped = node.pending.clone();
                grouped.push((p, 2));
                stack.push(Node {
                    f: node.f.clone(),
                    next: node.next + 1,
                    fixed: node.fixed.clone(),
                    pending: grouped,
                });
                stack.push(one);
                stack.push(Node {
                    next: node.next + 1,
                    ..node
                });
            }
        }
    }
    Ok(RuptureReport::ProvablyUnreachable {
        reason: "every branch of the exponent search misses a".into(),
        bound: below
            .clone()
            .unwrap_or_else(|| Value::Exact(Rational::from(1))),
        below,
        above,
        nodes,
    })
}
