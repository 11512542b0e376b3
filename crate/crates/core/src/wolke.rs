//! Squarefree sequences `n_k` with `|f_s(n_k) - a| <= n_k^-(0.4s - eps)`.
//!
//! `n_0` is the run of consecutive primes above `y` whose product of
//! `1 + p^-s` stays `<= a`; each later step absorbs the smallest larger prime
//! that keeps `f_s(n_k) <= a`. The usable primes grow doubly exponentially,
//! so only a short prefix fits in `u64` and the build reports why it stopped.

use std::cmp::Ordering;

use rug::Rational;
use serde::Serialize;

use crate::density::ser_rational;
use crate::divisor::f_prime;
use crate::error::{domain, invariant, resource, Error, Result};
use crate::factorization::Factorization;
use crate::real::{decide, BoundedReal};
use crate::value::{Exponent, Value};
use crate::Lab;

#[derive(Clone, Debug, Serialize)]
pub struct WolkeConfig {
    #[serde(serialize_with = "ser_rational")]
    pub a: Rational,
    pub s: Exponent,
    #[serde(serialize_with = "ser_rational")]
    pub eps: Rational,
    pub y: u64,
    pub max_steps: usize,
    /// Overrides the lab's prime cap when set (it can only lower it).
    pub prime_cap: Option<u64>,
}

impl WolkeConfig {
    pub fn new(a: Rational, s: Exponent, eps: Rational, max_steps: usize) -> Self {
        WolkeConfig {
            a,
            s,
            eps,
            y: 2,
            max_steps,
            prime_cap: None,
        }
    }

    /// `0.4 s - eps`, the exponent of the target bound.
    pub fn bound_exponent(&self) -> Rational {
        (self.s.as_rational() * Rational::from((2, 5))) - &self.eps
    }

    pub fn validate(&self) -> Result<()> {
        if self.a < 1 {
            return Err(domain(format!("a = {} is below 1", self.a)));
        }
        if !self.s.in_unit_interval() {
            return Err(domain(format!("s = {} outside (0, 1]", self.s)));
        }
        if self.eps <= 0 || self.bound_exponent() <= 0 {
            return Err(domain(format!("eps = {} must lie in (0, 0.4 s)", self.eps)));
        }
        if self.y == 0 {
            return Err(domain("y must be positive"));
        }
        Ok(())
    }

    fn cap(&self, lab: &Lab) -> u64 {
        self.prime_cap
            .map_or(lab.primes.cap(), |c| c.min(lab.primes.cap()))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WolkeStep {
    pub k: usize,
    /// Prime absorbed at this step (for `k = 0`, the largest prime of `n_0`).
    pub p_k: Option<u64>,
    pub n_k: Factorization,
    pub log_n: BoundedReal,
    pub f_value: Value,
    pub gap: Value,
    /// `Delta_k` with `f_s(n_k) (1 + 1/Delta_k) = a`; absent when the gap is 0.
    pub delta_k: Option<Value>,
    /// `-(0.4s - eps) ln n_k`, the log of the target bound.
    pub log_bound: BoundedReal,
    pub verdict: bool,
    /// `gap <= 4^s a (p_k^s - pbar_k^s) / p_k^2s`, for `k >= 1`.
    pub w5_holds: Option<bool>,
    /// `f_s(n_{k-1}) (1 + 1/pbar_k^s) > a`, logged only.
    pub predecessor_overshoots: Option<bool>,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "reason", content = "detail")]
pub enum StopReason {
    MaxSteps,
    ExactHit,
    Resource(String),
}

#[derive(Clone, Debug, Serialize)]
pub struct WolkeSequence {
    pub config: WolkeConfig,
    pub steps: Vec<WolkeStep>,
    pub terminated_exact: bool,
    pub stop: StopReason,
}

impl WolkeSequence {
    fn last(&self) -> &WolkeStep {
        self.steps.last().expect("step 0 always present")
    }

    /// Steps with `k >= 1`.
    pub fn extension_steps(&self) -> &[WolkeStep] {
        &self.steps[1..]
    }

    /// Checks squarefree growth by strictly larger primes, the one-sided,
    /// nondecreasing approach to `a`, and the `Delta` identity.
    pub fn check(&self) -> Result<()> {
        let a = Value::Exact(self.config.a.clone());
        for (i, st) in self.steps.iter().enumerate() {
            if !st.n_k.is_squarefree() {
                return Err(invariant(format!("n_{} is not squarefree", st.k)));
            }
            if st.f_value.cmp_value(&a) == Some(Ordering::Greater) {
                return Err(invariant(format!("f_s(n_{}) exceeds a", st.k)));
            }
            if let (Some(d), Value::Exact(f)) = (&st.delta_k, &st.f_value) {
                let d = d.as_exact().expect("exact delta for exact f");
                let lhs = f * (Rational::from(d.recip_ref()) + 1u32);
                if lhs != self.config.a {
                    return Err(invariant(format!("Delta identity fails at k = {}", st.k)));
                }
            }
            if i > 0 {
                let prev = &self.steps[i - 1];
                let p = st.p_k.expect("extension steps absorb a prime");
                if prev.n_k.largest_prime().is_some_and(|q| q >= p) {
                    return Err(invariant(format!(
                        "p_{} does not exceed earlier primes",
                        st.k
                    )));
                }
                if st.n_k != prev.n_k.times_prime(p) {
                    return Err(invariant(format!("n_{} != n_{} p_{}", st.k, prev.k, st.k)));
                }
                if st.f_value.cmp_value(&prev.f_value) == Some(Ordering::Less) {
                    return Err(invariant(format!("f_s(n_k) decreased at k = {}", st.k)));
                }
            }
        }
        Ok(())
    }
}

/// `prod (1 + p^-s)` over the run of primes in `(y, p_0]` that keeps the
/// product `<= a`; `n_0 = 1` when the first prime above `y` overshoots.
pub fn initial_n0(lab: &Lab, config: &WolkeConfig) -> Result<Factorization> {
    config.validate()?;
    let prec = lab.prec();
    let s = &config.s;
    let mut f = Value::one_for(s, prec);
    let mut primes = Vec::new();
    let mut p = config.y;
    loop {
        p = next_prime_capped(lab, config, p)?;
        let cand = f.mul(&f_prime(p, s, prec));
        let ps = primes.clone();
        let o = decide_le(prec, &cand, &config.a, |b| {
            product_value(&ps, Some(p), s, b)
        })?;
        if !o {
            break;
        }
        f = cand;
        primes.push(p);
    }
    Ok(Factorization::from_prime_list(primes))
}

fn next_prime_capped(lab: &Lab, config: &WolkeConfig, p: u64) -> Result<u64> {
    let q = lab.primes.next_prime(p)?;
    if q > config.cap(lab) {
        return Err(resource(format!("prime {q} beyond the configured cap")));
    }
    Ok(q)
}

fn product_value(primes: &[u64], extra: Option<u64>, s: &Exponent, prec: u32) -> Value {
    primes
        .iter()
        .chain(extra.as_ref())
        .fold(Value::one_for(s, prec), |acc, &p| {
            acc.mul(&f_prime(p, s, prec))
        })
}

/// Decides `value <= a`, recomputing via `at` on escalation.
fn decide_le(prec: u32, value: &Value, a: &Rational, at: impl Fn(u32) -> Value) -> Result<bool> {
    let o = decide("f_s(n) (1 + p^-s) <= a", prec, |b| {
        let v = if b == prec { value.clone() } else { at(b) };
        Ok(v.cmp_rational(a))
    })?;
    Ok(o != Ordering::Greater)
}

fn make_step(
    lab: &Lab,
    config: &WolkeConfig,
    k: usize,
    p_k: Option<u64>,
    n_k: Factorization,
    f_value: Value,
    prev_f: Option<&Value>,
) -> Result<WolkeStep> {
    let prec = lab.prec();
    let s = &config.s;
    let a = Value::Exact(config.a.clone());
    let gap = a.sub(&f_value);
    let zero_gap = gap.as_exact().is_some_and(|g| *g == 0);
    let delta_k = if zero_gap {
        None
    } else {
        Some(f_value.div(&gap)?)
    };
    let log_n = n_k.ln(prec);
    let e = config.bound_exponent();
    let log_bound = -&(&log_n * &e);
    let verdict = if zero_gap {
        true
    } else {
        let primes: Vec<u64> = n_k.primes().collect();
        let o = decide("ln gap <= -(0.4s - eps) ln n", prec, |b| {
            let (g, lb) = if b == prec {
                (gap.clone(), log_bound.clone())
            } else {
                let f = product_value(&primes, None, s, b);
                (a.sub(&f), -&(&n_k.ln(b) * &e))
            };
            let lg = g.enclosure(b).ln()?;
            Ok(lg.partial_cmp_real(&lb))
        })?;
        o != Ordering::Greater
    };
    let (w5_holds, predecessor_overshoots) = match (p_k, prev_f) {
        (Some(p), Some(pf)) if p > 2 => {
            let pbar = lab.primes.prev_prime(p)?;
            let ps = s.pow_enclosure(p, prec);
            let pbs = s.pow_enclosure(pbar, prec);
            let four_s = s.pow_enclosure(4, prec);
            let rhs = (&(&(&four_s * &BoundedReal::from_rational(&config.a, prec))
                * &(&ps - &pbs))
                / &(&ps * &ps))?;
            let w5 = match gap.enclosure(prec).partial_cmp_real(&rhs) {
                Some(Ordering::Greater) => false,
                Some(_) => true,
                None => gap.enclosure(prec).upper() <= rhs.upper(),
            };
            let over =
                pf.mul(&f_prime(pbar, s, prec)).cmp_rational(&config.a) == Some(Ordering::Greater);
            (Some(w5), Some(over))
        }
        _ => (None, None),
    };
    Ok(WolkeStep {
        k,
        p_k,
        n_k,
        log_n,
        f_value,
        gap,
        delta_k,
        log_bound,
        verdict,
        w5_holds,
        predecessor_overshoots,
    })
}

/// Appends the next step: the smallest prime `p > p_k` with
/// `f_s(n_k) (1 + p^-s) <= a`, i.e. `p^s >= Delta_k`.
pub fn extend(lab: &Lab, seq: &mut WolkeSequence) -> Result<()> {
    if seq.terminated_exact {
        return Err(domain("sequence already hit a exactly"));
    }
    let prec = lab.prec();
    let config = seq.config.clone();
    let s = &config.s;
    let last = seq.last();
    let floor = last.n_k.largest_prime().unwrap_or(config.y).max(config.y);
    let delta = last.delta_k.clone().expect("gap > 0 when not terminated");
    // p >= Delta^(1/s); start from a float estimate shrunk slightly and verify
    let d_hi = delta.enclosure(prec);
    let est = d_hi.lower().to_f64().powf(1.0 / s.to_f64()) * (1.0 - 1e-9);
    let cap = config.cap(lab);
    if !est.is_finite() || est >= cap as f64 {
        return Err(resource(format!(
            "next prime near {est:.3e} lies beyond the prime cap {cap}"
        )));
    }
    let mut p = next_prime_capped(lab, &config, floor.max(est as u64))?;
    let base: Vec<u64> = last.n_k.primes().collect();
    loop {
        let cand = last.f_value.mul(&f_prime(p, s, prec));
        if decide_le(prec, &cand, &config.a, |b| {
            product_value(&base, Some(p), s, b)
        })? {
            break;
        }
        p = next_prime_capped(lab, &config, p)?;
    }
    let n = last.n_k.times_prime(p);
    let f = last.f_value.mul(&f_prime(p, s, prec));
    let prev_f = last.f_value.clone();
    let k = last.k + 1;
    let step = make_step(lab, &config, k, Some(p), n, f, Some(&prev_f))?;
    seq.terminated_exact = step.delta_k.is_none();
    seq.steps.push(step);
    Ok(())
}

/// Runs [`initial_n0`] then [`extend`] until `max_steps`, an exact hit, or a
/// resource cap. Hitting a cap is a normal stop, recorded in `stop`.
pub fn build(lab: &Lab, config: &WolkeConfig) -> Result<WolkeSequence> {
    config.validate()?;
    let n0 = initial_n0(lab, config)?;
    let f0 = crate::divisor::f_s(&n0, &config.s, lab.prec());
    let step0 = make_step(lab, config, 0, n0.largest_prime(), n0, f0, None)?;
    let mut seq = WolkeSequence {
        config: config.clone(),
        terminated_exact: step0.delta_k.is_none(),
        steps: vec![step0],
        stop: StopReason::MaxSteps,
    };
    while !seq.terminated_exact && seq.steps.len() <= config.max_steps {
        match extend(lab, &mut seq) {
            Ok(()) => {}
            Err(Error::Resource(msg)) => {
                seq.stop = StopReason::Resource(msg);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if seq.terminated_exact {
        seq.stop = StopReason::ExactHit;
    }
    seq.check()?;
    Ok(seq)
}
