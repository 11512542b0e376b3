use anyhow::Result;
use divlab::complement::{complement_point, decide_membership, membership_scan};
use divlab::density::{approximate, rupture_report};
use divlab::divisor::{f_s, sigma_s};
use divlab::par::{map_chunks, split_range};
use divlab::primes::factorize;
use divlab::stats::moment_scan;
use divlab::trains::train as build_train;
use divlab::value::{decimal_literal, parse_decimal};
use divlab::wolke::{build, StopReason, WolkeConfig};
use divlab::{Exponent, Factorization, Lab, Rational, Value};
use rug::ops::Pow;
use serde_json::json;

use crate::config::RunConfig;
use crate::output::{Output, Table};

fn exponent(s: &str) -> Result<Exponent> {
    Ok(s.parse::<Exponent>()?)
}

fn rational(s: &str) -> Result<Rational> {
    Ok(parse_decimal(s)?)
}

fn fraction(v: &Value) -> String {
    v.fraction().unwrap_or_default()
}

/// Exact decimal expansion when it terminates within `MAX_PLACES` digits.
fn full_decimal(v: &Value) -> String {
    const MAX_PLACES: usize = 400;
    match v.as_exact() {
        Some(q) => {
            let d = decimal_literal(q);
            if d.contains('/') || d.len() > MAX_PLACES {
                v.decimal()
            } else {
                d
            }
        }
        None => v.decimal(),
    }
}

pub fn eval(lab: &Lab, n: &str, s: &str) -> Result<Output> {
    let n: Factorization = n.parse()?;
    let s = exponent(s)?;
    let v = f_s(&n, &s, lab.prec());
    let (line, sigma, ns) = match s.as_integer() {
        Some(si) => {
            let sigma = sigma_s(&n, si, lab.limits.bignum_bits)?;
            let ns = n.to_integer().pow(si);
            let line = if ns == 1 {
                full_decimal(&v)
            } else {
                format!("{} (= {sigma}/{ns})", full_decimal(&v))
            };
            (line, Some(sigma.to_string()), Some(ns.to_string()))
        }
        None => (
            format!("{} +/- {}", v.decimal(), v.abs_error_decimal()),
            None,
            None,
        ),
    };
    let json = json!({
        "n": n.to_integer().to_string(),
        "factorization": n.to_string(),
        "s": s.to_string(),
        "value": v,
        "sigma": sigma,
        "n_pow_s": ns,
    });
    Ok(Output::Text { line, json })
}

pub fn train(lab: &Lab, n: &str, s: &str, cars: usize, length: usize) -> Result<Output> {
    let n: Factorization = n.parse()?;
    let t = build_train(lab, &n, &exponent(s)?, cars, length)?;
    let mut table = Table::new(&["car_index", "p", "value_decimal", "value_fraction"]);
    for (i, c) in t.cars.iter().enumerate() {
        for e in &c.entries {
            table.push(vec![
                i.to_string(),
                e.p.to_string(),
                e.value.decimal(),
                fraction(&e.value),
            ]);
        }
    }
    Ok(Output::Table(table))
}

pub fn scan(lab: &Lab, cfg: &RunConfig, n: u64, s: &str) -> Result<Output> {
    if n == 0 {
        return Err(divlab::Error::Domain("N must be >= 1".into()).into());
    }
    if n > lab.limits.scan_cap {
        return Err(divlab::Error::Resource(format!(
            "N = {n} exceeds scan_cap {}",
            lab.limits.scan_cap
        ))
        .into());
    }
    let s = exponent(s)?;
    let chunks = split_range(1, n, 1 << 14);
    let prec = lab.prec();
    let rows = map_chunks(
        cfg.strategy(),
        chunks.len(),
        |i| -> divlab::Result<Vec<Vec<String>>> {
            let (a, b) = chunks[i];
            (a..=b)
                .map(|m| {
                    let v = f_s(&factorize(m)?, &s, prec);
                    Ok(vec![
                        m.to_string(),
                        v.decimal(),
                        fraction(&v),
                        v.abs_error_decimal(),
                    ])
                })
                .collect()
        },
    );
    let mut table = Table::new(&["n", "value_decimal", "value_fraction", "abs_error"]);
    for r in rows {
        table.rows.extend(r?);
    }
    Ok(Output::Table(table))
}

pub fn approx(lab: &Lab, a: &str, s: &str, eps: &str) -> Result<Output> {
    let sol = approximate(lab, &rational(a)?, &exponent(s)?, &rational(eps)?)?;
    Output::object(&sol)
}

pub fn wolke(lab: &Lab, a: &str, s: &str, eps: &str, steps: usize) -> Result<Output> {
    let cfg = WolkeConfig::new(rational(a)?, exponent(s)?, rational(eps)?, steps);
    let seq = build(lab, &cfg)?;
    seq.check()?;
    if let StopReason::Resource(why) = &seq.stop {
        eprintln!(
            "note: stopped after {} steps: {why}",
            seq.extension_steps().len()
        );
    }
    let mut table = Table::new(&[
        "k",
        "p_k",
        "log10_n",
        "f_value_decimal",
        "gap_decimal",
        "bound_decimal",
        "verdict",
        "w5_holds",
    ]);
    for st in &seq.steps {
        let log10 = (&st.log_n / &divlab::BoundedReal::from_u64(10, lab.prec()).ln()?)?;
        table.push(vec![
            st.k.to_string(),
            st.p_k.map(|p| p.to_string()).unwrap_or_default(),
            log10.to_decimal(12),
            st.f_value.decimal(),
            st.gap.decimal(),
            st.log_bound.exp().to_decimal(12),
            st.verdict.to_string(),
            st.w5_holds.map(|b| b.to_string()).unwrap_or_default(),
        ]);
    }
    Ok(Output::Table(table))
}

pub fn complement(lab: &Lab, lo: &str, hi: &str, s: u32) -> Result<Output> {
    let e = complement_point(lab, &rational(lo)?, &rational(hi)?, s)?;
    Output::object(&e)
}

pub fn member(
    lab: &Lab,
    cfg: &RunConfig,
    q: &str,
    s: u32,
    bound: u64,
    prove: bool,
) -> Result<Output> {
    let q = rational(q)?;
    let v = if prove {
        decide_membership(lab, &q, s, bound, cfg.strategy())?
    } else {
        membership_scan(&q, s, bound, cfg.strategy())?
    };
    Output::object(&v)
}

pub fn stats(lab: &Lab, cfg: &RunConfig, n: u64, s: &[String]) -> Result<Output> {
    let mut table = Table::new(&[
        "n",
        "s",
        "mean",
        "mean_abs_error",
        "second_moment",
        "variance",
        "zeta_ref",
        "deviation",
    ]);
    for si in s {
        let r = moment_scan(lab, n, &exponent(si)?, cfg.strategy())?;
        table.push(vec![
            r.n.to_string(),
            r.s.to_string(),
            r.mean.to_decimal(15),
            divlab::real::format_float(&r.mean.abs_error(), 3),
            r.second_moment.to_decimal(15),
            r.variance.to_decimal(15),
            r.zeta_ref.to_decimal(15),
            r.deviation.to_decimal(6),
        ]);
    }
    Ok(Output::Table(table))
}

pub fn rupture(lab: &Lab, a: &str, s: &str) -> Result<Output> {
    let r = rupture_report(lab, &rational(a)?, &exponent(s)?)?;
    Output::object(&r)
}
