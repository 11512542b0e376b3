//! Seeded spot checks. Each property draws `cases` inputs from a ChaCha
//! stream seeded by `--seed`, so reruns see the same inputs.

use std::cmp::Ordering;
use std::fmt;

use anyhow::Result;
use divlab::complement::{excluded_shifted, excluded_simple, membership_scan, Outcome};
use divlab::density::approximate;
use divlab::divisor::{f_s, f_s_brute, f_s_u64};
use divlab::primes::{factorize, is_prime};
use divlab::trains::{car, range_solutions};
use divlab::wolke::{build, WolkeConfig};
use divlab::{Exponent, Lab, Rational, Value};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::output::{Output, Table};

#[derive(Debug)]
pub struct Failed(pub usize);

impl fmt::Display for Failed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} spot checks failed", self.0)
    }
}

impl std::error::Error for Failed {}

type Case = fn(&Lab, &RunConfig, &mut ChaCha8Rng) -> divlab::Result<bool>;

const PROPERTIES: [(&str, Case); 6] = [
    ("oracle_equivalence", oracle),
    ("car_monotone", car_monotone),
    ("range_gap_identity", range_gap),
    ("density_end_to_end", density),
    ("complement_consistency", complement),
    ("wolke_invariants", wolke),
];

pub fn run(lab: &Lab, cfg: &RunConfig, cases: usize) -> Result<(Output, usize)> {
    let mut table = Table::new(&["property", "cases", "failures"]);
    let mut total = 0;
    for (i, (name, case)) in PROPERTIES.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let mut failures = 0;
        for c in 0..cases {
            match case(lab, cfg, &mut rng) {
                Ok(true) => {}
                Ok(false) => {
                    eprintln!("{name}: case {c} violated");
                    failures += 1;
                }
                Err(e) => {
                    eprintln!("{name}: case {c}: {e}");
                    failures += 1;
                }
            }
        }
        total += failures;
        table.push(vec![
            name.to_string(),
            cases.to_string(),
            failures.to_string(),
        ]);
    }
    Ok((Output::Table(table), total))
}

fn oracle(lab: &Lab, _: &RunConfig, rng: &mut ChaCha8Rng) -> divlab::Result<bool> {
    let n = rng.gen_range(1..=100_000u64);
    let s = Exponent::int(rng.gen_range(0..=3));
    Ok(f_s_u64(n, &s, lab.prec())?.as_exact() == f_s_brute(n, &s, lab.prec())?.as_exact())
}

fn car_monotone(lab: &Lab, _: &RunConfig, rng: &mut ChaCha8Rng) -> divlab::Result<bool> {
    let base = factorize(rng.gen_range(1..=10_000u64))?;
    let s: Exponent = ["1", "2", "0.5"][rng.gen_range(0..3)].parse()?;
    car(lab, &base, &s, 20)?.check()?;
    Ok(true)
}

fn range_gap(lab: &Lab, _: &RunConfig, rng: &mut ChaCha8Rng) -> divlab::Result<bool> {
    let m = factorize(rng.gen_range(1..=10_000u64))?;
    let s = rng.gen_range(1..=3u32);
    let sols = range_solutions(lab, &m, &Exponent::int(s), 5)?;
    for sol in &sols {
        if !sol.check_exact(s)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn density(lab: &Lab, _: &RunConfig, rng: &mut ChaCha8Rng) -> divlab::Result<bool> {
    let a = Rational::from((1000 + rng.gen_range(1..=9000u64), 1000));
    let eps = Rational::from((1, 100));
    let s = Exponent::int(1);
    let sol = approximate(lab, &a, &s, &eps)?;
    let v = f_s(&sol.n, &s, lab.prec());
    let err = v.sub(&Value::Exact(a)).abs();
    Ok(err.cmp_rational(&eps) == Some(Ordering::Less)
        && v.cmp_rational(&Rational::from(1)) == Some(Ordering::Greater))
}

fn complement(lab: &Lab, cfg: &RunConfig, rng: &mut ChaCha8Rng) -> divlab::Result<bool> {
    let n = loop {
        let n = rng.gen_range(4..=2_000u64);
        if !is_prime(n) {
            break n;
        }
    };
    let big_n = factorize(rng.gen_range(1..=200u64))?;
    let mut values = vec![excluded_simple(n, 1)?];
    if let Ok(e) = excluded_shifted(lab, n, &big_n, 1) {
        values.push(e);
    }
    for e in values {
        let v = membership_scan(&e.value, 1, 10_000, cfg.strategy())?;
        if !e.check() || matches!(v.outcome, Outcome::InRange { .. }) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn wolke(lab: &Lab, _: &RunConfig, rng: &mut ChaCha8Rng) -> divlab::Result<bool> {
    let a = Rational::from((rng.gen_range(1010..=3000u64), 1000));
    let cfg = WolkeConfig::new(a, Exponent::int(1), Rational::from((1, 10)), 3);
    build(lab, &cfg)?.check()?;
    Ok(true)
}
