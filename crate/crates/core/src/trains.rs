//! Cars, trains and range-point solutions.
//!
//! For fixed `n` the values `f_s(np)` over primes `p` not dividing `n` fall
//! strictly towards `f_s(n)`. A car is a prefix of that sequence; a train
//! chains cars by absorbing the smallest admissible prime into the base, so
//! the infimum of each car is the first value of the previous one.

use std::cmp::Ordering;

use rug::ops::Pow;
use rug::Rational;
use serde::Serialize;

use crate::divisor::{f_prime, f_s};
use crate::error::{invariant, Error, Result};
use crate::factorization::Factorization;
use crate::value::{Exponent, Value};
use crate::Lab;

#[derive(Clone, Debug, Serialize)]
pub struct CarEntry {
    pub p: u64,
    pub value: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct Car {
    pub base: Factorization,
    pub inf_value: Value,
    pub entries: Vec<CarEntry>,
}

impl Car {
    /// First entry, i.e. the supremum of the car.
    pub fn sup_value(&self) -> &Value {
        &self.entries[0].value
    }

    pub fn values(&self) -> impl Iterator<Item = &Value> {
        self.entries.iter().map(|e| &e.value)
    }

    /// Checks strict decrease and that every entry lies above `inf_value`.
    pub fn check(&self) -> Result<()> {
        for w in self.entries.windows(2) {
            strictly_less(&w[1].value, &w[0].value, || {
                format!("car {} not decreasing at p={}", self.base, w[1].p)
            })?;
        }
        for e in &self.entries {
            strictly_less(&self.inf_value, &e.value, || {
                format!("car {} entry at p={} not above f(base)", self.base, e.p)
            })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Train {
    pub origin: Factorization,
    pub s: Exponent,
    pub cars: Vec<Car>,
}

impl Train {
    /// Checks every car, the linkage `inf(car j+1) = sup(car j)`, and that
    /// car `j+1` lies entirely above car `j`.
    pub fn check(&self) -> Result<()> {
        for c in &self.cars {
            c.check()?;
        }
        for (j, w) in self.cars.windows(2).enumerate() {
            let (lower, upper) = (&w[0], &w[1]);
            if !lower.sup_value().consistent_with(&upper.inf_value) {
                return Err(invariant(format!(
                    "cars {j} and {} are not linked: sup {} vs inf {}",
                    j + 1,
                    lower.sup_value(),
                    upper.inf_value
                )));
            }
            let max_lower = lower.sup_value();
            let min_upper = &upper.entries.last().expect("non-empty car").value;
            strictly_less(max_lower, min_upper, || {
                format!("car {} does not lie above car {j}", j + 1)
            })?;
        }
        Ok(())
    }
}

fn strictly_less(a: &Value, b: &Value, what: impl FnOnce() -> String) -> Result<()> {
    match a.cmp_value(b) {
        Some(Ordering::Less) => Ok(()),
        Some(_) => Err(invariant(what())),
        None => Err(Error::Undecidable {
            what: what(),
            bits: match b {
                Value::Bounded(x) => x.prec(),
                Value::Exact(_) => 0,
            },
        }),
    }
}

/// A car of `length` entries over the smallest primes not dividing `base`,
/// using `f_s(base p) = f_s(base) f_s(p)`.
pub fn car(lab: &Lab, base: &Factorization, s: &Exponent, length: usize) -> Result<Car> {
    if length == 0 {
        return Err(Error::Domain("car length must be >= 1".into()));
    }
    let prec = lab.prec();
    let inf_value = f_s(base, s, prec);
    let mut entries = Vec::with_capacity(length);
    let mut p = 1;
    while entries.len() < length {
        p = lab.primes.next_prime(p)?;
        if base.contains(p) {
            continue;
        }
        let value = inf_value.mul(&f_prime(p, s, prec));
        entries.push(CarEntry { p, value });
    }
    Ok(Car {
        base: base.clone(),
        inf_value,
        entries,
    })
}

/// `car_count` linked cars starting from `origin`; fails with an invariant
/// error if the result does not satisfy [`Train::check`].
pub fn train(
    lab: &Lab,
    origin: &Factorization,
    s: &Exponent,
    car_count: usize,
    car_length: usize,
) -> Result<Train> {
    if car_count == 0 {
        return Err(Error::Domain("car count must be >= 1".into()));
    }
    let mut cars: Vec<Car> = Vec::with_capacity(car_count);
    let mut base = origin.clone();
    for _ in 0..car_count {
        if let Some(prev) = cars.last() {
            base = base.times_prime(prev.entries[0].p);
        }
        cars.push(car(lab, &base, s, car_length)?);
    }
    let t = Train {
        origin: origin.clone(),
        s: s.clone(),
        cars,
    };
    t.check()?;
    Ok(t)
}

/// `f_s(base p)` evaluated in full for each listed `p`, including primes
/// that already divide `base`. No monotonicity is implied.
pub fn raw_sequence(base: &Factorization, s: &Exponent, ps: &[u64], prec: u32) -> Vec<Value> {
    ps.iter()
        .map(|&p| f_s(&base.times_prime(p), s, prec))
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct RangeSolution {
    pub m: Factorization,
    pub p: u64,
    pub n: Factorization,
    pub value: Value,
    pub gap: Value,
    pub c_of_a: Value,
}

impl RangeSolution {
    /// `gap * n^s == a * m^s`, exact for integer `s`.
    pub fn check_exact(&self, s: u32) -> Result<bool> {
        let (Value::Exact(gap), Value::Exact(c)) = (&self.gap, &self.c_of_a) else {
            return Err(Error::Domain("exact check needs integer s".into()));
        };
        let ns = self.n.to_integer().pow(s);
        Ok((gap * Rational::from(ns)) == *c)
    }
}

/// Range points `n = m p` above `a = f_s(m)` for the `count` smallest primes
/// `p` not dividing `m`; each satisfies `f_s(n) - a = a m^s / n^s`.
pub fn range_solutions(
    lab: &Lab,
    m: &Factorization,
    s: &Exponent,
    count: usize,
) -> Result<Vec<RangeSolution>> {
    let prec = lab.prec();
    let a = f_s(m, s, prec);
    let ms = power_value(m, s, prec);
    let c_of_a = a.mul(&ms);
    let c = car(lab, m, s, count)?;
    let mut out = Vec::with_capacity(count);
    for e in c.entries {
        let n = m.times_prime(e.p);
        let gap = e.value.sub(&a);
        let sol = RangeSolution {
            m: m.clone(),
            p: e.p,
            n,
            value: e.value,
            gap,
            c_of_a: c_of_a.clone(),
        };
        match s {
            Exponent::Integer(si) => {
                if !sol.check_exact(*si)? {
                    return Err(invariant(format!("gap identity fails for n={}", sol.n)));
                }
            }
            Exponent::Real(_) => {
                let rhs = c_of_a.div(&power_value(&sol.n, s, prec))?;
                if !sol.gap.consistent_with(&rhs) {
                    return Err(invariant(format!("gap identity fails for n={}", sol.n)));
                }
            }
        }
        out.push(sol);
    }
    Ok(out)
}

/// `n^s` for factored `n`.
fn power_value(n: &Factorization, s: &Exponent, prec: u32) -> Value {
    match s {
        Exponent::Integer(si) => Value::Exact(Rational::from(n.to_integer().pow(*si))),
        Exponent::Real(_) => {
            let mut acc = Value::Exact(Rational::from(1));
            for (p, k) in n.iter() {
                let ps = Value::Bounded(s.pow_enclosure(p, prec).powi(k));
                acc = acc.mul(&ps);
            }
            acc
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(v: &Value) -> Rational {
        v.as_exact().unwrap().clone()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn paper_cars() {
        let lab = Lab::default();
        let one = Exponent::int(1);
        let c = car(&lab, &Factorization::from(2), &one, 4).unwrap();
        let ps: Vec<u64> = c.entries.iter().map(|e| e.p).collect();
        assert_eq!(ps, [3, 5, 7, 11]);
        let vals: Vec<Rational> = c.values().map(exact).collect();
        assert_eq!(vals, [r(2, 1), r(9, 5), r(12, 7), r(18, 11)]);

        let c = car(&lab, &Factorization::from(6), &one, 3).unwrap();
        let vals: Vec<Rational> = c.values().map(exact).collect();
        assert_eq!(vals, [r(12, 5), r(16, 7), r(24, 11)]);

        let c = car(&lab, &Factorization::one(), &one, 2).unwrap();
        let vals: Vec<Rational> = c.values().map(exact).collect();
        assert_eq!(vals, [r(3, 2), r(4, 3)]);
    }

    #[test]
    fn train_from_six() {
        let lab = Lab::default();
        let t = train(&lab, &Factorization::from(6), &Exponent::int(1), 3, 10).unwrap();
        let bases: Vec<u64> = t.cars.iter().map(|c| c.base.to_u64().unwrap()).collect();
        assert_eq!(bases, [6, 30, 210]);
        let infs: Vec<Rational> = t.cars.iter().map(|c| exact(&c.inf_value)).collect();
        assert_eq!(infs, [r(2, 1), r(12, 5), r(96, 35)]);

        let t = train(&lab, &Factorization::one(), &Exponent::int(1), 2, 5).unwrap();
        let bases: Vec<u64> = t.cars.iter().map(|c| c.base.to_u64().unwrap()).collect();
        assert_eq!(bases, [1, 2]);
    }

    #[test]
    fn remark_one_prefix() {
        let v = raw_sequence(&Factorization::from(2), &Exponent::int(1), &[2, 3, 5], 128);
        let vals: Vec<Rational> = v.iter().map(exact).collect();
        assert_eq!(vals, [r(7, 4), r(2, 1), r(9, 5)]);
    }

    #[test]
    fn range_solution_examples() {
        let lab = Lab::default();
        let sols = range_solutions(&lab, &Factorization::from(6), &Exponent::int(1), 1).unwrap();
        assert_eq!(sols[0].n.to_u64(), Some(30));
        assert_eq!(exact(&sols[0].gap), r(2, 5));

        let sols = range_solutions(&lab, &Factorization::one(), &Exponent::int(1), 2).unwrap();
        let gaps: Vec<Rational> = sols.iter().map(|s| exact(&s.gap)).collect();
        assert_eq!(gaps, [r(1, 2), r(1, 3)]);

        let sols = range_solutions(&lab, &Factorization::from(2), &Exponent::int(2), 1).unwrap();
        assert_eq!(exact(&sols[0].value), r(25, 18));
        assert_eq!(exact(&sols[0].gap), r(5, 36));
    }

    #[test]
    fn fractional_range_solutions() {
        let lab = Lab::default();
        let s: Exponent = "0.5".parse().unwrap();
        let sols = range_solutions(&lab, &Factorization::from(12), &s, 5).unwrap();
        assert_eq!(sols.len(), 5);
    }
}
