//! Test-only oracles that share no code with the library.

#![allow(dead_code)]

use divlab::{Integer, Rational};
use rug::ops::Pow;

/// Plain Eratosthenes sieve.
pub fn sieve(limit: usize) -> Vec<bool> {
    let mut is = vec![true; limit + 1];
    is[0] = false;
    if limit >= 1 {
        is[1] = false;
    }
    let mut i = 2;
    while i * i <= limit {
        if is[i] {
            for j in (i * i..=limit).step_by(i) {
                is[j] = false;
            }
        }
        i += 1;
    }
    is
}

/// `sum_{d | n} d^-s` by trial division up to sqrt(n).
pub fn f_naive(n: u64, s: u32) -> Rational {
    let mut acc = Rational::new();
    let mut d = 1;
    while d * d <= n {
        if n.is_multiple_of(d) {
            acc += Rational::from((1, Integer::from(d).pow(s)));
            let e = n / d;
            if e != d {
                acc += Rational::from((1, Integer::from(e).pow(s)));
            }
        }
        d += 1;
    }
    acc
}

/// `sigma(m)` for all `m <= limit` by the additive divisor sieve.
pub fn sigma1_table(limit: usize) -> Vec<u64> {
    let mut sig = vec![0u64; limit + 1];
    for d in 1..=limit {
        for m in (d..=limit).step_by(d) {
            sig[m] += d as u64;
        }
    }
    sig
}
