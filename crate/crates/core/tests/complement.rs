mod common;

use divlab::complement::{
    complement_point, excluded_shifted, excluded_simple, membership_scan, Outcome,
};
use divlab::primes::{factorize, is_prime};
use divlab::{Lab, Rational, Strategy};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const BOUND: u64 = 100_000;

/// `q` attained by some `m <= BOUND`, by the additive sieve.
fn attained(q: &Rational, sigma: &[u64]) -> Option<u64> {
    (1..=BOUND).find(|&m| Rational::from((sigma[m as usize], m)) == *q)
}

#[test]
fn excluded_values_survive_scans() {
    let lab = Lab::default();
    let sigma = common::sigma1_table(BOUND as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut made = 0;
    while made < 40 {
        let n = rng.gen_range(4..2_000u64);
        if is_prime(n) {
            continue;
        }
        let simple = excluded_simple(n, 1).unwrap();
        let big_n = factorize(rng.gen_range(1..200u64)).unwrap();
        let shifted = excluded_shifted(&lab, n, &big_n, 1);
        for e in std::iter::once(simple).chain(shifted.ok()) {
            assert!(e.check());
            let v = membership_scan(&e.value, 1, BOUND, Strategy::Parallel).unwrap();
            assert_eq!(
                v.outcome,
                Outcome::NotFoundUpTo { bound: BOUND },
                "{}",
                e.value
            );
            assert_eq!(attained(&e.value, &sigma), None);
            made += 1;
        }
    }
}

#[test]
fn membership_agrees_with_sieve() {
    let sigma = common::sigma1_table(2_000);
    for m in 1..=2_000u64 {
        let q = Rational::from((sigma[m as usize], m));
        let v = membership_scan(&q, 1, 2_000, Strategy::Sequential).unwrap();
        let Outcome::InRange { m: w } = v.outcome else {
            panic!("{q} not found")
        };
        assert!(w <= m);
        assert_eq!(Rational::from((sigma[w as usize], w)), q);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn primes_attain(x in 1u64..1_000_000) {
        let p = divlab::Primes::default().next_prime(x).unwrap();
        let q = Rational::from((p + 1, p));
        let v = membership_scan(&q, 1, p, Strategy::Sequential).unwrap();
        prop_assert_eq!(v.outcome, Outcome::InRange { m: p });
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn points_inside(lo in 1000u64..2950) {
        let lab = Lab::default();
        let lo = Rational::from((lo, 1000));
        let hi = &lo + Rational::from((1, 20));
        let e = complement_point(&lab, &lo, &hi, 1).unwrap();
        prop_assert!(e.value > lo && e.value < hi);
        prop_assert!(e.check());
    }
}
