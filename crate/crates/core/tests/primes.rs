mod common;

use divlab::primes::{factorize, is_prime};
use divlab::Primes;
use proptest::prelude::*;

#[test]
fn table_matches_oracle() {
    let primes = Primes::default();
    let table = primes.table_upto(200_000).unwrap();
    let oracle = common::sieve(200_000);
    let expect: Vec<u64> = (0..=200_000u64).filter(|&n| oracle[n as usize]).collect();
    assert_eq!(table.primes(), &expect[..]);
    for n in 0..=200_000u64 {
        assert_eq!(is_prime(n), oracle[n as usize], "n = {n}");
    }
}

#[test]
fn next_and_prev_agree_with_table() {
    let primes = Primes::default();
    let oracle = common::sieve(100_000);
    let list: Vec<u64> = (0..=100_000u64).filter(|&n| oracle[n as usize]).collect();
    for w in list.windows(2) {
        assert_eq!(primes.next_prime(w[0]).unwrap(), w[1]);
        assert_eq!(primes.prev_prime(w[1]).unwrap(), w[0]);
        if w[1] - w[0] > 1 {
            assert_eq!(primes.next_prime(w[0] + 1).unwrap(), w[1]);
        }
    }
}

#[test]
fn factorization_reconstructs() {
    for n in 1..=100_000u64 {
        let f = factorize(n).unwrap();
        let mut prod = 1u64;
        for (p, k) in f.iter() {
            assert!(is_prime(p));
            prod *= p.pow(k);
        }
        assert_eq!(prod, n);
    }
}

#[test]
fn predecessor_exceeds_half() {
    let primes = Primes::default();
    let oracle = common::sieve(1_000_000);
    for p in (3..=1_000_000u64).filter(|&n| oracle[n as usize]) {
        assert!(2 * primes.prev_prime(p).unwrap() > p, "p = {p}");
    }
}

proptest! {
    #[test]
    fn next_prev_bracket(p in 3u64..1_000_000_000_000) {
        let primes = Primes::new(u64::MAX);
        let next = primes.next_prime(p).unwrap();
        prop_assert!(next > p);
        prop_assert!(primes.prev_prime(next).unwrap() <= p);
        prop_assert!(is_prime(next));
    }

    #[test]
    fn large_factorizations(a in 2u64..5_000_000, b in 2u64..5_000_000) {
        let n = a * b;
        let f = factorize(n).unwrap();
        prop_assert_eq!(f.to_u64(), Some(n));
        prop_assert!(f.primes().all(is_prime));
    }
}
