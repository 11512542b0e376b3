//! Generalized divisor functions `f_s(n) = sigma_s(n) / n^s`.
//!
//! The crate evaluates `f_s` exactly (integer `s`) or with certified error
//! bounds (fractional `s`) on factored integers, builds the train structure of
//! its range, approximates arbitrary targets from below, constructs
//! Wolke-type sequences, certifies rationals outside the range, and estimates
//! moments of `f_s` against `zeta(s + 1)`.

pub mod complement;
pub mod density;
pub mod divisor;
pub mod error;
pub mod factorization;
pub mod par;
pub mod primes;
pub mod real;
pub mod stats;
pub mod trains;
pub mod value;
pub mod wolke;

pub use error::{Error, Result};
pub use factorization::Factorization;
pub use par::Strategy;
pub use primes::{PrimeTable, Primes};
pub use real::BoundedReal;
pub use value::{Exponent, Value};

pub use rug::{Integer, Rational};

/// Resource limits shared by every solver.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Working precision for bounded arithmetic (bits, >= 64).
    pub precision_bits: u32,
    /// Largest prime any search may return.
    pub prime_cap: u64,
    /// Largest `N` for exhaustive scans.
    pub scan_cap: u64,
    /// Largest prime exponent the density solver may assign.
    pub exponent_cap: u32,
    /// Largest exact integer (in bits) `sigma_s` may produce.
    pub bignum_bits: u64,
    /// Node budget for branch-and-bound certificate searches.
    pub search_nodes: usize,
    /// Bound for the membership scan run on every shifted certificate.
    pub member_bound: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            precision_bits: real::DEFAULT_PRECISION,
            prime_cap: primes::DEFAULT_PRIME_CAP,
            scan_cap: 100_000_000,
            exponent_cap: 10_000,
            bignum_bits: 1 << 24,
            search_nodes: 20_000,
            member_bound: 100_000,
        }
    }
}

/// Shared context: limits plus the lazily grown prime table.
#[derive(Debug, Default)]
pub struct Lab {
    pub limits: Limits,
    pub primes: Primes,
}

impl Lab {
    pub fn new(limits: Limits) -> Self {
        let primes = Primes::new(limits.prime_cap);
        Lab { limits, primes }
    }

    pub fn prec(&self) -> u32 {
        self.limits.precision_bits
    }
}
