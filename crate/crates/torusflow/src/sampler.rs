//! Seeded samplers emitting exact rationals with bounded denominators, so
//! downstream phase reductions stay exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::xrat::rat;

pub struct RatSampler {
    rng: ChaCha8Rng,
    /// Denominator of emitted rationals (a power of two).
    pub denom_bits: u32,
}

impl RatSampler {
    pub fn new(seed: u64) -> Self {
        RatSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            denom_bits: 32,
        }
    }

    /// Uniform dyadic rational in [0, 1).
    pub fn unit(&mut self) -> BigRational {
        let num = self.rng.gen_range(0u64..(1u64 << self.denom_bits));
        BigRational::new(BigInt::from(num), BigInt::from(1u64 << self.denom_bits))
    }

    /// Uniform dyadic rational in [lo, hi).
    pub fn in_interval(&mut self, lo: &BigRational, hi: &BigRational) -> BigRational {
        lo + (hi - lo) * self.unit()
    }

    pub fn point_t4(&mut self) -> [BigRational; 4] {
        std::array::from_fn(|_| self.unit())
    }

    pub fn f64_in(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.gen_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.gen_range(0..n)
    }
}

/// Kronecker low-discrepancy points on T^4 with dyadic coordinates, for
/// deterministic positivity scans.
pub fn kronecker_t4(count: usize) -> impl Iterator<Item = [BigRational; 4]> {
    // fractional steps close to (sqrt 2, sqrt 3, sqrt 5, golden) - 1, dyadic
    let steps: [BigRational; 4] = [
        rat(0x6A09E667, 1) / rat(1i64 << 32, 1),
        rat(0xBB67AE85u32 as i64, 1) / rat(1i64 << 32, 1),
        rat(0x3C6EF372, 1) / rat(1i64 << 32, 1),
        rat(0x9E3779B9u32 as i64, 1) / rat(1i64 << 32, 1),
    ];
    let mut state: [BigRational; 4] = std::array::from_fn(|_| BigRational::from(BigInt::from(0)));
    (0..count).map(move |_| {
        let out = state.clone();
        for (s, st) in state.iter_mut().zip(&steps) {
            *s = crate::xrat::frac(&(&*s + st));
        }
        out
    })
}
