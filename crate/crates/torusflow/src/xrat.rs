//! Exact rational helpers shared by every layer.
//!
//! Frequencies reach ~10^1300, so nothing here may round before the final
//! conversion to f64: fractional parts, distances to the nearest integer and
//! comparisons against e^k are all decided in big-integer arithmetic.
//! Powers of e are handled by interval arithmetic on rational bounds of e,
//! widened until the comparison at hand is decidable.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// log10(e), used for digit-budget estimates.
pub const LOG10_E: f64 = std::f64::consts::LOG10_E;

pub fn big(n: i64) -> BigInt {
    BigInt::from(n)
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Fractional part in [0, 1).
pub fn frac(r: &BigRational) -> BigRational {
    let f = r - r.floor();
    debug_assert!(!f.is_negative() && f < BigRational::one());
    f
}

/// Distance to the nearest integer, in [0, 1/2].
pub fn dist_to_int(r: &BigRational) -> BigRational {
    let f = frac(r);
    let half = rat(1, 2);
    if f > half {
        BigRational::one() - f
    } else {
        f
    }
}

/// Nearest integer; errors on an exact half-integer tie.
pub fn nearest_int(r: &BigRational) -> Result<BigInt> {
    let fl = r.floor().to_integer();
    let f = r - BigRational::from(fl.clone());
    let half = rat(1, 2);
    if f == half {
        return Err(Error::InvalidInput(format!(
            "half-integer tie rounding {r}"
        )));
    }
    Ok(if f < half { fl } else { fl + 1 })
}

/// f64 of a big rational, correct for magnitudes far outside f64 range
/// (saturating to 0 or +/-inf instead of producing garbage).
pub fn rat_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    let neg = r.is_negative();
    let num = r.numer().magnitude();
    let den = r.denom().magnitude();
    let nb = num.bits() as i64;
    let db = den.bits() as i64;
    let v = if (nb - db).abs() > 1100 {
        if nb > db {
            f64::INFINITY
        } else {
            0.0
        }
    } else {
        // Align to ~80 significant bits before dividing.
        let shift = 80 - (nb - db);
        let (n2, d2) = if shift >= 0 {
            (num << shift as u64, den.clone())
        } else {
            (num.clone(), den << (-shift) as u64)
        };
        let q = (&n2 / &d2).to_f64().unwrap_or(f64::INFINITY);
        scale_by_pow2(q, -shift)
    };
    if neg {
        -v
    } else {
        v
    }
}

/// Exact dyadic rational for a finite f64.
pub fn f64_to_rat(x: f64) -> BigRational {
    assert!(x.is_finite(), "non-finite float {x}");
    let (m, e) = frexp(x);
    // x = m * 2^e with |m| integer < 2^53
    let num = BigInt::from(m);
    if e >= 0 {
        BigRational::from(num << e as u64)
    } else {
        BigRational::new(num, BigInt::one() << (-e) as u64)
    }
}

fn scale_by_pow2(mut v: f64, mut e: i64) -> f64 {
    while e > 1000 {
        v *= 2f64.powi(1000);
        e -= 1000;
    }
    while e < -1000 {
        v *= 2f64.powi(-1000);
        e += 1000;
    }
    v * 2f64.powi(e as i32)
}

fn frexp(x: f64) -> (i64, i32) {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mant = bits & ((1u64 << 52) - 1);
    if exp == 0 {
        (sign * mant as i64, -1074)
    } else {
        (sign * (mant | (1u64 << 52)) as i64, exp - 1075)
    }
}

/// cos(2 pi x) for a fractional part x in [0, 1), with exact zeros at the
/// quarter points (quadrant reduction keeps huge-phase evaluations sane).
pub fn cos2pi(x: f64) -> f64 {
    let t = x - x.floor();
    let q = (4.0 * t).floor();
    let r = 4.0 * t - q;
    let a = std::f64::consts::FRAC_PI_2 * r;
    match q as i32 {
        0 => a.cos(),
        1 => -a.sin(),
        2 => -a.cos(),
        _ => a.sin(),
    }
}

/// sin(2 pi x), same conventions as [`cos2pi`].
pub fn sin2pi(x: f64) -> f64 {
    let t = x - x.floor();
    let q = (4.0 * t).floor();
    let r = 4.0 * t - q;
    let a = std::f64::consts::FRAC_PI_2 * r;
    match q as i32 {
        0 => a.sin(),
        1 => a.cos(),
        2 => -a.sin(),
        _ => -a.cos(),
    }
}

/// Closed interval with rational endpoints; the workhorse for certified
/// comparisons against transcendental quantities.
#[derive(Debug, Clone)]
pub struct RatInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RatInterval {
    pub fn point(v: BigRational) -> Self {
        Self {
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        // All quantities here are positive.
        debug_assert!(self.lo.is_positive() && other.lo.is_positive());
        Self {
            lo: &self.lo * &other.lo,
            hi: &self.hi * &other.hi,
        }
    }

    /// Outward rounding to ~`bits` significant bits, so repeated squaring
    /// does not blow up the representation size.
    pub fn compress(&self, bits: u64) -> Self {
        Self {
            lo: round_sig(&self.lo, bits, false),
            hi: round_sig(&self.hi, bits, true),
        }
    }

    /// Interval power by repeated squaring with compression.
    pub fn pow(&self, mut k: u64, bits: u64) -> Self {
        let mut base = self.clone();
        let mut acc = RatInterval::point(BigRational::one());
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base).compress(bits);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base).compress(bits);
            }
        }
        acc
    }
}

fn round_sig(x: &BigRational, bits: u64, up: bool) -> BigRational {
    if x.is_zero() {
        return x.clone();
    }
    debug_assert!(x.is_positive());
    let nb = x.numer().magnitude().bits() as i64;
    let db = x.denom().magnitude().bits() as i64;
    // scale so that x * 2^s has about `bits` integer bits
    let s = bits as i64 - (nb - db);
    let scaled = if s >= 0 {
        x * BigRational::from(BigInt::one() << s as u64)
    } else {
        x / BigRational::from(BigInt::one() << (-s) as u64)
    };
    let int = if up {
        scaled.ceil().to_integer()
    } else {
        scaled.floor().to_integer()
    };
    if s >= 0 {
        BigRational::new(int, BigInt::one() << s as u64)
    } else {
        BigRational::from(int << (-s) as u64)
    }
}

/// Rational bounds on e with gap below 2^-bits.
pub fn e_interval(bits: u64) -> RatInterval {
    // e = sum 1/j!, remainder after J terms is < 2/(J+1)!
    let mut j_max = 8usize;
    loop {
        let lg = log2_factorial(j_max + 1);
        if lg > bits as f64 + 2.0 {
            break;
        }
        j_max += 4;
    }
    // sum_{j<=J} J!/j! over the common denominator J!
    let mut fact = BigUint::one();
    for j in 2..=j_max {
        fact *= BigUint::from(j);
    }
    let mut num = BigUint::zero();
    let mut term = fact.clone(); // J!/j! at j = 0 and j = 1
    num += &term;
    for j in 1..=j_max {
        num += &term;
        term /= BigUint::from(j + 1);
    }
    let lo = BigRational::new(BigInt::from(num.clone()), BigInt::from(fact.clone()));
    let rem = BigRational::new(big(2), BigInt::from(fact * BigUint::from(j_max + 1)));
    RatInterval {
        lo: lo.clone(),
        hi: lo + rem,
    }
}

fn log2_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).log2()).sum()
}

/// Certified interval for e^k (integer k >= 0).
pub fn exp_int_interval(k: u64, bits: u64) -> RatInterval {
    if k == 0 {
        return RatInterval::point(BigRational::one());
    }
    let e = e_interval(bits + 16).compress(bits + 16);
    e.pow(k, bits + 16)
}

/// Number of decimal digits of e^k, approximately.
pub fn exp_digits(k: &BigInt) -> f64 {
    bigint_to_f64(k) * LOG10_E
}

/// f64 of a BigInt, saturating.
pub fn bigint_to_f64(n: &BigInt) -> f64 {
    n.to_f64().unwrap_or_else(|| {
        if n.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Least integer >= e^k, certified. `k` must be a non-negative integer small
/// enough that the result respects `digit_budget` decimal digits.
pub fn ceil_exp_int(k: u64) -> BigInt {
    let mut bits = (1.443 * k as f64) as u64 + 64;
    loop {
        let iv = exp_int_interval(k, bits);
        let lo_c = iv.lo.ceil().to_integer();
        let hi_c = iv.hi.ceil().to_integer();
        if lo_c == hi_c {
            // e^k is irrational for integer k >= 1, so ceil is unambiguous
            // once both bounds agree.
            return lo_c;
        }
        bits *= 2;
    }
}

/// Certified decision of `q >= e^k`.
pub fn int_ge_exp(q: &BigInt, k: u64) -> bool {
    if q.is_negative() || q.is_zero() {
        return k == 0 && !q.is_negative();
    }
    // Digit pre-screen: far from the boundary the answer is cheap.
    let qd = q.to_string().len() as f64;
    let ed = k as f64 * LOG10_E;
    if ed > qd + 2.0 {
        return false;
    }
    if ed < qd - 2.0 {
        return true;
    }
    let qr = BigRational::from(q.clone());
    let mut bits = (1.443 * k as f64) as u64 + 64;
    loop {
        let iv = exp_int_interval(k, bits);
        if qr >= iv.hi {
            return true;
        }
        if qr < iv.lo {
            return false;
        }
        bits *= 2;
    }
}

/// Least integer >= b^k for rational b > 1.
pub fn ceil_rat_pow(b: &BigRational, k: u64) -> BigInt {
    let mut acc = BigRational::one();
    let mut base = b.clone();
    let mut kk = k;
    while kk > 0 {
        if kk & 1 == 1 {
            acc = &acc * &base;
        }
        kk >>= 1;
        if kk > 0 {
            base = &base * &base;
        }
    }
    acc.ceil().to_integer()
}

/// Certified decision of `q >= b^k` for rational b > 1 and potentially huge k.
pub fn int_ge_rat_pow(q: &BigInt, b: &BigRational, k: &BigInt) -> bool {
    if k.is_zero() {
        return *q >= BigInt::one();
    }
    let log10_b = rat_to_f64(b).log10();
    let qd = q.to_string().len() as f64;
    let ed = bigint_to_f64(k) * log10_b;
    if ed > qd + 2.0 {
        return false;
    }
    if ed < qd - 2.0 {
        return true;
    }
    // Near the boundary the exponent is small; decide exactly.
    let k_small = k
        .to_u64()
        .expect("boundary exponent must be small when digits are comparable");
    let mut acc = BigRational::one();
    for _ in 0..k_small {
        acc = &acc * b;
    }
    BigRational::from(q.clone()) >= acc
}

/// Exact e^{-q} as f64 for a big-integer frequency; exactly 0.0 once the
/// value would round below ~1e-300 (underflow marker per the series design).
pub fn amp_for_freq(q: &BigInt) -> f64 {
    match q.to_f64() {
        Some(v) if v <= 690.0 => (-v).exp(),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frac_and_dist() {
        let r = rat(-7, 4);
        assert_eq!(frac(&r), rat(1, 4));
        assert_eq!(dist_to_int(&r), rat(1, 4));
        assert_eq!(dist_to_int(&rat(9, 10)), rat(1, 10));
    }

    #[test]
    fn nearest_int_ties_error() {
        assert_eq!(nearest_int(&rat(7, 2)).is_err(), true);
        assert_eq!(nearest_int(&rat(10, 4)).is_err(), true);
        assert_eq!(nearest_int(&rat(5, 3)).unwrap(), big(2));
        assert_eq!(nearest_int(&rat(-5, 3)).unwrap(), big(-2));
    }

    #[test]
    fn quarter_point_trig_is_exact() {
        assert_eq!(cos2pi(0.25), 0.0);
        assert_eq!(cos2pi(0.75), 0.0);
        assert_eq!(sin2pi(0.0), 0.0);
        assert_eq!(sin2pi(0.5), 0.0);
        assert_eq!(cos2pi(0.0), 1.0);
        assert_eq!(cos2pi(0.5), -1.0);
        assert!((cos2pi(0.125) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn ceil_exp_small_values() {
        assert_eq!(ceil_exp_int(1), big(3));
        assert_eq!(ceil_exp_int(2), big(8)); // e^2 = 7.389...
        assert_eq!(ceil_exp_int(8), big(2981)); // e^8 = 2980.957...
        assert_eq!(ceil_exp_int(0), big(1));
    }

    #[test]
    fn ceil_exp_large_digit_count() {
        let v = ceil_exp_int(2981);
        let digits = v.to_string().len();
        // e^2981 has 2981*log10(e) ~ 1294.6 digits
        assert_eq!(digits, 1295);
        assert!(int_ge_exp(&v, 2981));
        assert!(!int_ge_exp(&(v - 1), 2981));
    }

    #[test]
    fn int_vs_exp_boundaries() {
        assert!(int_ge_exp(&big(8), 2));
        assert!(!int_ge_exp(&big(7), 2));
        assert!(int_ge_exp(&big(2981), 8));
        assert!(!int_ge_exp(&big(2980), 8));
    }

    #[test]
    fn rat_to_f64_extremes() {
        let tiny = BigRational::new(BigInt::one(), BigInt::one() << 5000u32);
        assert_eq!(rat_to_f64(&tiny), 0.0);
        let huge = BigRational::from(BigInt::one() << 5000u32);
        assert_eq!(rat_to_f64(&huge), f64::INFINITY);
        let x = rat(-355, 113);
        assert!((rat_to_f64(&x) + 3.1415929203539825).abs() < 1e-15);
    }

    #[test]
    fn f64_round_trip() {
        for &v in &[0.5, -1.75, 3.141592653589793, 1e-300, 123456789.0] {
            assert_eq!(rat_to_f64(&f64_to_rat(v)), v);
        }
    }

    #[test]
    fn rat_pow_comparisons() {
        let b = rat(7, 5);
        assert_eq!(ceil_rat_pow(&b, 5), big(6)); // 1.4^5 = 5.37824
        assert!(int_ge_rat_pow(&big(6), &b, &big(5)));
        assert!(!int_ge_rat_pow(&big(5), &b, &big(5)));
        // enormous exponent: certainly exceeds any small q
        assert!(!int_ge_rat_pow(&big(1_000_000), &b, &big(2_000_000)));
    }
}
