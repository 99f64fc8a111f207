//! The analytic ceiling function and its Birkhoff sums.
//!
//! phi(x) = 1 + sum_j sum_{n >= n0} cos(2 pi q_n^(j) x_j) / e^(q_n^(j))
//!
//! Birkhoff sums have the closed form
//!
//!   S_m phi(x) = m + Re sum_{j,n} X_j(m,n) e^(2 pi i q_n^(j) x_j) / e^(q_n^(j)),
//!   X_j(m,n) = (1 - e^(2 pi i m q alpha_j)) / (1 - e^(2 pi i q alpha_j)),
//!
//! which makes a single sum O(#terms) instead of O(m). Phases {q x} and
//! {m q alpha} are reduced in exact rational arithmetic before any
//! trigonometric call: q can have a thousand digits, where naive floating
//! multiplication is meaningless. Amplitudes e^(-q) below the f64 underflow
//! threshold are stored as exactly zero but keep their frequency for the
//! window logic.

use std::sync::Arc;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::arithmetic::FrequencyVector;
use crate::error::{Error, Result};
use crate::xrat::{self, cos2pi, rat_to_f64, sin2pi};

/// One series term cos(2 pi q x_j) e^(-q) with its exact stand-in data.
#[derive(Debug, Clone)]
pub struct Term {
    pub j: usize,
    pub n: usize,
    pub freq: BigInt,
    /// e^(-q); exactly 0.0 once it would underflow (frequency retained).
    pub amp: f64,
    pub underflow: bool,
    /// {q_n^(j) alpha_j} for the stand-in, in [0, 1).
    pub delta: BigRational,
    /// (numerator, denominator) of delta when both fit in u64.
    pub delta_u: Option<(u64, u64)>,
}

impl Term {
    /// Exact {freq * x_j} as f64.
    pub fn phase(&self, xj: &BigRational) -> f64 {
        rat_to_f64(&xrat::frac(&(BigRational::from(self.freq.clone()) * xj)))
    }

    /// {m * delta} as f64, reduced exactly.
    pub fn m_delta_frac(&self, m: u64) -> f64 {
        if let Some((num, den)) = self.delta_u {
            (mulmod(m, num, den) as f64) / (den as f64)
        } else {
            rat_to_f64(&xrat::frac(&(self.delta.clone() * BigRational::from(BigInt::from(m)))))
        }
    }

    /// ||m * delta|| as f64 (reduced exactly before conversion, so values
    /// near an integer keep full relative accuracy).
    pub fn m_delta_dist(&self, m: u64) -> f64 {
        if let Some((num, den)) = self.delta_u {
            let r = mulmod(m, num, den);
            let d = r.min(den - r);
            (d as f64) / (den as f64)
        } else {
            rat_to_f64(&xrat::dist_to_int(
                &(self.delta.clone() * BigRational::from(BigInt::from(m))),
            ))
        }
    }

    pub fn resonant(&self) -> bool {
        self.delta.is_zero()
    }
}

pub fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

/// Truncated ceiling-function specification bound to a frequency vector.
#[derive(Debug, Clone)]
pub struct CeilingSpec {
    pub fv: Arc<FrequencyVector>,
    pub n0: usize,
    pub nmax: usize,
    pub terms: Vec<Term>,
    /// sum of stored amplitudes; phi ranges within [1 - amp_sum, 1 + amp_sum]
    pub amp_sum: f64,
    pub positivity_certified: bool,
}

impl CeilingSpec {
    pub fn new(fv: Arc<FrequencyVector>, n0: usize, nmax: usize) -> Result<Self> {
        if n0 == 0 {
            return Err(Error::InvalidSpec("n0 must be >= 1".into()));
        }
        let mut terms = Vec::new();
        for j in 1..=4 {
            let levels = fv.levels(j);
            let mut prev_amp = f64::INFINITY;
            for n in n0..=levels.min(nmax) {
                let freq = fv.q(j, n).unwrap().clone();
                let amp = xrat::amp_for_freq(&freq);
                debug_assert!(amp <= prev_amp, "amplitudes must vanish monotonically");
                prev_amp = amp;
                let delta = xrat::frac(
                    &(BigRational::from(freq.clone()) * fv.stand_in(j)),
                );
                let delta_u = match (delta.numer().to_u64(), delta.denom().to_u64()) {
                    (Some(n_), Some(d_)) => Some((n_, d_)),
                    _ => None,
                };
                terms.push(Term {
                    j,
                    n,
                    freq,
                    amp,
                    underflow: amp == 0.0,
                    delta,
                    delta_u,
                });
            }
        }
        let amp_sum: f64 = terms.iter().map(|t| t.amp).sum();
        let positivity_certified = amp_sum < 1.0 - 1e-9;
        if !positivity_certified {
            return Err(Error::InvalidSpec(format!(
                "positivity certificate failed: amplitude sum {amp_sum} >= 1 at n0={n0}"
            )));
        }
        Ok(CeilingSpec {
            fv,
            n0,
            nmax,
            terms,
            amp_sum,
            positivity_certified,
        })
    }

    /// Certified lower bound on phi.
    pub fn phi_min_lower(&self) -> f64 {
        1.0 - self.amp_sum
    }

    pub fn phi_max_upper(&self) -> f64 {
        1.0 + self.amp_sum
    }

    /// Active terms (non-underflowed amplitude).
    pub fn active_terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter().filter(|t| t.amp != 0.0)
    }

    pub fn term(&self, j: usize, n: usize) -> Option<&Term> {
        self.terms.iter().find(|t| t.j == j && t.n == n)
    }

    /// Default spec over all stored levels of the vector.
    pub fn full(fv: Arc<FrequencyVector>) -> Result<Self> {
        let nmax = (1..=4).map(|j| fv.levels(j)).max().unwrap();
        let n0 = min_n0(&fv, nmax)?;
        CeilingSpec::new(fv, n0, nmax)
    }
}

/// Smallest base index n0 whose amplitude tail sums below 1 (so phi > 0).
pub fn min_n0(fv: &FrequencyVector, nmax: usize) -> Result<usize> {
    let max_level = (1..=4).map(|j| fv.levels(j)).max().unwrap().min(nmax);
    for n0 in 1..=max_level.max(1) {
        let mut sum = 0.0;
        for j in 1..=4 {
            for n in n0..=fv.levels(j).min(nmax) {
                sum += xrat::amp_for_freq(fv.q(j, n).unwrap());
            }
        }
        if sum < 1.0 - 1e-9 {
            return Ok(n0);
        }
    }
    // amplitudes vanish, so some tail always certifies; an empty tail sums to 0
    Ok(max_level + 1)
}

/// phi(x), with exact phase reduction per term.
pub fn eval_phi(x: &[BigRational; 4], spec: &CeilingSpec) -> f64 {
    let mut v = 1.0;
    for t in spec.active_terms() {
        v += t.amp * cos2pi(t.phase(&x[t.j - 1]));
    }
    v
}

/// Partial derivative of phi in direction j (order 1 or 2), term-wise.
pub fn eval_phi_partial(
    x: &[BigRational; 4],
    j: usize,
    order: usize,
    spec: &CeilingSpec,
) -> Result<f64> {
    if order == 0 || order > 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    let two_pi = std::f64::consts::TAU;
    let mut v = 0.0;
    for t in spec.active_terms().filter(|t| t.j == j) {
        let qf = xrat::bigint_to_f64(&t.freq);
        let ph = t.phase(&x[j - 1]);
        match order {
            1 => v -= t.amp * two_pi * qf * sin2pi(ph),
            _ => v -= t.amp * (two_pi * qf).powi(2) * cos2pi(ph),
        }
    }
    Ok(v)
}

/// Analytic bound sum_j,n (2 pi q)^2 e^(-q) on |phi''|.
pub fn second_derivative_bound(spec: &CeilingSpec) -> f64 {
    spec.active_terms()
        .map(|t| {
            let qf = xrat::bigint_to_f64(&t.freq);
            t.amp * (std::f64::consts::TAU * qf).powi(2)
        })
        .sum()
}

/// X value from the exact fractional parts: with theta_1 = {delta} and
/// theta_m = {m delta},
///   X = [sin(pi theta_m) / sin(pi theta_1)] e^(i pi (theta_m - theta_1)),
/// where both sines are evaluated through the distance to the nearest
/// integer so near-resonant phases keep full relative accuracy.
fn x_from_term(t: &Term, m: u64) -> Result<Complex64> {
    if t.resonant() {
        return Err(Error::Resonance { j: t.j, n: t.n });
    }
    if m == 0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let th1 = rat_to_f64(&t.delta);
    let thm = t.m_delta_frac(m);
    let w1 = t.m_delta_dist(1);
    let wm = t.m_delta_dist(m);
    let mag = if w1 > 1e-280 && w1 < 0.5 {
        let s1 = (std::f64::consts::PI * w1).sin();
        let sm = (std::f64::consts::PI * wm).sin();
        sm / s1
    } else {
        // ||delta|| underflows f64 (thousand-digit denominators): the exact
        // ratio ||m delta|| / ||delta|| with sinc corrections below 1e-20.
        let num = xrat::dist_to_int(&(t.delta.clone() * BigRational::from(BigInt::from(m))));
        let den = xrat::dist_to_int(&t.delta);
        rat_to_f64(&(num / den))
    };
    let ang = std::f64::consts::PI * (thm - th1);
    Ok(Complex64::from_polar(mag, ang))
}

/// X_j(m, n) for the stand-in frequency vector. m may be any integer; the
/// geometric-sum identity X(-m) = -X(m) e^(-2 pi i m q alpha) extends it.
pub fn xfactor(m: i64, n: usize, j: usize, fv: &FrequencyVector) -> Result<Complex64> {
    let q = fv
        .q(j, n)
        .ok_or_else(|| Error::InsufficientDepth(format!("no level {n} in direction {j}")))?
        .clone();
    let delta = xrat::frac(&(BigRational::from(q.clone()) * fv.stand_in(j)));
    let delta_u = match (delta.numer().to_u64(), delta.denom().to_u64()) {
        (Some(a), Some(b)) => Some((a, b)),
        _ => None,
    };
    let t = Term {
        j,
        n,
        freq: q,
        amp: 1.0,
        underflow: false,
        delta,
        delta_u,
    };
    if m >= 0 {
        x_from_term(&t, m as u64)
    } else {
        let mu = (-m) as u64;
        let x = x_from_term(&t, mu)?;
        let ph = t.m_delta_frac(mu);
        let e = Complex64::from_polar(1.0, -std::f64::consts::TAU * ph);
        Ok(-x * e)
    }
}

/// |X_j(m,n)| for m >= 1 through the reduced-sine route.
pub fn xfactor_magnitude(m: u64, n: usize, j: usize, fv: &FrequencyVector) -> Result<f64> {
    Ok(xfactor(m as i64, n, j, fv)?.norm())
}

/// Closed-form Birkhoff sum S_m phi(x).
pub fn birkhoff_closed(x: &[BigRational; 4], m: i64, spec: &CeilingSpec) -> Result<f64> {
    if m == 0 {
        return Ok(0.0);
    }
    if m < 0 {
        // S_{-k} phi(x) = -S_k phi(x - k alpha)
        let k = (-m) as u64;
        let shifted = shift_point(x, -(k as i64), &spec.fv);
        return Ok(-birkhoff_closed(&shifted, k as i64, spec)?);
    }
    let mu = m as u64;
    let mut v = m as f64;
    for t in spec.active_terms() {
        let xm = x_from_term(t, mu)?;
        let ph = t.phase(&x[t.j - 1]);
        let e = Complex64::from_polar(1.0, std::f64::consts::TAU * ph);
        v += t.amp * (xm * e).re;
    }
    Ok(v)
}

/// Closed-form partial derivative of S_m phi in direction j (order 1 or 2).
pub fn birkhoff_closed_partial(
    x: &[BigRational; 4],
    m: i64,
    j: usize,
    order: usize,
    spec: &CeilingSpec,
) -> Result<f64> {
    if order == 0 || order > 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    if m == 0 {
        return Ok(0.0);
    }
    if m < 0 {
        let k = (-m) as u64;
        let shifted = shift_point(x, -(k as i64), &spec.fv);
        return Ok(-birkhoff_closed_partial(&shifted, k as i64, j, order, spec)?);
    }
    let mu = m as u64;
    let two_pi = std::f64::consts::TAU;
    let mut v = 0.0;
    for t in spec.active_terms().filter(|t| t.j == j) {
        let xm = x_from_term(t, mu)?;
        let qf = xrat::bigint_to_f64(&t.freq);
        let ph = t.phase(&x[j - 1]);
        let e = Complex64::from_polar(1.0, two_pi * ph);
        match order {
            // d/dx Re(X e(qx)) = -2 pi q Im(X e(qx))
            1 => v -= t.amp * two_pi * qf * (xm * e).im,
            _ => v -= t.amp * (two_pi * qf).powi(2) * (xm * e).re,
        }
    }
    Ok(v)
}

/// x + k alpha (stand-in), reduced mod 1 per coordinate.
pub fn shift_point(x: &[BigRational; 4], k: i64, fv: &FrequencyVector) -> [BigRational; 4] {
    let kk = BigRational::from(BigInt::from(k));
    std::array::from_fn(|i| xrat::frac(&(&x[i] + &kk * fv.stand_in(i + 1))))
}

/// Literal Birkhoff sum; this is the oracle for the closed form. Orbit
/// phases advance by the exact rational step {q alpha} per iterate.
pub fn birkhoff_brute(x: &[BigRational; 4], m: i64, spec: &CeilingSpec) -> f64 {
    if m == 0 {
        return 0.0;
    }
    if m < 0 {
        let k = -m;
        let shifted = shift_point(x, -k, &spec.fv);
        return -birkhoff_brute(&shifted, k, spec);
    }
    let mut phases: Vec<OrbitPhase> = spec
        .active_terms()
        .map(|t| OrbitPhase::new(t, &x[t.j - 1]))
        .collect();
    let amps: Vec<f64> = spec.active_terms().map(|t| t.amp).collect();
    let mut total = 0.0;
    for _ in 0..m {
        let mut v = 1.0;
        for (p, amp) in phases.iter_mut().zip(&amps) {
            v += amp * cos2pi(p.value());
            p.advance();
        }
        total += v;
    }
    total
}

/// Brute-force partial derivative of S_m phi (oracle for the closed form).
pub fn birkhoff_brute_partial(
    x: &[BigRational; 4],
    m: i64,
    j: usize,
    order: usize,
    spec: &CeilingSpec,
) -> Result<f64> {
    if order == 0 || order > 2 {
        return Err(Error::UnsupportedOrder(order));
    }
    if m == 0 {
        return Ok(0.0);
    }
    if m < 0 {
        let k = -m;
        let shifted = shift_point(x, -k, &spec.fv);
        return Ok(-birkhoff_brute_partial(&shifted, k, j, order, spec)?);
    }
    let two_pi = std::f64::consts::TAU;
    let terms: Vec<&Term> = spec.active_terms().filter(|t| t.j == j).collect();
    let mut phases: Vec<OrbitPhase> = terms
        .iter()
        .map(|t| OrbitPhase::new(t, &x[j - 1]))
        .collect();
    let mut total = 0.0;
    for _ in 0..m {
        for (p, t) in phases.iter_mut().zip(&terms) {
            let qf = xrat::bigint_to_f64(&t.freq);
            match order {
                1 => total -= t.amp * two_pi * qf * sin2pi(p.value()),
                _ => total -= t.amp * (two_pi * qf).powi(2) * cos2pi(p.value()),
            }
            p.advance();
        }
    }
    Ok(total)
}

/// Per-term orbit phase {q (x_j + k alpha_j)} tracked as an exact fraction
/// with fixed denominator.
struct OrbitPhase {
    num: BigInt,
    den: BigInt,
    step: BigInt,
}

impl OrbitPhase {
    fn new(t: &Term, xj: &BigRational) -> Self {
        let ph0 = xrat::frac(&(BigRational::from(t.freq.clone()) * xj));
        let den = ph0.denom().lcm(t.delta.denom());
        let num = ph0.numer() * (&den / ph0.denom());
        let step = t.delta.numer() * (&den / t.delta.denom());
        OrbitPhase { num, den, step }
    }

    fn value(&self) -> f64 {
        rat_to_f64(&BigRational::new(self.num.clone(), self.den.clone()))
    }

    fn advance(&mut self) {
        self.num += &self.step;
        if self.num >= self.den {
            self.num -= &self.den;
        }
    }
}

/// One term of the T^5 reparametrization function Phi.
#[derive(Debug, Clone)]
pub struct ReparamTerm {
    pub j: usize,
    pub n: usize,
    pub freq: BigInt,
    /// Closest integer to -q alpha_j.
    pub l: BigInt,
    /// Complex amplitude d_n^(j); magnitude <= (pi/2) e^(-q).
    pub d: Complex64,
    /// omega = q alpha_j + l, |omega| <= 1/2 (exact).
    pub omega: BigRational,
}

/// Phi(x_1..x_5) = 1 + Re sum d_n^(j) e(q_n^(j) x_j + l_n^(j) x_5), built so
/// that phi(x) = int_0^1 Phi(x + s alpha, s) ds holds exactly term by term.
#[derive(Debug, Clone)]
pub struct ReparamSpec {
    pub base: CeilingSpec,
    pub terms: Vec<ReparamTerm>,
    pub amp_abs_sum: f64,
    pub positivity_certified: bool,
}

impl ReparamSpec {
    pub fn new(base: CeilingSpec) -> Result<Self> {
        let mut terms = Vec::new();
        for t in &base.terms {
            if t.amp == 0.0 {
                // underflowed amplitude: d = 0, keep the bookkeeping entry
                let minus_q_alpha = -BigRational::from(t.freq.clone())
                    * base.fv.stand_in(t.j);
                let l = xrat::nearest_int(&minus_q_alpha).map_err(|_| {
                    Error::InvalidSpec(format!(
                        "half-integer tie for l at (j={}, n={})",
                        t.j, t.n
                    ))
                })?;
                let omega = BigRational::from(t.freq.clone()) * base.fv.stand_in(t.j)
                    + BigRational::from(l.clone());
                terms.push(ReparamTerm {
                    j: t.j,
                    n: t.n,
                    freq: t.freq.clone(),
                    l,
                    d: Complex64::new(0.0, 0.0),
                    omega,
                });
                continue;
            }
            let q_alpha = BigRational::from(t.freq.clone()) * base.fv.stand_in(t.j);
            let l = xrat::nearest_int(&(-q_alpha.clone())).map_err(|_| {
                Error::InvalidSpec(format!(
                    "half-integer tie for l at (j={}, n={})",
                    t.j, t.n
                ))
            })?;
            let omega = &q_alpha + BigRational::from(l.clone());
            debug_assert!(xrat::rat_to_f64(&omega).abs() <= 0.5 + 1e-15);
            // d = i 2 pi w / (e(w) - 1) * e^(-q) = [pi w / sin(pi w)] e^(-i pi w) e^(-q)
            let w = rat_to_f64(&omega);
            let mag = if w.abs() < 1e-12 {
                1.0 + (std::f64::consts::PI * w).powi(2) / 6.0
            } else {
                std::f64::consts::PI * w / (std::f64::consts::PI * w).sin()
            };
            let d = Complex64::from_polar(mag * t.amp, -std::f64::consts::PI * w);
            terms.push(ReparamTerm {
                j: t.j,
                n: t.n,
                freq: t.freq.clone(),
                l,
                d,
                omega,
            });
        }
        let amp_abs_sum: f64 = terms.iter().map(|t| t.d.norm()).sum();
        let positivity_certified = amp_abs_sum < 1.0 - 1e-9;
        if !positivity_certified {
            return Err(Error::InvalidSpec(format!(
                "Phi positivity certificate failed: |d| sum = {amp_abs_sum}"
            )));
        }
        Ok(ReparamSpec {
            base,
            terms,
            amp_abs_sum,
            positivity_certified,
        })
    }
}

/// Phi at a rational point of T^5.
pub fn eval_big_phi(x5: &[BigRational; 5], rspec: &ReparamSpec) -> f64 {
    let mut v = 1.0;
    for t in &rspec.terms {
        if t.d.norm() == 0.0 {
            continue;
        }
        let ph = xrat::frac(
            &(BigRational::from(t.freq.clone()) * &x5[t.j - 1]
                + BigRational::from(t.l.clone()) * &x5[4]),
        );
        let e = Complex64::from_polar(1.0, std::f64::consts::TAU * rat_to_f64(&ph));
        v += (t.d * e).re;
    }
    v
}

/// Residual |phi(x) - int_0^1 Phi(x + s alpha, s) ds| by composite midpoint
/// quadrature with dyadic refinement until two refinements agree to `tol`.
pub fn verify_fiber_integral(
    x: &[BigRational; 4],
    rspec: &ReparamSpec,
    tol: f64,
) -> f64 {
    let lhs = eval_phi(x, &rspec.base);
    // Integrand at rational s: Phi(x_1 + s a_1, ..., x_4 + s a_4, s).
    let integrand = |s: &BigRational| -> f64 {
        let mut pt: [BigRational; 5] = [
            BigRational::zero(),
            BigRational::zero(),
            BigRational::zero(),
            BigRational::zero(),
            s.clone(),
        ];
        for j in 1..=4 {
            pt[j - 1] = xrat::frac(&(&x[j - 1] + s * rspec.base.fv.stand_in(j)));
        }
        eval_big_phi(&pt, rspec)
    };
    let midpoint = |k: u32| -> f64 {
        let n = 1u64 << k;
        let mut acc = 0.0;
        for i in 0..n {
            let s = BigRational::new(BigInt::from(2 * i + 1), BigInt::from(2 * n));
            acc += integrand(&s);
        }
        acc / n as f64
    };
    let mut prev = midpoint(6);
    for k in 7..=16 {
        let cur = midpoint(k);
        if (cur - prev).abs() <= tol {
            return (lhs - cur).abs();
        }
        prev = cur;
    }
    (lhs - prev).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::{exact_level1_profile, relaxed_default_profile};
    use crate::xrat::rat;
    use num_bigint::BigUint;

    fn exact_spec() -> CeilingSpec {
        let fv = Arc::new(exact_level1_profile().unwrap());
        CeilingSpec::full(fv).unwrap()
    }

    fn relaxed_spec() -> CeilingSpec {
        let fv = Arc::new(relaxed_default_profile().unwrap());
        CeilingSpec::full(fv).unwrap()
    }

    fn pt(v: [(i64, i64); 4]) -> [BigRational; 4] {
        std::array::from_fn(|i| rat(v[i].0, v[i].1))
    }

    #[test]
    fn phi_at_zero_is_one_plus_amp_sum() {
        let spec = exact_spec();
        let x = pt([(0, 1); 4]);
        let v = eval_phi(&x, &spec);
        assert!((v - (1.0 + spec.amp_sum)).abs() < 1e-15);
        // exact profile: e^-2 + e^-8 (deeper terms underflow)
        let expect = (-2.0f64).exp() + (-8.0f64).exp();
        assert!((spec.amp_sum - expect).abs() < 1e-15);
    }

    #[test]
    fn phi_vanishing_cosines() {
        let spec = exact_spec();
        // {2 x_1} = 1/4 and {8 x_2} = 1/4; other active terms none
        let x = pt([(1, 8), (1, 32), (0, 1), (0, 1)]);
        assert_eq!(eval_phi(&x, &spec), 1.0);
    }

    #[test]
    fn min_n0_examples() {
        let fv = exact_level1_profile().unwrap();
        assert_eq!(min_n0(&fv, 8).unwrap(), 1);
        // q_1 = (1,1,1,1): level-1 sum is 4/e > 1, so n0 moves deeper
        let ones = crate::arithmetic::build_y_vector(
            [
                vec![BigUint::from(1u32), BigUint::from(7u32)],
                vec![BigUint::from(1u32), BigUint::from(11u32)],
                vec![BigUint::from(1u32), BigUint::from(13u32)],
                vec![BigUint::from(1u32), BigUint::from(17u32)],
            ],
            2,
            crate::arithmetic::Profile::Relaxed {
                base: rat(3, 2),
                cap: BigUint::from(1_000_000u64),
            },
            &crate::arithmetic::BuildOptions {
                digit_budget: 10_000,
                aux_coeff: None,
            },
        )
        .unwrap();
        assert_eq!(min_n0(&ones, 8).unwrap(), 2);
    }

    #[test]
    fn xfactor_trivial_values() {
        let fv = exact_level1_profile().unwrap();
        let x0 = xfactor(0, 1, 1, &fv).unwrap();
        assert_eq!(x0.norm(), 0.0);
        let x1 = xfactor(1, 1, 1, &fv).unwrap();
        assert!((x1 - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn xfactor_matches_geometric_sum() {
        let fv = relaxed_default_profile().unwrap();
        for (m, n, j) in [(5i64, 1usize, 1usize), (5, 1, 3), (17, 1, 2), (57, 2, 1)] {
            let x = xfactor(m, n, j, &fv).unwrap();
            // direct sum_{k<m} e(k q alpha)
            let delta = xrat::frac(
                &(BigRational::from(fv.q(j, n).unwrap().clone()) * fv.stand_in(j)),
            );
            let step = rat_to_f64(&delta);
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..m {
                acc += Complex64::from_polar(1.0, std::f64::consts::TAU * step * k as f64);
            }
            assert!((x - acc).norm() < 1e-9, "mismatch at ({m},{n},{j})");
        }
    }

    #[test]
    fn xfactor_resonates_at_stand_in_depth() {
        let fv = exact_level1_profile().unwrap();
        // level 2 is the stand-in depth in every direction
        match xfactor(3, 2, 1, &fv) {
            Err(Error::Resonance { j: 1, n: 2 }) => {}
            other => panic!("expected resonance, got {other:?}"),
        }
    }

    #[test]
    fn xfactor_huge_frequency_direction() {
        // direction 4 of the exact profile has a ~1300-digit ||q alpha||;
        // the magnitude must still come out as ~m
        let fv = exact_level1_profile().unwrap();
        for m in [1u64, 7, 1000, 9999] {
            let mag = xfactor_magnitude(m, 1, 4, &fv).unwrap();
            assert!(
                (mag - m as f64).abs() < 1e-6 * m as f64,
                "m={m} gave {mag}"
            );
        }
    }

    #[test]
    fn birkhoff_closed_reduces_to_phi_at_m1() {
        let spec = relaxed_spec();
        let x = pt([(1, 7), (2, 11), (3, 13), (5, 17)]);
        let s1 = birkhoff_closed(&x, 1, &spec).unwrap();
        assert!((s1 - eval_phi(&x, &spec)).abs() < 1e-12);
        assert_eq!(birkhoff_closed(&x, 0, &spec).unwrap(), 0.0);
    }

    #[test]
    fn birkhoff_closed_matches_brute() {
        for spec in [exact_spec(), relaxed_spec()] {
            let x = pt([(3, 17), (5, 19), (7, 23), (11, 29)]);
            for m in [2i64, 10, 137, 1000, -1, -57] {
                let c = birkhoff_closed(&x, m, &spec).unwrap();
                let b = birkhoff_brute(&x, m, &spec);
                let tol = 1e-9 * (m.abs().max(1)) as f64;
                assert!((c - b).abs() < tol, "m={m}: closed={c} brute={b}");
            }
        }
    }

    #[test]
    fn birkhoff_brute_sign_convention() {
        let spec = relaxed_spec();
        let x = pt([(1, 7), (2, 11), (3, 13), (5, 17)]);
        // S_{-m} phi(x) = -(phi(R^-m x) + ... + phi(R^-1 x))
        let m = 4i64;
        let mut manual = 0.0;
        for k in 1..=m {
            let y = shift_point(&x, -k, &spec.fv);
            manual -= eval_phi(&y, &spec);
        }
        let b = birkhoff_brute(&x, -m, &spec);
        assert!((b - manual).abs() < 1e-12);
    }

    #[test]
    fn partial_derivative_matches_finite_difference() {
        let spec = relaxed_spec();
        let x = pt([(3, 17), (5, 19), (7, 23), (11, 29)]);
        for j in 1..=4 {
            let d = eval_phi_partial(&x, j, 1, &spec).unwrap();
            let h = 1e-6;
            let hr = xrat::f64_to_rat(h);
            let mut xp = x.clone();
            xp[j - 1] = &x[j - 1] + &hr;
            let mut xm = x.clone();
            xm[j - 1] = &x[j - 1] - &hr;
            let fd = (eval_phi(&xp, &spec) - eval_phi(&xm, &spec)) / (2.0 * h);
            let denom = d.abs().max(1.0);
            assert!((d - fd).abs() / denom < 1e-5, "j={j}: {d} vs {fd}");
        }
        assert!(matches!(
            eval_phi_partial(&x, 1, 3, &spec),
            Err(Error::UnsupportedOrder(3))
        ));
    }

    #[test]
    fn partial_at_zero_vanishes() {
        let spec = exact_spec();
        let x = pt([(0, 1); 4]);
        assert_eq!(eval_phi_partial(&x, 1, 1, &spec).unwrap(), 0.0);
    }

    #[test]
    fn second_derivative_within_series_bound() {
        let spec = relaxed_spec();
        let bound = second_derivative_bound(&spec);
        let x = pt([(3, 17), (5, 19), (7, 23), (11, 29)]);
        for j in 1..=4 {
            let d2 = eval_phi_partial(&x, j, 2, &spec).unwrap();
            assert!(d2.abs() <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn closed_partial_matches_brute_partial() {
        let spec = relaxed_spec();
        let x = pt([(3, 17), (5, 19), (7, 23), (11, 29)]);
        for j in [1usize, 2] {
            for m in [3i64, 50, 400] {
                for order in [1usize, 2] {
                    let c = birkhoff_closed_partial(&x, m, j, order, &spec).unwrap();
                    let b = birkhoff_brute_partial(&x, m, j, order, &spec).unwrap();
                    let tol = 1e-8 * (1.0 + c.abs());
                    assert!((c - b).abs() < tol, "j={j} m={m} order={order}");
                }
            }
        }
    }

    #[test]
    fn reparam_single_term_and_positivity() {
        let spec = exact_spec();
        let rspec = ReparamSpec::new(spec).unwrap();
        assert!(rspec.positivity_certified);
        // |d| <= (pi/2) e^-q for every term
        for t in &rspec.terms {
            let amp = xrat::amp_for_freq(&t.freq);
            assert!(t.d.norm() <= std::f64::consts::FRAC_PI_2 * amp + 1e-15);
        }
    }

    #[test]
    fn fiber_integral_small_residual() {
        let rspec = ReparamSpec::new(exact_spec()).unwrap();
        let x = pt([(3, 17), (5, 19), (7, 23), (11, 29)]);
        let res = verify_fiber_integral(&x, &rspec, 1e-10);
        assert!(res < 1e-8, "residual {res}");
    }

    #[test]
    fn fiber_integral_zero_amplitude_is_exact() {
        // Truncating to the underflowed levels only leaves Phi = 1 = phi.
        let fv = Arc::new(exact_level1_profile().unwrap());
        let spec = CeilingSpec::new(fv, 2, 2).unwrap(); // aux level only: all zero amps
        let rspec = ReparamSpec::new(spec).unwrap();
        let x = pt([(1, 3), (1, 5), (1, 7), (1, 11)]);
        assert_eq!(verify_fiber_integral(&x, &rspec, 1e-10), 0.0);
    }
}
