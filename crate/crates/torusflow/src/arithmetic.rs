//! Continued-fraction machinery for the frequency vectors.
//!
//! A frequency vector carries four continued fractions whose best-approximation
//! denominators q_n^(j) follow the alternating doubly exponential growth
//!
//!   q_n^(2) >= B^(n q_n^(1)),  q_n^(3) >= B^(n q_n^(2)),
//!   q_n^(4) >= B^(n q_n^(3)),  q_{n+1}^(1) >= B^(n q_n^(4)),
//!
//! with B = e for the exact profile and a configurable rational base for the
//! relaxed profile. Every inequality is decided in exact arithmetic and the
//! outcome recorded in a certificate.
//!
//! Each coordinate alpha_j is represented by its deepest stored convergent
//! p_N/q_N. Exact profiles append one large *uncertified* auxiliary level so
//! that the stand-in stays non-resonant at every certified level; the
//! certificates mark that level as auxiliary.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::xrat::{self, bigint_to_f64, rat_to_f64};

/// Simple continued fraction [0; a_1, a_2, ...] with its convergent table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuedFraction {
    coeffs: Vec<BigUint>,
    /// (p_n, q_n) for n = 0..=coeffs.len(); p_0/q_0 = 0/1.
    convergents: Vec<(BigInt, BigInt)>,
}

impl ContinuedFraction {
    pub fn new(coeffs: Vec<BigUint>) -> Result<Self> {
        if coeffs.iter().any(|a| a.is_zero()) {
            return Err(Error::InvalidInput(
                "continued-fraction coefficients must be >= 1".into(),
            ));
        }
        let mut cf = ContinuedFraction {
            coeffs: Vec::new(),
            convergents: vec![(BigInt::zero(), BigInt::one())],
        };
        for a in coeffs {
            cf.push_coeff(a);
        }
        Ok(cf)
    }

    pub fn push_coeff(&mut self, a: BigUint) {
        assert!(!a.is_zero());
        let n = self.coeffs.len(); // level being added is n+1
        let ai = BigInt::from(a.clone());
        let (p, q) = if n == 0 {
            (BigInt::one(), ai)
        } else {
            let (p1, q1) = &self.convergents[n];
            let (p2, q2) = &self.convergents[n - 1];
            (&ai * p1 + p2, &ai * q1 + q2)
        };
        debug_assert!(p.gcd(&q).is_one());
        self.coeffs.push(a);
        self.convergents.push((p, q));
    }

    /// Number of stored levels (n ranges over 1..=levels()).
    pub fn levels(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[BigUint] {
        &self.coeffs
    }

    /// q_n, with q_0 = 1.
    pub fn q(&self, n: usize) -> &BigInt {
        &self.convergents[n].1
    }

    pub fn p(&self, n: usize) -> &BigInt {
        &self.convergents[n].0
    }

    /// Deepest stored convergent p_N/q_N, the rational stand-in for alpha.
    pub fn stand_in(&self) -> BigRational {
        let (p, q) = &self.convergents[self.levels()];
        BigRational::new(p.clone(), q.clone())
    }

    /// Exact {q_n * alpha} for the stand-in, as a fraction in [0, 1).
    pub fn alpha_multiple_frac(&self, n: usize) -> BigRational {
        xrat::frac(&(BigRational::from(self.q(n).clone()) * self.stand_in()))
    }
}

/// Convergent table for a coefficient list: entries (p_n, q_n), n = 0..depth-1.
pub fn convergents(coeffs: &[BigUint], depth: usize) -> Result<Vec<(BigInt, BigInt)>> {
    if depth > coeffs.len() + 1 {
        return Err(Error::InvalidInput(format!(
            "depth {depth} exceeds {} coefficients + 1",
            coeffs.len()
        )));
    }
    let cf = ContinuedFraction::new(coeffs.to_vec())?;
    Ok(cf.convergents[..depth].to_vec())
}

/// Growth base: e for exact profiles, a rational b > 1 for relaxed ones.
#[derive(Debug, Clone, PartialEq)]
pub enum GrowthBase {
    E,
    Rational(BigRational),
}

impl GrowthBase {
    /// Certified decision of q >= base^exponent.
    pub fn int_ge_pow(&self, q: &BigInt, exponent: &BigInt) -> bool {
        match self {
            GrowthBase::E => {
                if exponent.is_zero() {
                    !q.is_negative() && !q.is_zero()
                } else {
                    match exponent.to_u64() {
                        Some(k) => xrat::int_ge_exp(q, k),
                        // exponent too large to even fit u64: the power is
                        // astronomically bigger than any storable q
                        None => false,
                    }
                }
            }
            GrowthBase::Rational(b) => xrat::int_ge_rat_pow(q, b, exponent),
        }
    }

    /// Least integer >= base^exponent, guarded by the digit budget.
    pub fn ceil_pow(
        &self,
        exponent: &BigInt,
        digit_budget: usize,
        level: usize,
        direction: usize,
    ) -> Result<BigInt> {
        let digits = match self {
            GrowthBase::E => bigint_to_f64(exponent) * xrat::LOG10_E,
            GrowthBase::Rational(b) => bigint_to_f64(exponent) * rat_to_f64(b).log10(),
        };
        if !(digits <= digit_budget as f64) {
            return Err(Error::ResourceLimit {
                level,
                direction,
                detail: format!(
                    "ceil(base^{exponent}) needs ~{digits:.3e} digits, budget is {digit_budget}"
                ),
            });
        }
        let k = exponent
            .to_u64()
            .expect("budget-checked exponent fits u64");
        Ok(match self {
            GrowthBase::E => xrat::ceil_exp_int(k),
            GrowthBase::Rational(b) => xrat::ceil_rat_pow(b, k),
        })
    }
}

/// Profile tag: exact growth in base e, or relaxed growth with a cap on the
/// denominators.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Exact,
    Relaxed { base: BigRational, cap: BigUint },
}

impl Profile {
    pub fn growth_base(&self) -> GrowthBase {
        match self {
            Profile::Exact => GrowthBase::E,
            Profile::Relaxed { base, .. } => GrowthBase::Rational(base.clone()),
        }
    }
}

/// One recorded growth inequality q_(subject) >= base^(factor * q_(reference)).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub subject_dir: usize,
    pub subject_level: usize,
    pub ref_dir: usize,
    pub ref_level: usize,
    /// The integer multiplying q_(reference) in the exponent.
    pub factor: usize,
    pub holds: bool,
    /// True when the denominator cap forced a smaller coefficient.
    pub capped: bool,
    /// Auxiliary (uncertified) levels are excluded from the growth claim.
    pub auxiliary: bool,
}

/// The four-coordinate frequency vector with growth certificates.
#[derive(Debug, Clone)]
pub struct FrequencyVector {
    pub cf: [ContinuedFraction; 4],
    pub profile: Profile,
    /// Number of certified levels.
    pub depth: usize,
    /// Uncertified tail levels appended for the stand-in (exact profiles).
    pub aux_levels: usize,
    pub certificates: Vec<GrowthCheck>,
}

pub const DEFAULT_DIGIT_BUDGET: usize = 10_000;
pub const DEFAULT_AUX_COEFF: u64 = 1_000_000_000;

#[derive(Debug, Clone)]
pub struct BuildOptions {
    pub digit_budget: usize,
    /// Coefficient of the auxiliary uncertified level (exact profiles).
    pub aux_coeff: Option<BigUint>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            digit_budget: DEFAULT_DIGIT_BUDGET,
            aux_coeff: Some(BigUint::from(DEFAULT_AUX_COEFF)),
        }
    }
}

impl FrequencyVector {
    /// q_n^(j) with j in 1..=4 and q_0 = 1; None beyond the stored levels.
    pub fn q(&self, j: usize, n: usize) -> Option<&BigInt> {
        let cf = &self.cf[j - 1];
        if n <= cf.levels() {
            Some(cf.q(n))
        } else {
            None
        }
    }

    /// Stored levels in direction j (certified + auxiliary).
    pub fn levels(&self, j: usize) -> usize {
        self.cf[j - 1].levels()
    }

    pub fn stand_in(&self, j: usize) -> BigRational {
        self.cf[j - 1].stand_in()
    }

    /// Pairwise distinctness of the stand-ins (and non-integrality), by
    /// cross-multiplying the convergent fractions.
    pub fn independence_spot_check(&self) -> bool {
        for j in 1..=4 {
            let a = self.stand_in(j);
            if a <= BigRational::zero() || a >= BigRational::one() {
                return false;
            }
        }
        for i in 1..=4 {
            for j in (i + 1)..=4 {
                let (pi, qi) = (
                    self.cf[i - 1].p(self.levels(i)),
                    self.cf[i - 1].q(self.levels(i)),
                );
                let (pj, qj) = (
                    self.cf[j - 1].p(self.levels(j)),
                    self.cf[j - 1].q(self.levels(j)),
                );
                if pi * qj == pj * qi {
                    return false;
                }
            }
        }
        true
    }

    /// Whether every certified growth inequality holds.
    pub fn fully_certified(&self) -> bool {
        self.certificates
            .iter()
            .filter(|c| !c.auxiliary)
            .all(|c| c.holds)
    }
}

/// The chain order within a level: (subject j, reference j, exponent factor).
/// Level n constrains q_n^(2..4) from the previous coordinate and q_{n+1}^(1)
/// from q_n^(4) with factor n.
fn chain_refs(j: usize, n: usize) -> Option<(usize, usize, usize)> {
    match j {
        2 | 3 | 4 => Some((j, j - 1, n)),
        _ => None,
    }
}

/// Construct a frequency vector in Y. `seed[j-1]` optionally pins the leading
/// coefficients of direction j; beyond the seed the construction is
/// greedy-minimal (each coefficient is the least integer satisfying its
/// growth inequality, or the largest one keeping q under the cap for relaxed
/// profiles).
pub fn build_y_vector(
    seed: [Vec<BigUint>; 4],
    depth: usize,
    profile: Profile,
    opts: &BuildOptions,
) -> Result<FrequencyVector> {
    if depth == 0 {
        return Err(Error::InvalidInput("depth must be >= 1".into()));
    }
    for s in &seed {
        if s.iter().any(|a| a.is_zero()) {
            return Err(Error::InvalidInput("seed coefficients must be >= 1".into()));
        }
    }
    let base = profile.growth_base();
    let mut cf: [ContinuedFraction; 4] = [
        ContinuedFraction::new(vec![])?,
        ContinuedFraction::new(vec![])?,
        ContinuedFraction::new(vec![])?,
        ContinuedFraction::new(vec![])?,
    ];
    let mut certificates = Vec::new();
    let mut alive = [true; 4]; // relaxed directions stop once the cap blocks

    for n in 1..=depth {
        for j in 1..=4 {
            if !alive[j - 1] {
                continue;
            }
            // Reference for the greedy bound.
            let bound_ref: Option<(usize, usize, usize)> = if j == 1 {
                if n >= 2 {
                    Some((1, 4, n - 1)) // q_n^(1) >= B^((n-1) q_{n-1}^(4))
                } else {
                    None
                }
            } else {
                chain_refs(j, n)
            };

            let seeded = seed[j - 1].get(n - 1).cloned();
            let coeff = match (&seeded, &bound_ref) {
                (Some(a), _) => a.clone(),
                (None, None) => BigUint::one(),
                (None, Some((_, rj, factor))) => {
                    let rdir = &cf[rj - 1];
                    let rlevel = if *rj == 4 && j == 1 { n - 1 } else { n };
                    if rdir.levels() < rlevel {
                        // reference direction already stopped; stop here too
                        alive[j - 1] = false;
                        continue;
                    }
                    let exponent = BigInt::from(*factor) * rdir.q(rlevel);
                    let q_prev = cf[j - 1].q(n - 1).clone();
                    let q_prev2 = cf[j - 1].q(n.saturating_sub(2)).clone();
                    let q_prev2 = if n >= 2 { q_prev2 } else { BigInt::zero() };
                    match greedy_coeff(
                        &base, &exponent, &q_prev, &q_prev2, &profile, opts, n, j,
                    )? {
                        Some(a) => a,
                        None => {
                            alive[j - 1] = false;
                            continue;
                        }
                    }
                }
            };

            // Relaxed cap applies to seeded coefficients too.
            if let Profile::Relaxed { cap, .. } = &profile {
                let q_prev = cf[j - 1].q(n - 1).clone();
                let q_prev2 = if n >= 2 {
                    cf[j - 1].q(n - 2).clone()
                } else {
                    BigInt::zero()
                };
                let q_new = BigInt::from(coeff.clone()) * &q_prev + &q_prev2;
                if q_new > BigInt::from(cap.clone()) {
                    alive[j - 1] = false;
                    continue;
                }
            }
            cf[j - 1].push_coeff(coeff);
        }

        // Record the certificates for level n (within-level chain).
        for j in 2..=4 {
            if let Some((sj, rj, factor)) = chain_refs(j, n) {
                if cf[sj - 1].levels() >= n && cf[rj - 1].levels() >= n {
                    let exponent = BigInt::from(factor) * cf[rj - 1].q(n);
                    let holds = base.int_ge_pow(cf[sj - 1].q(n), &exponent);
                    certificates.push(GrowthCheck {
                        subject_dir: sj,
                        subject_level: n,
                        ref_dir: rj,
                        ref_level: n,
                        factor,
                        holds,
                        capped: !holds && matches!(profile, Profile::Relaxed { .. }),
                        auxiliary: false,
                    });
                }
            }
        }
        // Cross-level check q_n^(1) >= B^((n-1) q_{n-1}^(4)).
        if n >= 2 && cf[0].levels() >= n && cf[3].levels() >= n - 1 {
            let exponent = BigInt::from(n - 1) * cf[3].q(n - 1);
            let holds = base.int_ge_pow(cf[0].q(n), &exponent);
            certificates.push(GrowthCheck {
                subject_dir: 1,
                subject_level: n,
                ref_dir: 4,
                ref_level: n - 1,
                factor: n - 1,
                holds,
                capped: !holds && matches!(profile, Profile::Relaxed { .. }),
                auxiliary: false,
            });
        }
    }

    // Exact profiles must fully certify; relaxed ones record what they got.
    if matches!(profile, Profile::Exact) {
        if let Some(bad) = certificates.iter().find(|c| !c.holds) {
            return Err(Error::InvalidInput(format!(
                "seeded coefficient violates exact growth at (j={}, n={})",
                bad.subject_dir, bad.subject_level
            )));
        }
    }

    // Auxiliary uncertified tail so the stand-in is deeper than every
    // certified level.
    let mut aux_levels = 0;
    if let Some(aux) = &opts.aux_coeff {
        if matches!(profile, Profile::Exact) {
            for j in 1..=4 {
                cf[j - 1].push_coeff(aux.clone());
                certificates.push(GrowthCheck {
                    subject_dir: j,
                    subject_level: depth + 1,
                    ref_dir: if j == 1 { 4 } else { j - 1 },
                    ref_level: if j == 1 { depth } else { depth + 1 },
                    factor: depth,
                    holds: false,
                    capped: false,
                    auxiliary: true,
                });
            }
            aux_levels = 1;
        }
    }

    Ok(FrequencyVector {
        cf,
        profile,
        depth,
        aux_levels,
        certificates,
    })
}

/// Least coefficient a with a*q_prev + q_prev2 >= ceil(base^exponent); for
/// relaxed profiles, fall back to the largest cap-respecting coefficient
/// (None once even a = 1 would overflow the cap).
#[allow(clippy::too_many_arguments)]
fn greedy_coeff(
    base: &GrowthBase,
    exponent: &BigInt,
    q_prev: &BigInt,
    q_prev2: &BigInt,
    profile: &Profile,
    opts: &BuildOptions,
    level: usize,
    direction: usize,
) -> Result<Option<BigUint>> {
    match profile {
        Profile::Exact => {
            let bound = base.ceil_pow(exponent, opts.digit_budget, level, direction)?;
            let need = &bound - q_prev2;
            let a = if need <= BigInt::zero() {
                BigInt::one()
            } else {
                let (d, r) = need.div_rem(q_prev);
                if r.is_zero() {
                    d
                } else {
                    d + 1
                }
            };
            let a = if a < BigInt::one() { BigInt::one() } else { a };
            Ok(Some(a.to_biguint().unwrap()))
        }
        Profile::Relaxed { cap, .. } => {
            let cap_i = BigInt::from(cap.clone());
            if q_prev + q_prev2 > cap_i {
                return Ok(None); // even a = 1 overflows the cap
            }
            // Does base^exponent stay under the cap?
            let under_cap = base.int_ge_pow(&cap_i, exponent);
            if under_cap {
                let bound = base.ceil_pow(exponent, opts.digit_budget, level, direction)?;
                let target = if bound > cap_i { cap_i.clone() } else { bound };
                let need = &target - q_prev2;
                let a = if need <= BigInt::zero() {
                    BigInt::one()
                } else {
                    let (d, r) = need.div_rem(q_prev);
                    if r.is_zero() {
                        d
                    } else {
                        d + 1
                    }
                };
                let a = if a < BigInt::one() { BigInt::one() } else { a };
                // If the minimal coefficient overflows the cap, pick the
                // largest admissible one instead.
                let q_new = &a * q_prev + q_prev2;
                if q_new > cap_i {
                    let a = (&cap_i - q_prev2).div_floor(q_prev);
                    return Ok(Some(a.to_biguint().unwrap()));
                }
                Ok(Some(a.to_biguint().unwrap()))
            } else {
                // Bound beyond the cap: take the largest cap-respecting
                // coefficient and let the certificate record the shortfall.
                let a = (&cap_i - q_prev2).div_floor(q_prev);
                if a < BigInt::one() {
                    return Ok(None);
                }
                Ok(Some(a.to_biguint().unwrap()))
            }
        }
    }
}

/// (lower, upper) bounds for || q_n alpha ||:
/// 1/(q_n + q_{n+1}) <= ||q_n alpha|| < 1/q_{n+1}.
///
/// The computed distance uses the stand-in p_N/q_N, which saturates the upper
/// bound at n = N-1; the bounds are therefore only certified for n <= N-2.
pub fn best_approx_bounds(
    cf: &ContinuedFraction,
    n: usize,
) -> Result<(BigRational, BigRational)> {
    let levels = cf.levels();
    if n + 2 > levels {
        return Err(Error::InsufficientDepth(format!(
            "best-approximation bounds at level {n} need {} stored levels, have {levels}",
            n + 2
        )));
    }
    let qn = cf.q(n);
    let qn1 = cf.q(n + 1);
    let lower = BigRational::new(BigInt::one(), qn + qn1);
    let upper = BigRational::new(BigInt::one(), qn1.clone());
    Ok((lower, upper))
}

/// Exact ||q_n alpha|| for the stand-in.
pub fn dist_qn_alpha(cf: &ContinuedFraction, n: usize) -> BigRational {
    xrat::dist_to_int(&(BigRational::from(cf.q(n).clone()) * cf.stand_in()))
}

/// Stretch-time window T_n^j = [e^(n q_n^(j)), q_{n+1}^(j)/(n+1)], stored via
/// the integer exponent of the lower end; `hi = None` means the next level is
/// not stored (extended-real upper end).
#[derive(Debug, Clone)]
pub struct StretchWindow {
    pub j: usize,
    pub n: usize,
    pub lo_exponent: BigInt,
    pub hi: Option<BigRational>,
    pub widened: bool,
}

impl StretchWindow {
    pub fn lo_f64(&self) -> f64 {
        let e = bigint_to_f64(&self.lo_exponent);
        let lo = if e > 700.0 { f64::INFINITY } else { e.exp() };
        if self.widened {
            lo / 10.0
        } else {
            lo
        }
    }

    pub fn hi_f64(&self) -> f64 {
        match &self.hi {
            None => f64::INFINITY,
            Some(h) => {
                let v = rat_to_f64(h);
                if self.widened {
                    v * 10.0
                } else {
                    v
                }
            }
        }
    }

    /// Closed-interval membership; the lower end compares ln t against the
    /// integer exponent, the upper end is exact rational.
    pub fn contains(&self, t: f64) -> bool {
        if !(t > 0.0) {
            return false;
        }
        let e = bigint_to_f64(&self.lo_exponent);
        let lo_ok = if self.widened {
            t.ln() >= e - std::f64::consts::LN_10
        } else {
            t.ln() >= e
        };
        if !lo_ok {
            return false;
        }
        match &self.hi {
            None => true,
            Some(h) => {
                let mut bound = h.clone();
                if self.widened {
                    bound *= BigRational::from(BigInt::from(10));
                }
                xrat::f64_to_rat(t) <= bound
            }
        }
    }

    pub fn widen(&self) -> StretchWindow {
        StretchWindow {
            widened: true,
            ..self.clone()
        }
    }
}

/// The four triple-coverage cases, tagged with the base level n:
/// 1: T_n^1 & T_n^2 & T_n^3       2: T_n^2 & T_n^3 & T_n^4
/// 3: T_n^3 & T_n^4 & T_{n+1}^1   4: T_n^4 & T_{n+1}^1 & T_{n+1}^2
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoverageCase {
    Case1(usize),
    Case2(usize),
    Case3(usize),
    Case4(usize),
}

impl CoverageCase {
    /// The (direction, level) triple of the case, in stage order.
    pub fn stages(&self) -> [(usize, usize); 3] {
        match *self {
            CoverageCase::Case1(n) => [(1, n), (2, n), (3, n)],
            CoverageCase::Case2(n) => [(2, n), (3, n), (4, n)],
            CoverageCase::Case3(n) => [(3, n), (4, n), (1, n + 1)],
            CoverageCase::Case4(n) => [(4, n), (1, n + 1), (2, n + 1)],
        }
    }

    pub fn index(&self) -> usize {
        match self {
            CoverageCase::Case1(_) => 1,
            CoverageCase::Case2(_) => 2,
            CoverageCase::Case3(_) => 3,
            CoverageCase::Case4(_) => 4,
        }
    }
}

/// Window for direction j at level n >= 0 (q_0 = 1, exponent 0).
pub fn window(fv: &FrequencyVector, j: usize, n: usize) -> Option<StretchWindow> {
    let levels = fv.levels(j);
    if n > levels {
        return None;
    }
    let qn = fv.q(j, n).unwrap();
    let lo_exponent = BigInt::from(n) * qn;
    let hi = fv
        .q(j, n + 1)
        .map(|q| BigRational::new(q.clone(), BigInt::from(n as u64 + 1)));
    Some(StretchWindow {
        j,
        n,
        lo_exponent,
        hi,
        widened: false,
    })
}

/// All windows of the stored depth that contain t, plus the first coverage
/// case (in the enumeration order of the four cases, smallest level first).
pub fn stretch_windows(
    t: f64,
    fv: &FrequencyVector,
) -> Result<(Vec<StretchWindow>, CoverageCase)> {
    if !(t >= 1.0) {
        return Err(Error::InsufficientDepth(format!(
            "t = {t} is below every window at level 0"
        )));
    }
    let max_level = (1..=4).map(|j| fv.levels(j)).max().unwrap();
    let mut containing = Vec::new();
    for j in 1..=4 {
        for n in 0..=fv.levels(j) {
            if let Some(w) = window(fv, j, n) {
                if w.contains(t) {
                    containing.push(w);
                }
            }
        }
    }
    let has = |j: usize, n: usize| containing.iter().any(|w| w.j == j && w.n == n);
    let mut case = None;
    'outer: for n in 0..=max_level {
        for c in [
            CoverageCase::Case1(n),
            CoverageCase::Case2(n),
            CoverageCase::Case3(n),
            CoverageCase::Case4(n),
        ] {
            if c.stages().iter().all(|&(j, lv)| has(j, lv)) {
                case = Some(c);
                break 'outer;
            }
        }
    }
    match case {
        Some(c) if containing.len() >= 3 => Ok((containing, c)),
        _ => Err(Error::InsufficientDepth(format!(
            "t = {t} has {} containing windows at the stored depth",
            containing.len()
        ))),
    }
}

/// The widened window bar-T_n^j that must contain m for the stretch bounds.
pub fn widened_window(fv: &FrequencyVector, j: usize, n: usize) -> Option<StretchWindow> {
    window(fv, j, n).map(|w| w.widen())
}

/// Built-in exact level-1 profile: greedy-minimal from a_1^(1) = 2, so
/// q_1 = (2, 8, 2981, ceil(e^2981)), plus the auxiliary stand-in level.
pub fn exact_level1_profile() -> Result<FrequencyVector> {
    static CACHE: std::sync::OnceLock<FrequencyVector> = std::sync::OnceLock::new();
    if let Some(fv) = CACHE.get() {
        return Ok(fv.clone());
    }
    let fv = build_y_vector(
        [vec![BigUint::from(2u32)], vec![], vec![], vec![]],
        1,
        Profile::Exact,
        &BuildOptions::default(),
    )?;
    Ok(CACHE.get_or_init(|| fv).clone())
}

/// Built-in relaxed profile: level-1 seed (2, 3, 5, 7) (pairwise coprime, so
/// the canonical flow-box return bound is sharp), base 7/5, cap 10^6,
/// greedy-filled to depth 3.
pub fn relaxed_default_profile() -> Result<FrequencyVector> {
    build_y_vector(
        [
            vec![BigUint::from(2u32)],
            vec![BigUint::from(3u32)],
            vec![BigUint::from(5u32)],
            vec![BigUint::from(7u32)],
        ],
        3,
        Profile::Relaxed {
            base: xrat::rat(7, 5),
            cap: BigUint::from(1_000_000u64),
        },
        &BuildOptions {
            digit_budget: DEFAULT_DIGIT_BUDGET,
            aux_coeff: None,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::xrat::rat;

    fn coeffs(v: &[u64]) -> Vec<BigUint> {
        v.iter().map(|&a| BigUint::from(a)).collect()
    }

    #[test]
    fn convergents_fibonacci() {
        let table = convergents(&coeffs(&[1, 1, 1, 1, 1]), 5).unwrap();
        let qs: Vec<i64> = table.iter().map(|(_, q)| q.to_i64().unwrap()).collect();
        assert_eq!(qs, vec![1, 1, 2, 3, 5]);
    }

    #[test]
    fn convergents_two_coeffs() {
        let table = convergents(&coeffs(&[2, 3]), 3).unwrap();
        assert_eq!(table[1].1, BigInt::from(2));
        assert_eq!(table[2].1, BigInt::from(7)); // q_2 = 3*2 + 1
    }

    #[test]
    fn convergents_match_nested_fraction() {
        // [0; 2, 8, 3000] evaluated as an exact rational and reduced.
        let cf = ContinuedFraction::new(coeffs(&[2, 8, 3000])).unwrap();
        let mut val = BigRational::zero();
        for &a in [3000u64, 8, 2].iter() {
            val = BigRational::one() / (BigRational::from(BigInt::from(a)) + val);
        }
        assert_eq!(val, cf.stand_in());
        assert_eq!(cf.q(3), val.denom());
    }

    #[test]
    fn zero_coefficient_rejected() {
        assert!(ContinuedFraction::new(coeffs(&[2, 0, 3])).is_err());
        assert!(convergents(&coeffs(&[0]), 1).is_err());
    }

    #[test]
    fn exact_profile_minimal_denominators() {
        let fv = exact_level1_profile().unwrap();
        assert_eq!(fv.q(1, 1).unwrap(), &BigInt::from(2));
        assert_eq!(fv.q(2, 1).unwrap(), &BigInt::from(8)); // ceil(e^2)
        assert_eq!(fv.q(3, 1).unwrap(), &BigInt::from(2981)); // ceil(e^8)
        // q_1^(4) = ceil(e^2981), 1295 digits
        assert_eq!(fv.q(4, 1).unwrap().to_string().len(), 1295);
        assert!(fv.fully_certified());
        assert_eq!(fv.aux_levels, 1);
        assert!(fv.independence_spot_check());
    }

    #[test]
    fn exact_profile_depth2_rejected() {
        let err = build_y_vector(
            [vec![BigUint::from(2u32)], vec![], vec![], vec![]],
            2,
            Profile::Exact,
            &BuildOptions::default(),
        )
        .unwrap_err();
        match err {
            Error::ResourceLimit { level, .. } => assert_eq!(level, 2),
            other => panic!("expected resource limit, got {other}"),
        }
    }

    #[test]
    fn relaxed_profile_respects_cap() {
        let fv = relaxed_default_profile().unwrap();
        let cap = BigInt::from(1_000_000u64);
        for j in 1..=4 {
            for n in 1..=fv.levels(j) {
                assert!(fv.q(j, n).unwrap() <= &cap, "q({j},{n}) over cap");
            }
        }
        // level-1 certificates hold for base 7/5
        assert!(fv
            .certificates
            .iter()
            .filter(|c| c.subject_level == 1)
            .all(|c| c.holds));
        // deep levels get capped and recorded as such
        assert!(fv.certificates.iter().any(|c| c.capped));
    }

    #[test]
    fn best_approx_bounds_golden_ratio() {
        let cf = ContinuedFraction::new(coeffs(&[1; 14])).unwrap();
        for n in 1..=10 {
            let (lo, hi) = best_approx_bounds(&cf, n).unwrap();
            let d = dist_qn_alpha(&cf, n);
            assert!(lo <= d && d < hi, "bounds fail at n={n}");
        }
        // bounds certified up to n = N-2 = 12; deeper levels error out
        assert!(best_approx_bounds(&cf, 12).is_ok());
        assert!(best_approx_bounds(&cf, 13).is_err());
    }

    #[test]
    fn best_approx_bounds_small_cf() {
        let cf = ContinuedFraction::new(coeffs(&[2, 8, 57, 3])).unwrap();
        let (lo, hi) = best_approx_bounds(&cf, 1).unwrap();
        let d = dist_qn_alpha(&cf, 1);
        assert!(lo <= d && d < hi);
        // degenerate depth-2 cf: level 1 needs levels 1..3
        let cf2 = ContinuedFraction::new(coeffs(&[2, 8])).unwrap();
        assert!(matches!(
            best_approx_bounds(&cf2, 1),
            Err(Error::InsufficientDepth(_))
        ));
    }

    #[test]
    fn window_membership_exact_profile() {
        let fv = exact_level1_profile().unwrap();
        let (ws, case) = stretch_windows(100.0, &fv).unwrap();
        let mut tags: Vec<(usize, usize)> = ws.iter().map(|w| (w.j, w.n)).collect();
        tags.sort();
        assert_eq!(tags, vec![(1, 1), (3, 0), (4, 0)]);
        assert_eq!(case, CoverageCase::Case3(0));

        let (ws, _) = stretch_windows(7.4, &fv).unwrap();
        assert!(ws.iter().any(|w| w.j == 1 && w.n == 1));

        assert!(matches!(
            stretch_windows(0.5, &fv),
            Err(Error::InsufficientDepth(_))
        ));
    }

    #[test]
    fn window_cases_exhaustive_at_desk_scale() {
        let fv = exact_level1_profile().unwrap();
        let expected = [
            (1.5, 1usize),
            (5.0, 2),
            (100.0, 3),
            (1.0e4, 4),
            (1.0e5, 4),
        ];
        for (t, idx) in expected {
            let (_, case) = stretch_windows(t, &fv).unwrap();
            assert_eq!(case.index(), idx, "t={t}");
        }
    }

    #[test]
    fn relaxed_seed_certificate_failure_is_recorded() {
        // (1,1,1,1) violates the level-1 chain for base 3/2; the build still
        // succeeds and the certificate records which inequalities fail.
        let fv = build_y_vector(
            [
                coeffs(&[1]),
                coeffs(&[1]),
                coeffs(&[1]),
                coeffs(&[1]),
            ],
            1,
            Profile::Relaxed {
                base: rat(3, 2),
                cap: BigUint::from(1_000_000u64),
            },
            &BuildOptions {
                digit_budget: DEFAULT_DIGIT_BUDGET,
                aux_coeff: None,
            },
        )
        .unwrap();
        assert!(fv.certificates.iter().any(|c| !c.holds));
        assert!(!fv.fully_certified());
    }
}
