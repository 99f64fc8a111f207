//! Uniform stretch on good intervals and the partial partitions behind the
//! correlation-decay estimate.
//!
//! A j-interval is (n, theta, j)-good when its j-projection stays inside
//!
//!   W(n, theta, j) = { x : {q_n^(j) x} in [theta, 1/2 - theta] u [1/2 + theta, 1 - theta] },
//!
//! the region where |sin(2 pi q x)| >= sin(2 pi theta). On good intervals the
//! Birkhoff sums stretch uniformly: inf |d_j phi_m| >= theta m q e^(-q) for m
//! in the widened window, and the partial partition G_t covers all of M_zeta
//! except a triple band product of exact measure (4 theta)^3.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arithmetic::{stretch_windows, widened_window, CoverageCase, FrequencyVector};
use crate::ceiling::{
    birkhoff_closed_partial, eval_phi, second_derivative_bound, CeilingSpec,
};
use crate::error::{Error, Result};
use crate::flow::{hit_count, FlowBox};
use crate::sampler::RatSampler;
use crate::xrat::{self, bigint_to_f64, f64_to_rat, rat, rat_to_f64};

/// An interval in the j-direction with the other coordinates and the fiber
/// height fixed.
#[derive(Debug, Clone)]
pub struct DirectedInterval {
    pub j: usize,
    /// The other three base coordinates, in increasing coordinate order.
    pub base: [BigRational; 3],
    pub s: f64,
    pub a: BigRational,
    pub b: BigRational,
}

impl DirectedInterval {
    pub fn point(&self, xj: &BigRational) -> [BigRational; 4] {
        let mut out: [BigRational; 4] = std::array::from_fn(|_| BigRational::zero());
        let mut k = 0;
        for i in 0..4 {
            if i == self.j - 1 {
                out[i] = xrat::frac(xj);
            } else {
                out[i] = self.base[k].clone();
                k += 1;
            }
        }
        out
    }

    pub fn length(&self) -> BigRational {
        &self.b - &self.a
    }

    /// Grid point a + i/(g-1) * (b-a).
    pub fn grid_point(&self, i: usize, g: usize) -> BigRational {
        &self.a + self.length() * rat(i as i64, (g - 1) as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GoodTest {
    pub good: bool,
    /// Interval longer than the longest W component, so never good.
    pub too_long: bool,
}

/// Exact test of pi_j(I) subset of W(n, theta, j).
pub fn good_interval_test(
    iv: &DirectedInterval,
    n: usize,
    theta: &BigRational,
    fv: &FrequencyVector,
) -> GoodTest {
    let q = match fv.q(iv.j, n) {
        Some(q) => q.clone(),
        None => return GoodTest { good: false, too_long: false },
    };
    let quarter = rat(1, 4);
    if theta <= &BigRational::zero() || theta >= &quarter {
        return GoodTest { good: false, too_long: false };
    }
    let half = rat(1, 2);
    let len_scaled = (&iv.b - &iv.a) * BigRational::from(q.clone());
    let too_long = len_scaled > half.clone() - theta - theta;
    if len_scaled > half {
        return GoodTest { good: false, too_long: true };
    }
    let u = xrat::frac(&(BigRational::from(q.clone()) * &iv.a));
    let v = &u + &len_scaled;
    // components do not cross 0, so wrap-around means not good
    let inside = |lo: &BigRational, hi: &BigRational| -> bool {
        (lo >= theta && hi <= &(half.clone() - theta))
            || (lo >= &(half.clone() + theta) && *hi <= BigRational::one() - theta)
    };
    let good = if v <= BigRational::one() {
        inside(&u, &v)
    } else {
        false
    };
    GoodTest { good, too_long: too_long && !good }
}

/// Largest theta for which the interval is (n, theta, j)-good (0 if none);
/// the distance of the scaled image to the excluded set {0, 1/2} mod 1.
pub fn goodness_margin(
    iv: &DirectedInterval,
    n: usize,
    fv: &FrequencyVector,
) -> BigRational {
    let q = match fv.q(iv.j, n) {
        Some(q) => q.clone(),
        None => return BigRational::zero(),
    };
    let u = xrat::frac(&(BigRational::from(q.clone()) * &iv.a));
    let v = &u + (&iv.b - &iv.a) * BigRational::from(q);
    let half = rat(1, 2);
    if v > BigRational::one() {
        return BigRational::zero();
    }
    let margin = if v <= half {
        let lo = u.clone();
        let hi = half.clone() - &v;
        if lo < hi {
            lo
        } else {
            hi
        }
    } else if u >= half {
        let lo = u.clone() - &half;
        let hi = BigRational::one() - &v;
        if lo < hi {
            lo
        } else {
            hi
        }
    } else {
        BigRational::zero()
    };
    if margin.is_negative() {
        BigRational::zero()
    } else {
        margin
    }
}

/// Measured stretch quantities (r^t_I, S^t_I): infima over a grid with
/// golden-section refinement around the smallest samples. A vanishing second
/// derivative contributes S = +inf at that sample.
pub fn stretch_quantities(
    iv: &DirectedInterval,
    t: f64,
    grid: usize,
    spec: &CeilingSpec,
) -> Result<(f64, f64)> {
    if iv.a >= iv.b {
        return Err(Error::InvalidInput("degenerate interval".into()));
    }
    let g = grid.max(8);
    let sample = |xj: &BigRational| -> Result<(f64, f64)> {
        let x = iv.point(xj);
        let n = hit_count(&x, iv.s, t, spec)?.n;
        let d1 = birkhoff_closed_partial(&x, n, iv.j, 1, spec)?.abs();
        let d2 = birkhoff_closed_partial(&x, n, iv.j, 2, spec)?.abs();
        let s = if d2 == 0.0 { f64::INFINITY } else { d1 * d1 / d2 };
        Ok((d1, s))
    };
    let mut vals = Vec::with_capacity(g);
    for i in 0..g {
        let xj = iv.grid_point(i, g);
        vals.push((sample(&xj)?, i));
    }
    let mut r = f64::INFINITY;
    let mut s_inf = f64::INFINITY;
    for ((d1, s), _) in &vals {
        r = r.min(*d1);
        s_inf = s_inf.min(*s);
    }
    // golden-section refinement around the three smallest |d1| samples
    let mut order: Vec<usize> = (0..g).collect();
    order.sort_by(|&a, &b| vals[a].0 .0.total_cmp(&vals[b].0 .0));
    let phi_ratio = 0.381_966_011_250_105_1; // (3 - sqrt 5)/2 as golden split
    for &i in order.iter().take(3) {
        let lo_i = i.saturating_sub(1);
        let hi_i = (i + 1).min(g - 1);
        let mut lo = rat_to_f64(&iv.grid_point(lo_i, g));
        let mut hi = rat_to_f64(&iv.grid_point(hi_i, g));
        for _ in 0..24 {
            let m1 = lo + phi_ratio * (hi - lo);
            let m2 = hi - phi_ratio * (hi - lo);
            let (v1, s1) = sample(&f64_to_rat(m1))?;
            let (v2, s2) = sample(&f64_to_rat(m2))?;
            r = r.min(v1).min(v2);
            s_inf = s_inf.min(s1).min(s2);
            if v1 < v2 {
                hi = m2;
            } else {
                lo = m1;
            }
        }
    }
    Ok((r, s_inf))
}

/// Analytic bounds of the uniform-stretch estimate for m in bar-T_n^j:
/// d1 = theta m q e^(-q) on the first derivative, d2 = m * sum (2 pi q)^2 e^(-q)
/// on the second.
pub fn stretch_lower_bound(
    n: usize,
    theta: f64,
    j: usize,
    m: u64,
    spec: &CeilingSpec,
) -> Result<(f64, f64)> {
    let w = widened_window(&spec.fv, j, n)
        .ok_or_else(|| Error::WindowMismatch(format!("no window ({j},{n})")))?;
    if !w.contains(m as f64) {
        return Err(Error::WindowMismatch(format!(
            "m = {m} outside widened window ({j},{n}) = [{:.3e}, {:.3e}]",
            w.lo_f64(),
            w.hi_f64()
        )));
    }
    if n < spec.n0 {
        return Err(Error::WindowMismatch(format!(
            "window level {n} below the ceiling base index n0 = {}",
            spec.n0
        )));
    }
    let q = spec.fv.q(j, n).unwrap();
    let qf = bigint_to_f64(q);
    let amp = xrat::amp_for_freq(q);
    let d1 = theta * m as f64 * qf * amp;
    let d2 = m as f64 * second_derivative_bound(spec);
    Ok((d1, d2))
}

/// Report of the corollary-level stretch check r >= theta t^(1-eps/100),
/// S >= theta^2 t^(1-eps/50) on a good interval.
#[derive(Debug, Clone, Serialize)]
pub struct StretchReport {
    pub window_direction: usize,
    pub window_level: usize,
    pub good: bool,
    pub theta: f64,
    pub r_measured: f64,
    pub s_measured: f64,
    pub r_threshold: f64,
    pub s_threshold: f64,
    pub r_pass: bool,
    pub s_pass: bool,
}

pub fn corollary_stretch_check(
    iv: &DirectedInterval,
    t: f64,
    eps: f64,
    theta: f64,
    spec: &CeilingSpec,
) -> Result<StretchReport> {
    // t must lie in a window of the interval's direction
    let (windows, _) = stretch_windows(t, &spec.fv)?;
    let w = windows
        .iter()
        .filter(|w| w.j == iv.j && w.n >= spec.n0)
        .min_by_key(|w| w.n)
        .ok_or_else(|| {
            Error::WindowMismatch(format!(
                "t = {t} lies in no window of direction {}",
                iv.j
            ))
        })?;
    let theta_r = f64_to_rat(theta);
    let good = good_interval_test(iv, w.n, &theta_r, &spec.fv).good;
    let (r, s) = stretch_quantities(iv, t, 256, spec)?;
    let r_threshold = theta * t.powf(1.0 - eps / 100.0);
    let s_threshold = theta * theta * t.powf(1.0 - eps / 50.0);
    Ok(StretchReport {
        window_direction: w.j,
        window_level: w.n,
        good,
        theta,
        r_measured: r,
        s_measured: s,
        r_threshold,
        s_threshold,
        r_pass: r >= r_threshold,
        s_pass: s >= s_threshold,
    })
}

/// Partial partition G_t into good intervals of the three stage directions.
#[derive(Debug, Clone)]
pub struct PartialPartition {
    pub t: f64,
    pub eps: f64,
    pub zeta: f64,
    /// Exact dyadic theta (rounded down from t^(-1/4+eps)).
    pub theta: BigRational,
    pub theta_f: f64,
    pub case: CoverageCase,
    pub stages: [StageBands; 3],
    /// Sampled representative atoms (the full partition is a continuum).
    pub atoms: Vec<DirectedInterval>,
    /// Exact product of the three band measures, base lambda_4.
    pub bad_measure_exact: BigRational,
    pub bad_measure: f64,
    /// Exact covered base measure; covered + bad = 1.
    pub covered_exact: BigRational,
}

/// Exact band structure of one stage direction.
#[derive(Debug, Clone)]
pub struct StageBands {
    pub direction: usize,
    pub level: usize,
    pub q: BigInt,
    pub theta: BigRational,
}

impl StageBands {
    /// Connected components of W(n, theta, j): for each k < q the two
    /// intervals [(k + theta)/q, (k + 1/2 - theta)/q] and the half-shifted
    /// copy.
    pub fn component(&self, k: u64, upper: bool) -> (BigRational, BigRational) {
        let q = BigRational::from(self.q.clone());
        let base = rat(k as i64, 1);
        let half = rat(1, 2);
        let (lo, hi) = if upper {
            (&base + &half + &self.theta, &base + BigRational::one() - &self.theta)
        } else {
            (&base + &self.theta, &base + &half - &self.theta)
        };
        (lo / q.clone(), hi / q)
    }

    pub fn component_count(&self) -> u64 {
        2 * self.q.to_u64().unwrap_or(u64::MAX)
    }

    /// One band interval around k/q (or its half-shifted copy).
    pub fn band(&self, k: u64, shifted: bool) -> (BigRational, BigRational) {
        let q = BigRational::from(self.q.clone());
        let center = rat(k as i64, 1) + if shifted { rat(1, 2) } else { rat(0, 1) };
        (
            (center.clone() - &self.theta) / q.clone(),
            (center + &self.theta) / q,
        )
    }

    /// Total band measure: 2q * (2 theta / q) = 4 theta, summed literally.
    pub fn band_measure(&self) -> BigRational {
        let q = self.q.to_u64().expect("stage q fits u64");
        let mut total = BigRational::zero();
        for k in 0..q {
            for shifted in [false, true] {
                let (lo, hi) = self.band(k, shifted);
                total += hi - lo;
            }
        }
        total
    }

    /// A point inside a uniformly chosen band, exact.
    pub fn sample_in_band(&self, sampler: &mut RatSampler) -> BigRational {
        let q = self.q.to_u64().expect("stage q fits u64");
        let k = sampler.index(q as usize) as u64;
        let shifted = sampler.index(2) == 1;
        let (lo, hi) = self.band(k, shifted);
        xrat::frac(&sampler.in_interval(&lo, &hi))
    }
}

/// Builds the partial partition G_t for theta = t^(-1/4+eps): stage 1 covers
/// everything outside the stage-1 bands with 1-component intervals, stage 2
/// covers the stage-1 bands outside the stage-2 bands, stage 3 covers the
/// remaining double bands; what is left is the triple band product of exact
/// measure (4 theta)^3. Fiber heights are sliced on a zeta/4 grid keeping
/// exactly the slices that meet M_zeta and avoid the complement of M_{zeta/2}.
pub fn build_partition(
    t: f64,
    eps: f64,
    zeta: f64,
    spec: &CeilingSpec,
    atom_samples: usize,
    seed: u64,
) -> Result<PartialPartition> {
    let theta_f = t.powf(-0.25 + eps);
    if !(theta_f < 0.25) {
        return Err(Error::InfeasibleMargin { theta: theta_f, t });
    }
    // round down to a 48-bit dyadic so the band arithmetic is exact and the
    // closed form 64 theta^3 stays an upper bound
    let theta = {
        let scaled = (theta_f * (1u64 << 48) as f64).floor() as u64;
        BigRational::new(BigInt::from(scaled), BigInt::from(1u64 << 48))
    };
    let (_, case) = stretch_windows(t, &spec.fv)?;
    let stage_dirs = case.stages();
    let mut stages: Vec<StageBands> = Vec::with_capacity(3);
    for &(j, n) in &stage_dirs {
        if n < spec.n0 && n > 0 {
            return Err(Error::WindowMismatch(format!(
                "stage level {n} below ceiling base index"
            )));
        }
        let q = spec
            .fv
            .q(j, n)
            .ok_or_else(|| Error::InsufficientDepth(format!("no q({j},{n})")))?
            .clone();
        if q.to_u64().is_none() {
            return Err(Error::ResourceLimit {
                level: n,
                direction: j,
                detail: "partition stage frequency exceeds u64".into(),
            });
        }
        stages.push(StageBands {
            direction: j,
            level: n,
            q,
            theta: theta.clone(),
        });
    }
    let stages: [StageBands; 3] = [stages[0].clone(), stages[1].clone(), stages[2].clone()];

    // Exact measure bookkeeping.
    let band: Vec<BigRational> = stages.iter().map(|s| s.band_measure()).collect();
    let one = BigRational::one();
    let covered = (&one - &band[0])
        + &band[0] * (&one - &band[1])
        + &band[0] * &band[1] * (&one - &band[2]);
    let bad = &band[0] * &band[1] * &band[2];
    debug_assert_eq!(&covered + &bad, one);

    // Representative atoms with fiber slicing.
    let mut sampler = RatSampler::new(seed);
    let mut atoms = Vec::new();
    let per_stage = (atom_samples / 3).max(1);
    for (si, stage) in stages.iter().enumerate() {
        let q = stage.q.to_u64().unwrap();
        for _ in 0..per_stage {
            let k = sampler.index(q as usize) as u64;
            let upper = sampler.index(2) == 1;
            let (a, b) = stage.component(k, upper);
            // base coordinates: stage-i atoms sit inside the bands of the
            // previous stages and are free elsewhere
            let mut base_coords: [Option<BigRational>; 4] = Default::default();
            for prev in stages.iter().take(si) {
                base_coords[prev.direction - 1] = Some(prev.sample_in_band(&mut sampler));
            }
            let mut base: Vec<BigRational> = Vec::with_capacity(3);
            for d in 1..=4 {
                if d == stage.direction {
                    continue;
                }
                base.push(match &base_coords[d - 1] {
                    Some(v) => v.clone(),
                    None => sampler.unit(),
                });
            }
            let proto = DirectedInterval {
                j: stage.direction,
                base: [base[0].clone(), base[1].clone(), base[2].clone()],
                s: 0.0,
                a: xrat::frac(&a),
                b: xrat::frac(&a) + (&b - &a),
            };
            if let Some(s) = admissible_slice(&proto, zeta, spec) {
                atoms.push(DirectedInterval { s, ..proto });
            }
        }
    }

    Ok(PartialPartition {
        t,
        eps,
        zeta,
        theta: theta.clone(),
        theta_f: rat_to_f64(&theta),
        case,
        stages,
        atoms,
        bad_measure_exact: bad.clone(),
        bad_measure: rat_to_f64(&bad),
        covered_exact: covered,
    })
}

/// Highest zeta/4-grid fiber height whose slice meets M_zeta and avoids the
/// complement of M_{zeta/2}; None when no slice qualifies.
fn admissible_slice(iv: &DirectedInterval, zeta: f64, spec: &CeilingSpec) -> Option<f64> {
    let g = 33;
    let mut min_phi = f64::INFINITY;
    let mut max_phi = f64::NEG_INFINITY;
    for i in 0..g {
        let x = iv.point(&iv.grid_point(i, g));
        let v = eval_phi(&x, spec);
        min_phi = min_phi.min(v);
        max_phi = max_phi.max(v);
    }
    // Lipschitz slack for the j-direction terms between grid points.
    let lip: f64 = spec
        .active_terms()
        .filter(|t| t.j == iv.j)
        .map(|t| t.amp * std::f64::consts::TAU * bigint_to_f64(&t.freq))
        .sum();
    let h = rat_to_f64(&iv.length()) / (g - 1) as f64;
    let certified_min = min_phi - lip * h / 2.0;
    let meets = max_phi - zeta; // witnessed by a grid point
    let avoids = certified_min - zeta / 2.0;
    let cap = meets.min(avoids);
    if cap < 0.0 {
        return None;
    }
    let step = zeta / 4.0;
    let k = (cap / step).floor();
    Some((k * step).min(cap))
}

/// Claim-level decomposition check: every translate R_alpha^k(J), |k| <= 10T,
/// has a 1-fiber that is (n, 1/50, 1)-good, tested exactly.
pub fn claim_good_decomposition_check(
    bx: &FlowBox,
    t_half: f64,
    fv: &FrequencyVector,
) -> Result<bool> {
    let n = bx.canonical_level.ok_or_else(|| {
        Error::UnsupportedShape("claim check needs a canonical box".into())
    })?;
    let theta = rat(1, 50);
    let k_max = (10.0 * t_half).floor() as i64;
    for k in -k_max..=k_max {
        let shift = xrat::frac(&(rat(k, 1) * fv.stand_in(1)));
        let a = xrat::frac(&(&bx.intervals[0].0 + &shift));
        let b = &a + (&bx.intervals[0].1 - &bx.intervals[0].0);
        let iv = DirectedInterval {
            j: 1,
            base: [
                bx.intervals[1].0.clone(),
                bx.intervals[2].0.clone(),
                bx.intervals[3].0.clone(),
            ],
            s: 0.0,
            a,
            b,
        };
        if !good_interval_test(&iv, n, &theta, fv).good {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Sample a random (n, theta, j)-good interval: a random sub-interval of a
/// random connected component of W(n, theta, j).
pub fn sample_good_interval(
    j: usize,
    n: usize,
    theta: &BigRational,
    fv: &FrequencyVector,
    sampler: &mut RatSampler,
) -> Option<DirectedInterval> {
    let q = fv.q(j, n)?.to_u64()?;
    let stage = StageBands {
        direction: j,
        level: n,
        q: BigInt::from(q),
        theta: theta.clone(),
    };
    let k = sampler.index(q as usize) as u64;
    let upper = sampler.index(2) == 1;
    let (lo, hi) = stage.component(k, upper);
    let w = &hi - &lo;
    // sub-interval between 20% and 90% of the component width
    let frac_len = rat(1, 5) + rat(7, 10) * sampler.unit();
    let len = &w * frac_len;
    let a = sampler.in_interval(&lo, &(hi.clone() - &len));
    let base: [BigRational; 3] = std::array::from_fn(|_| sampler.unit());
    Some(DirectedInterval {
        j,
        base,
        s: 0.0,
        a: xrat::frac(&a),
        b: xrat::frac(&a) + len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::{exact_level1_profile, relaxed_default_profile};
    use crate::ceiling::CeilingSpec;
    use std::sync::Arc;

    fn exact_spec() -> CeilingSpec {
        CeilingSpec::full(Arc::new(exact_level1_profile().unwrap())).unwrap()
    }

    fn iv(j: usize, a: BigRational, b: BigRational) -> DirectedInterval {
        DirectedInterval {
            j,
            base: [rat(3, 17), rat(5, 19), rat(7, 23)],
            s: 0.0,
            a,
            b,
        }
    }

    #[test]
    fn good_interval_examples() {
        let fv = exact_level1_profile().unwrap();
        // q = 8 (direction 2 level 1), theta = 0.05: {8x} over [0.02, 0.04]
        // is [0.16, 0.32] inside [0.05, 0.45]
        let theta = rat(1, 20);
        let i1 = iv(2, rat(1, 50), rat(1, 25));
        assert!(good_interval_test(&i1, 1, &theta, &fv).good);
        // an interval containing x = k/q is never good
        let i2 = iv(2, rat(1, 8) - rat(1, 100), rat(1, 8) + rat(1, 100));
        assert!(!good_interval_test(&i2, 1, &theta, &fv).good);
        // an interval containing {qx} = 1/2 is never good
        let i3 = iv(2, rat(1, 16) - rat(1, 100), rat(1, 16) + rat(1, 100));
        assert!(!good_interval_test(&i3, 1, &theta, &fv).good);
        // too long to fit any component
        let i4 = iv(2, rat(0, 1), rat(1, 10));
        let r = good_interval_test(&i4, 1, &theta, &fv);
        assert!(!r.good && r.too_long);
    }

    #[test]
    fn goodness_margin_monotone() {
        let fv = exact_level1_profile().unwrap();
        let i1 = iv(2, rat(1, 50), rat(1, 25));
        let m = goodness_margin(&i1, 1, &fv);
        assert!(m > BigRational::zero());
        assert!(good_interval_test(&i1, 1, &m, &fv).good);
        // any larger theta fails
        let bigger = &m + rat(1, 1000);
        assert!(!good_interval_test(&i1, 1, &bigger, &fv).good);
    }

    #[test]
    fn sampled_good_intervals_are_good() {
        let fv = exact_level1_profile().unwrap();
        let mut sampler = RatSampler::new(7);
        let theta = rat(1, 10);
        for j in [1usize, 2] {
            for _ in 0..50 {
                let g = sample_good_interval(j, 1, &theta, &fv, &mut sampler).unwrap();
                assert!(good_interval_test(&g, 1, &theta, &fv).good);
            }
        }
    }

    #[test]
    fn stretch_bound_window_guard() {
        let spec = exact_spec();
        // m far above the widened window of (j=2, n=1)? upper end is huge,
        // but m below the lower end errors out
        assert!(matches!(
            stretch_lower_bound(1, 0.1, 2, 10, &spec),
            Err(Error::WindowMismatch(_))
        ));
        let (d1, d2) = stretch_lower_bound(1, 0.1, 1, 100, &spec).unwrap();
        let q = 2.0f64;
        assert!((d1 - 0.1 * 100.0 * q * (-q).exp()).abs() < 1e-12);
        assert!(d2 > 0.0);
    }

    #[test]
    fn prop42_measured_inf_beats_bound_direction1() {
        let spec = exact_spec();
        let fv = &spec.fv;
        let mut sampler = RatSampler::new(11);
        let theta = rat(1, 10);
        for &m in &[1u64, 10, 500, 10_000] {
            let g = sample_good_interval(1, 1, &theta, fv, &mut sampler).unwrap();
            let x0 = g.point(&g.a);
            let _ = x0;
            let (d1_bound, _) = stretch_lower_bound(1, 0.1, 1, m, &spec).unwrap();
            // measured inf over the interval of |d_1 phi_m|
            let mut inf = f64::INFINITY;
            for i in 0..64 {
                let x = g.point(&g.grid_point(i, 64));
                let d = birkhoff_closed_partial(&x, m as i64, 1, 1, &spec)
                    .unwrap()
                    .abs();
                inf = inf.min(d);
            }
            assert!(
                inf >= d1_bound,
                "m={m}: measured {inf} < bound {d1_bound}"
            );
        }
    }

    #[test]
    fn corollary_check_passes_direction1() {
        let spec = exact_spec();
        let mut sampler = RatSampler::new(3);
        let theta = rat(1, 10);
        let g = sample_good_interval(1, 1, &theta, &spec.fv, &mut sampler).unwrap();
        let rep = corollary_stretch_check(&g, 1e3, 0.01, 0.1, &spec).unwrap();
        assert!(rep.good);
        assert!(rep.r_pass, "r {} < {}", rep.r_measured, rep.r_threshold);
        assert!(rep.s_pass, "S {} < {}", rep.s_measured, rep.s_threshold);
        // a deliberately bad interval records a failure without erroring
        let bad = iv(1, rat(0, 1), rat(1, 10)); // contains a zero of sin(4 pi x)
        let rep = corollary_stretch_check(&bad, 1e3, 0.01, 0.1, &spec).unwrap();
        assert!(!rep.good);
        assert!(!rep.r_pass);
        // t below every window of the direction errors out
        assert!(corollary_stretch_check(&g, 0.5, 0.01, 0.1, &spec).is_err());
    }

    #[test]
    fn partition_bad_measure_exact() {
        let spec = exact_spec();
        for t in [1e3, 1e4] {
            let p = build_partition(t, 0.01, 0.05, &spec, 30, 5).unwrap();
            let closed = 64.0 * t.powf(-0.75 + 3.0 * 0.01);
            let ratio = p.bad_measure / closed;
            assert!(ratio <= 1.0 + 1e-12 && ratio >= 0.125, "ratio {ratio}");
            // exact bookkeeping: covered + bad = 1
            assert_eq!(
                &p.covered_exact + &p.bad_measure_exact,
                BigRational::one()
            );
            // every sampled atom is good for its own direction
            for a in &p.atoms {
                let stage = p
                    .stages
                    .iter()
                    .find(|s| s.direction == a.j)
                    .expect("atom direction matches a stage");
                assert!(good_interval_test(a, stage.level, &p.theta, &spec.fv).good);
            }
            assert!(!p.atoms.is_empty());
        }
    }

    #[test]
    fn partition_infeasible_for_small_t() {
        let spec = exact_spec();
        assert!(matches!(
            build_partition(2.0, 0.01, 0.05, &spec, 10, 1),
            Err(Error::InfeasibleMargin { .. })
        ));
    }

    #[test]
    fn claim_decomposition_on_exact_box() {
        // exact profile level 1: ||2 alpha_1|| ~ 5e-10, so all 81 translates
        // at T = 4 stay good
        let fv = exact_level1_profile().unwrap();
        let bx = FlowBox::canonical(&fv, 1, 4.0).unwrap();
        assert!(claim_good_decomposition_check(&bx, 4.0, &fv).unwrap());
        // T = 0 reduces to the good-interval test of J itself
        assert!(claim_good_decomposition_check(&bx, 0.0, &fv).unwrap());
        // widening J until its 1-fiber hits a band breaks the claim
        let mut wide = bx.clone();
        wide.intervals[0].1 = rat(1, 2);
        assert!(!claim_good_decomposition_check(&wide, 4.0, &fv).unwrap());
        // the relaxed level-2 box works too: ||11 alpha_1|| ~ 1e-6
        let rfv = relaxed_default_profile().unwrap();
        let bx2 = FlowBox::canonical(&rfv, 2, 4.0).unwrap();
        assert!(claim_good_decomposition_check(&bx2, 4.0, &rfv).unwrap());
    }
}
