//! The special flow T^t over R_alpha under the ceiling function.
//!
//! Points are (x, s) with x in T^4 (exact rationals) and 0 <= s < phi(x).
//! The flow moves straight up the fiber and drops to (x + alpha, 0) at
//! height phi(x); after N full returns,
//!
//!   T^t(x, s) = (x + N alpha, t + s - S_N phi(x)),
//!
//! where N = N(x, s, t) is pinned down by 0 <= t+s - S_N phi <= phi(x + N a).
//! The base coordinates stay exact rationals; the fiber tolerates f64.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::arithmetic::FrequencyVector;
use crate::ceiling::{birkhoff_closed, eval_phi, shift_point, CeilingSpec};
use crate::error::{Error, Result};
use crate::xrat;

/// A point of the suspension space M.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowPoint {
    pub x: [BigRational; 4],
    pub s: f64,
}

impl FlowPoint {
    pub fn new(x: [BigRational; 4], s: f64, spec: &CeilingSpec) -> Result<Self> {
        let x: [BigRational; 4] = std::array::from_fn(|i| xrat::frac(&x[i]));
        let h = eval_phi(&x, spec);
        if !(0.0..h).contains(&s) {
            return Err(Error::InvalidInput(format!(
                "fiber coordinate {s} outside [0, phi = {h})"
            )));
        }
        Ok(FlowPoint { x, s })
    }

    pub fn base_zero(spec: &CeilingSpec) -> Self {
        let _ = spec;
        FlowPoint {
            x: std::array::from_fn(|_| BigRational::zero()),
            s: 0.0,
        }
    }
}

/// Hitting count with a tie flag: at an exact section crossing the point is
/// assigned to the lower fiber level (s' = 0), and the tie is flagged.
#[derive(Debug, Clone, Copy)]
pub struct HitCount {
    pub n: i64,
    pub tie: bool,
}

/// The unique N with S_N phi(x) <= t+s < S_{N+1} phi(x); bracketed search
/// seeded at round(t+s) using the closed-form sums.
pub fn hit_count(x: &[BigRational; 4], s: f64, t: f64, spec: &CeilingSpec) -> Result<HitCount> {
    let u = t + s;
    let sum = |n: i64| birkhoff_closed(x, n, spec);
    // Bracket [lo, hi] with S_lo <= u < S_hi, expanding geometrically from
    // the seed; phi has mean 1 so round(u) is a good start.
    let mut lo = u.round() as i64;
    let mut step = 1i64;
    while sum(lo)? > u {
        lo -= step;
        step = step.saturating_mul(2);
    }
    let mut hi = lo + 1;
    step = 1;
    while sum(hi)? <= u {
        hi += step;
        step = step.saturating_mul(2);
    }
    // Binary search: invariant S_lo <= u < S_hi.
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if sum(mid)? <= u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Verify against the two neighboring sums.
    let s_lo = sum(lo)?;
    let s_hi = sum(lo + 1)?;
    debug_assert!(s_lo <= u && u < s_hi);
    let tie = s_lo == u && u != 0.0 || s_hi == u;
    Ok(HitCount { n: lo, tie })
}

/// T^t(p) = (x + N alpha, t + s - S_N phi(x)).
pub fn flow_map(p: &FlowPoint, t: f64, spec: &CeilingSpec) -> Result<FlowPoint> {
    let hc = hit_count(&p.x, p.s, t, spec)?;
    let x = shift_point(&p.x, hc.n, &spec.fv);
    let mut s = (t + p.s) - birkhoff_closed(&p.x, hc.n, spec)?;
    // Guard the half-open fiber range against f64 drift at crossings.
    let h = eval_phi(&x, spec);
    if s < 0.0 {
        debug_assert!(s > -1e-9, "fiber drift {s}");
        s = 0.0;
    }
    if s >= h {
        debug_assert!(s - h < 1e-9, "fiber drift {} above {}", s, h);
        s = h * (1.0 - 1e-15);
    }
    Ok(FlowPoint { x, s })
}

/// Membership in M_zeta = { (x,s) : 0 <= s <= phi(x) - zeta }.
#[derive(Debug, Clone, Copy)]
pub struct MzetaCheck {
    pub member: bool,
    /// Set when zeta is at least the certified minimum of phi, so the test
    /// is false for every point.
    pub vacuous: bool,
}

pub fn in_m_zeta(p: &FlowPoint, zeta: f64, spec: &CeilingSpec) -> MzetaCheck {
    let vacuous = zeta >= spec.phi_min_lower();
    let member = p.s >= 0.0 && p.s <= eval_phi(&p.x, spec) - zeta;
    MzetaCheck { member, vacuous }
}

/// A flow box over a multi-interval base J, embedded by (x, t) -> T^t(x, 0).
#[derive(Debug, Clone)]
pub struct FlowBox {
    /// Closed base intervals [lo_j, hi_j], exact.
    pub intervals: [(BigRational, BigRational); 4],
    /// Half-width T of the time range (-T, T).
    pub half_width: f64,
    /// Certified lower bound on the self-disjointness time.
    pub tj_lower: f64,
    /// Canonical level when the box is J_n = prod [1/(8q), 1/(4q)].
    pub canonical_level: Option<usize>,
}

impl FlowBox {
    /// Canonical box J_n = prod_j [1/(8 q_n^(j)), 1/(4 q_n^(j))].
    pub fn canonical(fv: &FrequencyVector, n: usize, half_width: f64) -> Result<FlowBox> {
        let mut intervals: [(BigRational, BigRational); 4] =
            std::array::from_fn(|_| (BigRational::zero(), BigRational::zero()));
        for j in 1..=4 {
            let q = fv
                .q(j, n)
                .ok_or_else(|| Error::InsufficientDepth(format!("no level {n} direction {j}")))?;
            intervals[j - 1] = (
                BigRational::new(BigInt::one(), 8 * q.clone()),
                BigRational::new(BigInt::one(), 4 * q.clone()),
            );
        }
        let bound = return_time_lower_bound_q(fv, n)?;
        let tj = xrat::bigint_to_f64(&bound);
        if !(half_width <= tj) {
            return Err(Error::InvalidInput(format!(
                "half-width {half_width} exceeds the certified return bound {tj}"
            )));
        }
        Ok(FlowBox {
            intervals,
            half_width,
            tj_lower: tj,
            canonical_level: Some(n),
        })
    }

    pub fn width(&self, j: usize) -> BigRational {
        &self.intervals[j - 1].1 - &self.intervals[j - 1].0
    }

    /// Base measure lambda_4(J), exact.
    pub fn base_measure(&self) -> BigRational {
        (1..=4).map(|j| self.width(j)).product()
    }

    pub fn contains_base(&self, x: &[BigRational; 4]) -> bool {
        (0..4).all(|i| {
            let f = xrat::frac(&x[i]);
            f >= self.intervals[i].0 && f <= self.intervals[i].1
        })
    }
}

/// The paper-form lower bound T_J >= q_n^(1) q_n^(2) q_n^(3) q_n^(4) for the
/// canonical box at level n.
pub fn return_time_lower_bound_q(fv: &FrequencyVector, n: usize) -> Result<BigInt> {
    let mut prod = BigInt::one();
    for j in 1..=4 {
        let q = fv
            .q(j, n)
            .ok_or_else(|| Error::InsufficientDepth(format!("no level {n} direction {j}")))?;
        prod *= q;
    }
    Ok(prod)
}

/// Same bound, taking the multi-interval itself and checking it has the
/// canonical shape for some stored level.
pub fn return_time_lower_bound(
    intervals: &[(BigRational, BigRational); 4],
    fv: &FrequencyVector,
) -> Result<BigInt> {
    let max_level = (1..=4).map(|j| fv.levels(j)).max().unwrap();
    'levels: for n in 1..=max_level {
        for j in 1..=4 {
            let q = match fv.q(j, n) {
                Some(q) => q.clone(),
                None => continue 'levels,
            };
            let lo = BigRational::new(BigInt::one(), 8 * q.clone());
            let hi = BigRational::new(BigInt::one(), 4 * q);
            if intervals[j - 1].0 != lo || intervals[j - 1].1 != hi {
                continue 'levels;
            }
        }
        return return_time_lower_bound_q(fv, n);
    }
    Err(Error::UnsupportedShape(
        "box is not of the canonical form [1/(8q), 1/(4q)]^4 for any stored level".into(),
    ))
}

/// Exhaustive base-return check: R_alpha^k(J) and J are disjoint for every
/// 0 < k < min(k_max, bound), by exact rational interval arithmetic.
pub fn base_return_disjoint_upto(
    intervals: &[(BigRational, BigRational); 4],
    fv: &FrequencyVector,
    k_max: u64,
) -> Option<u64> {
    for k in 1..k_max {
        let kk = BigRational::from(BigInt::from(k));
        let mut overlap_all = true;
        for j in 1..=4 {
            let shift = xrat::dist_to_int(&(&kk * fv.stand_in(j)));
            let width = &intervals[j - 1].1 - &intervals[j - 1].0;
            // translated interval overlaps the original iff ||k alpha|| < width
            if shift >= width {
                overlap_all = false;
                break;
            }
        }
        if overlap_all {
            return Some(k);
        }
    }
    None
}

/// Configuration of the conservative grid in `stay_in_zeta_times`.
#[derive(Debug, Clone, Copy)]
pub struct ZetaGrid {
    /// Samples per base direction.
    pub per_direction: usize,
    /// Time steps per unit of flow time.
    pub steps_per_unit: usize,
}

impl Default for ZetaGrid {
    fn default() -> Self {
        ZetaGrid {
            per_direction: 16,
            steps_per_unit: 64,
        }
    }
}

/// Inner estimate of S^T_zeta(J) = { t in (-T,T) : T^t(J,0) stays in M_zeta }.
///
/// For each grid sample x of J the excluded times are the union of
/// (tau_c - zeta, tau_c) over the section-crossing times tau_c = S_c phi(x);
/// the samples' exclusions are merged and every surviving interval is shrunk
/// by one time step.
pub fn stay_in_zeta_times(
    bx: &FlowBox,
    t_half: f64,
    zeta: f64,
    grid: &ZetaGrid,
    spec: &CeilingSpec,
) -> Result<Vec<(f64, f64)>> {
    if !(t_half <= bx.tj_lower) {
        return Err(Error::InvalidInput(format!(
            "T = {t_half} exceeds the certified return bound {}",
            bx.tj_lower
        )));
    }
    let g = grid.per_direction.max(2);
    let mut excluded: Vec<(f64, f64)> = Vec::new();
    let k_max = (t_half / spec.phi_min_lower()).ceil() as i64 + 2;
    // Product grid over the base intervals.
    let mut idx = [0usize; 4];
    loop {
        let x: [BigRational; 4] = std::array::from_fn(|i| {
            let (lo, hi) = &bx.intervals[i];
            let w = hi - lo;
            lo + w * xrat::rat(idx[i] as i64, (g - 1) as i64)
        });
        for c in (-k_max + 1)..=k_max {
            let tau = birkhoff_closed(&x, c, spec)?;
            if tau - zeta < t_half && tau > -t_half {
                excluded.push((tau - zeta, tau));
            }
        }
        // advance the mixed-radix counter
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < g {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == 4 {
                break;
            }
        }
        if d == 4 {
            break;
        }
    }
    excluded.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for e in excluded {
        match merged.last_mut() {
            Some(last) if e.0 <= last.1 => last.1 = last.1.max(e.1),
            _ => merged.push(e),
        }
    }
    // Complement within (-T, T), then shrink by one grid step.
    let h = 1.0 / grid.steps_per_unit as f64;
    let mut safe = Vec::new();
    let mut cursor = -t_half;
    for (a, b) in merged.iter() {
        if *a > cursor {
            safe.push((cursor, *a));
        }
        cursor = cursor.max(*b);
    }
    if cursor < t_half {
        safe.push((cursor, t_half));
    }
    Ok(safe
        .into_iter()
        .filter_map(|(a, b)| {
            let (a, b) = (a + h, b - h);
            if a < b {
                Some((a, b))
            } else {
                None
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arithmetic::{exact_level1_profile, relaxed_default_profile};
    use crate::xrat::rat;
    use std::sync::Arc;

    fn relaxed_spec() -> CeilingSpec {
        CeilingSpec::full(Arc::new(relaxed_default_profile().unwrap())).unwrap()
    }

    fn exact_spec() -> CeilingSpec {
        CeilingSpec::full(Arc::new(exact_level1_profile().unwrap())).unwrap()
    }

    fn pt(spec: &CeilingSpec, v: [(i64, i64); 4], s: f64) -> FlowPoint {
        FlowPoint::new(std::array::from_fn(|i| rat(v[i].0, v[i].1)), s, spec).unwrap()
    }

    #[test]
    fn hit_count_trivial() {
        let spec = relaxed_spec();
        let x: [BigRational; 4] = std::array::from_fn(|_| BigRational::zero());
        let hc = hit_count(&x, 0.0, 0.0, &spec).unwrap();
        assert_eq!(hc.n, 0);
        // t = phi(x): exactly one full return, assigned to the lower level
        let h = eval_phi(&x, &spec);
        let hc = hit_count(&x, 0.0, h, &spec).unwrap();
        assert_eq!(hc.n, 1);
        assert!(hc.tie);
    }

    #[test]
    fn hit_count_matches_incremental_oracle() {
        let spec = relaxed_spec();
        let p = pt(&spec, [(1, 7), (2, 11), (3, 13), (5, 17)], 0.3);
        for t in [1.0, 17.5, 200.0, 3000.0] {
            let hc = hit_count(&p.x, p.s, t, &spec).unwrap();
            // incremental accumulation of phi along the orbit
            let mut acc = 0.0;
            let mut n = 0i64;
            while acc <= t + p.s {
                let y = shift_point(&p.x, n, &spec.fv);
                acc += eval_phi(&y, &spec);
                n += 1;
                if acc > t + p.s {
                    break;
                }
            }
            assert_eq!(hc.n, n - 1, "t={t}");
        }
    }

    #[test]
    fn flow_identity_and_inverse() {
        let spec = relaxed_spec();
        let p = pt(&spec, [(1, 7), (2, 11), (3, 13), (5, 17)], 0.25);
        let q = flow_map(&p, 0.0, &spec).unwrap();
        assert_eq!(q.x, p.x);
        assert_eq!(q.s, p.s);
        for t in [0.7, 13.0, 997.3] {
            let fwd = flow_map(&p, t, &spec).unwrap();
            let back = flow_map(&fwd, -t, &spec).unwrap();
            assert_eq!(back.x, p.x, "base must return exactly at t={t}");
            assert!((back.s - p.s).abs() < 1e-10, "fiber at t={t}");
        }
    }

    #[test]
    fn flow_group_law() {
        let spec = exact_spec();
        let p = pt(&spec, [(3, 17), (5, 19), (7, 23), (11, 29)], 0.4);
        for (t, u) in [(3.4, 8.9), (120.0, -55.5), (-77.0, 500.1)] {
            let a = flow_map(&p, t + u, &spec).unwrap();
            let b = flow_map(&flow_map(&p, u, &spec).unwrap(), t, &spec).unwrap();
            assert_eq!(a.x, b.x);
            assert!((a.s - b.s).abs() < 1e-9, "t={t} u={u}: {} vs {}", a.s, b.s);
        }
    }

    #[test]
    fn m_zeta_membership() {
        let spec = relaxed_spec();
        let p = pt(&spec, [(1, 7), (2, 11), (3, 13), (5, 17)], 0.0);
        let r = in_m_zeta(&p, 0.3, &spec);
        assert!(r.member && !r.vacuous);
        let h = eval_phi(&p.x, &spec);
        let top = FlowPoint {
            x: p.x.clone(),
            s: h - 0.15,
        };
        assert!(!in_m_zeta(&top, 0.3, &spec).member);
        // boundary s = phi - zeta is inside (closed inequality)
        let edge = FlowPoint {
            x: p.x.clone(),
            s: h - 0.3,
        };
        assert!(in_m_zeta(&edge, 0.3, &spec).member);
        // vacuous once zeta >= certified min
        assert!(in_m_zeta(&p, 0.95, &spec).vacuous);
    }

    #[test]
    fn return_bound_products() {
        let fv = relaxed_default_profile().unwrap();
        let b1 = return_time_lower_bound_q(&fv, 1).unwrap();
        assert_eq!(b1, BigInt::from(2 * 3 * 5 * 7));
        let bx = FlowBox::canonical(&fv, 1, 1.0).unwrap();
        assert_eq!(return_time_lower_bound(&bx.intervals, &fv).unwrap(), b1);
        // non-canonical shape is rejected
        let mut weird = bx.intervals.clone();
        weird[0].1 = rat(1, 3);
        assert!(matches!(
            return_time_lower_bound(&weird, &fv),
            Err(Error::UnsupportedShape(_))
        ));
    }

    #[test]
    fn base_return_stays_disjoint_below_bound() {
        let fv = relaxed_default_profile().unwrap();
        let bx = FlowBox::canonical(&fv, 1, 1.0).unwrap();
        assert_eq!(base_return_disjoint_upto(&bx.intervals, &fv, 210), None);
    }

    #[test]
    fn stay_in_zeta_structure() {
        let spec = relaxed_spec();
        let fv = &spec.fv;
        let bx = FlowBox::canonical(fv, 1, 2.0).unwrap();
        let grid = ZetaGrid {
            per_direction: 4,
            steps_per_unit: 64,
        };
        let safe = stay_in_zeta_times(&bx, 2.0, 0.05, &grid, &spec).unwrap();
        assert!(!safe.is_empty());
        // t = 0 lies in a safe component, and every crossing sliver is gone:
        // no safe time within (k - zeta, k)-style windows around tau ~ 1
        let contains = |t: f64| safe.iter().any(|&(a, b)| a <= t && t <= b);
        assert!(contains(0.3));
        assert!(!contains(-0.01)); // just below a crossing: within zeta of the ceiling
    }
}
