//! Flow-box observables and correlation estimation.
//!
//! Observables live on a flow box F(x, t) = T^t(x, 0) over a multi-interval
//! J: g(F(x,t)) = chi_J(x) psi(t) with int_J chi^2 = 1, psi an even temporal
//! bump vanishing outside the certified stay-in-M_zeta time set. The
//! coboundary class evaluates chi_J(x) psi'(t) and keeps psi as its transfer
//! function.
//!
//! Correlations <f o T^t, g> are estimated by quasi-Monte Carlo over the box
//! chart of g (the chart is measure preserving onto its range, so no
//! rejection against phi is needed). The base dynamics runs on an exact
//! per-direction integer lattice: alpha steps, box membership and series
//! phases are integer operations, with f64 only in the final trigonometric
//! evaluations. Shards carry independently scrambled Halton points; the
//! error bar is the spread of the shard means.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;

use crate::bump::{gl_integrate, MirroredBump, PolyBump};
use crate::ceiling::{birkhoff_closed, birkhoff_closed_partial, mulmod, CeilingSpec};
use crate::error::{Error, Result};
use crate::flow::{hit_count, stay_in_zeta_times, FlowBox, ZetaGrid};
use crate::qmc::ScrambledHalton;
use crate::stretch::{stretch_quantities, DirectedInterval};
use crate::xrat::{self, cos2pi, rat_to_f64, sin2pi};

/// Coboundary observables evaluate chi psi' (class F); plain ones chi psi
/// (class G).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ObsClass {
    Coboundary,
    Plain,
}

/// Product transverse bump chi_J = prod_j b_j with int_J chi^2 = 1.
#[derive(Debug, Clone)]
pub struct ChiProduct {
    pub factors: [PolyBump; 4],
}

impl ChiProduct {
    /// Even product; `odd_dir` switches one factor to the odd bump, giving a
    /// pairwise-orthogonal family.
    pub fn normalized(bx: &FlowBox, k: u32, odd_dir: Option<usize>) -> ChiProduct {
        let factors: [PolyBump; 4] = std::array::from_fn(|i| {
            let lo = rat_to_f64(&bx.intervals[i].0);
            let hi = rat_to_f64(&bx.intervals[i].1);
            if odd_dir == Some(i + 1) {
                PolyBump::l2_normalized_odd(lo, hi, k)
            } else {
                PolyBump::l2_normalized(lo, hi, k)
            }
        });
        ChiProduct { factors }
    }

    pub fn value(&self, x: &[f64; 4]) -> f64 {
        self.factors
            .iter()
            .zip(x)
            .map(|(b, &v)| b.value(v))
            .product()
    }

    pub fn sup(&self) -> f64 {
        self.factors.iter().map(|b| b.sup()).product()
    }

    /// sup of |d_j chi| over the box.
    pub fn deriv_sup(&self, j: usize) -> f64 {
        self.factors
            .iter()
            .enumerate()
            .map(|(i, b)| if i + 1 == j { b.deriv_sup() } else { b.sup() })
            .product()
    }
}

/// A function supported on the tower of a flow box.
#[derive(Debug, Clone)]
pub struct FlowBoxObservable {
    pub bx: FlowBox,
    pub chi: ChiProduct,
    pub psi: MirroredBump,
    pub class: ObsClass,
    pub zeta: f64,
    /// C^1 bound of psi (the class constant).
    pub c1_bound: f64,
}

impl FlowBoxObservable {
    /// Temporal factor of the observable itself.
    pub fn temporal(&self, tau: f64) -> f64 {
        match self.class {
            ObsClass::Coboundary => self.psi.deriv(tau),
            ObsClass::Plain => self.psi.value(tau),
        }
    }

    /// sup |temporal factor|.
    pub fn temporal_sup(&self) -> f64 {
        match self.class {
            ObsClass::Coboundary => self.psi.inner.deriv_sup(),
            ObsClass::Plain => self.psi.c0(),
        }
    }

    pub fn sup(&self) -> f64 {
        self.chi.sup() * self.temporal_sup()
    }
}

#[derive(Debug, Clone)]
pub struct ShapeParams {
    /// Polynomial order of every bump.
    pub k: u32,
    /// Odd chi factor direction for orthogonal pairs (1..=4), or None.
    pub odd_dir: Option<usize>,
    /// Temporal support [a, b] of the mirrored bump; None picks the widest
    /// certified span automatically.
    pub psi_span: Option<(f64, f64)>,
}

impl Default for ShapeParams {
    fn default() -> Self {
        ShapeParams {
            k: 4,
            odd_dir: None,
            psi_span: None,
        }
    }
}

/// Build an observable on a flow box, verifying the temporal support sits
/// inside the certified stay-in-M_zeta set (mirrored on both sides).
pub fn make_observable(
    bx: &FlowBox,
    shape: &ShapeParams,
    class: ObsClass,
    zeta: f64,
    spec: &CeilingSpec,
) -> Result<FlowBoxObservable> {
    let t_half = bx.half_width;
    let safe = stay_in_zeta_times(bx, t_half, zeta, &ZetaGrid::default(), spec)?;
    let inside = |a: f64, b: f64| safe.iter().any(|&(lo, hi)| lo <= a && b <= hi);
    let span = match shape.psi_span {
        Some((a, b)) => {
            if !(0.0 < a && a < b && b < t_half) {
                return Err(Error::SupportViolation(format!(
                    "psi span ({a}, {b}) not inside (0, T = {t_half})"
                )));
            }
            if !inside(a, b) || !inside(-b, -a) {
                return Err(Error::SupportViolation(format!(
                    "psi span ({a}, {b}) escapes the certified stay-in-M_zeta set"
                )));
            }
            (a, b)
        }
        None => {
            // widest symmetric span: intersect each positive component with
            // the mirror of the negative ones and take the longest result
            let mut best: Option<(f64, f64)> = None;
            for &(lo, hi) in &safe {
                if hi <= 0.0 {
                    continue;
                }
                for &(nlo, nhi) in &safe {
                    if nlo >= 0.0 {
                        continue;
                    }
                    let a = lo.max(-nhi).max(1e-6);
                    let b = hi.min(-nlo);
                    if b > a && best.map_or(true, |(ba, bb)| b - a > bb - ba) {
                        best = Some((a, b));
                    }
                }
            }
            let (a, b) = best.ok_or_else(|| {
                Error::SupportViolation(
                    "no symmetric component of the stay-in-M_zeta set".into(),
                )
            })?;
            let m = 0.02 * (b - a);
            (a + m, b - m)
        }
    };
    let psi = MirroredBump::new(span.0, span.1, shape.k, 1.0);
    let chi = ChiProduct::normalized(bx, shape.k, shape.odd_dir);
    let c1_bound = psi.c1();
    Ok(FlowBoxObservable {
        bx: bx.clone(),
        chi,
        psi,
        class,
        zeta,
        c1_bound,
    })
}

/// Box coordinates of a generic point (x, s) of M: the unique (x', tau) with
/// x' in J, |tau| < T and T^tau(x', 0) = (x, s); None when outside the tower.
pub fn box_coords(
    x: &[BigRational; 4],
    s: f64,
    bx: &FlowBox,
    spec: &CeilingSpec,
) -> Result<Option<([BigRational; 4], f64)>> {
    let k_max = (bx.half_width / spec.phi_min_lower()).ceil() as i64 + 2;
    for k in -k_max..=k_max {
        let xp = crate::ceiling::shift_point(x, -k, &spec.fv);
        if bx.contains_base(&xp) {
            let tau = birkhoff_closed(&xp, k, spec)? + s;
            if tau.abs() < bx.half_width {
                return Ok(Some((xp, tau)));
            }
        }
    }
    Ok(None)
}

/// Observable value at a generic point of M.
pub fn eval_observable(
    obs: &FlowBoxObservable,
    x: &[BigRational; 4],
    s: f64,
    spec: &CeilingSpec,
) -> Result<f64> {
    match box_coords(x, s, &obs.bx, spec)? {
        None => Ok(0.0),
        Some((xp, tau)) => {
            let xf: [f64; 4] = std::array::from_fn(|i| rat_to_f64(&xp[i]));
            Ok(obs.chi.value(&xf) * obs.temporal(tau))
        }
    }
}

/// Transfer function of a coboundary observable at a generic point.
pub fn eval_transfer(
    obs: &FlowBoxObservable,
    x: &[BigRational; 4],
    s: f64,
    spec: &CeilingSpec,
) -> Result<f64> {
    debug_assert_eq!(obs.class, ObsClass::Coboundary);
    match box_coords(x, s, &obs.bx, spec)? {
        None => Ok(0.0),
        Some((xp, tau)) => {
            let xf: [f64; 4] = std::array::from_fn(|i| rat_to_f64(&xp[i]));
            Ok(obs.chi.value(&xf) * obs.psi.value(tau))
        }
    }
}

/// The norm pair of the decay estimate: N_0 = ||psi_f||_0 ||g||_0 and
/// N_1(f,g,j) = (||f||_0 + ||psi_f||_0) ||g||_{1,j}
///            + (||f||_{1,j} + ||psi_f||_{1,j}) ||g||_0,
/// with ||h||_{1,j} = ||h||_0 + ||d_j h||_0. Sups are taken on dense grids
/// over the supports.
pub fn norms(f: &FlowBoxObservable, g: &FlowBoxObservable, j: usize) -> (f64, f64) {
    let grid_sup = |b: &PolyBump, d: bool| -> f64 {
        let mut m = 0.0f64;
        for i in 0..=2048 {
            let x = b.lo + (b.hi - b.lo) * i as f64 / 2048.0;
            let v = if d { b.deriv(x) } else { b.value(x) };
            m = m.max(v.abs());
        }
        m
    };
    let chi_sup = |c: &ChiProduct| -> f64 { c.factors.iter().map(|b| grid_sup(b, false)).product() };
    let chi_dsup = |c: &ChiProduct, j: usize| -> f64 {
        c.factors
            .iter()
            .enumerate()
            .map(|(i, b)| grid_sup(b, i + 1 == j))
            .product()
    };
    let psi_grid_sup = |p: &MirroredBump, d: bool| -> f64 {
        let mut m = 0.0f64;
        let (lo, hi) = p.support();
        for i in 0..=4096 {
            let t = lo + (hi - lo) * i as f64 / 4096.0;
            let v = if d { p.deriv(t) } else { p.value(t) };
            m = m.max(v.abs());
        }
        m
    };
    let f_sup = chi_sup(&f.chi)
        * match f.class {
            ObsClass::Coboundary => psi_grid_sup(&f.psi, true),
            ObsClass::Plain => psi_grid_sup(&f.psi, false),
        };
    let f_dsup = chi_dsup(&f.chi, j)
        * match f.class {
            ObsClass::Coboundary => psi_grid_sup(&f.psi, true),
            ObsClass::Plain => psi_grid_sup(&f.psi, false),
        };
    let transfer_sup = chi_sup(&f.chi) * psi_grid_sup(&f.psi, false);
    let transfer_dsup = chi_dsup(&f.chi, j) * psi_grid_sup(&f.psi, false);
    let g_sup = chi_sup(&g.chi)
        * match g.class {
            ObsClass::Coboundary => psi_grid_sup(&g.psi, true),
            ObsClass::Plain => psi_grid_sup(&g.psi, false),
        };
    let g_dsup = chi_dsup(&g.chi, j)
        * match g.class {
            ObsClass::Coboundary => psi_grid_sup(&g.psi, true),
            ObsClass::Plain => psi_grid_sup(&g.psi, false),
        };
    let n0 = transfer_sup * g_sup;
    let g_1j = g_sup + g_dsup;
    let f_1j = f_sup + f_dsup;
    let t_1j = transfer_sup + transfer_dsup;
    let n1j = (f_sup + transfer_sup) * g_1j + (f_1j + t_1j) * g_sup;
    (n0, n1j)
}

pub fn norms_max(f: &FlowBoxObservable, g: &FlowBoxObservable) -> (f64, f64) {
    let mut n0 = 0.0;
    let mut n1 = 0.0f64;
    for j in 1..=4 {
        let (a, b) = norms(f, g, j);
        n0 = a;
        n1 = n1.max(b);
    }
    (n0, n1)
}

/// Exact integer-lattice model of the base dynamics: coordinate j lives on
/// Z / L_j with L_j = q_N^(j) 2^e, so the alpha step and the box bounds are
/// exact lattice points.
struct LatticeEngine {
    modulus: [u64; 4],
    step: [u64; 4],
    terms: Vec<LatTerm>,
}

struct LatTerm {
    dim: usize, // 0-based direction
    q: u64,
    amp: f64,
    dnum: u64,
    dden: u64,
    /// sin(pi ||delta||), precomputed
    sin1: f64,
    /// {delta} as f64
    th1: f64,
}

impl LatticeEngine {
    fn build(spec: &CeilingSpec) -> Result<LatticeEngine> {
        let mut modulus = [0u64; 4];
        let mut step = [0u64; 4];
        for j in 1..=4 {
            let alpha = spec.fv.stand_in(j);
            let qn = alpha
                .denom()
                .to_u64()
                .ok_or_else(|| Error::ResourceLimit {
                    level: spec.fv.levels(j),
                    direction: j,
                    detail: "stand-in denominator exceeds the lattice range; \
                             correlation estimation needs a relaxed profile"
                        .into(),
                })?;
            let pn = alpha.numer().to_u64().unwrap();
            let e = 62u32.saturating_sub(64 - qn.leading_zeros());
            modulus[j - 1] = qn << e;
            step[j - 1] = pn << e;
        }
        let mut terms = Vec::new();
        for t in spec.active_terms() {
            let q = t.freq.to_u64().expect("active frequencies are small");
            let (dnum, dden) = t.delta_u.expect("lattice profile has u64 deltas");
            let th1 = dnum as f64 / dden as f64;
            let w1 = dnum.min(dden - dnum) as f64 / dden as f64;
            terms.push(LatTerm {
                dim: t.j - 1,
                q,
                amp: t.amp,
                dnum,
                dden,
                sin1: (std::f64::consts::PI * w1).sin(),
                th1,
            });
        }
        Ok(LatticeEngine { modulus, step, terms })
    }

    #[inline]
    fn advance(&self, v: &mut [u64; 4]) {
        for i in 0..4 {
            v[i] += self.step[i];
            if v[i] >= self.modulus[i] {
                v[i] -= self.modulus[i];
            }
        }
    }

    #[inline]
    fn retreat(&self, v: &mut [u64; 4]) {
        for i in 0..4 {
            if v[i] < self.step[i] {
                v[i] += self.modulus[i];
            }
            v[i] -= self.step[i];
        }
    }

    fn shifted(&self, v: &[u64; 4], k: i64) -> [u64; 4] {
        let mut out = [0u64; 4];
        for i in 0..4 {
            let m = self.modulus[i] as u128;
            let s = (self.step[i] as u128 * (k.rem_euclid(self.modulus[i] as i64)) as u128) % m;
            out[i] = ((v[i] as u128 + s) % m) as u64;
        }
        out
    }

    /// Closed-form S_m phi at a lattice point.
    fn birkhoff(&self, v: &[u64; 4], m: i64) -> f64 {
        if m == 0 {
            return 0.0;
        }
        if m < 0 {
            let shifted = self.shifted(v, m);
            return -self.birkhoff(&shifted, -m);
        }
        let mu = m as u64;
        let mut acc = m as f64;
        for t in &self.terms {
            // X(m) from exact fractional parts
            let rm = mulmod(mu, t.dnum, t.dden);
            let wm = rm.min(t.dden - rm) as f64 / t.dden as f64;
            let thm = rm as f64 / t.dden as f64;
            let mag = (std::f64::consts::PI * wm).sin() / t.sin1;
            let ang = std::f64::consts::PI * (thm - t.th1);
            // phase {q x}
            let ph = mulmod(t.q, v[t.dim], self.modulus[t.dim]) as f64
                / self.modulus[t.dim] as f64;
            let total = ang / std::f64::consts::TAU + ph;
            acc += t.amp * mag * cos2pi(total);
        }
        acc
    }

    /// N with S_N <= u < S_{N+1}.
    fn hit(&self, v: &[u64; 4], u: f64) -> i64 {
        let mut lo = u.round() as i64;
        let mut stepw = 1i64;
        while self.birkhoff(v, lo) > u {
            lo -= stepw;
            stepw = stepw.saturating_mul(2);
        }
        let mut hi = lo + 1;
        stepw = 1;
        while self.birkhoff(v, hi) <= u {
            hi += stepw;
            stepw = stepw.saturating_mul(2);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.birkhoff(v, mid) <= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Lattice bounds of a box interval: the inclusive range of lattice points
/// inside [lo, hi].
fn lattice_bounds(bx: &FlowBox, eng: &LatticeEngine) -> ([u64; 4], [u64; 4]) {
    let mut lo = [0u64; 4];
    let mut count = [0u64; 4];
    for i in 0..4 {
        let m = BigRational::from(BigInt::from(eng.modulus[i]));
        let a = (&bx.intervals[i].0 * &m).ceil().to_integer().to_u64().unwrap();
        let b = (&bx.intervals[i].1 * &m).floor().to_integer().to_u64().unwrap();
        lo[i] = a;
        count[i] = b - a + 1;
    }
    (lo, count)
}

#[inline]
fn in_range(v: u64, lo: u64, count: u64) -> bool {
    v.wrapping_sub(lo) < count
}

/// Monte Carlo correlation estimate <f o T^t, g> with its standard error.
/// Sampling is quasi-random over g's box chart, sharded; identical seeds
/// give bit-identical results.
pub fn correlation(
    f: &FlowBoxObservable,
    g: &FlowBoxObservable,
    t: f64,
    samples: u64,
    seed: u64,
    spec: &CeilingSpec,
) -> Result<(f64, f64)> {
    if samples == 0 {
        return Err(Error::InvalidInput("zero samples".into()));
    }
    let eng = Arc::new(LatticeEngine::build(spec)?);
    let (g_lo, g_count) = lattice_bounds(&g.bx, &eng);
    let (f_lo, f_count) = lattice_bounds(&f.bx, &eng);
    let t_g = g.bx.half_width;
    let t_f = f.bx.half_width;

    const SHARDS: u64 = 64;
    let per_shard = samples.div_ceil(SHARDS);
    // chart volume: 2T * lattice measure of J_g
    let lam: f64 = (0..4)
        .map(|i| g_count[i] as f64 / eng.modulus[i] as f64)
        .product();
    let vol = 2.0 * t_g * lam;

    let chi_g = &g.chi;
    let chi_f = &f.chi;
    let shard_means: Vec<f64> = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let h = ScrambledHalton::new(5, seed, shard);
            let mut acc = 0.0;
            for i in 0..per_shard {
                let u5: [f64; 5] = h.point(i);
                let mut v = [0u64; 4];
                let mut xf = [0.0f64; 4];
                for d in 0..4 {
                    let off = ((u5[d] * g_count[d] as f64) as u64).min(g_count[d] - 1);
                    v[d] = g_lo[d] + off;
                    xf[d] = v[d] as f64 / eng.modulus[d] as f64;
                }
                let sigma = -t_g + 2.0 * t_g * u5[4];
                let gval = chi_g.value(&xf) * g.temporal(sigma);
                if gval == 0.0 {
                    continue;
                }
                let u_t = sigma + t;
                // walk the section indices whose box time falls in (-T_f, T_f)
                let n0 = eng.hit(&v, u_t);
                let mut fval = 0.0;
                // upward: decreasing tau from tau(n0) >= 0
                let mut k = n0;
                let mut vk = eng.shifted(&v, n0);
                loop {
                    let tau = u_t - eng.birkhoff(&v, k);
                    if tau <= -t_f {
                        break;
                    }
                    if tau < t_f && (0..4).all(|d| in_range(vk[d], f_lo[d], f_count[d])) {
                        let xk: [f64; 4] =
                            std::array::from_fn(|d| vk[d] as f64 / eng.modulus[d] as f64);
                        fval += chi_f.value(&xk) * f.temporal(tau);
                    }
                    k += 1;
                    eng.advance(&mut vk);
                }
                // downward: increasing tau
                let mut k = n0 - 1;
                let mut vk = eng.shifted(&v, n0 - 1);
                loop {
                    let tau = u_t - eng.birkhoff(&v, k);
                    if tau >= t_f {
                        break;
                    }
                    if tau > -t_f && (0..4).all(|d| in_range(vk[d], f_lo[d], f_count[d])) {
                        let xk: [f64; 4] =
                            std::array::from_fn(|d| vk[d] as f64 / eng.modulus[d] as f64);
                        fval += chi_f.value(&xk) * f.temporal(tau);
                    }
                    k -= 1;
                    eng.retreat(&mut vk);
                }
                acc += gval * fval;
            }
            acc / per_shard as f64
        })
        .collect();

    let mean: f64 = shard_means.iter().sum::<f64>() / SHARDS as f64;
    let var: f64 = shard_means
        .iter()
        .map(|m| (m - mean) * (m - mean))
        .sum::<f64>()
        / (SHARDS - 1) as f64;
    let value = vol * mean;
    let stderr = vol * (var / SHARDS as f64).sqrt();
    Ok((value, stderr))
}

/// A measured correlation series with error bars.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub sample_count: u64,
    pub seed: u64,
}

/// Decay measurement against the bound C N_1 t^(-1/2-eps).
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub series: CorrelationSeries,
    pub eps: f64,
    pub n1: f64,
    /// Fitted constant: max |v| t^(1/2+eps) / N_1 over uncensored points.
    pub fitted_c: f64,
    pub bound_curve: Vec<f64>,
    /// OLS slope of log|v| against log t, uncensored points only.
    pub slope: Option<f64>,
    /// Indices with |v| <= 3 stderr, excluded from the fit.
    pub censored: Vec<usize>,
    /// Largest ratio between per-decade fitted constants.
    pub c_drift: Option<f64>,
}

/// Measure the correlation on a time grid and fit the decay law.
#[allow(clippy::too_many_arguments)]
pub fn decay_series(
    f: &FlowBoxObservable,
    g: &FlowBoxObservable,
    times: &[f64],
    samples: u64,
    seed: u64,
    eps: f64,
    spec: &CeilingSpec,
) -> Result<DecayReport> {
    let mut values = Vec::with_capacity(times.len());
    let mut stderr = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        let point_seed = seed ^ (i as u64).wrapping_mul(0xD1B54A32D192ED03);
        let (v, e) = correlation(f, g, t, samples, point_seed, spec)?;
        values.push(v);
        stderr.push(e);
    }
    let (_, n1) = norms_max(f, g);
    let mut censored = Vec::new();
    let mut fit_pts = Vec::new();
    let mut cs = Vec::new();
    for i in 0..times.len() {
        if values[i].abs() > 3.0 * stderr[i] && times[i] > 0.0 {
            fit_pts.push((times[i].ln(), values[i].abs().ln()));
            cs.push((times[i], values[i].abs() * times[i].powf(0.5 + eps) / n1));
        } else {
            censored.push(i);
        }
    }
    let fitted_c = cs.iter().map(|&(_, c)| c).fold(0.0f64, f64::max);
    let slope = ols_slope(&fit_pts);
    let bound_curve = times
        .iter()
        .map(|&t| fitted_c * n1 * t.powf(-0.5 - eps))
        .collect();
    // per-decade drift of the fitted constant
    let c_drift = if cs.len() >= 2 {
        let mut per_decade: std::collections::BTreeMap<i64, f64> = Default::default();
        for &(t, c) in &cs {
            let d = t.log10().floor() as i64;
            let e = per_decade.entry(d).or_insert(0.0);
            *e = e.max(c);
        }
        let mx = per_decade.values().cloned().fold(f64::MIN, f64::max);
        let mn = per_decade.values().cloned().fold(f64::MAX, f64::min);
        Some(mx / mn)
    } else {
        None
    };
    Ok(DecayReport {
        series: CorrelationSeries {
            times: times.to_vec(),
            values,
            stderr,
            sample_count: samples,
            seed,
        },
        eps,
        n1,
        fitted_c,
        bound_curve,
        slope,
        censored,
        c_drift,
    })
}

fn ols_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 4 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectralWindow {
    Boxcar,
    Hann,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralDensity {
    pub freqs: Vec<f64>,
    pub density: Vec<f64>,
    /// Mass removed by clipping negative estimates to zero.
    pub clipped_mass: f64,
}

/// Windowed discrete Fourier transform of a correlation series on a uniform
/// symmetric time grid; the density estimate is clipped at zero with the
/// clipped mass reported.
pub fn spectral_density(
    series: &CorrelationSeries,
    window: SpectralWindow,
) -> Result<SpectralDensity> {
    let n = series.times.len();
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidInput(
            "spectral estimation needs an odd-length symmetric grid".into(),
        ));
    }
    let k = n / 2;
    let dt = series.times[1] - series.times[0];
    for i in 1..n {
        if ((series.times[i] - series.times[i - 1]) - dt).abs() > 1e-9 * dt.abs() {
            return Err(Error::InvalidInput("non-uniform time grid".into()));
        }
    }
    for i in 0..n {
        if (series.times[i] + series.times[n - 1 - i]).abs() > 1e-9 * dt.abs() {
            return Err(Error::InvalidInput("time grid not symmetric in t".into()));
        }
    }
    let span = series.times[n - 1] - series.times[0] + dt;
    let dfreq = 1.0 / span;
    let mut freqs = Vec::with_capacity(k + 1);
    let mut density = Vec::with_capacity(k + 1);
    let mut clipped = 0.0;
    for l in 0..=k {
        let theta = l as f64 * dfreq;
        let mut acc = 0.0;
        for (i, &tv) in series.times.iter().enumerate() {
            let w = match window {
                SpectralWindow::Boxcar => 1.0,
                SpectralWindow::Hann => {
                    0.5 * (1.0 + cos2pi(0.5 * (i as f64 - k as f64) / (n as f64)))
                }
            };
            acc += w * series.values[i] * cos2pi(theta * tv);
        }
        let d = acc * dt;
        freqs.push(theta);
        if d < 0.0 {
            clipped += -d * dfreq;
            density.push(0.0);
        } else {
            density.push(d);
        }
    }
    Ok(SpectralDensity {
        freqs,
        density,
        clipped_mass: clipped,
    })
}

/// |hat(psi')(theta)|^2 by direct Fourier quadrature (oracle for the
/// spectral estimator fed with the exact autoconvolution).
pub fn psi_deriv_power_spectrum(psi: &MirroredBump, theta: f64) -> f64 {
    // psi' is odd, so hat(psi')(theta) = -2 i int_0^inf psi'(t) sin(2 pi theta t) dt
    let (a, b) = (psi.inner.lo, psi.inner.hi);
    let im: f64 = gl_panels(a, b, 64, |t| psi.inner.deriv(t) * sin2pi(theta * t));
    4.0 * im * im
}

fn gl_panels(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64 + Copy) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| gl_integrate(a + i as f64 * h, a + (i + 1) as f64 * h, f))
        .sum()
}

/// Report of the good-interval correlation estimate against the uniform
/// stretch bound.
#[derive(Debug, Clone, Serialize)]
pub struct Prop51Report {
    pub lhs: f64,
    pub delta_boundary: f64,
    pub n0_term: f64,
    pub n1_term: f64,
    pub rhs: f64,
    pub implied_constant: f64,
    pub r: f64,
    pub s: f64,
    pub unbounded_ratio: bool,
}

/// Checks |int_I f(T^t z) g(z) dlambda - Delta(I)| <= C (N_0 lam(I)/S + N_1 lam(I)/r)
/// on a j-interval, reporting the implied constant. f must be a coboundary.
pub fn prop51_check(
    iv: &DirectedInterval,
    f: &FlowBoxObservable,
    g: &FlowBoxObservable,
    t: f64,
    spec: &CeilingSpec,
) -> Result<Prop51Report> {
    if f.class != ObsClass::Coboundary {
        return Err(Error::InvalidInput("f must be a coboundary".into()));
    }
    // t must sit in some stretch window of the interval's direction
    let (windows, _) = crate::arithmetic::stretch_windows(t, &spec.fv)?;
    if !windows.iter().any(|w| w.j == iv.j && w.n >= spec.n0) {
        return Err(Error::WindowMismatch(format!(
            "t = {t} below the first window of direction {}",
            iv.j
        )));
    }
    let lambda = rat_to_f64(&iv.length());
    // LHS by refining composite quadrature
    let integrand = |xj: &BigRational| -> Result<f64> {
        let x = iv.point(xj);
        let gv = eval_observable(g, &x, iv.s, spec)?;
        if gv == 0.0 {
            return Ok(0.0);
        }
        let p = crate::flow::FlowPoint { x, s: iv.s };
        let w = crate::flow::flow_map(&p, t, spec)?;
        let fv_ = eval_observable(f, &w.x, w.s, spec)?;
        Ok(fv_ * gv)
    };
    let quad = |panels: usize| -> Result<f64> {
        let mut acc = 0.0;
        // 4-point GL per panel on exact rational panel bounds
        let nodes = [-0.861136311594053, -0.339981043584856, 0.339981043584856, 0.861136311594053];
        let weights = [0.347854845137454, 0.652145154862546, 0.652145154862546, 0.347854845137454];
        let len = rat_to_f64(&iv.length());
        let h = len / panels as f64;
        let a = rat_to_f64(&iv.a);
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * h;
            for (nd, w) in nodes.iter().zip(&weights) {
                let xj = xrat::f64_to_rat(mid + 0.5 * h * nd);
                acc += w * integrand(&xj)? * 0.5 * h;
            }
        }
        Ok(acc)
    };
    let mut lhs_int = quad(64)?;
    for panels in [128usize, 256, 512] {
        let next = quad(panels)?;
        if (next - lhs_int).abs() < 1e-10 {
            lhs_int = next;
            break;
        }
        lhs_int = next;
    }
    // Delta(I): boundary terms g * transfer / d_j phi_N at the endpoints
    let endpoint = |xj: &BigRational| -> Result<f64> {
        let x = iv.point(xj);
        let n = hit_count(&x, iv.s, t, spec)?.n;
        let d = birkhoff_closed_partial(&x, n, iv.j, 1, spec)?;
        let gv = eval_observable(g, &x, iv.s, spec)?;
        let p = crate::flow::FlowPoint { x, s: iv.s };
        let w = crate::flow::flow_map(&p, t, spec)?;
        let tr = eval_transfer(f, &w.x, w.s, spec)?;
        Ok(gv * tr / d)
    };
    let delta = endpoint(&iv.a)? - endpoint(&iv.b)?;
    let (r, s) = stretch_quantities(iv, t, 256, spec)?;
    let (n0, n1j) = norms(f, g, iv.j);
    let unbounded = r < 1e-12 || s < 1e-12;
    let n0_term = n0 * lambda / s;
    let n1_term = n1j * lambda / r;
    let rhs = n0_term + n1_term;
    let lhs = (lhs_int - delta).abs();
    Ok(Prop51Report {
        lhs,
        delta_boundary: delta,
        n0_term,
        n1_term,
        rhs,
        implied_constant: if rhs > 0.0 { lhs / rhs } else { f64::INFINITY },
        r,
        s,
        unbounded_ratio: unbounded,
    })
}
