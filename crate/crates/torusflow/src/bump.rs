//! Polynomial bump functions for the flow-box observables.
//!
//! The family is c (1-u^2)^k rescaled to an interval (optionally with an odd
//! factor u for orthogonal pairs). Polynomial bumps were chosen over
//! exp(-1/(1-u^2)) for exactly computable C^1 norms and convolutions: every
//! integral below is a piecewise polynomial handled exactly by fixed-order
//! Gauss-Legendre quadrature.

/// 16-point Gauss-Legendre nodes/weights on [-1, 1]; exact for polynomials
/// of degree <= 31.
const GL_NODES: [f64; 16] = [
    -0.9894009349916499,
    -0.9445750230732326,
    -0.8656312023878318,
    -0.7554044083550030,
    -0.6178762444026438,
    -0.4580167776572274,
    -0.2816035507792589,
    -0.0950125098376374,
    0.0950125098376374,
    0.2816035507792589,
    0.4580167776572274,
    0.6178762444026438,
    0.7554044083550030,
    0.8656312023878318,
    0.9445750230732326,
    0.9894009349916499,
];
const GL_WEIGHTS: [f64; 16] = [
    0.0271524594117541,
    0.0622535239386479,
    0.0951585116824928,
    0.1246289712555339,
    0.1495959888165767,
    0.1691565193950025,
    0.1826034150449236,
    0.1894506104550685,
    0.1894506104550685,
    0.1826034150449236,
    0.1691565193950025,
    0.1495959888165767,
    0.1246289712555339,
    0.0951585116824928,
    0.0622535239386479,
    0.0271524594117541,
];

/// Integrate f over [a, b] with 16-point Gauss-Legendre.
pub fn gl_integrate(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// int_{-1}^{1} (1-u^2)^m du = 2 prod_{i=1..m} 2i/(2i+1).
pub fn poly_mass(m: u32) -> f64 {
    let mut v = 2.0;
    for i in 1..=m {
        v *= (2 * i) as f64 / (2 * i + 1) as f64;
    }
    v
}

/// int_{-1}^{1} u^2 (1-u^2)^m du.
pub fn poly_mass_u2(m: u32) -> f64 {
    poly_mass(m) - poly_mass(m + 1)
}

/// c * B(u(x)) on [lo, hi] with u(x) = (2x - lo - hi)/(hi - lo) and
/// B(u) = (1-u^2)^k (times u if odd).
#[derive(Debug, Clone)]
pub struct PolyBump {
    pub lo: f64,
    pub hi: f64,
    pub k: u32,
    pub scale: f64,
    pub odd: bool,
}

impl PolyBump {
    pub fn new(lo: f64, hi: f64, k: u32, scale: f64, odd: bool) -> Self {
        assert!(hi > lo && k >= 1);
        PolyBump {
            lo,
            hi,
            k,
            scale,
            odd,
        }
    }

    /// Unit-height even bump on [lo, hi].
    pub fn unit(lo: f64, hi: f64, k: u32) -> Self {
        Self::new(lo, hi, k, 1.0, false)
    }

    /// Even bump normalized to int b^2 = 1 over its interval.
    pub fn l2_normalized(lo: f64, hi: f64, k: u32) -> Self {
        let w = hi - lo;
        let c = (2.0 / (w * poly_mass(2 * k))).sqrt();
        Self::new(lo, hi, k, c, false)
    }

    /// Odd bump (zero mean by parity) normalized to int b^2 = 1.
    pub fn l2_normalized_odd(lo: f64, hi: f64, k: u32) -> Self {
        let w = hi - lo;
        let c = (2.0 / (w * poly_mass_u2(2 * k))).sqrt();
        Self::new(lo, hi, k, c, true)
    }

    fn u(&self, x: f64) -> f64 {
        (2.0 * x - self.lo - self.hi) / (self.hi - self.lo)
    }

    pub fn value(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        let u = self.u(x);
        let b = (1.0 - u * u).powi(self.k as i32);
        self.scale * if self.odd { u * b } else { b }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        let u = self.u(x);
        let du = 2.0 / (self.hi - self.lo);
        let p = (1.0 - u * u).powi(self.k as i32 - 1);
        let core = if self.odd {
            // d/du [u (1-u^2)^k] = (1-u^2)^(k-1) (1 - (2k+1) u^2)
            p * (1.0 - (2 * self.k + 1) as f64 * u * u)
        } else {
            -((2 * self.k) as f64) * u * p
        };
        self.scale * core * du
    }

    /// sup |b| (closed form for even bumps, fine grid for odd).
    pub fn sup(&self) -> f64 {
        if !self.odd {
            return self.scale.abs();
        }
        let u_star = 1.0 / ((2 * self.k + 1) as f64).sqrt();
        self.scale.abs() * u_star * (1.0 - u_star * u_star).powi(self.k as i32)
    }

    /// sup |b'|.
    pub fn deriv_sup(&self) -> f64 {
        let du = 2.0 / (self.hi - self.lo);
        if !self.odd {
            let u_star = 1.0 / ((2 * self.k - 1) as f64).sqrt();
            let v = (2 * self.k) as f64 * u_star
                * (1.0 - u_star * u_star).powi(self.k as i32 - 1);
            return self.scale.abs() * v * du;
        }
        // odd: |d/du| maximal at u = 0 or at the interior critical points
        let mut best = 1.0f64; // value at u = 0
        let k = self.k as f64;
        // critical points of (1-u^2)^(k-1) (1-(2k+1)u^2) on (0,1)
        let disc = (6.0 * k + (2.0 * k + 1.0) * (2.0 * k - 2.0)).sqrt();
        let _ = disc;
        for i in 1..400 {
            let u = i as f64 / 400.0;
            let p = (1.0 - u * u).powi(self.k as i32 - 1);
            best = best.max((p * (1.0 - (2.0 * k + 1.0) * u * u)).abs());
        }
        self.scale.abs() * best * du
    }

    /// int b^2 over the support.
    pub fn l2_sq(&self) -> f64 {
        let w = self.hi - self.lo;
        let m = if self.odd {
            poly_mass_u2(2 * self.k)
        } else {
            poly_mass(2 * self.k)
        };
        self.scale * self.scale * w / 2.0 * m
    }
}

/// Even temporal bump: a mirrored pair psi(t) = B(|t|) with B supported on
/// [a, b], 0 < a < b, so both psi and psi' vanish on (-a, a) and outside
/// (-b, b). This realizes an even function vanishing outside a one-sided
/// stay-in-M_zeta component and its mirror.
#[derive(Debug, Clone)]
pub struct MirroredBump {
    pub inner: PolyBump,
}

impl MirroredBump {
    pub fn new(a: f64, b: f64, k: u32, scale: f64) -> Self {
        assert!(0.0 < a && a < b);
        MirroredBump {
            inner: PolyBump::new(a, b, k, scale, false),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        self.inner.value(t.abs())
    }

    /// Odd derivative: sign(t) B'(|t|).
    pub fn deriv(&self, t: f64) -> f64 {
        self.inner.deriv(t.abs()) * t.signum()
    }

    pub fn support(&self) -> (f64, f64) {
        (-self.inner.hi, self.inner.hi)
    }

    /// Support pieces of psi' (smooth polynomial on each).
    pub fn pieces(&self) -> [(f64, f64); 2] {
        [(-self.inner.hi, -self.inner.lo), (self.inner.lo, self.inner.hi)]
    }

    pub fn c0(&self) -> f64 {
        self.inner.sup()
    }

    pub fn c1(&self) -> f64 {
        self.inner.sup().max(self.inner.deriv_sup())
    }

    pub fn l2_sq(&self) -> f64 {
        2.0 * self.inner.l2_sq()
    }

    pub fn deriv_l2_sq(&self) -> f64 {
        2.0 * gl_integrate(self.inner.lo, self.inner.hi, |x| {
            let d = self.inner.deriv(x);
            d * d
        })
    }
}

/// Cross-correlation of derivative bumps: int psi1'(s + t) psi2'(s) ds,
/// integrated exactly piece by piece. This is the closed form the
/// flow-box autocorrelation must match for |t| below the return time.
pub fn deriv_cross_correlation(psi1: &MirroredBump, psi2: &MirroredBump, t: f64) -> f64 {
    let mut cuts: Vec<f64> = Vec::new();
    for (a, b) in psi2.pieces() {
        cuts.push(a);
        cuts.push(b);
    }
    for (a, b) in psi1.pieces() {
        cuts.push(a - t);
        cuts.push(b - t);
    }
    cuts.sort_by(|x, y| x.total_cmp(y));
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a {
            acc += gl_integrate(a, b, |s| psi1.deriv(s + t) * psi2.deriv(s));
        }
    }
    acc
}

/// Plain cross-correlation int psi1'(s + t) psi2(s) ds (coboundary against a
/// plain observable).
pub fn deriv_plain_cross_correlation(
    psi1: &MirroredBump,
    psi2: &MirroredBump,
    t: f64,
) -> f64 {
    let mut cuts: Vec<f64> = Vec::new();
    for (a, b) in psi2.pieces() {
        cuts.push(a);
        cuts.push(b);
    }
    for (a, b) in psi1.pieces() {
        cuts.push(a - t);
        cuts.push(b - t);
    }
    cuts.sort_by(|x, y| x.total_cmp(y));
    let mut acc = 0.0;
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a {
            acc += gl_integrate(a, b, |s| psi1.deriv(s + t) * psi2.value(s));
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mass_closed_forms() {
        // int (1-u^2) du = 4/3; int (1-u^2)^2 du = 16/15
        assert!((poly_mass(1) - 4.0 / 3.0).abs() < 1e-15);
        assert!((poly_mass(2) - 16.0 / 15.0).abs() < 1e-15);
        let num = gl_integrate(-1.0, 1.0, |u| u * u * (1.0 - u * u).powi(8));
        assert!((poly_mass_u2(8) - num).abs() < 1e-14);
    }

    #[test]
    fn normalization_and_norms() {
        let b = PolyBump::l2_normalized(0.25, 0.75, 4);
        let num = gl_integrate(0.25, 0.75, |x| b.value(x) * b.value(x));
        assert!((num - 1.0).abs() < 1e-12);
        assert!((b.l2_sq() - 1.0).abs() < 1e-12);
        // derivative sup matches a dense grid scan
        let mut grid_max: f64 = 0.0;
        for i in 0..=4000 {
            let x = 0.25 + 0.5 * i as f64 / 4000.0;
            grid_max = grid_max.max(b.deriv(x).abs());
        }
        assert!(grid_max <= b.deriv_sup() * (1.0 + 1e-6));
        assert!(grid_max >= b.deriv_sup() * 0.999);
    }

    #[test]
    fn odd_bump_orthogonality() {
        let e = PolyBump::l2_normalized(0.0, 1.0, 4);
        let o = PolyBump::l2_normalized_odd(0.0, 1.0, 4);
        let dot = gl_integrate(0.0, 1.0, |x| e.value(x) * o.value(x));
        assert!(dot.abs() < 1e-14);
        let oo = gl_integrate(0.0, 1.0, |x| o.value(x) * o.value(x));
        assert!((oo - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mirrored_bump_parity() {
        let psi = MirroredBump::new(0.1, 0.9, 4, 1.0);
        assert_eq!(psi.value(0.5), psi.value(-0.5));
        assert_eq!(psi.deriv(0.5), -psi.deriv(-0.5));
        assert_eq!(psi.value(0.05), 0.0); // vanishes near 0
        assert_eq!(psi.value(1.0), 0.0);
        // derivative integrates to zero over each side (transfer function
        // well defined)
        let side = gl_integrate(0.1, 0.9, |x| psi.inner.deriv(x));
        assert!(side.abs() < 1e-14);
    }

    #[test]
    fn autoconvolution_properties() {
        let psi = MirroredBump::new(0.1, 0.9, 4, 1.0);
        // at t = 0 it is int (psi')^2 > 0
        let c0 = deriv_cross_correlation(&psi, &psi, 0.0);
        assert!((c0 - psi.deriv_l2_sq()).abs() < 1e-12);
        // even in t
        let a = deriv_cross_correlation(&psi, &psi, 0.37);
        let b = deriv_cross_correlation(&psi, &psi, -0.37);
        assert!((a - b).abs() < 1e-12);
        // vanishes beyond twice the support end
        assert_eq!(deriv_cross_correlation(&psi, &psi, 1.81), 0.0);
        // matches a brute Riemann sum at a generic t
        let t = 0.63;
        let n = 200_000;
        let (lo, hi) = psi.support();
        let h = (hi - lo) / n as f64;
        let mut riemann = 0.0;
        for i in 0..n {
            let s = lo + (i as f64 + 0.5) * h;
            riemann += psi.deriv(s + t) * psi.deriv(s) * h;
        }
        let exact = deriv_cross_correlation(&psi, &psi, t);
        assert!((exact - riemann).abs() < 1e-6, "{exact} vs {riemann}");
    }
}
