//! Quadrature primitives.
//!
//! [`ArcSeries`] handles integrals with inverse square-root endpoint
//! singularities, ∫ g(t) / sqrt((t - lo)(hi - t)) dt, through the substitution
//! t = mid + half·cos θ. The transformed integrand g(mid + half·cos θ) is
//! smooth and even in θ, so it is expanded in a cosine series sampled at
//! Chebyshev–Lobatto points; the node count doubles until the tail of the
//! series drops below tolerance. Partial integrals then follow in closed form
//! from the series.
//!
//! [`integrate`] is a global adaptive Gauss–Kronrod (7/15) rule for the
//! remaining smooth or mildly singular integrands (complex-valued paths).

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

const MIN_NODES: usize = 16;
const MAX_NODES: usize = 1 << 17;

/// Cosine-series model of θ ↦ g(mid + half·cos θ) on a segment [lo, hi].
#[derive(Debug, Clone)]
pub struct ArcSeries {
    lo: f64,
    hi: f64,
    mid: f64,
    half: f64,
    /// g(mid + half cos θ) = Σ coef[n] cos(nθ)
    coef: Vec<f64>,
}

impl ArcSeries {
    /// Fits the series of `g` on [lo, hi] to relative tolerance `tol`.
    pub fn fit(lo: f64, hi: f64, tol: f64, g: impl Fn(f64) -> f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::invalid("segment", format!("empty segment [{lo}, {hi}]")));
        }
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        let node = |i: usize, m: usize| -> f64 {
            // endpoints are hit exactly so that g sees lo and hi, not rounded neighbours
            if i == 0 {
                hi
            } else if i == m {
                lo
            } else {
                mid + half * (PI * i as f64 / m as f64).cos()
            }
        };

        let mut planner = FftPlanner::<f64>::new();
        let mut m = MIN_NODES;
        let mut samples: Vec<f64> = (0..=m).map(|i| g(node(i, m))).collect();
        loop {
            let coef = dct1(&samples, &mut planner);
            let scale = coef.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
            let tail = coef[(3 * m) / 4..]
                .iter()
                .fold(0.0f64, |acc, c| acc.max(c.abs()));
            if !scale.is_finite() || !tail.is_finite() {
                return Err(Error::Singular(format!(
                    "non-finite integrand on [{lo}, {hi}]"
                )));
            }
            if tail <= tol * scale.max(f64::MIN_POSITIVE) || scale == 0.0 {
                let mut coef = coef;
                let cutoff = tol * scale * 1e-3;
                while coef.len() > 1 && coef.last().is_some_and(|c| c.abs() <= cutoff) {
                    coef.pop();
                }
                return Ok(ArcSeries { lo, hi, mid, half, coef });
            }
            if 2 * m > MAX_NODES {
                return Err(Error::no_convergence(
                    format!("cosine series on [{lo}, {hi}]"),
                    m,
                    tail / scale,
                ));
            }
            // refine: old samples sit at even indices of the doubled grid
            let m2 = 2 * m;
            let mut next = Vec::with_capacity(m2 + 1);
            for i in 0..=m2 {
                if i % 2 == 0 {
                    next.push(samples[i / 2]);
                } else {
                    next.push(g(node(i, m2)));
                }
            }
            samples = next;
            m = m2;
        }
    }

    /// ∫_lo^hi g(t) / sqrt((t - lo)(hi - t)) dt.
    pub fn integral(&self) -> f64 {
        PI * self.coef[0]
    }

    /// Angle θ ∈ [0, π] of the point t (θ = 0 at hi, θ = π at lo).
    pub fn angle(&self, t: f64) -> f64 {
        // half-angle form keeps full accuracy next to both endpoints
        let t = t.clamp(self.lo, self.hi);
        2.0 * (self.hi - t).sqrt().atan2((t - self.lo).sqrt())
    }

    /// ∫_t^hi g(s) / sqrt((s - lo)(hi - s)) ds.
    pub fn tail(&self, t: f64) -> f64 {
        self.tail_at_angle(self.angle(t))
    }

    /// ∫_0^θ g(mid + half cos φ) dφ.
    pub fn tail_at_angle(&self, theta: f64) -> f64 {
        let mut acc = self.coef[0] * theta;
        let (s1, c1) = theta.sin_cos();
        let two_c = 2.0 * c1;
        let mut s_prev = 0.0;
        let mut s_cur = s1;
        for (n, c) in self.coef.iter().enumerate().skip(1) {
            acc += c * s_cur / n as f64;
            let s_next = two_c * s_cur - s_prev;
            s_prev = s_cur;
            s_cur = s_next;
        }
        acc
    }

    /// Σ coef[n] cos(nθ).
    pub fn value_at_angle(&self, theta: f64) -> f64 {
        self.value(self.mid + self.half * theta.cos())
    }

    /// Series value g(t) (the smooth factor, not the singular integrand).
    pub fn value(&self, t: f64) -> f64 {
        let x = ((t - self.mid) / self.half).clamp(-1.0, 1.0);
        // Clenshaw for Σ coef[n] T_n(x)
        let mut b1 = 0.0;
        let mut b2 = 0.0;
        for c in self.coef.iter().skip(1).rev() {
            let b0 = 2.0 * x * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        self.coef[0] + x * b1 - b2
    }

    pub fn len(&self) -> usize {
        self.coef.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coef.is_empty()
    }
}

/// DCT-I of samples f_0..f_m, normalised so that f(θ) = Σ c_n cos(nθ).
fn dct1(samples: &[f64], planner: &mut FftPlanner<f64>) -> Vec<f64> {
    let m = samples.len() - 1;
    let len = 2 * m;
    let mut buf: Vec<Complex64> = Vec::with_capacity(len);
    buf.extend(samples.iter().map(|&v| Complex64::new(v, 0.0)));
    buf.extend(samples[1..m].iter().rev().map(|&v| Complex64::new(v, 0.0)));
    planner.plan_fft_forward(len).process(&mut buf);
    let mut coef: Vec<f64> = buf[..=m].iter().map(|c| c.re / m as f64).collect();
    coef[0] *= 0.5;
    coef[m] *= 0.5;
    coef
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

fn kronrod15(f: &impl Fn(f64) -> Complex64, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    let k = k * h;
    let g = g * h;
    (k, (k - g).norm())
}

/// Adaptive Gauss–Kronrod integral of a complex-valued function on [a, b].
pub fn integrate(
    f: impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Complex64> {
    const MAX_PIECES: usize = 4000;
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let (v, e) = kronrod15(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    loop {
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::Singular(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(total);
        }
        if pieces.len() >= MAX_PIECES {
            return Err(Error::no_convergence("adaptive quadrature", pieces.len(), err));
        }
        let (idx, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, v0, e0) = pieces.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // interval exhausted at machine resolution
            return Ok(total);
        }
        let (v1, e1) = kronrod15(&f, lo, mid);
        let (v2, e2) = kronrod15(&f, mid, hi);
        total += v1 + v2 - v0;
        err += e1 + e2 - e0;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
        // refresh the running error sum occasionally to shed cancellation drift
        if pieces.len() % 64 == 0 {
            err = pieces.iter().map(|p| p.3).sum();
            total = pieces.iter().map(|p| p.2).sum();
        }
    }
}

/// Real-valued convenience wrapper around [`integrate`].
pub fn integrate_real(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    integrate(|x| Complex64::new(f(x), 0.0), a, b, abs_tol, rel_tol).map(|c| c.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arcsine_mass_is_pi() {
        let s = ArcSeries::fit(-2.0, 2.0, 1e-14, |_| 1.0).unwrap();
        assert!((s.integral() - PI).abs() < 1e-14);
        // half of the arcsine mass lies to the right of the midpoint
        assert!((s.tail(0.0) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn polynomial_moments_match_closed_form() {
        // ∫_{-1}^{1} t^2 / sqrt(1 - t^2) dt = π/2
        let s = ArcSeries::fit(-1.0, 1.0, 1e-14, |t| t * t).unwrap();
        assert!((s.integral() - PI / 2.0).abs() < 1e-14);
        // ∫_{0}^{1} t / sqrt(1-t^2) dt = 1
        let lin = ArcSeries::fit(-1.0, 1.0, 1e-14, |t| t).unwrap();
        assert!((lin.tail(0.0) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_nonpolynomial_tail() {
        // ∫_t^1 e^s / sqrt(1 - s^2) ds checked against Gauss–Kronrod after θ substitution
        let s = ArcSeries::fit(-1.0, 1.0, 1e-14, f64::exp).unwrap();
        let t: f64 = 0.3;
        let th = t.acos();
        let reference = integrate_real(|p| p.cos().exp(), 0.0, th, 1e-15, 1e-15).unwrap();
        assert!((s.tail(t) - reference).abs() < 1e-13);
        assert!((s.value(0.7) - 0.7f64.exp()).abs() < 1e-13);
    }

    #[test]
    fn kronrod_handles_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = integrate_real(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-10, 1e-10).unwrap();
        assert!((v - 2.0).abs() < 1e-8);
    }

    #[test]
    fn empty_segment_rejected() {
        assert!(ArcSeries::fit(1.0, 1.0, 1e-12, |_| 1.0).is_err());
    }
}
