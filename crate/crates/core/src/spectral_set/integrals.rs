//! Real parts of abelian integrals Re ∫_{a0}^{z} P(t)/√R(t) dt.
//!
//! Green's function and the harmonic measures of band groups are both of this
//! form; they differ only in the polynomial P.

use num_complex::Complex64;

use super::gap_system::{Component, GapSystem};
use crate::error::Result;
use crate::quad::{integrate, integrate_real, ArcSeries};

/// Real polynomial stored either by its roots (monic) or as a Chebyshev
/// expansion in the normalised variable (t - mid)/half.
#[derive(Debug, Clone)]
pub enum RealPoly {
    Roots(Vec<f64>),
    Chebyshev { coef: Vec<f64>, mid: f64, half: f64 },
}

impl RealPoly {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            RealPoly::Roots(r) => r.iter().map(|c| t - c).product(),
            RealPoly::Chebyshev { coef, mid, half } => clenshaw(coef, (t - mid) / half),
        }
    }

    pub fn eval_c(&self, z: Complex64) -> Complex64 {
        match self {
            RealPoly::Roots(r) => r.iter().map(|&c| z - c).product(),
            RealPoly::Chebyshev { coef, mid, half } => {
                let x = (z - mid) / half;
                let mut b1 = Complex64::new(0.0, 0.0);
                let mut b2 = Complex64::new(0.0, 0.0);
                for &c in coef.iter().skip(1).rev() {
                    let b0 = x * b1 * 2.0 - b2 + c;
                    b2 = b1;
                    b1 = b0;
                }
                x * b1 - b2 + coef[0]
            }
        }
    }

    pub fn degree(&self) -> usize {
        match self {
            RealPoly::Roots(r) => r.len(),
            RealPoly::Chebyshev { coef, .. } => coef.len().saturating_sub(1),
        }
    }
}

pub(crate) fn clenshaw(coef: &[f64], x: f64) -> f64 {
    let mut b1 = 0.0;
    let mut b2 = 0.0;
    for &c in coef.iter().skip(1).rev() {
        let b0 = 2.0 * x * b1 - b2 + c;
        b2 = b1;
        b1 = b0;
    }
    coef.first().copied().unwrap_or(0.0) + x * b1 - b2
}

/// Chebyshev polynomial T_m(x).
pub(crate) fn chebyshev_t(m: usize, x: f64) -> f64 {
    let (mut t0, mut t1) = (1.0, x);
    if m == 0 {
        return t0;
    }
    for _ in 1..m {
        let t2 = 2.0 * x * t1 - t0;
        t0 = t1;
        t1 = t2;
    }
    t1
}

#[derive(Debug, Clone)]
pub(crate) struct AbelianIntegral {
    gs: GapSystem,
    poly: RealPoly,
    qtol: f64,
    /// per gap: θ ↦ P(t)/sqrt|rest_g(t)| with t = mid + half cos θ
    gap_series: Vec<ArcSeries>,
    /// ∫ over gap g of P/√R
    periods: Vec<f64>,
    /// constant real part on band i
    band_values: Vec<f64>,
}

impl AbelianIntegral {
    pub fn new(gs: &GapSystem, poly: RealPoly, qtol: f64) -> Result<Self> {
        let n = gs.genus();
        let mut gap_series = Vec::with_capacity(n);
        let mut periods = Vec::with_capacity(n);
        for g in 0..n {
            let (a, b) = gs.gap(g);
            let series = ArcSeries::fit(a, b, qtol, |t| {
                poly.eval(t) / gs.rest_abs(t, a, b).sqrt()
            })?;
            periods.push(gs.gap_branch_sign(g) * series.integral());
            gap_series.push(series);
        }
        let mut band_values = vec![0.0; n + 1];
        for i in (0..n).rev() {
            band_values[i] = band_values[i + 1] - periods[i];
        }
        Ok(AbelianIntegral {
            gs: gs.clone(),
            poly,
            qtol,
            gap_series,
            periods,
            band_values,
        })
    }

    pub fn poly(&self) -> &RealPoly {
        &self.poly
    }

    pub fn period(&self, g: usize) -> f64 {
        self.periods[g]
    }

    pub fn gap_series(&self, g: usize) -> &ArcSeries {
        &self.gap_series[g]
    }

    /// Re ∫_{a0}^{x} P/√R for real x.
    pub fn value_real(&self, x: f64) -> Result<f64> {
        let gs = &self.gs;
        match gs.locate(x) {
            Component::Band(i) => Ok(self.band_values[i]),
            Component::Gap(g) => Ok(self.band_values[g + 1]
                - gs.gap_branch_sign(g) * self.gap_series[g].tail(x)),
            Component::Right => {
                let a0 = gs.a0();
                let s_max = (x - a0).sqrt();
                integrate_real(
                    |s| {
                        let t = a0 + s * s;
                        2.0 * self.poly.eval(t) / gs.rest_abs_one(t, a0).sqrt()
                    },
                    0.0,
                    s_max,
                    1e-15,
                    self.qtol,
                )
            }
            Component::Left => {
                let b0 = gs.b0();
                let s_max = (b0 - x).sqrt();
                let sign = if gs.genus().is_multiple_of(2) { 2.0 } else { -2.0 };
                let tail = integrate_real(
                    |s| {
                        let t = b0 - s * s;
                        sign * self.poly.eval(t) / gs.rest_abs_one(t, b0).sqrt()
                    },
                    0.0,
                    s_max,
                    1e-15,
                    self.qtol,
                )?;
                Ok(self.band_values[0] + tail)
            }
        }
    }

    /// Re ∫_{a0}^{z} P/√R at a complex point (conjugation symmetric).
    pub fn value(&self, z: Complex64) -> Result<f64> {
        let x = z.re;
        let y = z.im.abs();
        let base = self.value_real(x)?;
        if y == 0.0 {
            return Ok(base);
        }
        // t = x + i y u², dt = 2 i y u du keeps the integrand bounded at u = 0
        let path = integrate(
            |u| {
                let t = Complex64::new(x, y * u * u);
                let dt = Complex64::new(0.0, 2.0 * y * u);
                self.poly.eval_c(t) / self.gs.sqrt_r(t) * dt
            },
            0.0,
            1.0,
            1e-15,
            self.qtol,
        )?;
        Ok(base + path.re)
    }

    /// P(x)/√R(x) at a real point off E.
    pub fn density(&self, x: f64) -> f64 {
        self.poly.eval(x) / self.gs.sqrt_r_real(x).re
    }

    /// Re ∫_{a0}^{∞} P/√R, finite when deg P ≤ N - 1.
    pub fn value_at_infinity(&self) -> Result<f64> {
        let gs = &self.gs;
        let a0 = gs.a0();
        integrate_real(
            |w| {
                if w >= 1.0 {
                    return 0.0;
                }
                let s = w / (1.0 - w);
                let t = a0 + s * s;
                let ds = 1.0 / ((1.0 - w) * (1.0 - w));
                2.0 * self.poly.eval(t) / gs.rest_abs_one(t, a0).sqrt() * ds
            },
            0.0,
            1.0,
            1e-15,
            self.qtol,
        )
    }
}
