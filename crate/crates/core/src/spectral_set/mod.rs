//! Geometry of a finite-gap set E: critical points of Green's function,
//! harmonic measures of band groups, density of states and the Thouless
//! potential.

mod gap_system;
mod integrals;

pub use gap_system::{Component, GapSystem};
pub use integrals::RealPoly;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::config::{DEFAULT_QTOL, DEFAULT_SOLVER_TOL};
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_real, ArcSeries};
use integrals::{chebyshev_t, AbelianIntegral};

/// Critical points of Green's function, one per gap, with their heights.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoints {
    pub c: Vec<f64>,
    pub h: Vec<f64>,
    /// relative period residuals of ∏(t - c_k)/√R on each gap
    pub residuals: Vec<f64>,
}

/// Moment matrix M[g][m] = ∫_{gap g} T_m(τ(t)) / √R(t) dt with τ mapping
/// [b0, a0] onto [-1, 1].
fn gap_moments(gs: &GapSystem, qtol: f64) -> Result<DMatrix<f64>> {
    let n = gs.genus();
    let mid = 0.5 * (gs.a0() + gs.b0());
    let half = 0.5 * gs.diameter();
    let mut m = DMatrix::zeros(n, n + 1);
    for g in 0..n {
        let (a, b) = gs.gap(g);
        let s = gs.gap_branch_sign(g);
        for k in 0..=n {
            let series = ArcSeries::fit(a, b, qtol, |t| {
                chebyshev_t(k, (t - mid) / half) / gs.rest_abs(t, a, b).sqrt()
            })?;
            m[(g, k)] = s * series.integral();
        }
    }
    Ok(m)
}

/// Root of `f` in [a, b] by bisection, assuming a sign change.
fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Critical points c_j of Green's function, from the period conditions
/// ∫_{gap j} ∏(t - c_k)/√R dt = 0.
///
/// The conditions are linear in the coefficients of the monic polynomial
/// ∏(t - c_k), so they are solved as a linear system in a Chebyshev basis;
/// the roots are then isolated gap by gap.
pub fn critical_points(gs: &GapSystem, qtol: f64, solver_tol: f64) -> Result<CriticalPoints> {
    let n = gs.genus();
    if n == 0 {
        return Ok(CriticalPoints { c: vec![], h: vec![], residuals: vec![] });
    }
    let moments = gap_moments(gs, qtol)?;
    let a = moments.columns(0, n).into_owned();
    let rhs = -moments.column(n).into_owned();
    let beta = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("period moment matrix".into()))?;
    let mid = 0.5 * (gs.a0() + gs.b0());
    let half = 0.5 * gs.diameter();
    let mut coef: Vec<f64> = beta.iter().copied().collect();
    coef.push(1.0);
    let p = |t: f64| clenshaw_local(&coef, (t - mid) / half);

    let mut c = Vec::with_capacity(n);
    for g in 0..n {
        let (lo, hi) = gs.gap(g);
        let (flo, fhi) = (p(lo), p(hi));
        if flo == 0.0 || fhi == 0.0 || (flo < 0.0) == (fhi < 0.0) {
            return Err(Error::no_convergence(
                format!("critical point bracket on gap {}", g + 1),
                0,
                flo.abs().min(fhi.abs()),
            ));
        }
        c.push(bisect(p, lo, hi));
    }
    // The Chebyshev representation pins each root only to absolute accuracy
    // relative to the whole interval; with c_k (k ≠ g) fixed the period
    // condition on gap g is linear in c_g, which restores relative accuracy
    // on narrow gaps.
    for _ in 0..3 {
        for g in 0..n {
            let (lo, hi) = gs.gap(g);
            let others: Vec<f64> = c.iter().enumerate().filter(|&(k, _)| k != g).map(|(_, &x)| x).collect();
            let q = |t: f64| -> f64 { others.iter().map(|x| t - x).product::<f64>() / gs.rest_abs(t, lo, hi).sqrt() };
            let i0 = ArcSeries::fit(lo, hi, qtol, q)?.integral();
            let i1 = ArcSeries::fit(lo, hi, qtol, |t| (t - 0.5 * (lo + hi)) * q(t))?.integral();
            let cg = 0.5 * (lo + hi) + i1 / i0;
            if cg > lo && cg < hi {
                c[g] = cg;
            }
        }
    }

    let poly = RealPoly::Roots(c.clone());
    let green = AbelianIntegral::new(gs, poly, qtol)?;
    let mut residuals = Vec::with_capacity(n);
    for g in 0..n {
        let series = green.gap_series(g);
        let (lo, hi) = gs.gap(g);
        // scale: ∫ |P|/|√R| over the gap, bounded by π·max|P/rest|
        let scale = (0..=32)
            .map(|i| {
                let t = lo + (hi - lo) * i as f64 / 32.0;
                series.value(t).abs()
            })
            .fold(0.0, f64::max)
            * PI;
        residuals.push(green.period(g).abs() / scale.max(f64::MIN_POSITIVE));
    }
    // c_g itself carries a rounding error of ~eps·|c_g|, which is not small
    // relative to a narrow gap
    for (g, r) in residuals.iter().enumerate() {
        let (lo, hi) = gs.gap(g);
        let floor = 64.0 * f64::EPSILON * c[g].abs().max(lo.abs()).max(hi.abs()) / (hi - lo);
        if *r > solver_tol.max(floor) {
            return Err(Error::no_convergence("critical point period conditions", 1, *r));
        }
    }
    let h = c
        .iter()
        .map(|&x| green.value_real(x).map(|v| v.max(0.0)))
        .collect::<Result<Vec<_>>>()?;
    Ok(CriticalPoints { c, h, residuals })
}

fn clenshaw_local(coef: &[f64], x: f64) -> f64 {
    integrals::clenshaw(coef, x)
}

/// A gap system together with its Green's function, critical points and
/// harmonic-measure polynomials, precomputed once.
#[derive(Debug, Clone)]
pub struct SpectralSet {
    gs: GapSystem,
    qtol: f64,
    critical: CriticalPoints,
    green: AbelianIntegral,
    harmonic: Vec<AbelianIntegral>,
    frequencies: Vec<f64>,
    robin: f64,
}

impl SpectralSet {
    pub fn new(gs: GapSystem) -> Result<Self> {
        Self::with_tolerances(gs, DEFAULT_QTOL, DEFAULT_SOLVER_TOL)
    }

    pub fn with_tolerances(gs: GapSystem, qtol: f64, solver_tol: f64) -> Result<Self> {
        let n = gs.genus();
        let critical = critical_points(&gs, qtol, solver_tol)?;
        let green = AbelianIntegral::new(&gs, RealPoly::Roots(critical.c.clone()), qtol)?;

        let mut harmonic = Vec::with_capacity(n);
        if n > 0 {
            let moments = gap_moments(&gs, qtol)?;
            let a = moments.columns(0, n).into_owned();
            let lu = a.lu();
            let mid = 0.5 * (gs.a0() + gs.b0());
            let half = 0.5 * gs.diameter();
            for k in 0..n {
                let mut e = DVector::zeros(n);
                e[k] = 1.0;
                let coef = lu
                    .solve(&e)
                    .ok_or_else(|| Error::Singular("harmonic measure system".into()))?;
                let poly = RealPoly::Chebyshev { coef: coef.iter().copied().collect(), mid, half };
                harmonic.push(AbelianIntegral::new(&gs, poly, qtol)?);
            }
        }
        let frequencies = harmonic
            .iter()
            .map(|h| h.value_at_infinity().map(|v| 1.0 + v))
            .collect::<Result<Vec<_>>>()?;
        let robin = robin_constant(&gs, &critical.c, qtol)?;
        Ok(SpectralSet { gs, qtol, critical, green, harmonic, frequencies, robin })
    }

    pub fn gap_system(&self) -> &GapSystem {
        &self.gs
    }

    pub fn genus(&self) -> usize {
        self.gs.genus()
    }

    pub fn qtol(&self) -> f64 {
        self.qtol
    }

    pub fn critical_points(&self) -> &CriticalPoints {
        &self.critical
    }

    /// Heights h_j = G(c_j).
    pub fn heights(&self) -> &[f64] {
        &self.critical.h
    }

    /// Σ h_j.
    pub fn widom_sum(&self) -> f64 {
        self.critical.h.iter().sum()
    }

    /// Green's function with pole at infinity; zero on E. Rounding below zero
    /// is clipped.
    pub fn green(&self, z: Complex64) -> Result<f64> {
        Ok(self.green.value(z)?.max(0.0))
    }

    pub fn green_real(&self, x: f64) -> Result<f64> {
        Ok(self.green.value_real(x)?.max(0.0))
    }

    /// lim_{z→∞} (G(z) - log|z|).
    pub fn robin_constant(&self) -> f64 {
        self.robin
    }

    /// Harmonic measure at real x of E_k = E ∩ [b_k, a0] (gap index k from 0).
    pub fn harmonic_measure(&self, k: usize, x: f64) -> Result<f64> {
        self.check_gap(k)?;
        Ok((1.0 + self.harmonic[k].value_real(x)?).clamp(0.0, 1.0))
    }

    /// Harmonic measure of E_k at a complex point.
    pub fn harmonic_measure_at(&self, k: usize, z: Complex64) -> Result<f64> {
        self.check_gap(k)?;
        Ok((1.0 + self.harmonic[k].value(z)?).clamp(0.0, 1.0))
    }

    /// dω_k/dx = P_k(x)/√R(x) at x inside a gap.
    pub fn harmonic_measure_density(&self, k: usize, x: f64) -> Result<f64> {
        self.check_gap(k)?;
        match self.gs.locate(x) {
            Component::Gap(_) => Ok(self.harmonic[k].density(x)),
            Component::Band(_) if self.gs.distance_to_endpoints(x) == 0.0 => Err(Error::Singular(
                format!("harmonic measure density is infinite at the gap endpoint {x}"),
            )),
            _ => Err(Error::invalid("x", format!("{x} is not inside a gap"))),
        }
    }

    /// The polynomial P_k with ∫_{gap j} P_k/√R = δ_jk.
    pub fn harmonic_poly(&self, k: usize) -> &RealPoly {
        self.harmonic[k].poly()
    }

    /// ω_k(b_k') - ω_k(a_k') style increment on gap g measured from its left end:
    /// ω_k(x) - ω_k(a_g) for x in the closed gap g.
    pub fn harmonic_increment(&self, k: usize, g: usize, x: f64) -> f64 {
        let series = self.harmonic[k].gap_series(g);
        self.gs.gap_branch_sign(g) * (series.integral() - series.tail(x))
    }

    pub fn harmonic_series(&self, k: usize, g: usize) -> &ArcSeries {
        self.harmonic[k].gap_series(g)
    }

    /// Harmonic measure at infinity of E ∩ [b_k, a0], k = 0..N-1.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    /// Density of states (1/π) ∏|x - c_j| / sqrt|R(x)| on E.
    pub fn dos_density(&self, x: f64) -> Result<f64> {
        match self.gs.locate(x) {
            Component::Band(_) => {
                let r = self.gs.r(x).abs();
                if r == 0.0 {
                    return Err(Error::Singular(format!(
                        "density of states has an integrable singularity at the endpoint {x}"
                    )));
                }
                let p: f64 = self.critical.c.iter().map(|c| (x - c).abs()).product();
                Ok(p / (PI * r.sqrt()))
            }
            _ => Err(Error::invalid("x", format!("{x} is not in E"))),
        }
    }

    fn band_series(&self, i: usize) -> Result<ArcSeries> {
        let (l, r) = self.gs.band(i);
        let c = &self.critical.c;
        let gs = &self.gs;
        ArcSeries::fit(l, r, self.qtol, |t| {
            let p: f64 = c.iter().map(|ck| (t - ck).abs()).product();
            p / (PI * gs.rest_abs(t, l, r).sqrt())
        })
    }

    /// Density-of-states mass of band i.
    pub fn band_mass(&self, i: usize) -> Result<f64> {
        Ok(self.band_series(i)?.integral())
    }

    /// Integrated density of states ω((-∞, x]).
    pub fn dos_cdf(&self, x: f64) -> Result<f64> {
        let n = self.genus();
        // mass to the right of x, using ω(E ∩ [b_k, a0]) = frequencies[k]
        let right = match self.gs.locate(x) {
            Component::Left => 1.0,
            Component::Right => 0.0,
            Component::Gap(g) => self.frequencies[g],
            Component::Band(i) => {
                let beyond = if i == n { 0.0 } else { self.frequencies[i] };
                beyond + self.band_series(i)?.tail(x)
            }
        };
        Ok((1.0 - right).clamp(0.0, 1.0))
    }

    /// ∫_E log|z - x| dω(x).
    pub fn thouless_potential(&self, z: Complex64) -> Result<f64> {
        let mut total = 0.0;
        for i in 0..=self.genus() {
            let (l, r) = self.gs.band(i);
            let c = &self.critical.c;
            let gs = &self.gs;
            let weight = |t: f64| {
                let p: f64 = c.iter().map(|ck| (t - ck).abs()).product();
                p / (PI * gs.rest_abs(t, l, r).sqrt())
            };
            let f = |t: f64| weight(t) * (z - t).norm().ln();
            let part = match ArcSeries::fit(l, r, self.qtol, f) {
                Ok(s) => s.integral(),
                // z on or very near the band: log singularity, integrate in θ adaptively
                Err(_) => {
                    let (m, h) = (0.5 * (l + r), 0.5 * (r - l));
                    integrate_real(|th| f(m + h * th.cos()), 0.0, PI, 1e-14, self.qtol)?
                }
            };
            total += part;
        }
        Ok(total)
    }

    fn check_gap(&self, k: usize) -> Result<()> {
        if k >= self.genus() {
            return Err(Error::invalid("gap", format!("gap index {} out of range 1..={}", k + 1, self.genus())));
        }
        Ok(())
    }
}

/// ∫_{a0}^{∞} [P/√R - 1/(t - a0 + 1)] dt with P = ∏(t - c_k).
fn robin_constant(gs: &GapSystem, c: &[f64], qtol: f64) -> Result<f64> {
    let a0 = gs.a0();
    let v = integrate(
        |w| {
            if w >= 1.0 {
                return Complex64::new(0.0, 0.0);
            }
            let s = w / (1.0 - w);
            let t = a0 + s * s;
            let ds = 1.0 / ((1.0 - w) * (1.0 - w));
            let p: f64 = c.iter().map(|ck| t - ck).product();
            let f = 2.0 * p / gs.rest_abs_one(t, a0).sqrt() - 2.0 * s / (s * s + 1.0);
            Complex64::new(f * ds, 0.0)
        },
        0.0,
        1.0,
        1e-15,
        qtol,
    )?;
    Ok(v.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym_one_gap() -> SpectralSet {
        SpectralSet::new(GapSystem::new(-2.0, 2.0, vec![(-1.0, 1.0)]).unwrap()).unwrap()
    }

    fn three_band() -> SpectralSet {
        SpectralSet::new(GapSystem::new(0.0, 5.0, vec![(1.0, 2.0), (3.0, 4.0)]).unwrap()).unwrap()
    }

    #[test]
    fn interval_closed_forms() {
        let s = SpectralSet::new(GapSystem::interval(-2.0, 2.0).unwrap()).unwrap();
        assert!(s.critical_points().c.is_empty());
        assert!((s.green_real(3.0).unwrap() - 1.5f64.acosh()).abs() < 1e-12);
        assert!((s.dos_density(0.0).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
        assert!(s.robin_constant().abs() < 1e-12);
        assert!(s.frequencies().is_empty());
        assert_eq!(s.green_real(1.3).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_gap_is_centred() {
        let s = sym_one_gap();
        assert!(s.critical_points().c[0].abs() < 1e-14);
        assert!((s.frequencies()[0] - 0.5).abs() < 1e-12);
        assert!((s.harmonic_measure(0, 0.0).unwrap() - 0.5).abs() < 1e-12);
        let h = s.heights()[0];
        assert!(h > 0.0);
        assert!((s.green_real(0.0).unwrap() - h).abs() < 1e-15);
    }

    #[test]
    fn three_band_critical_points_are_mirror_images() {
        let s = three_band();
        let c = &s.critical_points().c;
        assert!((c[0] - (5.0 - c[1])).abs() < 1e-12);
        assert!(c[0] > 1.0 && c[0] < 2.0);
        // root of the one-gap period integral with c2 = 5 - c1, 30-digit quadrature
        assert!((c[0] - 1.480_144_090_239_550).abs() < 1e-11, "c1 = {}", c[0]);
    }

    #[test]
    fn harmonic_boundary_values() {
        let s = three_band();
        for k in 0..2 {
            for g in 0..2 {
                let (a, b) = s.gap_system().gap(g);
                let jump = s.harmonic_measure(k, b).unwrap() - s.harmonic_measure(k, a).unwrap();
                let expected = if k == g { 1.0 } else { 0.0 };
                assert!((jump - expected).abs() < 1e-12);
                assert!((s.harmonic_increment(k, g, b) - expected).abs() < 1e-10);
            }
        }
        // E_1 = bands 1, 2 ; E_2 = band 2
        assert_eq!(s.harmonic_measure(0, 0.5).unwrap(), 0.0);
        assert_eq!(s.harmonic_measure(0, 2.5).unwrap(), 1.0);
        assert_eq!(s.harmonic_measure(1, 2.5).unwrap(), 0.0);
        assert_eq!(s.harmonic_measure(1, 4.5).unwrap(), 1.0);
    }

    #[test]
    fn dos_mass_and_frequencies_agree() {
        let s = three_band();
        let masses: Vec<f64> = (0..3).map(|i| s.band_mass(i).unwrap()).collect();
        assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!((s.frequencies()[0] - (masses[1] + masses[2])).abs() < 1e-10);
        assert!((s.frequencies()[1] - masses[2]).abs() < 1e-10);
        assert!(s.frequencies()[0] > s.frequencies()[1]);
    }

    #[test]
    fn arcsine_cdf() {
        let s = SpectralSet::new(GapSystem::interval(-2.0, 2.0).unwrap()).unwrap();
        assert!((s.dos_cdf(0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((s.dos_cdf(1.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.dos_cdf(-3.0).unwrap(), 0.0);
        let t = three_band();
        let (a, _) = t.gap_system().gap(1);
        assert!((t.dos_cdf(a).unwrap() - (1.0 - t.frequencies()[1])).abs() < 1e-10);
    }

    #[test]
    fn density_sign_on_own_gap() {
        let s = three_band();
        let (a, b) = s.gap_system().gap(0);
        let d1 = s.harmonic_measure_density(0, a + 0.1).unwrap();
        let d2 = s.harmonic_measure_density(0, b - 0.1).unwrap();
        assert!(d1 > 0.0 && d2 > 0.0);
        assert!(s.harmonic_measure_density(0, 2.5).is_err());
    }

    #[test]
    fn thouless_identity_off_the_axis() {
        let s = three_band();
        for z in [Complex64::new(2.5, 0.7), Complex64::new(-3.0, 1.0), Complex64::new(1.5, 0.0)] {
            let lhs = s.green(z).unwrap();
            let rhs = s.robin_constant() + s.thouless_potential(z).unwrap();
            assert!((lhs - rhs).abs() < 1e-9, "z = {z}: {lhs} vs {rhs}");
        }
    }
}
