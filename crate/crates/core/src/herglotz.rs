//! Divisors, the diagonal resolvent R₀₀ and its splitting into the pair of
//! half-line resolvent functions.
//!
//! With Π(z) = ∏(z - x_j) and a monic polynomial T of degree N + 1 chosen so
//! that T(x_j) = ε_j √R(x_j), the functions
//!
//!   u = (√R + T) / (2Π) = -1/r₊,   v = (√R - T) / (2Π) = p₀² r₋
//!
//! are Herglotz, u + v = √R/Π = -1/R₀₀, and R - T² = -4p₀² Π Π^τ where Π^τ
//! carries the divisor of the dual (reflected) matrix.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::config::DEFAULT_PREC_BITS;
use crate::error::{Error, Result};
use crate::jacobi::CfState;
use crate::spectral_set::{Component, GapSystem, SpectralSet};

/// ε in a divisor point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn from_i64(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            _ => Err(Error::invalid("eps", format!("must be +1 or -1, got {v}"))),
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivisorPoint {
    pub x: f64,
    pub eps: Sign,
}

/// One point per closed gap, with a sign; at gap endpoints the sign is +1.
#[derive(Debug, Clone, PartialEq)]
pub struct Divisor {
    points: Vec<DivisorPoint>,
}

impl Divisor {
    pub fn new(gs: &GapSystem, points: Vec<DivisorPoint>) -> Result<Self> {
        if points.len() != gs.genus() {
            return Err(Error::invalid(
                "divisor",
                format!("expected {} points, got {}", gs.genus(), points.len()),
            ));
        }
        let mut out = Vec::with_capacity(points.len());
        for (g, p) in points.into_iter().enumerate() {
            let (a, b) = gs.gap(g);
            if !(p.x >= a && p.x <= b) {
                return Err(Error::invalid(
                    "divisor",
                    format!("point {} at x = {} lies outside the closed gap [{a}, {b}]", g + 1, p.x),
                ));
            }
            let eps = if p.x == a || p.x == b { Sign::Plus } else { p.eps };
            out.push(DivisorPoint { x: p.x, eps });
        }
        Ok(Divisor { points: out })
    }

    /// Builds a divisor from values that are known to lie in the closed gaps up
    /// to rounding; x is clamped into the gap.
    pub(crate) fn clamped(gs: &GapSystem, xs: &[f64], eps: &[Sign]) -> Self {
        let points = xs
            .iter()
            .zip(eps)
            .enumerate()
            .map(|(g, (&x, &e))| {
                let (a, b) = gs.gap(g);
                let x = x.clamp(a, b);
                let eps = if x == a || x == b { Sign::Plus } else { e };
                DivisorPoint { x, eps }
            })
            .collect();
        Divisor { points }
    }

    /// {(a_k, +1)}: the base point of the Abel map.
    pub fn base(gs: &GapSystem) -> Self {
        let points = gs
            .gaps()
            .iter()
            .map(|&(a, _)| DivisorPoint { x: a, eps: Sign::Plus })
            .collect();
        Divisor { points }
    }

    /// Divisor sitting at the critical points with a common sign.
    pub fn at_critical_points(ss: &SpectralSet, eps: Sign) -> Self {
        let points = ss
            .critical_points()
            .c
            .iter()
            .map(|&x| DivisorPoint { x, eps })
            .collect();
        Divisor { points }
    }

    pub fn points(&self) -> &[DivisorPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    /// Same points with every interior sign flipped.
    pub fn flipped(&self, gs: &GapSystem) -> Self {
        let points = self
            .points
            .iter()
            .enumerate()
            .map(|(g, p)| {
                let (a, b) = gs.gap(g);
                let eps = if p.x == a || p.x == b { Sign::Plus } else { p.eps.flip() };
                DivisorPoint { x: p.x, eps }
            })
            .collect();
        Divisor { points }
    }
}

/// R₀₀(z) = -∏(z - x_j)/√R(z).
pub fn r00(gs: &GapSystem, d: &Divisor, z: Complex64) -> Result<Complex64> {
    let sr = gs.sqrt_r(z);
    if sr == Complex64::new(0.0, 0.0) {
        return Err(Error::Singular(format!("R00 has a band-edge singularity at {z}")));
    }
    let pi: Complex64 = d.points().iter().map(|p| z - p.x).product();
    Ok(-pi / sr)
}

/// The resolvent pair u = -1/r₊, v = p₀² r₋ in double precision.
#[derive(Debug, Clone)]
pub struct HerglotzPair {
    gs: GapSystem,
    t: Vec<f64>,
    divisor: Divisor,
    dual_roots: Vec<f64>,
    p0sq: f64,
    q0: f64,
}

/// Splits R₀₀ for the divisor D into the half-line resolvents.
pub fn split_resolvents(gs: &GapSystem, d: &Divisor) -> Result<HerglotzPair> {
    split_resolvents_with_precision(gs, d, DEFAULT_PREC_BITS)
}

pub fn split_resolvents_with_precision(
    gs: &GapSystem,
    d: &Divisor,
    prec: usize,
) -> Result<HerglotzPair> {
    CfState::from_divisor(gs, d, prec)?.pair()
}

impl HerglotzPair {
    pub(crate) fn from_parts(
        gs: GapSystem,
        t: Vec<f64>,
        divisor: Divisor,
        dual_roots: Vec<f64>,
        p0sq: f64,
        q0: f64,
    ) -> Self {
        HerglotzPair { gs, t, divisor, dual_roots, p0sq, q0 }
    }

    pub fn gap_system(&self) -> &GapSystem {
        &self.gs
    }

    /// Coefficients of T in ascending order.
    pub fn t_coefficients(&self) -> &[f64] {
        &self.t
    }

    pub fn divisor(&self) -> &Divisor {
        &self.divisor
    }

    /// Roots of Π^τ = (R - T²)/(-4p₀²Π).
    pub fn dual_roots(&self) -> &[f64] {
        &self.dual_roots
    }

    pub fn p0sq(&self) -> f64 {
        self.p0sq
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn t(&self, z: Complex64) -> Complex64 {
        self.t
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    fn pi(&self, z: Complex64) -> Complex64 {
        self.divisor.points().iter().map(|p| z - p.x).product()
    }

    fn pi_dual(&self, z: Complex64) -> Complex64 {
        self.dual_roots.iter().map(|&x| z - x).product()
    }

    /// (u, v) at z given the value of √R there.
    fn pair_with_root(&self, z: Complex64, sr: Complex64) -> (Complex64, Complex64) {
        let t = self.t(z);
        let plus = sr + t;
        let minus = sr - t;
        let pi = self.pi(z);
        // u·(√R - T) = -2p₀²Π^τ: use whichever numerator does not cancel
        let num = -2.0 * self.p0sq * self.pi_dual(z);
        if plus.norm() >= minus.norm() {
            (plus / (2.0 * pi), num / plus)
        } else {
            (num / minus, minus / (2.0 * pi))
        }
    }

    /// u(z) = -1/r₊(z).
    pub fn u(&self, z: Complex64) -> Complex64 {
        self.pair_with_root(z, self.gs.sqrt_r(z)).0
    }

    /// v(z) = p₀² r₋(z).
    pub fn v(&self, z: Complex64) -> Complex64 {
        self.pair_with_root(z, self.gs.sqrt_r(z)).1
    }

    pub fn uv(&self, z: Complex64) -> (Complex64, Complex64) {
        self.pair_with_root(z, self.gs.sqrt_r(z))
    }

    pub fn r_plus(&self, z: Complex64) -> Complex64 {
        -1.0 / self.u(z)
    }

    pub fn r_minus(&self, z: Complex64) -> Complex64 {
        self.v(z) / self.p0sq
    }

    /// Boundary values (u, v)(x + i0) on E, as the limit from x + iδ with
    /// two Richardson steps.
    pub fn boundary_uv(&self, x: f64) -> Result<(Complex64, Complex64)> {
        if !self.gs.contains(x) {
            return Err(Error::invalid("x", format!("{x} is not in E")));
        }
        let d = self.gs.distance_to_endpoints(x);
        if d == 0.0 {
            return Err(Error::Singular(format!("band endpoint {x}")));
        }
        let delta = (1e-7 * self.gs.diameter()).min(1e-3 * d);
        let at = |k: f64| self.uv(Complex64::new(x, k * delta));
        let (u1, v1) = at(1.0);
        let (u2, v2) = at(2.0);
        let (u4, v4) = at(4.0);
        let rich = |a: Complex64, b: Complex64, c: Complex64| (8.0 * a - 6.0 * b + c) / 3.0;
        Ok((rich(u1, u2, u4), rich(v1, v2, v4)))
    }

    /// |1/r₊(x+i0) - conj(p₀² r₋(x+i0))| at a band point.
    pub fn reflectionless_residual(&self, x: f64) -> Result<f64> {
        let (u, v) = self.boundary_uv(x)?;
        Ok((-u - v.conj()).norm())
    }

    /// W(x) = ∏ (x - x_j)/(x - c_j).
    pub fn w_product(&self, ss: &SpectralSet, x: f64) -> f64 {
        self.divisor
            .points()
            .iter()
            .zip(&ss.critical_points().c)
            .map(|(p, c)| (x - p.x) / (x - c))
            .product()
    }
}

/// Residual of the Wronskian identities at a band point: the reflectionless
/// relation plus |dμ₀₀/dω - W| with dμ₀₀ the spectral density of R₀₀ = -1/(u + v).
pub fn wronskian_residual(ss: &SpectralSet, pair: &HerglotzPair, x: f64) -> Result<f64> {
    match ss.gap_system().locate(x) {
        Component::Band(_) => {}
        _ => return Err(Error::invalid("x", format!("{x} is not in E"))),
    }
    let (u, v) = pair.boundary_uv(x)?;
    let refl = (-u - v.conj()).norm();
    let rho00 = (-1.0 / (u + v)).im / PI;
    let ratio = rho00 / ss.dos_density(x)?;
    Ok(refl + (ratio - pair.w_product(ss, x)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym() -> GapSystem {
        GapSystem::new(-2.0, 2.0, vec![(-1.0, 1.0)]).unwrap()
    }

    #[test]
    fn divisor_validation_and_endpoint_sign() {
        let gs = sym();
        let bad = Divisor::new(&gs, vec![DivisorPoint { x: 1.5, eps: Sign::Plus }]);
        assert!(bad.is_err());
        let d = Divisor::new(&gs, vec![DivisorPoint { x: 1.0, eps: Sign::Minus }]).unwrap();
        assert_eq!(d.points()[0].eps, Sign::Plus);
        assert!(Divisor::new(&gs, vec![]).is_err());
    }

    #[test]
    fn r00_of_free_matrix() {
        let gs = GapSystem::interval(-2.0, 2.0).unwrap();
        let d = Divisor::new(&gs, vec![]).unwrap();
        let v = r00(&gs, &d, Complex64::new(0.0, 2.0)).unwrap();
        assert!((v - Complex64::new(0.0, 1.0 / (2.0 * 2f64.sqrt()))).norm() < 1e-15);
    }

    #[test]
    fn free_pair_closed_form() {
        let gs = GapSystem::interval(-2.0, 2.0).unwrap();
        let d = Divisor::new(&gs, vec![]).unwrap();
        let pair = split_resolvents(&gs, &d).unwrap();
        assert_eq!(pair.t_coefficients(), &[0.0, 1.0]);
        assert!((pair.p0sq() - 1.0).abs() < 1e-15);
        assert!(pair.q0().abs() < 1e-15);
        let z = Complex64::new(0.4, 0.9);
        let s = (z * z - 4.0).sqrt();
        let s = if (s / z).re < 0.0 { -s } else { s };
        assert!((pair.u(z) - (s + z) / 2.0).norm() < 1e-14);
        assert!((pair.v(z) - (s - z) / 2.0).norm() < 1e-14);
    }

    #[test]
    fn pole_bookkeeping_one_gap() {
        let gs = sym();
        for (x, eps) in [(0.3, Sign::Plus), (-0.6, Sign::Minus)] {
            let d = Divisor::new(&gs, vec![DivisorPoint { x, eps }]).unwrap();
            let pair = split_resolvents(&gs, &d).unwrap();
            let near = Complex64::new(x, 1e-9);
            let (u, v) = pair.uv(near);
            // the pole sits in u (ε = +1) or in v (ε = -1)
            match eps {
                Sign::Plus => assert!(u.norm() > 1e6 && v.norm() < 1e3),
                Sign::Minus => assert!(v.norm() > 1e6 && u.norm() < 1e3),
            }
            assert!(pair.p0sq() > 0.0);
        }
    }

    #[test]
    fn w_is_one_at_critical_points() {
        let ss = SpectralSet::new(sym()).unwrap();
        let d = Divisor::at_critical_points(&ss, Sign::Plus);
        let pair = split_resolvents(ss.gap_system(), &d).unwrap();
        for x in [-1.7, -1.2, 1.1, 1.9] {
            assert!((pair.w_product(&ss, x) - 1.0).abs() < 1e-14);
            assert!(wronskian_residual(&ss, &pair, x).unwrap() < 1e-8);
        }
    }
}
