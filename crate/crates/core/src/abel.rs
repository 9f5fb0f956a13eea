//! Abel map of divisors onto the character torus [0, 1)^N, its inversion, the
//! reproducing-kernel value at the origin and the shift-invariant measure.
//!
//! Divisors are charted by angles φ_j ∈ [0, 2π): x_j = mid_j + half_j cos φ_j
//! and ε_j = sign(sin φ_j), so φ = 0 is b_j and φ = π is a_j. In this chart
//!
//!   α_j = ½ Σ_k ε_k (ω_j(x_k) - ω_j(a_k))
//!       = -½ Σ_k s_k [C_jk(φ_k) - π c⁰_jk]
//!
//! where C_jk(θ) = ∫_0^θ g_jk(mid_k + half_k cos ψ) dψ comes from the cosine
//! series of the harmonic-measure density on gap k and s_k is the branch sign
//! of √R there. The expression is smooth in φ, so Newton's method can work
//! in the chart directly.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;

use crate::config::DEFAULT_PREC_BITS;
use crate::error::{Error, Result};
use crate::herglotz::{split_resolvents, Divisor, DivisorPoint, Sign};
use crate::jacobi::{cf_step, CfState, CMatrix2};
use crate::quad::ArcSeries;
use crate::spectral_set::{GapSystem, SpectralSet};

use num_complex::Complex64;

/// Point on the character torus, coordinates in [0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Character {
    pub alpha: Vec<f64>,
}

impl Character {
    pub fn new(alpha: Vec<f64>) -> Self {
        Character { alpha: alpha.into_iter().map(wrap01).collect() }
    }

    /// Max over coordinates of the circle distance.
    pub fn distance(&self, other: &Character) -> f64 {
        self.alpha
            .iter()
            .zip(&other.alpha)
            .map(|(a, b)| wrap_half(a - b).abs())
            .fold(0.0, f64::max)
    }

    /// α - t·ω mod 1.
    pub fn translate(&self, omega: &[f64], t: f64) -> Character {
        Character::new(self.alpha.iter().zip(omega).map(|(a, w)| a - t * w).collect())
    }
}

pub fn wrap01(x: f64) -> f64 {
    let r = x - x.floor();
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Representative in [-1/2, 1/2).
pub fn wrap_half(x: f64) -> f64 {
    wrap01(x + 0.5) - 0.5
}

/// Chart angles of a divisor.
pub fn divisor_to_chart(gs: &GapSystem, d: &Divisor) -> Vec<f64> {
    d.points()
        .iter()
        .enumerate()
        .map(|(g, p)| {
            let (a, b) = gs.gap(g);
            let x = p.x.clamp(a, b);
            let th = 2.0 * (b - x).sqrt().atan2((x - a).sqrt());
            match p.eps {
                Sign::Plus => th,
                Sign::Minus if th == 0.0 => 0.0,
                Sign::Minus => 2.0 * PI - th,
            }
        })
        .collect()
}

/// Divisor of chart angles; endpoints are hit exactly at φ ∈ {0, π}.
pub fn chart_to_divisor(gs: &GapSystem, phi: &[f64]) -> Divisor {
    let points: Vec<DivisorPoint> = phi
        .iter()
        .enumerate()
        .map(|(g, &f)| {
            let (a, b) = gs.gap(g);
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            let f = f.rem_euclid(2.0 * PI);
            let x = if f == 0.0 {
                b
            } else if f == PI {
                a
            } else {
                (m + h * f.cos()).clamp(a, b)
            };
            let eps = if f <= PI { Sign::Plus } else { Sign::Minus };
            DivisorPoint { x, eps }
        })
        .collect();
    let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
    let eps: Vec<Sign> = points.iter().map(|p| p.eps).collect();
    Divisor::clamped(gs, &xs, &eps)
}

/// Precomputed Abel map for one spectral set.
#[derive(Debug, Clone)]
pub struct AbelMap {
    gs: GapSystem,
    /// series[j][k]: harmonic measure ω_j on gap k
    series: Vec<Vec<ArcSeries>>,
    signs: Vec<f64>,
    frequencies: Vec<f64>,
}

impl AbelMap {
    pub fn new(ss: &SpectralSet) -> Self {
        let n = ss.genus();
        let series = (0..n)
            .map(|j| (0..n).map(|k| ss.harmonic_series(j, k).clone()).collect())
            .collect();
        let gs = ss.gap_system().clone();
        let signs = (0..n).map(|k| gs.gap_branch_sign(k)).collect();
        AbelMap { gs, series, signs, frequencies: ss.frequencies().to_vec() }
    }

    pub fn genus(&self) -> usize {
        self.signs.len()
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn gap_system(&self) -> &GapSystem {
        &self.gs
    }

    /// Unwrapped α(φ) (not reduced mod 1).
    pub fn lift(&self, phi: &[f64]) -> Vec<f64> {
        let n = self.genus();
        (0..n)
            .map(|j| {
                (0..n)
                    .map(|k| {
                        let s = &self.series[j][k];
                        -0.5 * self.signs[k] * (s.tail_at_angle(phi[k]) - s.integral())
                    })
                    .sum()
            })
            .collect()
    }

    pub fn eval_chart(&self, phi: &[f64]) -> Character {
        Character::new(self.lift(phi))
    }

    pub fn eval(&self, d: &Divisor) -> Character {
        self.eval_chart(&divisor_to_chart(&self.gs, d))
    }

    /// ∂α_j/∂φ_k = -½ s_k g_jk(φ_k).
    pub fn jacobian_chart(&self, phi: &[f64]) -> DMatrix<f64> {
        let n = self.genus();
        DMatrix::from_fn(n, n, |j, k| -0.5 * self.signs[k] * self.series[j][k].value_at_angle(phi[k]))
    }

    /// Newton on the torus from the chart point `start`.
    fn newton(&self, target: &Character, start: &[f64], tol: f64) -> (Vec<f64>, f64) {
        let n = self.genus();
        let resid = |phi: &[f64]| -> Vec<f64> {
            self.lift(phi)
                .iter()
                .zip(&target.alpha)
                .map(|(a, t)| wrap_half(a - t))
                .collect()
        };
        let norm = |r: &[f64]| r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut phi = start.to_vec();
        let mut r = resid(&phi);
        let mut rn = norm(&r);
        for _ in 0..60 {
            if rn <= tol {
                break;
            }
            let jac = self.jacobian_chart(&phi);
            let rhs = DVector::from_iterator(n, r.iter().map(|v| -v));
            let Some(step) = jac.lu().solve(&rhs) else { break };
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..30 {
                let trial: Vec<f64> = phi
                    .iter()
                    .zip(step.iter())
                    .map(|(p, s)| (p + lambda * s).rem_euclid(2.0 * PI))
                    .collect();
                let rt = resid(&trial);
                let rtn = norm(&rt);
                if rtn < rn {
                    phi = trial;
                    r = rt;
                    rn = rtn;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (phi, rn)
    }

    /// Chart angles with α(φ) = target, starting from `guess` and falling back
    /// to an 8^N grid of starting angles.
    pub fn invert_chart(&self, target: &Character, guess: Option<&[f64]>, tol: f64) -> Result<Vec<f64>> {
        let n = self.genus();
        if target.alpha.len() != n {
            return Err(Error::invalid("alpha", format!("expected {n} coordinates")));
        }
        if n == 0 {
            return Ok(vec![]);
        }
        let mut best = (vec![PI; n], f64::INFINITY);
        if let Some(g) = guess {
            let (phi, r) = self.newton(target, g, tol);
            if r <= tol {
                return Ok(phi);
            }
            best = (phi, r);
        }
        // each coordinate roughly winds once backwards: φ_k ≈ π - 2πα_k
        let linear: Vec<f64> = target.alpha.iter().map(|a| (PI - 2.0 * PI * a).rem_euclid(2.0 * PI)).collect();
        let (phi, r) = self.newton(target, &linear, tol);
        if r <= tol {
            return Ok(phi);
        }
        if r < best.1 {
            best = (phi, r);
        }
        let per = 8usize;
        let total = per.pow(n as u32);
        for idx in 0..total {
            let mut rem = idx;
            let start: Vec<f64> = (0..n)
                .map(|_| {
                    let c = rem % per;
                    rem /= per;
                    2.0 * PI * (c as f64 + 0.5) / per as f64
                })
                .collect();
            let (phi, r) = self.newton(target, &start, tol);
            if r <= tol {
                return Ok(phi);
            }
            if r < best.1 {
                best = (phi, r);
            }
        }
        Err(Error::no_convergence("Abel map inversion", total, best.1))
    }

    pub fn invert(&self, target: &Character, guess: Option<&Divisor>, tol: f64) -> Result<Divisor> {
        let g = guess.map(|d| divisor_to_chart(&self.gs, d));
        let phi = self.invert_chart(target, g.as_deref(), tol)?;
        Ok(chart_to_divisor(&self.gs, &phi))
    }
}

pub const INVERSION_TOL: f64 = 1e-12;

pub fn abel_map(ss: &SpectralSet, d: &Divisor) -> Character {
    AbelMap::new(ss).eval(d)
}

/// Jacobian ∂α/∂φ in the divisor chart.
pub fn abel_jacobian(ss: &SpectralSet, d: &Divisor) -> DMatrix<f64> {
    let map = AbelMap::new(ss);
    map.jacobian_chart(&divisor_to_chart(ss.gap_system(), d))
}

pub fn invert_abel(ss: &SpectralSet, alpha: &Character, guess: Option<&Divisor>) -> Result<Divisor> {
    AbelMap::new(ss).invert(alpha, guess, INVERSION_TOL)
}

/// Torus distance between A(D') and A(D) - ω, D' the divisor one site on.
pub fn shift_covariance_residual(ss: &SpectralSet, d: &Divisor) -> Result<f64> {
    shift_covariance_residual_k(ss, d, 1)
}

/// Same after k steps: distance between A(D_k) and A(D) - kω.
pub fn shift_covariance_residual_k(ss: &SpectralSet, d: &Divisor, k: usize) -> Result<f64> {
    let map = AbelMap::new(ss);
    let mut state = CfState::from_divisor(ss.gap_system(), d, DEFAULT_PREC_BITS)?;
    for _ in 0..k {
        state = cf_step(&state)?.next;
    }
    let a0 = map.eval(d);
    let ak = map.eval(&state.divisor());
    Ok(ak.distance(&a0.translate(ss.frequencies(), k as f64)))
}

/// k(0) = exp(-Σ_j [h_j + ε_j G(x_j)]).
pub fn kernel_at_origin(ss: &SpectralSet, d: &Divisor) -> Result<f64> {
    let mut s = 0.0;
    for (p, h) in d.points().iter().zip(ss.heights()) {
        s += h + p.eps.value() * ss.green_real(p.x)?;
    }
    Ok((-s).exp())
}

/// Δ(0) = exp(-Σ h_j).
pub fn delta_at_origin(ss: &SpectralSet) -> f64 {
    (-ss.widom_sum()).exp()
}

/// One factor of a product box: x in (a, b) inside gap `gap` with sign `eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxFactor {
    pub gap: usize,
    pub a: f64,
    pub b: f64,
    pub eps: Sign,
}

fn validate_box(gs: &GapSystem, factors: &[BoxFactor]) -> Result<()> {
    let mut seen = vec![false; gs.genus()];
    for f in factors {
        if f.gap >= gs.genus() {
            return Err(Error::invalid("box", format!("gap {} out of range", f.gap + 1)));
        }
        if seen[f.gap] {
            return Err(Error::invalid("box", format!("gap {} listed twice", f.gap + 1)));
        }
        seen[f.gap] = true;
        let (a, b) = gs.gap(f.gap);
        if !(f.a >= a && f.b <= b && f.a < f.b) {
            return Err(Error::invalid(
                "box",
                format!("[{}, {}] is not a subinterval of gap {} = [{a}, {b}]", f.a, f.b, f.gap + 1),
            ));
        }
    }
    Ok(())
}

/// Invariant measure of the box: 2^{-ℓ}|det[ω_{j_r}(b'_s) - ω_{j_r}(a'_s)]|.
pub fn measure_box(ss: &SpectralSet, factors: &[BoxFactor]) -> Result<f64> {
    validate_box(ss.gap_system(), factors)?;
    let l = factors.len();
    if l == 0 {
        return Ok(1.0);
    }
    let m = DMatrix::from_fn(l, l, |r, s| {
        let j = factors[r].gap;
        let f = factors[s];
        ss.harmonic_increment(j, f.gap, f.b) - ss.harmonic_increment(j, f.gap, f.a)
    });
    Ok(m.determinant().abs() / 2f64.powi(l as i32))
}

fn in_box(d: &Divisor, factors: &[BoxFactor]) -> bool {
    factors.iter().all(|f| {
        let p = d.points()[f.gap];
        p.x > f.a && p.x < f.b && p.eps == f.eps
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Monte-Carlo estimate of the box measure: α uniform on the torus, mapped
/// back to divisors by inverting the Abel map.
pub fn measure_mc(ss: &SpectralSet, factors: &[BoxFactor], samples: usize, seed: u64) -> Result<McEstimate> {
    validate_box(ss.gap_system(), factors)?;
    if samples == 0 {
        return Err(Error::invalid("samples", "must be positive"));
    }
    let map = AbelMap::new(ss);
    let n = map.genus();
    if n == 0 || factors.is_empty() {
        return Ok(McEstimate { estimate: 1.0, stderr: 0.0, samples, seed });
    }
    // table of chart points for starting guesses
    let per: usize = if n <= 2 { 32 } else { 12 };
    let table: Vec<(Vec<f64>, Character)> = (0..per.pow(n as u32))
        .map(|idx| {
            let mut rem = idx;
            let phi: Vec<f64> = (0..n)
                .map(|_| {
                    let c = rem % per;
                    rem /= per;
                    2.0 * PI * (c as f64 + 0.5) / per as f64
                })
                .collect();
            let a = map.eval_chart(&phi);
            (phi, a)
        })
        .collect();

    const CHUNK: usize = 4096;
    let chunks = samples.div_ceil(CHUNK);
    let hits: Result<Vec<usize>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut hits = 0;
            for _ in 0..count {
                let alpha = Character::new((0..n).map(|_| rng.random::<f64>()).collect());
                let start = table
                    .iter()
                    .min_by(|x, y| x.1.distance(&alpha).total_cmp(&y.1.distance(&alpha)))
                    .map(|t| t.0.clone());
                let phi = map.invert_chart(&alpha, start.as_deref(), 1e-10)?;
                if in_box(&chart_to_divisor(&map.gs, &phi), factors) {
                    hits += 1;
                }
            }
            Ok(hits)
        })
        .collect();
    let hits: usize = hits?.iter().sum();
    let p = hits as f64 / samples as f64;
    let stderr = (p * (1.0 - p) / samples as f64).sqrt();
    Ok(McEstimate { estimate: p, stderr, samples, seed })
}

/// Normalisation of the transfer matrix between the two kernel-normalised
/// realisations of one character.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferNormalization {
    /// λ = sqrt(ǩ(0)/k̂(0))
    pub lambda: f64,
    /// z·𝔄₁₂(z) at the sample point far out on the imaginary axis
    pub z_a12: Complex64,
    /// |z·𝔄₁₂ - (1/λ - λ)|
    pub residual: f64,
    /// ‖𝔄 - diag(1/λ, λ)‖ at the sample point
    pub diagonal_residual: f64,
}

/// For a finite-gap set both realisations coincide: λ = 1 and the transfer
/// matrix Φ̌⁻¹Φ̂ is the identity. k̂ is the kernel of D; ǩ is obtained through
/// the reflected character, ǩ = Δ(0)²/k(D*) with D* = A⁻¹(-A(D)); the second
/// realisation of the resolvent pair is rebuilt from A(D) by inversion.
pub fn transfer_normalization(ss: &SpectralSet, d: &Divisor) -> Result<TransferNormalization> {
    let gs = ss.gap_system();
    let map = AbelMap::new(ss);
    let alpha = map.eval(d);
    let k_hat = kernel_at_origin(ss, d)?;
    let reflected = Character::new(alpha.alpha.iter().map(|a| -a).collect());
    let d_star = map.invert(&reflected, None, INVERSION_TOL)?;
    let delta = delta_at_origin(ss);
    let k_check = delta * delta / kernel_at_origin(ss, &d_star)?;
    let lambda = (k_check / k_hat).sqrt();

    let rebuilt = map.invert(&alpha, None, INVERSION_TOL)?;
    let hat = split_resolvents(gs, d)?;
    let check = split_resolvents(gs, &rebuilt)?;
    let z = Complex64::new(0.0, 100.0 * gs.diameter());
    let phi = |u: Complex64, v: Complex64| CMatrix2::new(u, Complex64::new(1.0, 0.0), -v, Complex64::new(1.0, 0.0));
    let (uh, vh) = hat.uv(z);
    let (uc, vc) = check.uv(z);
    let inv = phi(uc, vc)
        .try_inverse()
        .ok_or_else(|| Error::Singular("resolvent matrix is not invertible".into()))?;
    let a = inv * phi(uh, vh);
    let z_a12 = z * a[(0, 1)];
    let residual = (z_a12 - (1.0 / lambda - lambda)).norm();
    let diag = CMatrix2::new(
        Complex64::new(1.0 / lambda, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(lambda, 0.0),
    );
    let diagonal_residual = (a - diag).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    Ok(TransferNormalization { lambda, z_a12, residual, diagonal_residual })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym() -> SpectralSet {
        SpectralSet::new(GapSystem::new(-2.0, 2.0, vec![(-1.0, 1.0)]).unwrap()).unwrap()
    }

    fn two_gap() -> SpectralSet {
        SpectralSet::new(GapSystem::new(-2.0, 2.5, vec![(-1.3, -0.4), (0.6, 1.1)]).unwrap()).unwrap()
    }

    #[test]
    fn base_divisor_maps_to_zero() {
        let ss = two_gap();
        let a = abel_map(&ss, &Divisor::base(ss.gap_system()));
        assert!(a.distance(&Character::new(vec![0.0, 0.0])) < 1e-14);
    }

    #[test]
    fn symmetric_centre_is_a_quarter() {
        let ss = sym();
        let d = Divisor::at_critical_points(&ss, Sign::Plus);
        let a = abel_map(&ss, &d);
        assert!((a.alpha[0] - 0.25).abs() < 1e-12);
        let flipped = abel_map(&ss, &d.flipped(ss.gap_system()));
        assert!((flipped.alpha[0] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn chart_roundtrip_at_endpoints() {
        let ss = two_gap();
        let gs = ss.gap_system();
        for phi in [[0.0, PI], [PI, 0.0], [0.4, 5.0]] {
            let d = chart_to_divisor(gs, &phi);
            let back = divisor_to_chart(gs, &d);
            for (a, b) in phi.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12, "{phi:?} -> {back:?}");
            }
        }
        let d = chart_to_divisor(gs, &[0.0, PI]);
        assert_eq!(d.points()[0].x, -0.4);
        assert_eq!(d.points()[1].x, 0.6);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let ss = two_gap();
        let map = AbelMap::new(&ss);
        let phi = [1.1, 4.2];
        let jac = map.jacobian_chart(&phi);
        let h = 1e-6;
        for k in 0..2 {
            let mut p1 = phi;
            let mut p0 = phi;
            p1[k] += h;
            p0[k] -= h;
            let (a1, a0) = (map.lift(&p1), map.lift(&p0));
            for j in 0..2 {
                let fd = (a1[j] - a0[j]) / (2.0 * h);
                assert!((fd - jac[(j, k)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn continuity_through_endpoints() {
        let ss = two_gap();
        let map = AbelMap::new(&ss);
        for anchor in [0.0, PI] {
            let below = map.eval_chart(&[anchor - 1e-9, 2.0]);
            let above = map.eval_chart(&[anchor + 1e-9, 2.0]);
            assert!(below.distance(&above) < 1e-6);
        }
    }

    #[test]
    fn inversion_roundtrip() {
        let ss = two_gap();
        let map = AbelMap::new(&ss);
        for alpha in [[0.1, 0.2], [0.9, 0.55], [0.0, 0.5]] {
            let c = Character::new(alpha.to_vec());
            let d = map.invert(&c, None, 1e-12).unwrap();
            assert!(map.eval(&d).distance(&c) < 1e-9);
        }
    }

    #[test]
    fn kernel_bounds_attained() {
        let ss = two_gap();
        let delta = delta_at_origin(&ss);
        let up = kernel_at_origin(&ss, &Divisor::at_critical_points(&ss, Sign::Minus)).unwrap();
        let low = kernel_at_origin(&ss, &Divisor::at_critical_points(&ss, Sign::Plus)).unwrap();
        assert!((up - 1.0).abs() < 1e-14);
        assert!((low - delta * delta).abs() < 1e-14);
    }

    #[test]
    fn full_gap_box_has_half_measure() {
        let ss = two_gap();
        let (a, b) = ss.gap_system().gap(1);
        let f = BoxFactor { gap: 1, a, b, eps: Sign::Plus };
        assert!((measure_box(&ss, &[f]).unwrap() - 0.5).abs() < 1e-12);
        let g = BoxFactor { gap: 1, a: a + 0.1, b: a + 0.3, eps: Sign::Minus };
        let h = BoxFactor { gap: 0, a: -1.0, b: -0.5, eps: Sign::Plus };
        let m1 = measure_box(&ss, &[g, h]).unwrap();
        let m2 = measure_box(&ss, &[h, g]).unwrap();
        assert!((m1 - m2).abs() < 1e-15);
    }

    #[test]
    fn shift_moves_character_by_minus_omega() {
        let ss = two_gap();
        let d = Divisor::new(
            ss.gap_system(),
            vec![DivisorPoint { x: -1.0, eps: Sign::Minus }, DivisorPoint { x: 0.8, eps: Sign::Plus }],
        )
        .unwrap();
        for k in 1..4 {
            assert!(shift_covariance_residual_k(&ss, &d, k).unwrap() < 1e-10);
        }
        let t = transfer_normalization(&ss, &d).unwrap();
        assert!((t.lambda - 1.0).abs() < 1e-10);
        assert!(t.residual < 1e-8 && t.diagonal_residual < 1e-8);
    }
}
