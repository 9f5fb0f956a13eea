//! Reference computations that do not go through the continued-fraction step.
//!
//! The spectral measure of the half-line matrix J₊ (the measure of r₊) is
//! discretised directly from the resolvent pair: an absolutely continuous part
//! on the bands, Im(-1/u(x+i0))/π, and point masses at the zeros of u in the
//! gaps. The Stieltjes procedure then recovers the recurrence coefficients.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::herglotz::HerglotzPair;
use crate::spectral_set::GapSystem;

/// Finitely supported positive measure.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn moment(&self, k: i32) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * x.powi(k))
            .sum()
    }
}

fn t_eval(t: &[f64], x: Complex64) -> Complex64 {
    t.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * x + c)
}

/// u on the real axis off E, straight from its definition (√R + T)/(2Π).
fn u_real(pair: &HerglotzPair, x: f64) -> f64 {
    let gs = pair.gap_system();
    let sr = gs.sqrt_r_real(x).re;
    let t = t_eval(pair.t_coefficients(), Complex64::new(x, 0.0)).re;
    let pi: f64 = pair.divisor().points().iter().map(|p| x - p.x).product();
    (sr + t) / (2.0 * pi)
}

fn u_complex(pair: &HerglotzPair, z: Complex64) -> Complex64 {
    let gs = pair.gap_system();
    let sr = gs.sqrt_r(z);
    let t = t_eval(pair.t_coefficients(), z);
    let pi: Complex64 = pair.divisor().points().iter().map(|p| z - p.x).product();
    (sr + t) / (2.0 * pi)
}

/// Zeros of u in the closed gaps (the poles of r₊), located by a sign scan.
fn u_zeros(pair: &HerglotzPair, samples: usize) -> Vec<f64> {
    let gs = pair.gap_system();
    let mut zeros = Vec::new();
    for g in 0..gs.genus() {
        let (a, b) = gs.gap(g);
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        let mut xs: Vec<f64> = (0..=samples)
            .map(|i| m - h * (PI * i as f64 / samples as f64).cos())
            .collect();
        xs[0] = a;
        xs[samples] = b;
        let vals: Vec<f64> = xs.iter().map(|&x| u_real(pair, x)).collect();
        for i in 0..samples {
            let (x0, x1) = (xs[i], xs[i + 1]);
            let (f0, f1) = (vals[i], vals[i + 1]);
            if !f0.is_finite() || !f1.is_finite() {
                continue;
            }
            // u increases between its poles, so zeros cross from - to +
            if f0 < 0.0 && f1 >= 0.0 {
                let (mut lo, mut hi) = (x0, x1);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if u_real(pair, mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let x = 0.5 * (lo + hi);
                if x > a && x < b {
                    zeros.push(x);
                }
            }
        }
    }
    zeros
}

/// Discretisation of the spectral measure of r₊ with `per_band` midpoint
/// nodes in the angle variable on every band.
pub fn half_line_measure(pair: &HerglotzPair, per_band: usize) -> Result<DiscreteMeasure> {
    let gs = pair.gap_system();
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for i in 0..=gs.genus() {
        let (l, r) = gs.band(i);
        let (m, h) = (0.5 * (l + r), 0.5 * (r - l));
        let sigma = gs.band_branch_sign(i);
        for k in 0..per_band {
            let th = PI * (k as f64 + 0.5) / per_band as f64;
            let x = m + h * th.cos();
            let sr = Complex64::new(0.0, sigma * gs.r(x).abs().sqrt());
            let t = t_eval(pair.t_coefficients(), Complex64::new(x, 0.0));
            let pi: f64 = pair.divisor().points().iter().map(|p| x - p.x).product();
            let u = (sr + t) / (2.0 * pi);
            let rho = (-1.0 / u).im / PI;
            nodes.push(x);
            weights.push(rho * h * th.sin() * PI / per_band as f64);
        }
    }
    for x in u_zeros(pair, 4000) {
        // complex-step derivative of u, analytic across the gap; the step stays
        // well above the angular resolution of the principal square roots
        let step = 1e-8 * gs.diameter();
        let du = u_complex(pair, Complex64::new(x, step)).im / step;
        if !(du > 0.0) {
            return Err(Error::Invariant(format!("u is not increasing at its zero {x}")));
        }
        nodes.push(x);
        weights.push(1.0 / du);
    }
    Ok(DiscreteMeasure { nodes, weights })
}

/// Spectral measure of R₀₀ = -Π/√R (absolutely continuous on E).
pub fn center_measure(gs: &GapSystem, xs: &[f64], per_band: usize) -> DiscreteMeasure {
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for i in 0..=gs.genus() {
        let (l, r) = gs.band(i);
        let (m, h) = (0.5 * (l + r), 0.5 * (r - l));
        let sigma = gs.band_branch_sign(i);
        for k in 0..per_band {
            let th = PI * (k as f64 + 0.5) / per_band as f64;
            let x = m + h * th.cos();
            let pi: f64 = xs.iter().map(|c| x - c).product();
            // Π / (π σ sqrt|R|) with sqrt|R| = h sinθ · sqrt|rest|
            let rest = gs.rest_abs(x, l, r).sqrt();
            nodes.push(x);
            weights.push(pi / (PI * sigma * rest) * PI / per_band as f64);
        }
    }
    DiscreteMeasure { nodes, weights }
}

/// Stieltjes procedure: q_0..q_{n-1} and p_1²..p_n² of the measure.
pub fn stieltjes(measure: &DiscreteMeasure, n: usize) -> (Vec<f64>, Vec<f64>) {
    let len = measure.nodes.len();
    let mut q = Vec::with_capacity(n);
    let mut psq = Vec::with_capacity(n);
    // orthonormal polynomial values at the nodes
    let norm0 = measure.mass().sqrt();
    let mut prev = vec![0.0; len];
    let mut cur = vec![1.0 / norm0; len];
    let mut p_prev = 0.0;
    for _ in 0..n {
        let qk: f64 = (0..len)
            .map(|i| measure.weights[i] * measure.nodes[i] * cur[i] * cur[i])
            .sum();
        let mut next: Vec<f64> = (0..len)
            .map(|i| (measure.nodes[i] - qk) * cur[i] - p_prev * prev[i])
            .collect();
        // one reorthogonalisation pass against the two previous vectors
        for basis in [&cur, &prev] {
            let c: f64 = (0..len).map(|i| measure.weights[i] * next[i] * basis[i]).sum();
            for i in 0..len {
                next[i] -= c * basis[i];
            }
        }
        let nn: f64 = (0..len).map(|i| measure.weights[i] * next[i] * next[i]).sum();
        let pk = nn.sqrt();
        for v in next.iter_mut() {
            *v /= pk;
        }
        q.push(qk);
        psq.push(pk * pk);
        prev = std::mem::replace(&mut cur, next);
        p_prev = pk;
    }
    (q, psq)
}

/// Stieltjes coefficients of r₊, refining the band discretisation until two
/// successive runs agree to `tol`.
pub fn half_line_coefficients(pair: &HerglotzPair, n: usize, tol: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut per_band = 256;
    let mut last = stieltjes(&half_line_measure(pair, per_band)?, n);
    while per_band < 1 << 16 {
        per_band *= 2;
        let next = stieltjes(&half_line_measure(pair, per_band)?, n);
        let diff = last
            .0
            .iter()
            .zip(&next.0)
            .chain(last.1.iter().zip(&next.1))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        last = next;
        if diff <= tol {
            return Ok(last);
        }
    }
    Err(Error::no_convergence("Stieltjes discretisation", per_band, f64::NAN))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herglotz::{split_resolvents, Divisor, DivisorPoint, Sign};

    #[test]
    fn arcsine_measure_gives_free_coefficients_after_first() {
        // E = [-2, 2], r₊ is the semicircle transform: q ≡ 0, p ≡ 1
        let gs = GapSystem::interval(-2.0, 2.0).unwrap();
        let pair = split_resolvents(&gs, &Divisor::new(&gs, vec![]).unwrap()).unwrap();
        let mu = half_line_measure(&pair, 512).unwrap();
        assert!((mu.mass() - 1.0).abs() < 1e-13);
        let (q, psq) = stieltjes(&mu, 10);
        for k in 0..10 {
            assert!(q[k].abs() < 1e-12);
            assert!((psq[k] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_point_mass_is_found() {
        let gs = GapSystem::new(-2.0, 2.0, vec![(-1.0, 1.0)]).unwrap();
        let d = Divisor::new(&gs, vec![DivisorPoint { x: 0.2, eps: Sign::Minus }]).unwrap();
        let pair = split_resolvents(&gs, &d).unwrap();
        let mu = half_line_measure(&pair, 1024).unwrap();
        assert!((mu.mass() - 1.0).abs() < 1e-11, "mass {}", mu.mass());
    }

    #[test]
    fn center_measure_is_normalised() {
        let gs = GapSystem::new(-2.0, 2.0, vec![(-1.0, 1.0)]).unwrap();
        let mu = center_measure(&gs, &[0.3], 512);
        assert!((mu.mass() - 1.0).abs() < 1e-12);
    }
}
