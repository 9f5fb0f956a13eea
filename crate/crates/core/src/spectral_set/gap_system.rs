use num_complex::Complex64;

use crate::error::{Error, Result};

/// A finite-gap set E = [b0, a0] with N open gaps removed.
///
/// Gaps are stored left to right and indexed from 0 in the Rust API; band `i`
/// sits between gap `i - 1` and gap `i` (band 0 starts at b0, band N ends at a0).
#[derive(Debug, Clone, PartialEq)]
pub struct GapSystem {
    b0: f64,
    a0: f64,
    gaps: Vec<(f64, f64)>,
}

/// Connected component of the real line relative to E.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    /// (-∞, b0)
    Left,
    /// closed band i
    Band(usize),
    /// open gap g
    Gap(usize),
    /// (a0, ∞)
    Right,
}

impl GapSystem {
    pub fn new(b0: f64, a0: f64, gaps: Vec<(f64, f64)>) -> Result<Self> {
        if !b0.is_finite() || !a0.is_finite() {
            return Err(Error::invalid("band", "endpoints must be finite"));
        }
        if b0 >= a0 {
            return Err(Error::invalid("band", format!("need b0 < a0, got [{b0}, {a0}]")));
        }
        let mut prev = b0;
        for (j, &(a, b)) in gaps.iter().enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::invalid("gaps", format!("gap {} has a non-finite endpoint", j + 1)));
            }
            if a >= b {
                return Err(Error::invalid("gaps", format!("gap {} is empty: ({a}, {b})", j + 1)));
            }
            if a <= prev {
                return Err(Error::invalid(
                    "gaps",
                    format!("gap {} must start strictly right of {prev}", j + 1),
                ));
            }
            prev = b;
        }
        if prev >= a0 {
            return Err(Error::invalid("gaps", format!("last gap must end strictly left of a0 = {a0}")));
        }
        let gs = GapSystem { b0, a0, gaps };
        gs.check_branch_table()?;
        Ok(gs)
    }

    /// The single interval [b0, a0].
    pub fn interval(b0: f64, a0: f64) -> Result<Self> {
        Self::new(b0, a0, Vec::new())
    }

    pub fn genus(&self) -> usize {
        self.gaps.len()
    }

    pub fn b0(&self) -> f64 {
        self.b0
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn gaps(&self) -> &[(f64, f64)] {
        &self.gaps
    }

    pub fn gap(&self, g: usize) -> (f64, f64) {
        self.gaps[g]
    }

    pub fn band(&self, i: usize) -> (f64, f64) {
        let n = self.genus();
        let left = if i == 0 { self.b0 } else { self.gaps[i - 1].1 };
        let right = if i == n { self.a0 } else { self.gaps[i].0 };
        (left, right)
    }

    pub fn bands(&self) -> Vec<(f64, f64)> {
        (0..=self.genus()).map(|i| self.band(i)).collect()
    }

    pub fn diameter(&self) -> f64 {
        self.a0 - self.b0
    }

    /// All 2N + 2 endpoints in increasing order.
    pub fn endpoints(&self) -> Vec<f64> {
        let mut e = Vec::with_capacity(2 * self.genus() + 2);
        e.push(self.b0);
        for &(a, b) in &self.gaps {
            e.push(a);
            e.push(b);
        }
        e.push(self.a0);
        e
    }

    pub fn distance_to_endpoints(&self, x: f64) -> f64 {
        self.endpoints()
            .iter()
            .map(|e| (x - e).abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn locate(&self, x: f64) -> Component {
        if x < self.b0 {
            return Component::Left;
        }
        if x > self.a0 {
            return Component::Right;
        }
        for (g, &(a, b)) in self.gaps.iter().enumerate() {
            if x <= a {
                return Component::Band(g);
            }
            if x < b {
                return Component::Gap(g);
            }
        }
        Component::Band(self.genus())
    }

    pub fn contains(&self, x: f64) -> bool {
        matches!(self.locate(x), Component::Band(_))
    }

    /// Sign of the real value √R(x) on gap g.
    pub fn gap_branch_sign(&self, g: usize) -> f64 {
        if (self.genus() - g).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// σ with √R(x + i0) = i·σ·sqrt|R(x)| on band i.
    pub fn band_branch_sign(&self, i: usize) -> f64 {
        if (self.genus() - i).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Sign of √R on (-∞, b0).
    pub fn left_branch_sign(&self) -> f64 {
        if self.genus().is_multiple_of(2) {
            -1.0
        } else {
            1.0
        }
    }

    /// R(x) = ∏ (x - e) over all endpoints.
    pub fn r(&self, x: f64) -> f64 {
        self.endpoints().iter().map(|e| x - e).product()
    }

    /// |R(x)| with the two endpoints `skip_lo`, `skip_hi` left out.
    pub fn rest_abs(&self, x: f64, skip_lo: f64, skip_hi: f64) -> f64 {
        self.endpoints()
            .iter()
            .filter(|&&e| e != skip_lo && e != skip_hi)
            .map(|e| (x - e).abs())
            .product()
    }

    /// |R(x)| / |x - e| for a single excluded endpoint.
    pub fn rest_abs_one(&self, x: f64, skip: f64) -> f64 {
        self.endpoints()
            .iter()
            .filter(|&&e| e != skip)
            .map(|e| (x - e).abs())
            .product()
    }

    /// √R at a complex point: the product of principal square roots, analytic
    /// off E and ~ z^(N+1) at infinity. Real arguments give the boundary value
    /// from the upper half-plane.
    pub fn sqrt_r(&self, z: Complex64) -> Complex64 {
        let z = if z.im == 0.0 { Complex64::new(z.re, 0.0) } else { z };
        self.endpoints()
            .iter()
            .map(|&e| csqrt(z - e))
            .product()
    }

    /// Boundary value √R(x + i0) from the sign table.
    pub fn sqrt_r_real(&self, x: f64) -> Complex64 {
        let m = self.r(x).abs().sqrt();
        match self.locate(x) {
            Component::Right => Complex64::new(m, 0.0),
            Component::Left => Complex64::new(self.left_branch_sign() * m, 0.0),
            Component::Gap(g) => Complex64::new(self.gap_branch_sign(g) * m, 0.0),
            Component::Band(i) => Complex64::new(0.0, self.band_branch_sign(i) * m),
        }
    }

    /// Compares the sign table with the analytic product at one interior point
    /// of every component of the real line.
    fn check_branch_table(&self) -> Result<()> {
        let mut probes = vec![self.b0 - 1.0, self.a0 + 1.0];
        for &(a, b) in &self.gaps {
            probes.push(0.5 * (a + b));
        }
        for i in 0..=self.genus() {
            let (l, r) = self.band(i);
            probes.push(0.5 * (l + r));
        }
        for x in probes {
            let table = self.sqrt_r_real(x);
            let tiny = 1e-9 * self.distance_to_endpoints(x);
            let direct = self.sqrt_r(Complex64::new(x, tiny));
            let scale = table.norm().max(f64::MIN_POSITIVE);
            if (table - direct).norm() > 1e-6 * scale {
                return Err(Error::Invariant(format!(
                    "branch table disagrees with √R product at x = {x}: {table} vs {direct}"
                )));
            }
        }
        Ok(())
    }
}

/// Principal square root computed without going through the polar form, so
/// that tiny imaginary parts next to the negative axis keep full relative
/// accuracy.
pub(crate) fn csqrt(w: Complex64) -> Complex64 {
    if w.re == 0.0 && w.im == 0.0 {
        return Complex64::new(0.0, w.im);
    }
    let t = ((w.re.abs() + w.norm()) / 2.0).sqrt();
    if w.re >= 0.0 {
        Complex64::new(t, w.im / (2.0 * t))
    } else {
        Complex64::new(w.im.abs() / (2.0 * t), t.copysign(w.im))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_band() -> GapSystem {
        GapSystem::new(0.0, 5.0, vec![(1.0, 2.0), (3.0, 4.0)]).unwrap()
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(GapSystem::new(1.0, 1.0, vec![]).is_err());
        assert!(GapSystem::new(-2.0, 2.0, vec![(0.5, 0.1)]).is_err());
        assert!(GapSystem::new(-2.0, 2.0, vec![(-2.0, 0.0)]).is_err());
        assert!(GapSystem::new(-2.0, 2.0, vec![(-1.0, 0.5), (0.4, 1.0)]).is_err());
        assert!(GapSystem::new(-2.0, 2.0, vec![(1.0, 2.0)]).is_err());
    }

    #[test]
    fn bands_and_components() {
        let gs = three_band();
        assert_eq!(gs.bands(), vec![(0.0, 1.0), (2.0, 3.0), (4.0, 5.0)]);
        assert_eq!(gs.locate(1.0), Component::Band(0));
        assert_eq!(gs.locate(1.5), Component::Gap(0));
        assert_eq!(gs.locate(2.0), Component::Band(1));
        assert_eq!(gs.locate(-0.1), Component::Left);
        assert_eq!(gs.locate(5.0), Component::Band(2));
        assert_eq!(gs.locate(5.1), Component::Right);
    }

    #[test]
    fn gap_signs_match_product_of_roots() {
        let gs = three_band();
        for g in 0..2 {
            let (a, b) = gs.gap(g);
            for s in [0.1, 0.5, 0.9] {
                let x = a + s * (b - a);
                let direct = gs.sqrt_r(Complex64::new(x, 1e-12));
                assert_eq!(direct.re.signum(), gs.gap_branch_sign(g));
                assert!(direct.im.abs() < 1e-9);
            }
        }
        assert!(gs.sqrt_r(Complex64::new(7.0, 0.0)).re > 0.0);
        // alternation moving left from (a0, ∞)
        assert_eq!(gs.gap_branch_sign(1), -1.0);
        assert_eq!(gs.gap_branch_sign(0), 1.0);
        assert_eq!(gs.left_branch_sign(), -1.0);
    }

    #[test]
    fn band_boundary_values_are_imaginary() {
        let gs = three_band();
        for i in 0..=2 {
            let (l, r) = gs.band(i);
            let x = 0.3 * l + 0.7 * r;
            let table = gs.sqrt_r_real(x);
            let direct = gs.sqrt_r(Complex64::new(x, 1e-13));
            assert!((table - direct).norm() < 1e-8, "band {i}: {table} vs {direct}");
            assert_eq!(table.re, 0.0);
        }
    }

    #[test]
    fn csqrt_matches_principal_branch() {
        for w in [
            Complex64::new(-4.0, 1e-30),
            Complex64::new(-4.0, -1e-30),
            Complex64::new(3.0, -2.0),
            Complex64::new(-0.5, 0.25),
        ] {
            let s = csqrt(w);
            assert!((s * s - w).norm() < 1e-15 * w.norm().max(1.0));
            assert!(s.re >= 0.0);
        }
        assert!((csqrt(Complex64::new(-4.0, 1e-30)).re - 2.5e-31).abs() < 1e-45);
    }

    #[test]
    fn single_interval_is_joukowski_root() {
        let gs = GapSystem::interval(-2.0, 2.0).unwrap();
        let z = Complex64::new(0.3, 1.7);
        let s = gs.sqrt_r(z);
        assert!((s * s - (z * z - 4.0)).norm() < 1e-13);
        // ~ z at infinity
        let big = Complex64::new(1e6, 2e6);
        assert!((gs.sqrt_r(big) / big - 1.0).norm() < 1e-10);
    }
}
