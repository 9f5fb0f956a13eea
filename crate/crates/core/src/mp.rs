//! Binary floating point with configurable precision, and dense polynomials over it.

use std::ops::{Add, Mul, Neg, Sub};

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;

pub type Mp = FBig<HalfEven, 2>;

pub fn mp(x: f64, prec: usize) -> Mp {
    Mp::try_from(x)
        .expect("finite f64")
        .with_precision(prec)
        .value()
}

pub fn mp_int(x: i64, prec: usize) -> Mp {
    Mp::from(x).with_precision(prec).value()
}

pub fn to_f64(x: &Mp) -> f64 {
    x.to_f64().value()
}

pub fn is_negative(x: &Mp) -> bool {
    *x < Mp::ZERO
}

pub fn is_zero(x: &Mp) -> bool {
    *x == Mp::ZERO
}

pub fn abs(x: &Mp) -> Mp {
    if is_negative(x) {
        -x.clone()
    } else {
        x.clone()
    }
}

pub fn reprec(x: &Mp, prec: usize) -> Mp {
    x.clone().with_precision(prec).value()
}

/// Dense polynomial, coefficients in ascending order of degree.
#[derive(Clone, Debug)]
pub struct MpPoly {
    coef: Vec<Mp>,
    prec: usize,
}

impl MpPoly {
    pub fn zero(prec: usize) -> Self {
        MpPoly { coef: vec![mp(0.0, prec)], prec }
    }

    pub fn from_coefficients(coef: Vec<Mp>, prec: usize) -> Self {
        let mut p = MpPoly { coef, prec };
        if p.coef.is_empty() {
            p.coef.push(mp(0.0, prec));
        }
        p
    }

    pub fn from_f64(coef: &[f64], prec: usize) -> Self {
        Self::from_coefficients(coef.iter().map(|&c| mp(c, prec)).collect(), prec)
    }

    /// Monic polynomial ∏(z - r).
    pub fn from_roots(roots: &[Mp], prec: usize) -> Self {
        let mut coef = vec![mp(1.0, prec)];
        for r in roots {
            let mut next = vec![mp(0.0, prec); coef.len() + 1];
            for (i, c) in coef.iter().enumerate() {
                next[i + 1] = &next[i + 1] + c;
                next[i] = &next[i] - &(c * r);
            }
            coef = next;
        }
        MpPoly { coef, prec }
    }

    /// (z - c)·1 as a polynomial.
    pub fn linear(c: &Mp, prec: usize) -> Self {
        MpPoly {
            coef: vec![-c.clone(), mp(1.0, prec)],
            prec,
        }
    }

    pub fn prec(&self) -> usize {
        self.prec
    }

    /// Formal degree (length - 1); trailing zeros are kept unless trimmed.
    pub fn degree(&self) -> usize {
        self.coef.len() - 1
    }

    pub fn coef(&self, k: usize) -> Mp {
        self.coef.get(k).cloned().unwrap_or_else(|| mp(0.0, self.prec))
    }

    pub fn coefficients(&self) -> &[Mp] {
        &self.coef
    }

    pub fn leading(&self) -> &Mp {
        self.coef.last().expect("non-empty")
    }

    /// Drops the top coefficient(s) down to formal degree `deg`.
    pub fn truncate(&mut self, deg: usize) {
        self.coef.truncate(deg + 1);
    }

    pub fn with_precision(&self, prec: usize) -> Self {
        MpPoly {
            coef: self.coef.iter().map(|c| reprec(c, prec)).collect(),
            prec,
        }
    }

    pub fn eval(&self, x: &Mp) -> Mp {
        let mut acc = mp(0.0, self.prec);
        for c in self.coef.iter().rev() {
            acc = &(&acc * x) + c;
        }
        acc
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coef.iter().map(to_f64).collect()
    }

    pub fn derivative(&self) -> Self {
        if self.coef.len() == 1 {
            return MpPoly::zero(self.prec);
        }
        let coef = self
            .coef
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * &mp_int(k as i64, self.prec))
            .collect();
        MpPoly { coef, prec: self.prec }
    }

    pub fn scale(&self, s: &Mp) -> Self {
        MpPoly {
            coef: self.coef.iter().map(|c| c * s).collect(),
            prec: self.prec,
        }
    }

    /// Largest coefficient modulus, as f64.
    pub fn norm_inf(&self) -> f64 {
        self.coef
            .iter()
            .map(|c| to_f64(c).abs())
            .fold(0.0, f64::max)
    }

    /// Synthetic division by (z - r): returns (quotient, remainder).
    pub fn deflate(&self, r: &Mp) -> (Self, Mp) {
        let n = self.degree();
        if n == 0 {
            return (MpPoly::zero(self.prec), self.coef[0].clone());
        }
        let mut q = vec![mp(0.0, self.prec); n];
        let mut acc = self.coef[n].clone();
        for k in (0..n).rev() {
            q[k] = acc.clone();
            acc = &self.coef[k] + &(&acc * r);
        }
        (MpPoly { coef: q, prec: self.prec }, acc)
    }
}

impl Add for &MpPoly {
    type Output = MpPoly;
    fn add(self, rhs: &MpPoly) -> MpPoly {
        let n = self.coef.len().max(rhs.coef.len());
        let coef = (0..n).map(|k| &self.coef(k) + &rhs.coef(k)).collect();
        MpPoly { coef, prec: self.prec.max(rhs.prec) }
    }
}

impl Sub for &MpPoly {
    type Output = MpPoly;
    fn sub(self, rhs: &MpPoly) -> MpPoly {
        let n = self.coef.len().max(rhs.coef.len());
        let coef = (0..n).map(|k| &self.coef(k) - &rhs.coef(k)).collect();
        MpPoly { coef, prec: self.prec.max(rhs.prec) }
    }
}

impl Mul for &MpPoly {
    type Output = MpPoly;
    fn mul(self, rhs: &MpPoly) -> MpPoly {
        let prec = self.prec.max(rhs.prec);
        let mut coef = vec![mp(0.0, prec); self.coef.len() + rhs.coef.len() - 1];
        for (i, a) in self.coef.iter().enumerate() {
            for (j, b) in rhs.coef.iter().enumerate() {
                coef[i + j] = &coef[i + j] + &(a * b);
            }
        }
        MpPoly { coef, prec }
    }
}

impl Neg for &MpPoly {
    type Output = MpPoly;
    fn neg(self) -> MpPoly {
        MpPoly {
            coef: self.coef.iter().map(|c| -c.clone()).collect(),
            prec: self.prec,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two_carries_requested_precision() {
        let s = mp(2.0, 200).sqrt();
        let err = &(&s * &s) - &mp(2.0, 200);
        assert!(to_f64(&abs(&err)) < 1e-58);
    }

    #[test]
    fn roots_expand_and_deflate() {
        let prec = 128;
        let roots = [mp(-1.5, prec), mp(0.25, prec), mp(2.0, prec)];
        let p = MpPoly::from_roots(&roots, prec);
        assert_eq!(p.degree(), 3);
        for r in &roots {
            assert!(to_f64(&abs(&p.eval(r))) < 1e-35);
        }
        let (q, rem) = p.deflate(&roots[1]);
        assert!(to_f64(&abs(&rem)) < 1e-35);
        let back = &q * &MpPoly::linear(&roots[1], prec);
        let diff = &back - &p;
        assert!(diff.norm_inf() < 1e-35);
    }

    #[test]
    fn derivative_of_cube() {
        let p = MpPoly::from_f64(&[1.0, 0.0, 0.0, 1.0], 128);
        let d = p.derivative();
        assert_eq!(d.to_f64(), vec![0.0, 0.0, 3.0]);
    }

    #[test]
    fn sign_helpers() {
        assert!(is_negative(&mp(-0.5, 64)));
        assert!(!is_negative(&mp(0.0, 64)));
        assert_eq!(to_f64(&abs(&mp(-3.0, 64))), 3.0);
    }
}
