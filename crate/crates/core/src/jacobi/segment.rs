use crate::config::DEFAULT_PREC_BITS;
use crate::error::{Error, Result};
use crate::herglotz::Divisor;
use crate::spectral_set::GapSystem;

use super::cf::{cf_step, dual_state, CfState};

/// Jacobi coefficients p_n > 0, q_n on the index window [n0, n1].
///
/// The matrix acts by J e_n = p_n e_{n-1} + q_n e_n + p_{n+1} e_{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSegment {
    n0: i64,
    n1: i64,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl JacobiSegment {
    pub fn new(n0: i64, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if p.len() != q.len() || p.is_empty() {
            return Err(Error::invalid("segment", "p and q must be non-empty and of equal length"));
        }
        if let Some(bad) = p.iter().find(|&&v| !(v > 0.0)) {
            return Err(Error::invalid("p", format!("off-diagonal entries must be positive, got {bad}")));
        }
        let n1 = n0 + p.len() as i64 - 1;
        Ok(JacobiSegment { n0, n1, p, q })
    }

    pub fn n0(&self) -> i64 {
        self.n0
    }

    pub fn n1(&self) -> i64 {
        self.n1
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.n0 && n <= self.n1
    }

    pub fn p(&self, n: i64) -> f64 {
        self.p[(n - self.n0) as usize]
    }

    pub fn q(&self, n: i64) -> f64 {
        self.q[(n - self.n0) as usize]
    }

    pub fn p_values(&self) -> &[f64] {
        &self.p
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q
    }

    /// Sub-window [m0, m1].
    pub fn window(&self, m0: i64, m1: i64) -> Result<Self> {
        if m0 > m1 || !self.contains(m0) || !self.contains(m1) {
            return Err(Error::invalid("window", format!("[{m0}, {m1}] not inside [{}, {}]", self.n0, self.n1)));
        }
        let a = (m0 - self.n0) as usize;
        let b = (m1 - self.n0) as usize;
        Ok(JacobiSegment {
            n0: m0,
            n1: m1,
            p: self.p[a..=b].to_vec(),
            q: self.q[a..=b].to_vec(),
        })
    }

    /// CSV with header `n,p,q`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,p,q\n");
        for (k, (p, q)) in self.p.iter().zip(&self.q).enumerate() {
            out.push_str(&format!("{},{:e},{:e}\n", self.n0 + k as i64, p, q));
        }
        out
    }
}

/// Coefficients of the reflectionless matrix with divisor D at site 0 on the
/// window [n0, n1]: forward steps for n ≥ 0, steps on the dual state for n < 0.
pub fn coefficients(gs: &GapSystem, d: &Divisor, n0: i64, n1: i64) -> Result<JacobiSegment> {
    coefficients_with_precision(gs, d, n0, n1, DEFAULT_PREC_BITS)
}

pub fn coefficients_with_precision(
    gs: &GapSystem,
    d: &Divisor,
    n0: i64,
    n1: i64,
    prec: usize,
) -> Result<JacobiSegment> {
    let state = CfState::from_divisor(gs, d, prec)?;
    coefficients_from_state(&state, n0, n1)
}

pub fn coefficients_from_state(state: &CfState, n0: i64, n1: i64) -> Result<JacobiSegment> {
    if n0 > n1 {
        return Err(Error::invalid("range", format!("need n0 ≤ n1, got [{n0}, {n1}]")));
    }
    let len = (n1 - n0 + 1) as usize;
    let mut p = vec![0.0; len];
    let mut q = vec![0.0; len];
    let mut put = |n: i64, pn: Option<f64>, qn: Option<f64>| {
        if n >= n0 && n <= n1 {
            let i = (n - n0) as usize;
            if let Some(v) = pn {
                p[i] = v;
            }
            if let Some(v) = qn {
                q[i] = v;
            }
        }
    };
    put(0, Some(state.p0sq().sqrt()), None);
    // forward: step k gives q_k and p_{k+1}
    let mut s = state.clone();
    for k in 0..=n1.max(-1) {
        let step = cf_step(&s)?;
        put(k, None, Some(step.q));
        put(k + 1, Some(step.p_next_sq.sqrt()), None);
        s = step.next;
    }
    // backward: step m - 1 on the dual gives q_{-m} and p_{-m}
    if n0 < 0 {
        let mut s = dual_state(state)?;
        for m in 1..=-n0 {
            let step = cf_step(&s)?;
            put(-m, Some(step.p_next_sq.sqrt()), Some(step.q));
            s = step.next;
        }
    }
    JacobiSegment::new(n0, p, q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_matrix_window() {
        let gs = GapSystem::interval(-2.0, 2.0).unwrap();
        let d = Divisor::new(&gs, vec![]).unwrap();
        let seg = coefficients(&gs, &d, -5, 5).unwrap();
        assert_eq!(seg.len(), 11);
        for n in -5..=5 {
            assert!((seg.p(n) - 1.0).abs() < 1e-15);
            assert!(seg.q(n).abs() < 1e-15);
        }
        assert!(seg.to_csv().starts_with("n,p,q\n-5,"));
    }

    #[test]
    fn window_bounds_checked() {
        let seg = JacobiSegment::new(-1, vec![1.0, 1.0, 1.0], vec![0.0; 3]).unwrap();
        assert!(seg.window(0, 1).is_ok());
        assert!(seg.window(0, 2).is_err());
        assert!(JacobiSegment::new(0, vec![1.0, 0.0], vec![0.0; 2]).is_err());
    }
}
