use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::jacobi::JacobiSegment;
use crate::spectral_set::SpectralSet;

/// Eigenvalues (ascending) of the finite section on n0..=n1: diagonal q_n,
/// off-diagonal p_{n+1} between sites n and n+1.
pub fn truncation_eigenvalues(seg: &JacobiSegment) -> Result<Vec<f64>> {
    let m = seg.len();
    if m == 0 {
        return Err(Error::invalid("segment", "empty segment"));
    }
    let n0 = seg.n0();
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        let n = n0 + i as i64;
        a[(i, i)] = seg.q(n);
        if i + 1 < m {
            let p = seg.p(n + 1);
            a[(i, i + 1)] = p;
            a[(i + 1, i)] = p;
        }
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Kolmogorov–Smirnov distance between the empirical distribution of `ev`
/// and the density of states.
pub fn ks_distance_to_dos(ss: &SpectralSet, ev: &[f64]) -> Result<f64> {
    let m = ev.len() as f64;
    let mut sorted = ev.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = ss.dos_cdf(x)?;
        d = d.max((f - i as f64 / m).abs()).max(((i + 1) as f64 / m - f).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral_set::GapSystem;

    #[test]
    fn free_section_matches_chebyshev_zeros() {
        let seg = JacobiSegment::new(0, vec![1.0; 10], vec![0.0; 10]).unwrap();
        let ev = truncation_eigenvalues(&seg).unwrap();
        for (k, e) in ev.iter().enumerate() {
            let exact = 2.0 * (std::f64::consts::PI * (10 - k) as f64 / 11.0).cos();
            assert!((e - exact).abs() < 1e-12);
        }
        let ss = SpectralSet::new(GapSystem::interval(-2.0, 2.0).unwrap()).unwrap();
        assert!(ks_distance_to_dos(&ss, &ev).unwrap() < 0.1);
    }
}
