use nalgebra::{Complex, Matrix2};
use num_complex::Complex64;

use crate::error::{Error, Result};

use super::segment::JacobiSegment;

pub type CMatrix2 = Matrix2<Complex64>;

/// j = [[0, 1], [-1, 0]].
pub fn j_matrix() -> CMatrix2 {
    let one = Complex::new(1.0, 0.0);
    let zero = Complex::new(0.0, 0.0);
    Matrix2::new(zero, one, -one, zero)
}

fn check_range(seg: &JacobiSegment, n: usize) -> Result<()> {
    if !seg.contains(0) || !seg.contains(n as i64 + 1) {
        return Err(Error::invalid(
            "n",
            format!("segment [{}, {}] must contain 0..={}", seg.n0(), seg.n1(), n + 1),
        ));
    }
    Ok(())
}

/// First- and second-kind polynomials P_k, Q_k for k = 0..=n:
/// P₀ = 1, Q₀ = 0, p₁P₁ = z - q₀, p₁Q₁ = 1 and
/// p_{k+1}X_{k+1} = (z - q_k)X_k - p_k X_{k-1}.
pub fn orthogonal_polys_upto(seg: &JacobiSegment, z: Complex64, n: usize) -> Result<Vec<(Complex64, Complex64)>> {
    if !seg.contains(0) || !seg.contains(n.max(1) as i64) {
        return Err(Error::invalid(
            "n",
            format!("segment [{}, {}] must contain 0..={}", seg.n0(), seg.n1(), n.max(1)),
        ));
    }
    let mut out = Vec::with_capacity(n + 1);
    let (mut p_prev, mut q_prev) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let (mut p_cur, mut q_cur) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
    out.push((p_cur, q_cur));
    for k in 0..n {
        let k = k as i64;
        let pk1 = seg.p(k + 1);
        let (p_next, q_next) = if k == 0 {
            ((z - seg.q(0)) / pk1, Complex64::new(1.0 / pk1, 0.0))
        } else {
            (
                ((z - seg.q(k)) * p_cur - seg.p(k) * p_prev) / pk1,
                ((z - seg.q(k)) * q_cur - seg.p(k) * q_prev) / pk1,
            )
        };
        p_prev = p_cur;
        q_prev = q_cur;
        p_cur = p_next;
        q_cur = q_next;
        out.push((p_cur, q_cur));
    }
    Ok(out)
}

/// (P_n(z), Q_n(z)).
pub fn orthogonal_polys(seg: &JacobiSegment, z: Complex64, n: usize) -> Result<(Complex64, Complex64)> {
    Ok(*orthogonal_polys_upto(seg, z, n)?.last().expect("non-empty"))
}

/// 𝔄_n(z) = [[P_n, Q_n], [p_{n+1}P_{n+1}, p_{n+1}Q_{n+1}]].
pub fn transfer_matrix(seg: &JacobiSegment, z: Complex64, n: usize) -> Result<CMatrix2> {
    check_range(seg, n)?;
    let polys = orthogonal_polys_upto(seg, z, n + 1)?;
    let (pn, qn) = polys[n];
    let (pn1, qn1) = polys[n + 1];
    let pk = seg.p(n as i64 + 1);
    Ok(Matrix2::new(pn, qn, pk * pn1, pk * qn1))
}

fn frobenius(m: &CMatrix2) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// ‖(𝔄*j𝔄 - j)/(z - z̄) - Σ_{k=0}^{n} [P̄_k; Q̄_k][P_k, Q_k]‖ for Im z ≠ 0.
pub fn cd_residual(seg: &JacobiSegment, z: Complex64, n: usize) -> Result<f64> {
    if z.im == 0.0 {
        return Err(Error::invalid("z", "needs Im z ≠ 0; use j_unitarity_residual on the real line"));
    }
    let lhs = cd_kernel(seg, z, n)?;
    let polys = orthogonal_polys_upto(seg, z, n)?;
    let mut rhs = CMatrix2::zeros();
    for (p, q) in polys {
        let col = nalgebra::Vector2::new(p.conj(), q.conj());
        let row = nalgebra::RowVector2::new(p, q);
        rhs += col * row;
    }
    Ok(frobenius(&(lhs - rhs)))
}

/// (𝔄*j𝔄 - j)/(z - z̄).
pub fn cd_kernel(seg: &JacobiSegment, z: Complex64, n: usize) -> Result<CMatrix2> {
    let a = transfer_matrix(seg, z, n)?;
    let j = j_matrix();
    Ok((a.adjoint() * j * a - j) / (z - z.conj()))
}

/// ‖𝔄*j𝔄 - j‖ at a real point.
pub fn j_unitarity_residual(seg: &JacobiSegment, x: f64, n: usize) -> Result<f64> {
    let a = transfer_matrix(seg, Complex64::new(x, 0.0), n)?;
    let j = j_matrix();
    Ok(frobenius(&(a.adjoint() * j * a - j)))
}

/// Smallest eigenvalue of the Hermitian matrix (𝔄*j𝔄 - j)/(z - z̄).
pub fn j_expanding_min_eigenvalue(seg: &JacobiSegment, z: Complex64, n: usize) -> Result<f64> {
    let k = cd_kernel(seg, z, n)?;
    let a = k[(0, 0)].re;
    let d = k[(1, 1)].re;
    let b = 0.5 * (k[(0, 1)] + k[(1, 0)].conj());
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    Ok(mean - rad)
}

/// |det 𝔄 - 1|.
pub fn det_residual(seg: &JacobiSegment, z: Complex64, n: usize) -> Result<f64> {
    let a = transfer_matrix(seg, z, n)?;
    Ok((a.determinant() - 1.0).norm())
}
