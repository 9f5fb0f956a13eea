//! One step of the continued fraction of r₊ on the algebraic data (T, Π, p₀²).
//!
//! Given T and Π with Π | R - T², the next coefficient q_n makes
//! T̃ = T - 2(z - q_n)Π satisfy deg(R - T̃²) ≤ 2N, and then
//! R - T̃² = -4 p_{n+1}² Π Π_{n+1}, T_{n+1} = -T̃.

use std::sync::Arc;

use crate::config::DEFAULT_PREC_BITS;
use crate::error::{Error, Result};
use crate::herglotz::{Divisor, HerglotzPair, Sign};
use crate::mp::{abs, is_negative, is_zero, mp, reprec, to_f64, Mp, MpPoly};
use crate::spectral_set::GapSystem;

const MAX_PREC_BITS: usize = 2048;

#[derive(Debug)]
struct Context {
    gs: GapSystem,
    prec: usize,
    r: MpPoly,
    ends: Vec<Mp>,
    gap_ends: Vec<(Mp, Mp)>,
}

impl Context {
    fn new(gs: &GapSystem, prec: usize) -> Arc<Self> {
        let ends: Vec<Mp> = gs.endpoints().iter().map(|&e| mp(e, prec)).collect();
        let r = MpPoly::from_roots(&ends, prec);
        let gap_ends = gs
            .gaps()
            .iter()
            .map(|&(a, b)| (mp(a, prec), mp(b, prec)))
            .collect();
        Arc::new(Context { gs: gs.clone(), prec, r, ends, gap_ends })
    }

    /// √R(x) on the closed gap g (real, with the gap's branch sign).
    fn sqrt_r_gap(&self, g: usize, x: &Mp) -> Mp {
        let mut prod = mp(1.0, self.prec);
        for e in &self.ends {
            prod = &prod * &abs(&(x - e));
        }
        let s = prod.sqrt();
        if self.gs.gap_branch_sign(g) < 0.0 {
            -s
        } else {
            s
        }
    }

    fn eps_tol(&self) -> f64 {
        2f64.powi(-((5 * self.prec / 8) as i32))
    }

    fn snap_tol(&self) -> f64 {
        self.gs.diameter() * 2f64.powi(-((self.prec / 2) as i32))
    }
}

/// Resolvent data at one shift position, in working precision.
#[derive(Debug, Clone)]
pub struct CfState {
    ctx: Arc<Context>,
    t: MpPoly,
    roots: Vec<Mp>,
    eps: Vec<Sign>,
    p0sq: Mp,
}

/// Output of [`cf_step`].
#[derive(Debug, Clone)]
pub struct CfStep {
    pub q: f64,
    pub p_next_sq: f64,
    pub next: CfState,
}

impl CfState {
    /// Builds T for the divisor by matching the two leading coefficients of
    /// √R at infinity and interpolating T(x_j) = ε_j √R(x_j).
    pub fn from_divisor(gs: &GapSystem, d: &Divisor, prec: usize) -> Result<Self> {
        if prec < 53 {
            return Err(Error::invalid("prec", format!("need at least 53 bits, got {prec}")));
        }
        if d.len() != gs.genus() {
            return Err(Error::invalid("divisor", "length does not match the number of gaps"));
        }
        let ctx = Context::new(gs, prec);
        let roots: Vec<Mp> = d.points().iter().map(|p| mp(p.x, prec)).collect();
        let eps: Vec<Sign> = d.points().iter().map(|p| p.eps).collect();
        let t = interpolate_t(&ctx, &roots, &eps);
        let s0 = &ctx.r - &(&t * &t);
        let n = gs.genus();
        let p0sq = -(s0.coef(2 * n)) / mp(4.0, prec);
        if !is_negative(&-p0sq.clone()) {
            return Err(Error::Invariant(format!(
                "p0² = {} is not positive for this divisor",
                to_f64(&p0sq)
            )));
        }
        Ok(CfState { ctx, t, roots, eps, p0sq })
    }

    /// Free Jacobi matrix data for a single interval, or any gap system with
    /// its base divisor.
    pub fn base(gs: &GapSystem) -> Result<Self> {
        Self::from_divisor(gs, &Divisor::base(gs), DEFAULT_PREC_BITS)
    }

    pub fn gap_system(&self) -> &GapSystem {
        &self.ctx.gs
    }

    pub fn prec(&self) -> usize {
        self.ctx.prec
    }

    pub fn divisor(&self) -> Divisor {
        let xs: Vec<f64> = self.roots.iter().map(to_f64).collect();
        Divisor::clamped(&self.ctx.gs, &xs, &self.eps)
    }

    /// Divisor points in working precision.
    pub fn roots(&self) -> &[Mp] {
        &self.roots
    }

    pub fn signs(&self) -> &[Sign] {
        &self.eps
    }

    pub fn p0sq(&self) -> f64 {
        to_f64(&self.p0sq)
    }

    /// q₀ = (Σ endpoints)/2 - Σ x_j.
    pub fn q0(&self) -> f64 {
        let prec = self.ctx.prec;
        let mut s = mp(0.0, prec);
        for e in &self.ctx.ends {
            s = &s + e;
        }
        s = &s / &mp(2.0, prec);
        for x in &self.roots {
            s = &s - x;
        }
        to_f64(&s)
    }

    pub fn t_coefficients(&self) -> Vec<f64> {
        self.t.to_f64()
    }

    /// Converts the state to a higher working precision, re-polishing the
    /// divisor against T(x) = ε√R(x).
    pub fn with_precision(&self, prec: usize) -> Result<Self> {
        let ctx = Context::new(&self.ctx.gs, prec);
        let t = self.t.with_precision(prec);
        let p0sq = reprec(&self.p0sq, prec);
        let mut roots = Vec::with_capacity(self.roots.len());
        for (g, x) in self.roots.iter().enumerate() {
            let mut x = reprec(x, prec);
            let (a, b) = &ctx.gap_ends[g];
            if x != *a && x != *b {
                let s = self.eps[g].value();
                // T² - R vanishes at x; Newton on T - ε√R keeps the simple root
                let dt = t.derivative();
                for _ in 0..6 {
                    let sr = ctx.sqrt_r_gap(g, &x);
                    let f = &t.eval(&x) - &(&sr * &mp(s, prec));
                    let dr = ctx.r.derivative().eval(&x);
                    let dsr = &dr / &(&sr * &mp(2.0, prec));
                    let df = &dt.eval(&x) - &(&dsr * &mp(s, prec));
                    if is_zero(&df) {
                        break;
                    }
                    let next = &x - &(&f / &df);
                    if next <= *a || next >= *b {
                        break;
                    }
                    x = next;
                }
            }
            roots.push(x);
        }
        Ok(CfState { ctx, t, roots, eps: self.eps.clone(), p0sq })
    }

    /// Double-precision view as a resolvent pair.
    pub fn pair(&self) -> Result<HerglotzPair> {
        let dual = dual_state(self)?;
        let dual_roots = dual.roots.iter().map(to_f64).collect();
        Ok(HerglotzPair::from_parts(
            self.ctx.gs.clone(),
            self.t_coefficients(),
            self.divisor(),
            dual_roots,
            self.p0sq(),
            self.q0(),
        ))
    }
}

/// T = z^{N+1} + s₁z^N + L(z), L of degree ≤ N-1 by Newton interpolation.
fn interpolate_t(ctx: &Context, roots: &[Mp], eps: &[Sign]) -> MpPoly {
    let prec = ctx.prec;
    let n = roots.len();
    // s₁ = -(Σ endpoints)/2 is the z^N coefficient of the series of √R
    let mut s1 = mp(0.0, prec);
    for e in &ctx.ends {
        s1 = &s1 - e;
    }
    s1 = &s1 / &mp(2.0, prec);
    let mut lead = vec![mp(0.0, prec); n + 2];
    lead[n + 1] = mp(1.0, prec);
    lead[n] = s1;
    let head = MpPoly::from_coefficients(lead, prec);

    // divided differences of y_j = ε_j√R(x_j) - head(x_j)
    let mut dd: Vec<Mp> = roots
        .iter()
        .enumerate()
        .map(|(g, x)| {
            let sr = ctx.sqrt_r_gap(g, x);
            let y = if eps[g] == Sign::Plus { sr } else { -sr };
            &y - &head.eval(x)
        })
        .collect();
    for level in 1..n {
        for i in (level..n).rev() {
            let num = &dd[i] - &dd[i - 1];
            let den = &roots[i] - &roots[i - level];
            dd[i] = &num / &den;
        }
    }
    // Newton form to monomial: L = dd0 + (z-x0)(dd1 + (z-x1)(...))
    let mut l = MpPoly::zero(prec);
    for i in (0..n).rev() {
        l = &(&l * &MpPoly::linear(&roots[i], prec)) + &MpPoly::from_coefficients(vec![dd[i].clone()], prec);
    }
    let mut t = &head + &l;
    t.truncate(n + 1);
    t
}

/// Divides `s` by ∏(z - x_j) and returns the monic quotient (scaled by the
/// leading coefficient of `s`) with the leading coefficient itself.
fn divide_by_roots(ctx: &Context, s: &MpPoly, roots: &[Mp]) -> Result<(MpPoly, Mp)> {
    let scale = s.norm_inf().max(f64::MIN_POSITIVE);
    let mut q = s.clone();
    for x in roots {
        let (quot, rem) = q.deflate(x);
        let r = to_f64(&abs(&rem));
        if r > ctx.eps_tol() * scale {
            return Err(Error::Precision {
                bits: ctx.prec,
                reason: format!("division remainder {r:e} exceeds tolerance"),
            });
        }
        q = quot;
    }
    let lead = q.leading().clone();
    let monic = q.scale(&(&mp(1.0, ctx.prec) / &lead));
    Ok((monic, lead))
}

/// One root of the monic polynomial `p` in each closed gap, with the sign
/// ε = sign(T(x)/√R(x)).
fn gap_roots(ctx: &Context, p: &MpPoly, t: &MpPoly) -> Result<(Vec<Mp>, Vec<Sign>)> {
    let n = ctx.gs.genus();
    let pf = p.to_f64();
    let eval_f = |x: f64| pf.iter().rev().fold(0.0, |acc, &c| acc * x + c);
    let dp = p.derivative();
    let prec = ctx.prec;
    let mut roots = Vec::with_capacity(n);
    let mut eps = Vec::with_capacity(n);
    for g in 0..n {
        let (a, b) = ctx.gs.gap(g);
        let (fa, fb) = (eval_f(a), eval_f(b));
        let x0 = if fa == 0.0 {
            a
        } else if fb == 0.0 {
            b
        } else if (fa < 0.0) != (fb < 0.0) {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..100 {
                let m = 0.5 * (lo + hi);
                if m <= lo || m >= hi {
                    break;
                }
                let fm = eval_f(m);
                if (fm < 0.0) == (flo < 0.0) {
                    lo = m;
                    flo = fm;
                } else {
                    hi = m;
                }
            }
            0.5 * (lo + hi)
        } else if fa.abs() <= fb.abs() {
            a
        } else {
            b
        };
        let mut x = mp(x0, prec);
        for _ in 0..12 {
            let d = dp.eval(&x);
            if is_zero(&d) {
                break;
            }
            let step = &p.eval(&x) / &d;
            x = &x - &step;
            let s = to_f64(&abs(&step));
            if s <= 2f64.powi(-(prec as i32 - 8)) * (1.0 + x0.abs()) {
                break;
            }
        }
        let (ma, mb) = &ctx.gap_ends[g];
        let at_end = if x <= *ma {
            let d = to_f64(&(ma - &x));
            if d > ctx.snap_tol() {
                return Err(root_escaped(g, to_f64(&x), a, b));
            }
            x = ma.clone();
            true
        } else if x >= *mb {
            let d = to_f64(&(&x - mb));
            if d > ctx.snap_tol() {
                return Err(root_escaped(g, to_f64(&x), a, b));
            }
            x = mb.clone();
            true
        } else {
            false
        };
        let e = if at_end {
            Sign::Plus
        } else {
            let tv = t.eval(&x);
            let sr = ctx.sqrt_r_gap(g, &x);
            if is_zero(&tv) || is_zero(&sr) || is_negative(&tv) == is_negative(&sr) {
                Sign::Plus
            } else {
                Sign::Minus
            }
        };
        roots.push(x);
        eps.push(e);
    }
    Ok((roots, eps))
}

fn root_escaped(g: usize, x: f64, a: f64, b: f64) -> Error {
    Error::Invariant(format!(
        "divisor point left gap {}: x = {x} outside [{a}, {b}]",
        g + 1
    ))
}

fn step_once(state: &CfState) -> Result<CfStep> {
    let ctx = &state.ctx;
    let prec = ctx.prec;
    let n = ctx.gs.genus();
    let pi = MpPoly::from_roots(&state.roots, prec);
    // q from the vanishing z^{2N+1} coefficient of R - T̃²
    let zpi = &pi * &MpPoly::from_f64(&[0.0, 1.0], prec);
    let w = &state.t - &zpi.scale(&mp(2.0, prec));
    let w2 = &w * &w;
    let q = &(&w2.coef(2 * n + 1) - &ctx.r.coef(2 * n + 1)) / &mp(4.0, prec);
    let t_tilde = &w + &pi.scale(&(&q * &mp(2.0, prec)));
    let mut s = &ctx.r - &(&t_tilde * &t_tilde);
    let scale = s.norm_inf().max(ctx.r.norm_inf());
    for k in [2 * n + 1, 2 * n + 2] {
        let c = to_f64(&abs(&s.coef(k)));
        if c > ctx.eps_tol() * scale {
            return Err(Error::Precision {
                bits: prec,
                reason: format!("degree reduction left coefficient {c:e} at z^{k}"),
            });
        }
    }
    s.truncate(2 * n);
    let p_next_sq = -(s.coef(2 * n)) / mp(4.0, prec);
    if !is_negative(&-p_next_sq.clone()) {
        return Err(Error::Invariant(format!(
            "p² = {} is not positive",
            to_f64(&p_next_sq)
        )));
    }
    let (quotient, _) = divide_by_roots(ctx, &s, &state.roots)?;
    let t_next = -&t_tilde;
    let (roots, eps) = gap_roots(ctx, &quotient, &t_next)?;
    Ok(CfStep {
        q: to_f64(&q),
        p_next_sq: to_f64(&p_next_sq),
        next: CfState { ctx: Arc::clone(ctx), t: t_next, roots, eps, p0sq: p_next_sq },
    })
}

/// Advances the state by one site: returns q_n, p_{n+1}² and the state at n+1.
/// On a precision failure the step is retried at doubled precision.
pub fn cf_step(state: &CfState) -> Result<CfStep> {
    let mut current = state.clone();
    loop {
        match step_once(&current) {
            Ok(step) => return Ok(step),
            Err(e @ (Error::Precision { .. } | Error::Invariant(_))) => {
                let prec = current.prec() * 2;
                if prec > MAX_PREC_BITS {
                    return Err(e);
                }
                current = current.with_precision(prec)?;
            }
            Err(e) => return Err(e),
        }
    }
}

fn dual_once(state: &CfState) -> Result<CfState> {
    let ctx = &state.ctx;
    let s0 = &ctx.r - &(&state.t * &state.t);
    let n = ctx.gs.genus();
    let mut s0 = s0;
    s0.truncate(2 * n);
    let (quotient, _) = divide_by_roots(ctx, &s0, &state.roots)?;
    let (roots, eps) = gap_roots(ctx, &quotient, &state.t)?;
    Ok(CfState {
        ctx: Arc::clone(ctx),
        t: state.t.clone(),
        roots,
        eps,
        p0sq: state.p0sq.clone(),
    })
}

/// State of the reflected matrix: divisor from the roots of
/// (R - T²)/(-4p₀²Π), same T and p₀². Stepping it yields q₋₁, p₋₁², q₋₂, …
pub fn dual_state(state: &CfState) -> Result<CfState> {
    let mut current = state.clone();
    loop {
        match dual_once(&current) {
            Ok(s) => return Ok(s),
            Err(e @ (Error::Precision { .. } | Error::Invariant(_))) => {
                let prec = current.prec() * 2;
                if prec > MAX_PREC_BITS {
                    return Err(e);
                }
                current = current.with_precision(prec)?;
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::herglotz::DivisorPoint;

    fn state(gs: &GapSystem, pts: &[(f64, Sign)]) -> CfState {
        let d = Divisor::new(
            gs,
            pts.iter().map(|&(x, eps)| DivisorPoint { x, eps }).collect(),
        )
        .unwrap();
        CfState::from_divisor(gs, &d, 128).unwrap()
    }

    #[test]
    fn free_matrix_is_a_fixed_point() {
        let gs = GapSystem::interval(-2.0, 2.0).unwrap();
        let s = state(&gs, &[]);
        let step = cf_step(&s).unwrap();
        assert!(step.q.abs() < 1e-30);
        assert!((step.p_next_sq - 1.0).abs() < 1e-30);
        assert_eq!(step.next.t_coefficients(), vec![0.0, 1.0]);
    }

    #[test]
    fn symmetric_gap_endpoint_divisor_has_period_two() {
        let gs = GapSystem::new(-2.0, 2.0, vec![(-1.0, 1.0)]).unwrap();
        let mut s = state(&gs, &[(-1.0, Sign::Plus)]);
        let mut qs = Vec::new();
        let mut ps = Vec::new();
        for _ in 0..8 {
            let step = cf_step(&s).unwrap();
            qs.push(step.q);
            ps.push(step.p_next_sq);
            s = step.next;
        }
        for k in 2..8 {
            assert!((qs[k] - qs[k - 2]).abs() < 1e-14, "q: {qs:?}");
            assert!((ps[k] - ps[k - 2]).abs() < 1e-14, "p²: {ps:?}");
        }
        // q₀ from the trace formula: 0 - (-1) = 1
        assert!((qs[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn positivity_over_many_steps() {
        let gs = GapSystem::new(-2.0, 2.5, vec![(-1.3, -0.4), (0.6, 1.1)]).unwrap();
        let mut s = state(&gs, &[(-0.9, Sign::Minus), (0.7, Sign::Plus)]);
        for _ in 0..200 {
            let step = cf_step(&s).unwrap();
            assert!(step.p_next_sq > 0.0);
            s = step.next;
        }
    }

    #[test]
    fn dual_is_an_involution() {
        let gs = GapSystem::new(-2.0, 2.5, vec![(-1.3, -0.4), (0.6, 1.1)]).unwrap();
        let s = state(&gs, &[(-0.9, Sign::Minus), (0.7, Sign::Plus)]);
        let back = dual_state(&dual_state(&s).unwrap()).unwrap();
        let (d0, d1) = (s.divisor(), back.divisor());
        for (a, b) in d0.points().iter().zip(d1.points()) {
            assert!((a.x - b.x).abs() < 1e-9);
            assert_eq!(a.eps, b.eps);
        }
    }

    #[test]
    fn free_matrix_is_self_dual() {
        let gs = GapSystem::interval(-2.0, 2.0).unwrap();
        let s = state(&gs, &[]);
        let d = dual_state(&s).unwrap();
        assert_eq!(d.t_coefficients(), s.t_coefficients());
        assert_eq!(d.p0sq(), 1.0);
    }
}
