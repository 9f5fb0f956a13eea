//! Comb parameters (frequencies and slit heights) of a gap system, the inverse
//! parameter problem, and finite-band truncation of a comb.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::abel::kernel_at_origin;
use crate::error::{Error, Result};
use crate::herglotz::{Divisor, DivisorPoint, Sign};
use crate::spectral_set::{GapSystem, SpectralSet};

/// One slit of the comb: abscissa -πω, height h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tooth {
    pub omega: f64,
    pub h: f64,
}

/// Finite comb, or the head of an infinite one with the sum of the omitted
/// heights bounded by `tail_bound` (`f64::INFINITY` when it diverges).
#[derive(Debug, Clone, PartialEq)]
pub struct CombData {
    teeth: Vec<Tooth>,
    tail_bound: f64,
}

impl CombData {
    pub fn new(teeth: Vec<Tooth>, tail_bound: f64) -> Result<Self> {
        for (j, t) in teeth.iter().enumerate() {
            if !(t.omega > 0.0 && t.omega < 1.0) {
                return Err(Error::invalid("teeth", format!("tooth {}: omega = {} not in (0, 1)", j + 1, t.omega)));
            }
            if !(t.h > 0.0 && t.h.is_finite()) {
                return Err(Error::invalid("teeth", format!("tooth {}: height {} must be positive", j + 1, t.h)));
            }
        }
        for j in 0..teeth.len() {
            for k in 0..j {
                if teeth[j].omega == teeth[k].omega {
                    return Err(Error::invalid(
                        "teeth",
                        format!("teeth {} and {} share omega = {}", k + 1, j + 1, teeth[j].omega),
                    ));
                }
            }
        }
        if tail_bound.is_nan() || tail_bound < 0.0 {
            return Err(Error::invalid("tail_bound", "must be a nonnegative number or inf"));
        }
        Ok(CombData { teeth, tail_bound })
    }

    pub fn finite(teeth: Vec<Tooth>) -> Result<Self> {
        Self::new(teeth, 0.0)
    }

    pub fn teeth(&self) -> &[Tooth] {
        &self.teeth
    }

    pub fn len(&self) -> usize {
        self.teeth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.teeth.is_empty()
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn is_finite(&self) -> bool {
        self.tail_bound == 0.0
    }

    /// Σh over the listed teeth.
    pub fn height_sum(&self) -> f64 {
        self.teeth.iter().map(|t| t.h).sum()
    }

    /// Set when the total height (including the declared tail) is finite.
    pub fn widom(&self) -> bool {
        self.tail_bound.is_finite() && self.height_sum().is_finite()
    }

    /// Δ(0) = exp(-Σh); for a truncated comb this is an upper bound.
    pub fn delta0(&self) -> f64 {
        (-self.height_sum()).exp()
    }

    /// Lower bound exp(-Σh - tail) for Δ(0); zero without the Widom flag.
    pub fn delta0_lower(&self) -> f64 {
        (-(self.height_sum() + self.tail_bound)).exp()
    }

    /// Teeth sorted from the leftmost slit (largest ω) to the rightmost, which
    /// is the left-to-right order of the gaps.
    pub fn sorted(&self) -> CombData {
        let mut teeth = self.teeth.clone();
        teeth.sort_by(|a, b| b.omega.total_cmp(&a.omega));
        CombData { teeth, tail_bound: self.tail_bound }
    }
}

/// Search result for an integer relation Σ m_j ω_j ∈ ℤ.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependenceReport {
    pub max_coefficient: i64,
    pub relation: Option<Vec<i64>>,
    pub defect: f64,
}

/// Looks for m ≠ 0 with |m_j| ≤ `max_coef` and Σ m_j ω_j within `tol` of an
/// integer. Rationally independent frequencies give `relation: None`.
pub fn independence_check(omega: &[f64], max_coef: i64, tol: f64) -> IndependenceReport {
    let n = omega.len();
    let span = (2 * max_coef + 1) as usize;
    let mut best: Option<(Vec<i64>, f64)> = None;
    let mut m = vec![-max_coef; n];
    if n > 0 && span.checked_pow(n as u32).is_some() {
        loop {
            if m.iter().any(|&c| c != 0) {
                let s: f64 = m.iter().zip(omega).map(|(&c, w)| c as f64 * w).sum();
                let d = (s - s.round()).abs();
                if d <= tol && best.as_ref().is_none_or(|b| d < b.1) {
                    best = Some((m.clone(), d));
                }
            }
            let mut i = 0;
            while i < n {
                m[i] += 1;
                if m[i] <= max_coef {
                    break;
                }
                m[i] = -max_coef;
                i += 1;
            }
            if i == n {
                break;
            }
        }
    }
    match best {
        Some((r, d)) => IndependenceReport { max_coefficient: max_coef, relation: Some(r), defect: d },
        None => IndependenceReport { max_coefficient: max_coef, relation: None, defect: f64::NAN },
    }
}

/// ω_j = frequencies, h_j = G(c_j), in gap order.
pub fn comb_from_gaps(ss: &SpectralSet) -> CombData {
    let teeth = ss
        .frequencies()
        .iter()
        .zip(ss.heights())
        .map(|(&omega, &h)| Tooth { omega, h })
        .collect();
    CombData { teeth, tail_bound: 0.0 }
}

/// Options of the inverse parameter problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CombSolver {
    /// outer ends of E, which pin translation and scale
    pub b0: f64,
    pub a0: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl CombSolver {
    pub fn new(b0: f64, a0: f64) -> Self {
        CombSolver { b0, a0, tol: 1e-11, max_iter: 60 }
    }
}

/// Gap endpoints from log segment lengths; the last segment has weight 1.
fn layout(b0: f64, a0: f64, y: &[f64]) -> Option<Vec<(f64, f64)>> {
    let n = y.len() / 2;
    let shift = y.iter().fold(0.0f64, |m, v| m.max(*v));
    let mut w: Vec<f64> = y.iter().map(|v| (v - shift).exp()).collect();
    w.push((-shift).exp());
    let total: f64 = w.iter().sum();
    let d = a0 - b0;
    let mut e = b0;
    let mut ends = Vec::with_capacity(2 * n);
    for wi in w.iter().take(2 * n) {
        e += d * wi / total;
        ends.push(e);
    }
    let gaps: Vec<(f64, f64)> = (0..n).map(|j| (ends[2 * j], ends[2 * j + 1])).collect();
    let ok = gaps.iter().all(|g| g.0 < g.1)
        && gaps.windows(2).all(|p| p[0].1 < p[1].0)
        && gaps.first().is_none_or(|g| g.0 > b0)
        && gaps.last().is_none_or(|g| g.1 < a0);
    ok.then_some(gaps)
}

fn unlayout(b0: f64, a0: f64, gaps: &[(f64, f64)]) -> Vec<f64> {
    let mut ends = vec![b0];
    for &(a, b) in gaps {
        ends.push(a);
        ends.push(b);
    }
    ends.push(a0);
    let lens: Vec<f64> = ends.windows(2).map(|p| p[1] - p[0]).collect();
    let last = *lens.last().unwrap();
    lens[..lens.len() - 1].iter().map(|l| (l / last).ln()).collect()
}

fn forward(b0: f64, a0: f64, y: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let gaps = layout(b0, a0, y)?;
    let gs = GapSystem::new(b0, a0, gaps).ok()?;
    let ss = SpectralSet::new(gs).ok()?;
    let logh = ss.heights().iter().map(|h| h.ln()).collect::<Vec<_>>();
    if logh.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((ss.frequencies().to_vec(), logh))
}

fn residual(b0: f64, a0: f64, y: &[f64], omega: &[f64], logh: &[f64]) -> Option<Vec<f64>> {
    let (w, lh) = forward(b0, a0, y)?;
    let mut r: Vec<f64> = w.iter().zip(omega).map(|(a, b)| a - b).collect();
    r.extend(lh.iter().zip(logh).map(|(a, b)| a - b));
    Some(r)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Damped Newton with a forward-difference Jacobian.
fn newton(s: &CombSolver, y0: &[f64], omega: &[f64], logh: &[f64]) -> (Vec<f64>, f64) {
    let m = y0.len();
    let mut y = y0.to_vec();
    let Some(mut r) = residual(s.b0, s.a0, &y, omega, logh) else {
        return (y, f64::INFINITY);
    };
    let mut rn = max_abs(&r);
    for _ in 0..s.max_iter {
        if rn <= s.tol {
            break;
        }
        let h = 1e-7;
        let mut jac = DMatrix::zeros(m, m);
        let mut ok = true;
        for k in 0..m {
            let mut yk = y.clone();
            yk[k] += h;
            match residual(s.b0, s.a0, &yk, omega, logh) {
                Some(rk) => {
                    for i in 0..m {
                        jac[(i, k)] = (rk[i] - r[i]) / h;
                    }
                }
                None => ok = false,
            }
        }
        if !ok {
            break;
        }
        let rhs = DVector::from_iterator(m, r.iter().map(|v| -v));
        let Some(step) = jac.lu().solve(&rhs) else { break };
        // cap the move in log-length space
        let big = step.amax();
        let cap = if big > 2.0 { 2.0 / big } else { 1.0 };
        let mut lambda = cap;
        let mut improved = false;
        for _ in 0..25 {
            let trial: Vec<f64> = y.iter().zip(step.iter()).map(|(a, b)| a + lambda * b).collect();
            if let Some(rt) = residual(s.b0, s.a0, &trial, omega, logh) {
                let rtn = max_abs(&rt);
                if rtn < rn {
                    y = trial;
                    r = rt;
                    rn = rtn;
                    improved = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (y, rn)
}

/// Starting layout: slits placed as for the single interval, widths from the
/// local Green-function slope.
fn initial_gaps(s: &CombSolver, comb: &CombData) -> Vec<(f64, f64)> {
    let (b0, a0) = (s.b0, s.a0);
    let mid = 0.5 * (a0 + b0);
    let half = 0.5 * (a0 - b0);
    let centres: Vec<f64> = comb.teeth.iter().map(|t| mid + half * (PI * t.omega).cos()).collect();
    let mut bounds = vec![b0];
    bounds.extend(centres.windows(2).map(|p| 0.5 * (p[0] + p[1])));
    bounds.push(a0);
    centres
        .iter()
        .zip(&comb.teeth)
        .enumerate()
        .map(|(j, (&x, t))| {
            let room = (x - bounds[j]).min(bounds[j + 1] - x);
            let w = (t.h * ((x - b0) * (a0 - x)).sqrt()).min(0.45 * room);
            (x - w, x + w)
        })
        .collect()
}

/// Gap system with the given comb, [b0, a0] fixed by the solver options.
pub fn gaps_from_comb(comb: &CombData, solver: &CombSolver) -> Result<GapSystem> {
    if !comb.is_finite() {
        return Err(Error::invalid("tail_bound", "the inverse problem needs a finite comb"));
    }
    if !(solver.b0 < solver.a0) {
        return Err(Error::invalid("bracket", format!("need b0 < a0, got [{}, {}]", solver.b0, solver.a0)));
    }
    let comb = comb.sorted();
    if comb.is_empty() {
        return GapSystem::interval(solver.b0, solver.a0);
    }
    let omega: Vec<f64> = comb.teeth.iter().map(|t| t.omega).collect();
    let logh: Vec<f64> = comb.teeth.iter().map(|t| t.h.ln()).collect();
    let y0 = unlayout(solver.b0, solver.a0, &initial_gaps(solver, &comb));
    let (y, rn) = newton(solver, &y0, &omega, &logh);
    if rn <= solver.tol {
        return finish(solver, &y);
    }
    homotopy(solver, &y0, &omega, &logh).map_err(|e| match e {
        Error::NoConvergence { iterations, residual, .. } if rn < residual => {
            no_convergence(solver, &y, iterations, rn)
        }
        e => e,
    })
}

fn finish(s: &CombSolver, y: &[f64]) -> Result<GapSystem> {
    let gaps = layout(s.b0, s.a0, y).ok_or_else(|| Error::Invariant("gap layout collapsed".into()))?;
    GapSystem::new(s.b0, s.a0, gaps)
}

fn no_convergence(s: &CombSolver, y: &[f64], iters: usize, rn: f64) -> Error {
    let last = layout(s.b0, s.a0, y).map(|g| format!("{g:?}")).unwrap_or_else(|| "degenerate".into());
    Error::no_convergence(format!("comb inverse problem (last iterate gaps {last})"), iters, rn)
}

/// Continuation from the comb of the starting layout to the target comb.
fn homotopy(s: &CombSolver, y0: &[f64], omega: &[f64], logh: &[f64]) -> Result<GapSystem> {
    let Some((w0, lh0)) = forward(s.b0, s.a0, y0) else {
        return Err(no_convergence(s, y0, 0, f64::INFINITY));
    };
    let mut y = y0.to_vec();
    let mut t = 0.0f64;
    let mut dt = 0.25;
    let mut steps = 0;
    while t < 1.0 {
        steps += 1;
        if dt < 1e-4 || steps > 400 {
            let rn = residual(s.b0, s.a0, &y, omega, logh).map(|r| max_abs(&r)).unwrap_or(f64::INFINITY);
            return Err(no_convergence(s, &y, steps, rn));
        }
        let tn = (t + dt).min(1.0);
        let w: Vec<f64> = w0.iter().zip(omega).map(|(a, b)| (1.0 - tn) * a + tn * b).collect();
        let lh: Vec<f64> = lh0.iter().zip(logh).map(|(a, b)| (1.0 - tn) * a + tn * b).collect();
        let (yn, rn) = newton(s, &y, &w, &lh);
        if rn <= s.tol {
            y = yn;
            t = tn;
            dt *= 1.5;
        } else {
            dt *= 0.5;
        }
    }
    finish(s, &y)
}

/// Keeps teeth with h > 1/n, lowered by 1/n.
pub fn truncate_comb(comb: &CombData, n: f64) -> Result<CombData> {
    if !(n > 0.0) {
        return Err(Error::invalid("n", "truncation level must be positive"));
    }
    let cut = 1.0 / n;
    let teeth = comb
        .teeth
        .iter()
        .filter(|t| t.h > cut)
        .map(|t| Tooth { omega: t.omega, h: t.h - cut })
        .collect();
    Ok(CombData { teeth, tail_bound: 0.0 })
}

/// Δ_n(0) = exp(-Σ truncated heights) for each n.
pub fn widom_delta_report(comb: &CombData, ns: &[f64]) -> Result<Vec<(f64, f64)>> {
    ns.iter()
        .map(|&n| Ok((n, truncate_comb(comb, n)?.delta0())))
        .collect()
}

/// How a divisor point is placed in the gap belonging to one tooth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DivisorSpec {
    /// x = a + s(b - a), s ∈ [0, 1]
    Relative { s: f64, eps: Sign },
    /// x at the critical point of the gap
    Critical { eps: Sign },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelTruncationRow {
    pub n: f64,
    pub teeth: usize,
    pub kernel: f64,
    pub delta: f64,
}

/// k_n(0) of the divisor held at fixed gap-relative positions, on the gap
/// system of each truncated comb. Teeth that do not survive drop their point.
pub fn kernel_truncation_report(
    comb: &CombData,
    spec: &[DivisorSpec],
    ns: &[f64],
    solver: &CombSolver,
) -> Result<Vec<KernelTruncationRow>> {
    if spec.len() != comb.len() {
        return Err(Error::invalid("divisor", format!("expected {} entries, one per tooth", comb.len())));
    }
    for d in spec {
        if let DivisorSpec::Relative { s, .. } = d {
            if !(0.0..=1.0).contains(s) {
                return Err(Error::invalid("divisor", format!("relative position {s} not in [0, 1]")));
            }
        }
    }
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        if !(n > 0.0) {
            return Err(Error::invalid("n", "truncation level must be positive"));
        }
        let cut = 1.0 / n;
        let mut kept: Vec<(Tooth, DivisorSpec)> = comb
            .teeth
            .iter()
            .zip(spec)
            .filter(|(t, _)| t.h > cut)
            .map(|(t, d)| (Tooth { omega: t.omega, h: t.h - cut }, *d))
            .collect();
        kept.sort_by(|a, b| b.0.omega.total_cmp(&a.0.omega));
        let truncated = CombData { teeth: kept.iter().map(|k| k.0).collect(), tail_bound: 0.0 };
        let gs = gaps_from_comb(&truncated, solver)?;
        let ss = SpectralSet::new(gs)?;
        let points = kept
            .iter()
            .enumerate()
            .map(|(g, (_, d))| {
                let (a, b) = ss.gap_system().gap(g);
                match *d {
                    DivisorSpec::Relative { s, eps } => DivisorPoint { x: a + s * (b - a), eps },
                    DivisorSpec::Critical { eps } => DivisorPoint { x: ss.critical_points().c[g], eps },
                }
            })
            .collect();
        let divisor = Divisor::new(ss.gap_system(), points)?;
        rows.push(KernelTruncationRow {
            n,
            teeth: truncated.len(),
            kernel: kernel_at_origin(&ss, &divisor)?,
            delta: (-ss.widom_sum()).exp(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ss(gaps: Vec<(f64, f64)>) -> SpectralSet {
        SpectralSet::new(GapSystem::new(-2.0, 2.0, gaps).unwrap()).unwrap()
    }

    #[test]
    fn symmetric_comb_has_centred_slit() {
        let comb = comb_from_gaps(&ss(vec![(-1.0, 1.0)]));
        assert!((comb.teeth()[0].omega - 0.5).abs() < 1e-13);
        assert!(comb.teeth()[0].h > 0.0);
    }

    #[test]
    fn roundtrip_one_and_two_gaps() {
        for gaps in [vec![(-1.0, 1.0)], vec![(-1.3, -0.7), (0.2, 0.9)], vec![(-1.9, -1.85), (1.0, 1.01)]] {
            let comb = comb_from_gaps(&ss(gaps.clone()));
            let back = gaps_from_comb(&comb, &CombSolver::new(-2.0, 2.0)).unwrap();
            for (g, h) in gaps.iter().zip(back.gaps()) {
                assert!((g.0 - h.0).abs() < 1e-6 * g.0.abs().max(1.0), "{gaps:?} -> {:?}", back.gaps());
                assert!((g.1 - h.1).abs() < 1e-6 * g.1.abs().max(1.0));
            }
        }
    }

    #[test]
    fn small_tooth_gives_small_gap() {
        let comb = CombData::finite(vec![Tooth { omega: 0.3, h: 1e-6 }]).unwrap();
        let gs = gaps_from_comb(&comb, &CombSolver::new(-2.0, 2.0)).unwrap();
        let (a, b) = gs.gap(0);
        assert!(b - a < 1e-5);
    }

    #[test]
    fn truncation_arithmetic() {
        let omegas = [0.2, 0.5, 0.7];
        let teeth = omegas.iter().zip([0.5, 0.2, 0.05]).map(|(&omega, h)| Tooth { omega, h }).collect();
        let comb = CombData::finite(teeth).unwrap();
        let t = truncate_comb(&comb, 10.0).unwrap();
        let hs: Vec<f64> = t.teeth().iter().map(|t| t.h).collect();
        assert_eq!(hs.len(), 2);
        assert!((hs[0] - 0.4).abs() < 1e-15 && (hs[1] - 0.1).abs() < 1e-15);
        assert!(truncate_comb(&comb, 2.0).unwrap().is_empty());
        let report = widom_delta_report(&comb, &[1.0, 5.0, 10.0, 100.0, 1e9]).unwrap();
        assert!(report.windows(2).all(|p| p[1].1 <= p[0].1));
        assert!((report.last().unwrap().1 - comb.delta0()).abs() < 1e-8);
    }

    #[test]
    fn geometric_tail_limit() {
        let teeth: Vec<Tooth> = (1..=50).map(|j| Tooth { omega: 1.0 / (j as f64 + 1.5), h: 0.5f64.powi(j) }).collect();
        let comb = CombData::new(teeth, 0.5f64.powi(50)).unwrap();
        assert!((comb.delta0() - (-1.0f64).exp()).abs() < 1e-12);
        assert!(comb.widom());
        assert!(!CombData::new(vec![], f64::INFINITY).unwrap().widom());
    }

    #[test]
    fn relation_search() {
        let r = independence_check(&[0.25, 0.5], 5, 1e-12);
        assert!(r.relation.is_some());
        let r = independence_check(&[2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0], 5, 1e-9);
        assert!(r.relation.is_none());
    }

    #[test]
    fn kernel_report_envelopes() {
        let comb = comb_from_gaps(&ss(vec![(-1.3, -0.7), (0.2, 0.9)]));
        let spec = [DivisorSpec::Critical { eps: Sign::Minus }; 2];
        let solver = CombSolver::new(-2.0, 2.0);
        let rows = kernel_truncation_report(&comb, &spec, &[100.0, 1000.0], &solver).unwrap();
        for r in &rows {
            assert!((r.kernel - 1.0).abs() < 1e-12);
        }
        let spec = [DivisorSpec::Critical { eps: Sign::Plus }; 2];
        let rows = kernel_truncation_report(&comb, &spec, &[100.0, 1000.0], &solver).unwrap();
        for r in &rows {
            assert!((r.kernel - r.delta * r.delta).abs() < 1e-12);
        }
        assert!(rows[1].kernel <= rows[0].kernel);
    }
}
