use crate::error::{Error, Result};

use super::segment::JacobiSegment;

/// max_j distance of x_j to the nearest integer.
pub fn torus_distance(x: &[f64]) -> f64 {
    x.iter()
        .map(|v| {
            let f = v - v.round();
            f.abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NearPeriod {
    pub n: usize,
    /// ‖nω‖ on the torus
    pub torus_distance: f64,
    /// sup_k |q_{k+n} - q_k| + |p_{k+n} - p_k| over the window
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlmostPeriodicityReport {
    pub window: usize,
    pub near_periods: Vec<NearPeriod>,
    /// largest discrepancy among the near-periods
    pub worst: f64,
    /// worst ≤ eps
    pub passes: bool,
}

/// Scans shifts n = 1..=n_max with ‖nω‖ < δ and measures how far the
/// coefficient sequence is from being n-periodic over `window` consecutive
/// sites starting at the left end of the segment.
pub fn almost_periodicity_report(
    seg: &JacobiSegment,
    omega: &[f64],
    delta: f64,
    eps: f64,
    n_max: usize,
    window: usize,
) -> Result<AlmostPeriodicityReport> {
    if window == 0 {
        return Err(Error::invalid("window", "must be positive"));
    }
    let p = seg.p_values();
    let q = seg.q_values();
    let mut near = Vec::new();
    for n in 1..=n_max {
        let shifted: Vec<f64> = omega.iter().map(|w| w * n as f64).collect();
        let d = torus_distance(&shifted);
        if d >= delta {
            continue;
        }
        if n + window > p.len() {
            return Err(Error::invalid(
                "segment",
                format!("needs {} sites for shift {n} and window {window}, has {}", n + window, p.len()),
            ));
        }
        let disc = (0..window)
            .map(|k| (q[k + n] - q[k]).abs() + (p[k + n] - p[k]).abs())
            .fold(0.0, f64::max);
        near.push(NearPeriod { n, torus_distance: d, discrepancy: disc });
    }
    let worst = near.iter().map(|np| np.discrepancy).fold(0.0, f64::max);
    Ok(AlmostPeriodicityReport { window, near_periods: near, worst, passes: worst <= eps })
}
