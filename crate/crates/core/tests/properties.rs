use proptest::prelude::*;

use widomspec::abel::{
    abel_map, delta_at_origin, invert_abel, kernel_at_origin, measure_box, shift_covariance_residual, BoxFactor,
};
use widomspec::comb::{truncate_comb, CombData, Tooth};
use widomspec::herglotz::{Divisor, DivisorPoint, Sign};
use widomspec::spectral_set::{GapSystem, SpectralSet};

/// Gap endpoints in (-2, 2) with separation at least 0.05.
fn gap_system(max_gaps: usize) -> impl Strategy<Value = GapSystem> {
    (1..=max_gaps).prop_flat_map(|n| {
        prop::collection::vec(0.05f64..1.0, 2 * n + 1).prop_map(move |w| {
            let total: f64 = w.iter().sum();
            let mut x = -2.0;
            let mut pts = Vec::new();
            for v in &w[..2 * n] {
                x += 4.0 * v / total;
                pts.push(x);
            }
            let spread = pts.windows(2).all(|p| p[1] - p[0] > 0.02);
            let gaps = (0..n).map(|j| (pts[2 * j], pts[2 * j + 1])).collect();
            (spread, GapSystem::new(-2.0, 2.0, gaps))
        })
    })
    .prop_filter_map("endpoints too close", |(ok, gs)| if ok { gs.ok() } else { None })
}

fn with_divisor(max_gaps: usize) -> impl Strategy<Value = (GapSystem, Divisor)> {
    gap_system(max_gaps).prop_flat_map(|gs| {
        let n = gs.genus();
        (Just(gs), prop::collection::vec((0.01f64..0.99, any::<bool>()), n)).prop_map(|(gs, s)| {
            let points = gs
                .gaps()
                .iter()
                .zip(&s)
                .map(|(&(a, b), &(t, plus))| DivisorPoint {
                    x: a + (b - a) * t,
                    eps: if plus { Sign::Plus } else { Sign::Minus },
                })
                .collect();
            let d = Divisor::new(&gs, points).unwrap();
            (gs, d)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn kernel_lies_between_delta_squared_and_one((gs, d) in with_divisor(3)) {
        let ss = SpectralSet::new(gs).unwrap();
        let k = kernel_at_origin(&ss, &d).unwrap();
        let delta = delta_at_origin(&ss);
        prop_assert!(k >= delta * delta - 1e-14 && k <= 1.0 + 1e-14, "k = {k}, delta = {delta}");
    }

    #[test]
    fn abel_inversion_roundtrip((gs, d) in with_divisor(3)) {
        let ss = SpectralSet::new(gs).unwrap();
        let alpha = abel_map(&ss, &d);
        let back = invert_abel(&ss, &alpha, None).unwrap();
        prop_assert!(abel_map(&ss, &back).distance(&alpha) < 1e-10);
        for (p, q) in d.points().iter().zip(back.points()) {
            prop_assert!((p.x - q.x).abs() < 1e-7, "{} vs {}", p.x, q.x);
            prop_assert_eq!(p.eps, q.eps);
        }
    }

    #[test]
    fn shift_covariance_one_gap((gs, d) in with_divisor(1)) {
        let ss = SpectralSet::new(gs).unwrap();
        prop_assert!(shift_covariance_residual(&ss, &d).unwrap() < 1e-8);
    }

    #[test]
    fn harmonic_measure_is_a_probability(gs in gap_system(3), t in 0.0f64..1.0) {
        let ss = SpectralSet::new(gs.clone()).unwrap();
        let x = -2.5 + 5.0 * t;
        for k in 0..gs.genus() {
            let w = ss.harmonic_measure(k, x).unwrap();
            prop_assert!((0.0..=1.0).contains(&w));
        }
    }

    #[test]
    fn box_measure_symmetric_in_factor_order(gs in gap_system(2).prop_filter("two gaps", |g| g.genus() == 2),
                                             s in prop::array::uniform4(0.0f64..1.0)) {
        let ss = SpectralSet::new(gs.clone()).unwrap();
        let factor = |g: usize, u: f64, v: f64, eps| {
            let (a, b) = gs.gap(g);
            let (lo, hi) = if u < v { (u, v) } else { (v, u) };
            BoxFactor { gap: g, a: a + (b - a) * lo, b: a + (b - a) * hi, eps }
        };
        let f0 = factor(0, s[0], s[1], Sign::Plus);
        let f1 = factor(1, s[2], s[3], Sign::Minus);
        let m = measure_box(&ss, &[f0, f1]).unwrap();
        prop_assert!((0.0..=1.0).contains(&m));
        prop_assert!((m - measure_box(&ss, &[f1, f0]).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn truncated_delta_is_monotone(teeth in prop::collection::vec((0.01f64..0.99, 0.01f64..1.0), 1..12),
                                   n1 in 0.1f64..10.0, dn in 0.0f64..10.0) {
        let comb = CombData::finite(teeth.iter().map(|&(omega, h)| Tooth { omega, h }).collect()).unwrap();
        let d1 = truncate_comb(&comb, n1).unwrap().delta0();
        let d2 = truncate_comb(&comb, n1 + dn).unwrap().delta0();
        prop_assert!(d2 <= d1 + 1e-15);
        prop_assert!(d2 >= comb.delta0() - 1e-15);
    }
}
