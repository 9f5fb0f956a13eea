use widomspec::herglotz::{split_resolvents, Divisor, DivisorPoint, Sign};
use widomspec::jacobi::coefficients;
use widomspec::oracle::half_line_coefficients;
use widomspec::spectral_set::GapSystem;

fn divisor(gs: &GapSystem, pts: &[(f64, Sign)]) -> Divisor {
    Divisor::new(gs, pts.iter().map(|&(x, eps)| DivisorPoint { x, eps }).collect()).unwrap()
}

fn compare(gs: &GapSystem, d: &Divisor, n: usize) -> f64 {
    let pair = split_resolvents(gs, d).unwrap();
    let (q, psq) = half_line_coefficients(&pair, n, 1e-12).unwrap();
    let seg = coefficients(gs, d, 0, n as i64).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        worst = worst.max((seg.q(k as i64) - q[k]).abs());
        worst = worst.max((seg.p(k as i64 + 1).powi(2) - psq[k]).abs());
    }
    worst
}

#[test]
fn one_gap_matches_stieltjes() {
    let gs = GapSystem::new(-2.0, 2.0, vec![(-0.7, 0.4)]).unwrap();
    for pts in [[(0.1, Sign::Plus)], [(-0.3, Sign::Minus)], [(-0.7, Sign::Plus)]] {
        let err = compare(&gs, &divisor(&gs, &pts), 30);
        assert!(err < 1e-8, "{pts:?}: {err:e}");
    }
}

#[test]
fn two_gap_matches_stieltjes() {
    let gs = GapSystem::new(-2.0, 2.5, vec![(-1.3, -0.4), (0.6, 1.1)]).unwrap();
    let d = divisor(&gs, &[(-0.9, Sign::Minus), (0.7, Sign::Plus)]);
    let err = compare(&gs, &d, 30);
    assert!(err < 1e-8, "{err:e}");
}
