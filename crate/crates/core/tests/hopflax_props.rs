use poincare_lab::hopflax::{expansion_defect, hopf_lax, hopf_lax_reference, GridFunction};
use poincare_lab::measure::UniformGrid;
use proptest::prelude::*;

fn grid() -> UniformGrid {
    UniformGrid::new(-2.0, 2.0, 401).unwrap()
}

/// Smooth random `h` from a few sine modes.
fn smooth(coeffs: &[(f64, f64)]) -> impl Fn(f64) -> f64 + '_ {
    move |x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, (a, p))| a * ((k + 1) as f64 * x + p).sin())
            .sum()
    }
}

fn modes() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, 0.0..6.3f64), 1..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scaling_identity(c in modes(), k in 1usize..=10) {
        let g = grid();
        let h = GridFunction::from_fn(&g, smooth(&c)).unwrap();
        let t = k as f64 / 10.0;
        let a = hopf_lax(&h.scaled(t), 1.0, &g).unwrap();
        let b = hopf_lax(&h, t, &g).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x - t * y).abs() <= 1e-12);
        }
    }

    #[test]
    fn semigroup_within_grid_tolerance(c in modes(), s in 0.05..1.0f64, t in 0.05..1.0f64) {
        let g = grid();
        let h = GridFunction::from_fn(&g, smooth(&c)).unwrap();
        let two = hopf_lax(&hopf_lax(&h, t, &g).unwrap(), s, &g).unwrap();
        let one = hopf_lax(&h, s + t, &g).unwrap();
        let tol = 5.0 * g.dx() * h.lipschitz(g.dx());
        for (x, y) in two.values().iter().zip(one.values()) {
            prop_assert!((x - y).abs() <= tol, "{} vs {} (tol {})", x, y, tol);
        }
    }

    #[test]
    fn monotone_in_time_and_sandwiched(c in modes(), s in 0.01..1.0f64, dt in 0.0..1.0f64) {
        let g = grid();
        let h = GridFunction::from_fn(&g, smooth(&c)).unwrap();
        let lip = h.lipschitz(g.dx());
        let qs = hopf_lax(&h, s, &g).unwrap();
        let qt = hopf_lax(&h, s + dt, &g).unwrap();
        for ((a, b), hv) in qs.values().iter().zip(qt.values()).zip(h.values()) {
            prop_assert!(a >= b);
            prop_assert!(*a <= *hv);
            prop_assert!(*a >= hv - 0.5 * lip * lip * s - 1e-12);
        }
    }

    #[test]
    fn order_preserving(c in modes(), shift in 0.0..1.0f64, t in 0.01..2.0f64) {
        let g = grid();
        let lo = GridFunction::from_fn(&g, smooth(&c)).unwrap();
        let hi = GridFunction::new(lo.values().iter().zip(g.nodes()).map(|(v, x)| v + shift * (1.0 + x.sin())).collect()).unwrap();
        let (a, b) = (hopf_lax(&lo, t, &g).unwrap(), hopf_lax(&hi, t, &g).unwrap());
        prop_assert!(a.values().iter().zip(b.values()).all(|(x, y)| x <= y));
    }

    #[test]
    fn window_matches_brute_force(v in prop::collection::vec(-3.0..3.0f64, 60), t in 0.001..3.0f64) {
        let g = UniformGrid::new(0.0, 1.0, 60).unwrap();
        let h = GridFunction::new(v).unwrap();
        prop_assert_eq!(hopf_lax(&h, t, &g).unwrap(), hopf_lax_reference(&h, t, &g).unwrap());
    }
}

/// Least-squares slope of `log defect` against `log t`.
pub fn loglog_slope(ts: &[f64], ds: &[f64]) -> f64 {
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

#[test]
fn expansion_is_little_o_of_t_squared() {
    let g = UniformGrid::new(-1.0, 1.0, 4001).unwrap();
    let h = GridFunction::from_fn(&g, |x| (std::f64::consts::PI * x).cos()).unwrap();
    let ts = [1e-1, 5e-2, 2e-2, 1e-2];
    let ds: Vec<f64> = ts.iter().map(|&t| expansion_defect(&h, t, &g).unwrap()).collect();
    assert!(loglog_slope(&ts, &ds) > 2.0, "{ds:?}");
}
