use std::sync::Arc;

use csgs_core::energy::{breakdown, gamma_from_breakdown};
use csgs_core::fibration::{fibration_root, g_value, path_value, scale};
use csgs_core::grid::{make_grid, Grid};
use csgs_core::verify::{Family, Sample, Term};
use csgs_core::{project_to_M, Params};
use proptest::prelude::*;

fn grid() -> Arc<Grid> {
    Arc::new(make_grid(12.0, 1201, 1.0).unwrap())
}

fn term() -> impl Strategy<Value = Term> {
    (0..3usize, 0.2..2.0f64, any::<bool>(), 0.5..3.0f64, 0.5..3.0f64).prop_map(|(f, a, neg, w, k)| Term {
        family: [Family::Gaussian, Family::Bump, Family::Oscillatory][f],
        amplitude: if neg { -a } else { a },
        width: w,
        wavenumber: k,
    })
}

fn sample() -> impl Strategy<Value = Sample> {
    prop::collection::vec(term(), 1..=3).prop_map(|terms| Sample { terms })
}

fn params() -> impl Strategy<Value = (Params, f64)> {
    (5.5..9.0f64, 0.2..3.0f64, 0.05..3.0f64, 0.05..3.0f64, 0.2..3.0f64, 0.05..0.95f64).prop_map(
        |(p, omega, mu, q, lambda, s)| {
            let hi = if p >= 7.0 { 3.0 } else { (2.0 / (7.0 - p)).min(3.0) };
            (Params::new(omega, mu, q, lambda, p).unwrap(), 1.0 + s * (hi - 1.0))
        },
    )
}

fn log_ladder(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn nonzero(s: &Sample, g: &Arc<Grid>) -> bool {
    s.on(g).values().iter().any(|v| v.abs() > 1e-6)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_has_one_sign_change(s in sample(), (params, alpha) in params()) {
        let g = grid();
        prop_assume!(nonzero(&s, &g));
        let bd = breakdown(&s.on(&g), &params);
        let vals: Vec<f64> = log_ladder(1e-3, 1e3, 121)
            .into_iter()
            .map(|t| g_value(&bd, t, &params, alpha))
            .collect();
        for w in vals.windows(2) {
            prop_assert!(w[1] < w[0] || (w[0].abs() + w[1].abs()) == 0.0);
        }
        let changes = vals.windows(2).filter(|w| w[0] > 0.0 && w[1] <= 0.0).count();
        prop_assert!(changes <= 1);
    }

    #[test]
    fn root_maximizes_path(s in sample(), (params, alpha) in params()) {
        let g = grid();
        prop_assume!(nonzero(&s, &g));
        let bd = breakdown(&s.on(&g), &params);
        let t = fibration_root(&bd.functionals(), &params, alpha).unwrap();
        let top = path_value(&bd, t, &params, alpha);
        for tt in log_ladder(1e-3, 1e3, 50) {
            let v = path_value(&bd, tt, &params, alpha);
            prop_assert!(v <= top + 1e-10 * top.abs().max(1.0), "t={tt}: {v} > {top}");
        }
        for f in [0.5, 0.9] {
            prop_assert!(path_value(&bd, f * t, &params, alpha) < top);
        }
        for f in [1.1, 2.0] {
            prop_assert!(path_value(&bd, f * t, &params, alpha) < top);
        }
    }

    #[test]
    fn projection_is_idempotent(s in sample(), (params, alpha) in params()) {
        let g = Arc::new(make_grid(12.0, 12001, 1.0).unwrap());
        prop_assume!(nonzero(&s, &g));
        let u = s.on(&g);
        // the projected profile has to stay resolvable on the grid
        let t0 = fibration_root(&breakdown(&u, &params).functionals(), &params, alpha).unwrap();
        prop_assume!(t0 > 1.0 / 30.0 && t0 < 30.0);
        let first = project_to_M(&u, &params, alpha).unwrap();
        prop_assert!(first.gamma_residual <= 1e-9);
        let again = project_to_M(&first.u_star, &params, alpha).unwrap();
        prop_assert!((again.t_star - 1.0).abs() <= 1e-8, "t = {}", again.t_star);
    }
}

#[test]
fn derivative_of_path_matches_g() {
    let g = grid();
    let u = g.sample(|r| (-r * r / 2.0).exp());
    let params = Params::unit(6.0);
    let alpha = 1.5;
    let bd = breakdown(&u, &params);
    for t in [0.3, 1.0, 2.0, 5.0] {
        let h = 1e-5 * t;
        let fd = (path_value(&bd, t + h, &params, alpha) - path_value(&bd, t - h, &params, alpha)) / (2.0 * h);
        let predicted = t.powf(8.0 * alpha - 5.0) * g_value(&bd, t, &params, alpha);
        assert!((fd - predicted).abs() <= 1e-6 * fd.abs().max(1.0), "t={t}: {fd} vs {predicted}");
    }
}

#[test]
fn gamma_along_path() {
    // Γ(u_t) = t γ'(t) = t^{8α−4} g(t); u_t = t^α e^{−t²r²/2} sampled exactly
    let g = Arc::new(make_grid(10.0, 200001, 1.0).unwrap());
    let u = g.sample(|r| (-r * r / 2.0).exp());
    let params = Params::unit(6.0);
    let alpha = 1.5;
    let bd = breakdown(&u, &params);
    let t: f64 = 2.0;
    let ut = g.sample(|r| t.powf(alpha) * (-t * t * r * r / 2.0).exp());
    let direct = gamma_from_breakdown(&breakdown(&ut, &params), alpha);
    let predicted = t.powf(8.0 * alpha - 4.0) * g_value(&bd, t, &params, alpha);
    assert!((direct - predicted).abs() <= 1e-6 * predicted.abs(), "{direct} vs {predicted}");
}

#[test]
fn gaussian_sign_structure() {
    let g = grid();
    let u = g.sample(|r| (-r * r / 2.0).exp());
    let params = Params::unit(6.0);
    let bd = breakdown(&u, &params);
    assert!(g_value(&bd, 1e-3, &params, 1.5) > 0.0);
    assert!(g_value(&bd, 1e3, &params, 1.5) < 0.0);
    assert!(g_value(&bd, 1e-6, &params, 1.5) > 0.0);
    assert!(g_value(&bd, 1e6, &params, 1.5) < 0.0);
}

#[test]
fn projection_commutes_with_prescaling() {
    let g = Arc::new(make_grid(20.0, 8001, 1.0).unwrap());
    let u = g.sample(|r| (-r * r / 2.0).exp());
    let params = Params::unit(6.0);
    let alpha = 1.5;
    let base = project_to_M(&u, &params, alpha).unwrap();
    let s = 1.3;
    let pre = project_to_M(&scale(&u, s, alpha).unwrap(), &params, alpha).unwrap();
    assert!((pre.t_star - base.t_star / s).abs() <= 1e-4 * base.t_star);
    let gap = base
        .u_star
        .values()
        .iter()
        .zip(pre.u_star.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 1e-4 * base.u_star.max_abs(), "gap {gap}");
}
