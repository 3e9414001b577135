use csgs_core::nonexistence::{
    g_pointwise, monotonicity_sweep, mu_free_bound, sharp_threshold, CouplingParams, SweepAxis,
};
use proptest::prelude::*;

/// `(c₄, c₆)` straight from the regime table.
fn regime_coefficients(q: f64, mu: f64) -> (f64, f64) {
    if q < 1.0 / 3.0 {
        (3.0 * q, q * mu)
    } else if q < 2.0 {
        (1.0, q * mu)
    } else {
        (1.0, 2.0 * mu)
    }
}

/// Supremum of the deficit over a dense log-spaced ladder.
fn brute_force(c: &CouplingParams) -> f64 {
    let (c4, c6) = regime_coefficients(c.q, c.mu);
    let n = 200_000;
    (0..=n)
        .map(|i| {
            let t = (-200.0 + 220.0 * i as f64 / n as f64).exp();
            c.lambda * t.powf(c.p - 1.0) - c4 * t * t - c6 * t.powi(4)
        })
        .fold(0.0, f64::max)
}

fn coupling() -> impl Strategy<Value = CouplingParams> {
    (1.05..4.95f64, -3.0..1.5f64, -2.0..2.0f64, -1.0..1.0f64).prop_map(|(p, lq, lmu, llambda)| CouplingParams {
        p,
        q: 10f64.powf(lq),
        mu: 10f64.powf(lmu),
        lambda: 10f64.powf(llambda),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn monotone_in_each_coupling(c in coupling(), bump in 1.01..3.0f64) {
        let base = sharp_threshold(&c).unwrap().omega_sharp;
        let q = sharp_threshold(&CouplingParams { q: c.q * bump, ..c }).unwrap().omega_sharp;
        let mu = sharp_threshold(&CouplingParams { mu: c.mu * bump, ..c }).unwrap().omega_sharp;
        let lambda = sharp_threshold(&CouplingParams { lambda: c.lambda * bump, ..c }).unwrap().omega_sharp;
        let slack = 1e-9 * base.max(1e-300);
        prop_assert!(q <= base + slack, "q: {q} > {base}");
        prop_assert!(mu <= base + slack, "mu: {mu} > {base}");
        prop_assert!(lambda + slack >= base, "lambda: {lambda} < {base}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn sufficient_dominates_sharp(c in coupling()) {
        let res = sharp_threshold(&c).unwrap();
        prop_assert!(res.omega_sharp >= 0.0);
        if res.omega_sharp > 0.0 {
            prop_assert!(res.log_omega_sufficient >= res.log_omega_sharp - 1e-12);
        }
        prop_assert!(res.omega_sufficient >= res.omega_sharp);
    }

    #[test]
    fn matches_dense_search(c in coupling()) {
        // close to p = 3 with λ < c₄ the maximizer drifts below e^{−200}
        prop_assume!(c.p < 4.5 && (c.p - 3.0).abs() > 0.05);
        let res = sharp_threshold(&c).unwrap();
        let brute = brute_force(&c);
        prop_assume!(brute.is_finite() && brute < 1e200);
        // the ladder can only undershoot the supremum
        prop_assert!(res.omega_sharp >= brute * (1.0 - 1e-12), "{} < {brute}", res.omega_sharp);
        prop_assert!(res.omega_sharp <= brute * (1.0 + 1e-4), "{} vs {brute}", res.omega_sharp);
    }

    #[test]
    fn g_positive_above_threshold(c in coupling()) {
        let res = sharp_threshold(&c).unwrap();
        prop_assume!(res.omega_sharp > 1e-6 && res.omega_sharp < 1e6);
        let omega = res.omega_sharp * (1.0 + 1e-6);
        for i in 0..200 {
            let t = (-6.0 + 12.0 * i as f64 / 199.0).exp();
            prop_assert!(g_pointwise(t, omega, &c).unwrap() > 0.0, "t = {t}");
        }
        let t = res.t_star.unwrap();
        prop_assert!(g_pointwise(t, res.omega_sharp * (1.0 - 1e-6), &c).unwrap() < 0.0);
    }
}

#[test]
fn cubic_closed_form() {
    for (q, mu, lambda) in [(0.1, 1.0, 1.0), (0.05, 2.0, 3.0), (1.0, 1.0, 2.0), (0.5, 0.3, 4.0), (3.0, 1.0, 5.0), (1.0, 1.0, 0.5)] {
        let c = CouplingParams { p: 3.0, q, mu, lambda };
        let (c4, c6) = regime_coefficients(q, mu);
        let expected = if lambda > c4 { (lambda - c4).powi(2) / (4.0 * c6) } else { 0.0 };
        let got = sharp_threshold(&c).unwrap().omega_sharp;
        assert!((got - expected).abs() <= 1e-9 * expected.max(1.0), "q={q}: {got} vs {expected}");
    }
}

#[test]
fn tangency_at_cubic_threshold() {
    let c = CouplingParams { p: 3.0, q: 0.1, mu: 1.0, lambda: 1.0 };
    assert!(g_pointwise(3.5f64.sqrt(), 1.225, &c).unwrap().abs() < 1e-12);
}

#[test]
fn quadratic_exponent_bounded_in_mu() {
    let c = CouplingParams { p: 2.0, q: 0.1, mu: 1.0, lambda: 1.0 };
    let mus: Vec<f64> = (0..=24).map(|i| 10f64.powf(-3.0 + 0.25 * i as f64)).collect();
    let table = monotonicity_sweep(SweepAxis::Mu, &c, &mus).unwrap();
    assert!(table.monotone());
    let bound = mu_free_bound(&c).unwrap();
    // μ → 0 drops the sextic term: sup (λt − c₄t²) = λ²/(4c₄)
    assert!((bound - 1.0 / 1.2).abs() < 1e-9, "{bound}");
    assert!(table.rows.iter().all(|r| r.omega_sharp <= bound * (1.0 + 1e-12)));
    assert_eq!(table.bounded, Some(true));
}

#[test]
fn q_sweep_table() {
    let c = CouplingParams { p: 3.0, q: 0.1, mu: 1.0, lambda: 1.0 };
    let table = monotonicity_sweep(SweepAxis::Q, &c, &[0.05, 0.1, 0.2]).unwrap();
    let expected = [3.6125, 1.225, 0.2];
    for (row, e) in table.rows.iter().zip(expected) {
        assert!((row.omega_sharp - e).abs() < 1e-9, "{} vs {e}", row.omega_sharp);
    }
    assert!(table.monotone());
}
