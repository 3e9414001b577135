//! The scaling `u_t(r) = t^α u(tr)`, the fibration path `γ_u(t) = I(u_t)` and
//! the projection onto the constraint set `𝓜 = {u ≠ 0 : Γ(u) = 0}`.

use serde::{Deserialize, Serialize};

use crate::energy::{breakdown, Coefficients, FunctionalBreakdown, Functionals, Params};
use crate::error::{invalid, CsgsError, Result};
use crate::grid::{h1_norm, RadialFunction};
use crate::interp::Pchip;

/// Inputs with `‖u‖_{H¹}` below this are treated as zero.
pub const ZERO_FLOOR: f64 = 1e-12;
pub const MAX_DOUBLINGS: usize = 60;
/// Relative width at which the bisection for `t(u)` stops.
pub const BISECTION_WIDTH: f64 = 1e-12;
/// Resampling moves `Γ` off zero by interpolation error, so the projection is
/// repeated on its own output at most this many times.
const MAX_REPROJECTIONS: usize = 8;
const REPROJECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub alpha: f64,
}

impl ScalingConfig {
    pub fn new(alpha: f64, p: f64) -> Result<Self> {
        check_alpha(alpha, p)?;
        Ok(Self { alpha })
    }

    pub fn default_for(p: f64) -> Result<Self> {
        Ok(Self {
            alpha: default_alpha(p)?,
        })
    }
}

/// Open interval of admissible α for exponent `p`; the upper end is infinite
/// for `p ≥ 7`.
pub fn alpha_window(p: f64) -> Result<(f64, f64)> {
    if !(p > 5.0) {
        return Err(CsgsError::ExponentOutOfRange {
            p,
            range: "p > 5",
        });
    }
    let upper = if p < 7.0 { 2.0 / (7.0 - p) } else { f64::INFINITY };
    Ok((1.0, upper))
}

fn check_alpha(alpha: f64, p: f64) -> Result<()> {
    let (lo, hi) = alpha_window(p)?;
    if alpha.is_finite() && alpha > lo && alpha < hi {
        Ok(())
    } else {
        let window = if hi.is_finite() {
            format!("1 < alpha < {hi}")
        } else {
            "alpha > 1".to_owned()
        };
        Err(CsgsError::InadmissibleAlpha { alpha, p, window })
    }
}

/// 2 for `p ≥ 7`, otherwise the midpoint of the admissible window.
pub fn default_alpha(p: f64) -> Result<f64> {
    let (lo, hi) = alpha_window(p)?;
    Ok(if hi.is_finite() { 0.5 * (lo + hi) } else { 2.0 })
}

/// `u_t(r) = t^α u(tr)` resampled onto the grid of `u`; zero where `tr > R`.
pub fn scale(u: &RadialFunction, t: f64, alpha: f64) -> Result<RadialFunction> {
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    if t == 1.0 {
        return Ok(u.clone());
    }
    let grid = u.grid();
    let r = grid.nodes();
    let radius = grid.radius();
    let interp = Pchip::new(r, u.values(), Some(0.0));
    let factor = t.powf(alpha);
    let inside: Vec<f64> = r.iter().map(|&x| t * x).take_while(|&x| x <= radius).collect();
    let mut values: Vec<f64> = interp.eval_sorted(&inside).into_iter().map(|v| factor * v).collect();
    values.resize(r.len(), 0.0);
    RadialFunction::new(grid.clone(), values)
}

/// `I(u_t)` from the six scalars of `u`, without resampling.
pub fn path_value(bd: &FunctionalBreakdown, t: f64, params: &Params, alpha: f64) -> f64 {
    Coefficients::path(params, alpha, t).apply(&bd.functionals())
}

/// `γ'_u(t) / t^{8α−5}`, strictly decreasing in `t`.
pub fn g_value(bd: &FunctionalBreakdown, t: f64, params: &Params, alpha: f64) -> f64 {
    let (pos, neg) = g_terms(&bd.functionals(), params, alpha);
    let lt = t.ln();
    let sum = |terms: &[(f64, f64)]| terms.iter().map(|&(c, k)| c * (k * lt).exp()).sum::<f64>();
    sum(&pos) - sum(&neg)
}

/// `(coefficient, power of t)` for the positive and negative parts of `g`.
fn g_terms(s: &Functionals, params: &Params, alpha: f64) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let k = Coefficients::gamma(params, alpha);
    let pos = vec![
        (k.a * s.a, 4.0 - 6.0 * alpha),
        (k.b * s.b, 2.0 - 6.0 * alpha),
        (k.c * s.c, 4.0 - 4.0 * alpha),
        (k.d * s.d, -2.0 * alpha),
        (k.e * s.e, 0.0),
    ];
    let neg = vec![(k.f * s.f, (params.p - 7.0) * alpha + 2.0)];
    (pos, neg)
}

fn log_sum(terms: &[(f64, f64)], x: f64) -> f64 {
    let logs: Vec<f64> = terms
        .iter()
        .filter(|(c, _)| *c > 0.0)
        .map(|&(c, k)| c.ln() + k * x)
        .collect();
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
}

/// Root of `g` in `t`, found in `x = ln t` with the sign taken from the
/// difference of log-sums so that extreme `t` never overflow.
pub fn fibration_root(s: &Functionals, params: &Params, alpha: f64) -> Result<f64> {
    let (pos, neg) = g_terms(s, params, alpha);
    let sign = |x: f64| log_sum(&pos, x) - log_sum(&neg, x);
    let step = std::f64::consts::LN_2;
    let s0 = sign(0.0);
    if s0 == 0.0 {
        return Ok(1.0);
    }
    let dir = if s0 > 0.0 { 1.0 } else { -1.0 };
    let mut inner = 0.0;
    let mut outer = None;
    for k in 1..=MAX_DOUBLINGS {
        let x = dir * step * k as f64;
        let v = sign(x);
        if v == 0.0 {
            return Ok(x.exp());
        }
        if (v > 0.0) != (s0 > 0.0) {
            outer = Some(x);
            break;
        }
        inner = x;
    }
    let outer = outer.ok_or(CsgsError::BracketNotFound {
        doublings: MAX_DOUBLINGS,
    })?;
    // the bracket [lo, hi] has g(lo) > 0 > g(hi)
    let (mut lo, mut hi) = if dir > 0.0 { (inner, outer) } else { (outer, inner) };
    while hi - lo > BISECTION_WIDTH {
        let mid = 0.5 * (lo + hi);
        let v = sign(mid);
        if v == 0.0 {
            return Ok(mid.exp());
        }
        if v > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

#[derive(Debug, Clone)]
pub struct Projection {
    pub t_star: f64,
    pub u_star: RadialFunction,
    pub breakdown: FunctionalBreakdown,
    /// `|Γ(u_star)|` divided by the sum of the magnitudes of its terms.
    pub gamma_residual: f64,
}

/// `|Γ|` relative to the sum of the absolute values of its six terms.
pub fn relative_gamma(bd: &FunctionalBreakdown, params: &Params, alpha: f64) -> f64 {
    let k = Coefficients::gamma(params, alpha);
    let s = bd.functionals();
    let scale = k.magnitude(&s);
    if scale == 0.0 {
        0.0
    } else {
        k.apply(&s).abs() / scale
    }
}

/// Unique `t(u)` with `u_{t(u)} ∈ 𝓜`, and the rescaled function.
#[allow(non_snake_case)]
pub fn project_to_M(u: &RadialFunction, params: &Params, alpha: f64) -> Result<Projection> {
    check_alpha(alpha, params.p)?;
    let norm = h1_norm(u);
    if !(norm >= ZERO_FLOOR) {
        return Err(CsgsError::ZeroInput {
            norm,
            floor: ZERO_FLOOR,
        });
    }
    // always resample the original u, so the correction iterates on one
    // continuous function of t instead of compounding interpolation error
    let mut t_total = 1.0;
    let mut current = u.clone();
    let mut bd = breakdown(&current, params);
    for _ in 0..MAX_REPROJECTIONS {
        let t = fibration_root(&bd.functionals(), params, alpha)?;
        if (t - 1.0).abs() <= BISECTION_WIDTH {
            break;
        }
        t_total *= t;
        current = scale(u, t_total, alpha)?;
        bd = breakdown(&current, params);
        if relative_gamma(&bd, params, alpha) <= REPROJECTION_TOL {
            break;
        }
    }
    Ok(Projection {
        t_star: t_total,
        gamma_residual: relative_gamma(&bd, params, alpha),
        u_star: current,
        breakdown: bd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{functionals, gamma};
    use crate::grid::make_grid;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn gaussian() -> RadialFunction {
        Arc::new(make_grid(12.0, 2401, 1.0).unwrap()).sample(|r| (-r * r / 2.0).exp())
    }

    #[test]
    fn alpha_admissibility() {
        assert!(ScalingConfig::new(1.5, 6.0).is_ok());
        assert!(ScalingConfig::new(2.0, 6.0).is_err());
        assert!(ScalingConfig::new(1.0, 6.0).is_err());
        assert!(ScalingConfig::new(50.0, 8.0).is_ok());
        assert!(ScalingConfig::new(1.5, 5.0).is_err());
        assert_eq!(default_alpha(6.0).unwrap(), 1.5);
        assert_eq!(default_alpha(7.0).unwrap(), 2.0);
        assert_eq!(default_alpha(9.0).unwrap(), 2.0);
    }

    #[test]
    fn identity_scale_and_bad_t() {
        let u = gaussian();
        assert_eq!(scale(&u, 1.0, 1.5).unwrap(), u);
        assert!(scale(&u, 0.0, 1.5).is_err());
        assert!(scale(&u, -1.0, 1.5).is_err());
    }

    #[test]
    fn scaling_laws() {
        let u = gaussian();
        let p = 6.0;
        let s = functionals(&u, p);
        let st = functionals(&scale(&u, 2.0, 1.5).unwrap(), p);
        assert_relative_eq!(st.b, 2f64.powf(1.0) * s.b, max_relative = 1e-4);
        assert_relative_eq!(st.f, 2f64.powf(7.0 * 1.5 - 2.0) * s.f, max_relative = 1e-4);
    }

    #[test]
    fn path_matches_resampling() {
        let u = gaussian();
        let params = Params::unit(6.0);
        let bd = breakdown(&u, &params);
        assert_relative_eq!(path_value(&bd, 1.0, &params, 1.5), bd.energy, max_relative = 1e-14);
        for t in [0.5, 2.0] {
            let direct = breakdown(&scale(&u, t, 1.5).unwrap(), &params).energy;
            assert_relative_eq!(path_value(&bd, t, &params, 1.5), direct, max_relative = 1e-3);
        }
    }

    #[test]
    fn g_signs_and_monotone() {
        let params = Params::unit(6.0);
        let bd = breakdown(&gaussian(), &params);
        assert!(g_value(&bd, 1e-6, &params, 1.5) > 0.0);
        assert!(g_value(&bd, 1e6, &params, 1.5) < 0.0);
        let ladder: Vec<f64> = (0..60).map(|k| g_value(&bd, 10f64.powf(-3.0 + 0.1 * k as f64), &params, 1.5)).collect();
        assert!(ladder.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn projection_lands_on_constraint() {
        let u = gaussian();
        let params = Params::unit(6.0);
        let proj = project_to_M(&u, &params, 1.5).unwrap();
        let bd = &proj.breakdown;
        let g = gamma(&proj.u_star, &params, 1.5).unwrap();
        assert!(g.abs() <= 1e-9 * (1.5 * bd.nehari.abs() + bd.pohozaev.abs()), "{g:e}");
        let again = project_to_M(&proj.u_star, &params, 1.5).unwrap();
        assert!((again.t_star - 1.0).abs() < 1e-8);
    }

    #[test]
    fn zero_input_rejected() {
        let u = gaussian().grid().zeros();
        assert!(matches!(
            project_to_M(&u, &Params::unit(6.0), 1.5),
            Err(CsgsError::ZeroInput { .. })
        ));
    }
}
