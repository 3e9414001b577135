//! Strong-form residual of the stationary equation and far-field decay fits.

use serde::{Deserialize, Serialize};

use crate::energy::{signed_pow, Params};
use crate::error::{CsgsError, Result};
use crate::gauge::compute_gauge;
use crate::grid::{Grid, RadialFunction};

/// Finite-difference `Δf = f'' + f'/r` on a possibly graded grid: `2f''(0)`
/// at the origin and a mirrored ghost node at `R`.
pub fn radial_laplacian(f: &[f64], grid: &Grid) -> Vec<f64> {
    let r = grid.nodes();
    let n = r.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    out[0] = 4.0 * (f[1] - f[0]) / (r[1] * r[1]);
    for i in 1..n - 1 {
        let hm = r[i] - r[i - 1];
        let hp = r[i + 1] - r[i];
        let second = 2.0 * (hm * f[i + 1] - (hm + hp) * f[i] + hp * f[i - 1]) / (hm * hp * (hm + hp));
        let first = (hm * hm * f[i + 1] + (hp * hp - hm * hm) * f[i] - hp * hp * f[i - 1])
            / (hm * hp * (hm + hp));
        out[i] = second + first / r[i];
    }
    let h = r[n - 1] - r[n - 2];
    out[n - 1] = 2.0 * (f[n - 2] - f[n - 1]) / (h * h);
    out
}

/// Pointwise residual of the stationary equation.
pub fn pde_residual_values(u: &RadialFunction, params: &Params) -> Vec<f64> {
    let grid = u.grid();
    let v = u.values();
    let sq: Vec<f64> = v.iter().map(|x| x * x).collect();
    let lap_u = radial_laplacian(v, grid);
    let lap_sq = radial_laplacian(&sq, grid);
    let gauge = compute_gauge(u, params.mu);
    let (v1, v2) = (gauge.v1.values(), gauge.v2.values());
    (0..v.len())
        .map(|i| {
            let x = v[i];
            -lap_u[i] + params.omega * x - params.mu * x * lap_sq[i]
                + params.q * v1[i] * (1.0 + params.mu * sq[i]) * x
                + params.q * v2[i] * x
                - params.lambda * signed_pow(x, params.p)
        })
        .collect()
}

/// Discrete `L²` norm of the strong-form residual.
pub fn pde_residual(u: &RadialFunction, params: &Params) -> f64 {
    let res = pde_residual_values(u, params);
    l2(&res, u.grid())
}

/// [`pde_residual`] divided by `‖λ|u|^p‖₂`; zero for `u ≡ 0`.
pub fn pde_residual_relative(u: &RadialFunction, params: &Params) -> f64 {
    let abs = pde_residual(u, params);
    let force: Vec<f64> = u
        .values()
        .iter()
        .map(|&x| params.lambda * signed_pow(x, params.p))
        .collect();
    let scale = l2(&force, u.grid());
    if scale == 0.0 {
        abs
    } else {
        abs / scale
    }
}

fn l2(values: &[f64], grid: &Grid) -> f64 {
    let sq: Vec<f64> = values.iter().map(|x| x * x).collect();
    grid.integrate_values(&sq).sqrt()
}

/// Exponential tail fit of `log u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Least-squares slope over `[0.6R, 0.9R]`.
    pub slope: f64,
    pub inner_slope: f64,
    pub outer_slope: f64,
    /// The outer half of the window decays markedly faster than the inner.
    pub super_exponential: bool,
}

const SUPER_EXPONENTIAL_MARGIN: f64 = 0.02;

pub fn decay_rate(u: &RadialFunction) -> Result<DecayFit> {
    let radius = u.grid().radius();
    decay_rate_on(u, 0.6 * radius, 0.9 * radius)
}

pub fn decay_rate_on(u: &RadialFunction, from: f64, to: f64) -> Result<DecayFit> {
    let mid = 0.5 * (from + to);
    let slope = log_slope(u, from, to)?;
    let inner_slope = log_slope(u, from, mid)?;
    let outer_slope = log_slope(u, mid, to)?;
    Ok(DecayFit {
        slope,
        inner_slope,
        outer_slope,
        super_exponential: outer_slope < inner_slope * (1.0 + SUPER_EXPONENTIAL_MARGIN),
    })
}

fn log_slope(u: &RadialFunction, from: f64, to: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = u
        .grid()
        .nodes()
        .iter()
        .zip(u.values())
        .filter(|(r, _)| **r >= from && **r <= to)
        .map(|(&r, &v)| (r, v))
        .collect();
    if pts.len() < 2 || pts.iter().any(|&(_, v)| !(v > 0.0)) {
        return Err(CsgsError::NonPositiveWindow);
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &(x, v) in &pts {
        sxy += (x - mx) * (v.ln() - my);
        sxx += (x - mx) * (x - mx);
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::sync::Arc;

    #[test]
    fn laplacian_of_quadratic() {
        for stretch in [1.0, 3.0] {
            let g = make_grid(2.0, 101, stretch).unwrap();
            let f: Vec<f64> = g.nodes().iter().map(|r| r * r).collect();
            let lap = radial_laplacian(&f, &g);
            for v in &lap[..100] {
                assert!((v - 4.0).abs() < 1e-9, "{v}");
            }
        }
    }

    #[test]
    fn zero_residual() {
        let g = Arc::new(make_grid(10.0, 201, 1.0).unwrap());
        assert_eq!(pde_residual(&g.zeros(), &Params::unit(6.0)), 0.0);
    }

    #[test]
    fn exponential_slope() {
        let g = Arc::new(make_grid(10.0, 1001, 1.0).unwrap());
        let fit = decay_rate(&g.sample(|r| (-2.0 * r).exp())).unwrap();
        assert!((fit.slope + 2.0).abs() < 1e-6);
        assert!(!fit.super_exponential);
    }

    #[test]
    fn gaussian_flagged() {
        let g = Arc::new(make_grid(10.0, 1001, 1.0).unwrap());
        let fit = decay_rate(&g.sample(|r| (-r * r / 2.0).exp())).unwrap();
        assert!(fit.outer_slope < fit.inner_slope);
        assert!(fit.super_exponential);
    }

    #[test]
    fn non_positive_window() {
        let g = Arc::new(make_grid(10.0, 101, 1.0).unwrap());
        assert_eq!(decay_rate(&g.zeros()), Err(CsgsError::NonPositiveWindow));
    }
}
