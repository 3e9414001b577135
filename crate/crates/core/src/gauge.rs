//! Nonlocal Chern–Simons profiles and the two nonlocal energy terms
//!
//! `D(u) = ∫ (u²/r²) h² dx` and `E(u) = ∫ (u⁴/r²) h² dx`, with `h` the mass
//! moment of `u`. Their first variations pair a local term with the variation
//! of `h` inside the square; the latter is a tail integral and is what `V₂`
//! collects.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use crate::error::Result;
use crate::grid::{cumulative_moment, moment_tail, moment_values, Grid, RadialFunction};

#[derive(Debug, Clone)]
pub struct GaugeFields {
    pub h: RadialFunction,
    pub v1: RadialFunction,
    pub v2: RadialFunction,
}

impl GaugeFields {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,h,V1,V2")?;
        let r = self.h.grid().nodes();
        for i in 0..r.len() {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e}",
                r[i],
                self.h.values()[i],
                self.v1.values()[i],
                self.v2.values()[i]
            )?;
        }
        Ok(())
    }
}

/// `h²/r²` with the removable singularity at the origin set to 0.
pub(crate) fn v1_values(h: &[f64], grid: &Grid) -> Vec<f64> {
    grid.nodes()
        .iter()
        .zip(h)
        .map(|(&r, &h)| if r > 0.0 { h * h / (r * r) } else { 0.0 })
        .collect()
}

/// `∫_r^R (h/s) ρ(u(s)) ds` for a density `ρ`, in the adjoint discretization.
fn tail_of(u: &[f64], h: &[f64], grid: &Grid, density: impl Fn(f64) -> f64) -> Vec<f64> {
    let w: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(u.iter().zip(h))
        .map(|(&r, (&u, &h))| if r > 0.0 { h / r * density(u) } else { 0.0 })
        .collect();
    moment_tail(&w, grid)
}

pub fn compute_gauge(u: &RadialFunction, mu: f64) -> GaugeFields {
    let grid = u.grid();
    let h = cumulative_moment(u);
    let v1 = v1_values(h.values(), grid);
    let v2 = tail_of(u.values(), h.values(), grid, |u| (2.0 + mu * u * u) * u * u);
    GaugeFields {
        v1: RadialFunction::from_parts(Arc::clone(grid), v1),
        v2: RadialFunction::from_parts(Arc::clone(grid), v2),
        h,
    }
}

fn nonlocal(u: &RadialFunction, power: i32) -> f64 {
    let h = cumulative_moment(u);
    let v1 = v1_values(h.values(), u.grid());
    let density: Vec<f64> = u
        .values()
        .iter()
        .zip(&v1)
        .map(|(u, v)| u.powi(power) * v)
        .collect();
    u.grid().integrate_values(&density)
}

pub fn d_functional(u: &RadialFunction) -> f64 {
    nonlocal(u, 2)
}

pub fn e_functional(u: &RadialFunction) -> f64 {
    nonlocal(u, 4)
}

/// Nodal gradients `∂D/∂u_i` and `∂E/∂u_i` of the discrete functionals.
pub(crate) fn nonlocal_gradients(u: &[f64], grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    let n = grid.len();
    let w = grid.weights();
    let h = moment_values(u, grid);
    let v1 = v1_values(&h, grid);
    let tail_d = tail_of(u, &h, grid, |u| u * u);
    let tail_e = tail_of(u, &h, grid, |u| u.powi(4));
    let mut gd = Vec::with_capacity(n);
    let mut ge = Vec::with_capacity(n);
    for i in 0..n {
        let ui = u[i];
        let m = 2.0 * PI * w[i];
        gd.push(m * (2.0 * ui * v1[i] + 4.0 * ui * tail_d[i]));
        ge.push(m * (4.0 * ui.powi(3) * v1[i] + 4.0 * ui * tail_e[i]));
    }
    (gd, ge)
}

fn directional(u: &RadialFunction, phi: &RadialFunction, quartic: bool) -> Result<f64> {
    u.ensure_same_grid(phi)?;
    let (gd, ge) = nonlocal_gradients(u.values(), u.grid());
    let g = if quartic { ge } else { gd };
    Ok(g.iter().zip(phi.values()).map(|(a, b)| a * b).sum())
}

/// `D'(u)[φ]`.
pub fn gateaux_d(u: &RadialFunction, phi: &RadialFunction) -> Result<f64> {
    directional(u, phi, false)
}

/// `E'(u)[φ]`.
pub fn gateaux_e(u: &RadialFunction, phi: &RadialFunction) -> Result<f64> {
    directional(u, phi, true)
}

/// Sampled `sup_s h(s) / (s ‖u‖₄²)`; finite for every `u ∈ L⁴`.
pub fn moment_bound_constant(u: &RadialFunction) -> f64 {
    let l4 = u
        .grid()
        .integrate_values(&u.values().iter().map(|v| v.powi(4)).collect::<Vec<_>>())
        .sqrt();
    if l4 == 0.0 {
        return 0.0;
    }
    let h = cumulative_moment(u);
    u.grid()
        .nodes()
        .iter()
        .zip(h.values())
        .filter(|(r, _)| **r > 0.0)
        .map(|(r, h)| h / (r * l4))
        .fold(0.0, f64::max)
}
