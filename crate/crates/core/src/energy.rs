//! The energy functional, its Gateaux derivative, and the Nehari, Pohozaev
//! and combined constraint functionals.
//!
//! Everything is assembled from six scalars of `u`:
//!
//! | name | definition |
//! |------|------------|
//! | `A`  | `‖∇u‖₂²` |
//! | `B`  | `‖u‖₂²` |
//! | `C`  | `∫ u²|∇u|²` |
//! | `D`  | `∫ (h²/r²) u²` |
//! | `E`  | `∫ (h²/r²) u⁴` |
//! | `F`  | `∫ |u|^{p+1}` |
//!
//! Gradient terms are evaluated on the grid intervals with `u²` averaged over
//! the two end nodes, so that the nodal gradient of every functional is exact
//! for the discrete energy.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CsgsError, Result};
use crate::fibration::ScalingConfig;
use crate::gauge::{nonlocal_gradients, v1_values};
use crate::grid::{moment_tail, moment_values, Grid, RadialFunction};

/// Physical constants of the stationary equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub omega: f64,
    pub mu: f64,
    pub q: f64,
    pub lambda: f64,
    pub p: f64,
    /// Set when `q` or `μ` is allowed to vanish (semilinear comparison runs).
    #[serde(default)]
    pub oracle: bool,
}

impl Params {
    pub fn new(omega: f64, mu: f64, q: f64, lambda: f64, p: f64) -> Result<Self> {
        let params = Self {
            omega,
            mu,
            q,
            lambda,
            p,
            oracle: false,
        };
        params.validate()?;
        Ok(params)
    }

    /// Semilinear limit `q = μ = 0`.
    pub fn oracle(omega: f64, lambda: f64, p: f64) -> Result<Self> {
        Self::oracle_with(omega, 0.0, 0.0, lambda, p)
    }

    /// Like [`Params::new`] but `μ` and `q` may be zero.
    pub fn oracle_with(omega: f64, mu: f64, q: f64, lambda: f64, p: f64) -> Result<Self> {
        let params = Self {
            omega,
            mu,
            q,
            lambda,
            p,
            oracle: true,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn unit(p: f64) -> Self {
        Self {
            omega: 1.0,
            mu: 1.0,
            q: 1.0,
            lambda: 1.0,
            p,
            oracle: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and positive, got {v}")))
            }
        };
        let coupling = |name: &'static str, v: f64| {
            if self.oracle && v == 0.0 {
                Ok(())
            } else {
                positive(name, v)
            }
        };
        positive("omega", self.omega)?;
        coupling("mu", self.mu)?;
        coupling("q", self.q)?;
        positive("lambda", self.lambda)?;
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(CsgsError::ExponentOutOfRange {
                p: self.p,
                range: "p > 1",
            });
        }
        Ok(())
    }
}

/// Weights of a linear combination `aA + bB + cC + dD + eE − fF`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl Coefficients {
    pub fn energy(params: &Params) -> Self {
        Self {
            a: 0.5,
            b: 0.5 * params.omega,
            c: params.mu,
            d: 0.5 * params.q,
            e: 0.25 * params.q * params.mu,
            f: params.lambda / (params.p + 1.0),
        }
    }

    /// `Γ = γ'_u(1)`.
    pub fn gamma(params: &Params, alpha: f64) -> Self {
        let p = params.p;
        Self {
            a: alpha,
            b: (alpha - 1.0) * params.omega,
            c: 4.0 * alpha * params.mu,
            d: (3.0 * alpha - 2.0) * params.q,
            e: (2.0 * alpha - 1.0) * params.q * params.mu,
            f: ((p + 1.0) * alpha - 2.0) / (p + 1.0) * params.lambda,
        }
    }

    /// Energy of `u_t` expressed through the scalars of `u`.
    pub fn path(params: &Params, alpha: f64, t: f64) -> Self {
        let e = Self::energy(params);
        let pw = |k: f64| t.powf(k);
        Self {
            a: e.a * pw(2.0 * alpha),
            b: e.b * pw(2.0 * alpha - 2.0),
            c: e.c * pw(4.0 * alpha),
            d: e.d * pw(6.0 * alpha - 4.0),
            e: e.e * pw(8.0 * alpha - 4.0),
            f: e.f * pw((params.p + 1.0) * alpha - 2.0),
        }
    }

    pub fn apply(&self, s: &Functionals) -> f64 {
        self.a * s.a + self.b * s.b + self.c * s.c + self.d * s.d + self.e * s.e - self.f * s.f
    }

    /// Sum of the absolute values of the six terms.
    pub fn magnitude(&self, s: &Functionals) -> f64 {
        (self.a * s.a).abs()
            + (self.b * s.b).abs()
            + (self.c * s.c).abs()
            + (self.d * s.d).abs()
            + (self.e * s.e).abs()
            + (self.f * s.f).abs()
    }
}

/// The six scalars `A … F`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Functionals {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

/// The six scalars plus energy, Nehari and Pohozaev values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalBreakdown {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub energy: f64,
    pub nehari: f64,
    pub pohozaev: f64,
}

impl FunctionalBreakdown {
    pub fn functionals(&self) -> Functionals {
        Functionals {
            a: self.a,
            b: self.b,
            c: self.c,
            d: self.d,
            e: self.e,
            f: self.f,
        }
    }

    /// `I` recomposed from the six scalars.
    pub fn recomposed_energy(&self, params: &Params) -> f64 {
        Coefficients::energy(params).apply(&self.functionals())
    }
}

/// `|u|^{p}` with a zero fast path.
#[inline]
pub fn abs_pow(u: f64, p: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.abs().powf(p)
    }
}

/// `|u|^{p−1}u` for real `p`.
#[inline]
pub fn signed_pow(u: f64, p: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.signum() * u.abs().powf(p)
    }
}

/// Per-interval quantities shared by the gradient terms.
struct Cells {
    /// `∫ r dr` over the interval.
    measure: Vec<f64>,
    grad: Vec<f64>,
    /// `½(u_i² + u_{i+1}²)`.
    mean_sq: Vec<f64>,
}

fn cells(u: &[f64], grid: &Grid) -> Cells {
    let r = grid.nodes();
    let n = grid.len();
    let mut grad = Vec::with_capacity(n - 1);
    let mut mean_sq = Vec::with_capacity(n - 1);
    for c in 0..n - 1 {
        grad.push((u[c + 1] - u[c]) / (r[c + 1] - r[c]));
        mean_sq.push(0.5 * (u[c] * u[c] + u[c + 1] * u[c + 1]));
    }
    Cells {
        measure: grid.cell_measure().to_vec(),
        grad,
        mean_sq,
    }
}

pub fn functionals(u: &RadialFunction, p: f64) -> Functionals {
    functionals_of(u.values(), u.grid(), p)
}

pub(crate) fn functionals_of(u: &[f64], grid: &Grid, p: f64) -> Functionals {
    let cl = cells(u, grid);
    let two_pi = 2.0 * PI;
    let mut a = 0.0;
    let mut c = 0.0;
    for k in 0..cl.grad.len() {
        let g2 = cl.grad[k] * cl.grad[k];
        a += cl.measure[k] * g2;
        c += cl.measure[k] * cl.mean_sq[k] * g2;
    }
    let h = moment_values(u, grid);
    let v1 = v1_values(&h, grid);
    let w = grid.weights();
    let (mut b, mut d, mut e, mut f) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..u.len() {
        let u2 = u[i] * u[i];
        b += w[i] * u2;
        d += w[i] * u2 * v1[i];
        e += w[i] * u2 * u2 * v1[i];
        f += w[i] * abs_pow(u[i], p + 1.0);
    }
    Functionals {
        a: two_pi * a,
        b: two_pi * b,
        c: two_pi * c,
        d: two_pi * d,
        e: two_pi * e,
        f: two_pi * f,
    }
}

/// Evaluates `A … F`, `I`, and `N`, `P` from their own integrands.
pub fn breakdown(u: &RadialFunction, params: &Params) -> FunctionalBreakdown {
    let grid = u.grid();
    let vals = u.values();
    let s = functionals_of(vals, grid, params.p);
    let (mu, q, omega, lambda, p) = (params.mu, params.q, params.omega, params.lambda, params.p);

    let cl = cells(vals, grid);
    let mut kin = 0.0;
    for k in 0..cl.grad.len() {
        kin += cl.measure[k] * (1.0 + 4.0 * mu * cl.mean_sq[k]) * cl.grad[k] * cl.grad[k];
    }
    let h = moment_values(vals, grid);
    let v1 = v1_values(&h, grid);
    let w = grid.weights();
    let mut nehari_local = 0.0;
    let mut pohozaev = 0.0;
    for i in 0..vals.len() {
        let u2 = vals[i] * vals[i];
        let up = abs_pow(vals[i], p + 1.0);
        nehari_local += w[i] * (omega * u2 - lambda * up + q * v1[i] * (3.0 + 2.0 * mu * u2) * u2);
        pohozaev += w[i]
            * (omega * u2 - 2.0 * lambda / (p + 1.0) * up + q * v1[i] * (2.0 + mu * u2) * u2);
    }
    let two_pi = 2.0 * PI;
    FunctionalBreakdown {
        a: s.a,
        b: s.b,
        c: s.c,
        d: s.d,
        e: s.e,
        f: s.f,
        energy: Coefficients::energy(params).apply(&s),
        nehari: two_pi * (kin + nehari_local),
        pohozaev: two_pi * pohozaev,
    }
}

pub fn energy(u: &RadialFunction, params: &Params) -> f64 {
    Coefficients::energy(params).apply(&functionals(u, params.p))
}

/// `I'(u)[φ]` in integrand form:
/// `∫ (1+2μu²)∇u·∇φ + 2μu|∇u|²φ + ωuφ − λ|u|^{p−1}uφ + q V₁(1+μu²)uφ + q V₂ uφ`.
pub fn gateaux(u: &RadialFunction, phi: &RadialFunction, params: &Params) -> Result<f64> {
    u.ensure_same_grid(phi)?;
    let grid = u.grid();
    let (uv, fv) = (u.values(), phi.values());
    let r = grid.nodes();
    let (mu, q) = (params.mu, params.q);

    let mut kin = 0.0;
    for (k, rho) in grid.cell_measure().iter().enumerate() {
        let dr = r[k + 1] - r[k];
        let gu = (uv[k + 1] - uv[k]) / dr;
        let gphi = (fv[k + 1] - fv[k]) / dr;
        let mean_sq = 0.5 * (uv[k] * uv[k] + uv[k + 1] * uv[k + 1]);
        let mean_uphi = 0.5 * (uv[k] * fv[k] + uv[k + 1] * fv[k + 1]);
        kin += rho * ((1.0 + 2.0 * mu * mean_sq) * gu * gphi + 2.0 * mu * mean_uphi * gu * gu);
    }

    let h = moment_values(uv, grid);
    let v1 = v1_values(&h, grid);
    let v2 = v2_values(uv, &h, grid, mu);
    let w = grid.weights();
    let mut local = 0.0;
    for i in 0..uv.len() {
        let u = uv[i];
        let u2 = u * u;
        local += w[i]
            * fv[i]
            * (params.omega * u - params.lambda * signed_pow(u, params.p)
                + q * v1[i] * (1.0 + mu * u2) * u
                + q * v2[i] * u);
    }
    Ok(2.0 * PI * (kin + local))
}

fn v2_values(u: &[f64], h: &[f64], grid: &Grid, mu: f64) -> Vec<f64> {
    let w: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(u.iter().zip(h))
        .map(|(&r, (&u, &h))| {
            if r > 0.0 {
                h / r * (2.0 + mu * u * u) * u * u
            } else {
                0.0
            }
        })
        .collect();
    moment_tail(&w, grid)
}

/// Nodal gradient `∂/∂u_i` of `Σ coeff·functional`.
pub fn nodal_gradient(u: &RadialFunction, coeffs: &Coefficients, p: f64) -> Vec<f64> {
    nodal_gradient_of(u.values(), u.grid(), coeffs, p)
}

pub(crate) fn nodal_gradient_of(u: &[f64], grid: &Grid, k: &Coefficients, p: f64) -> Vec<f64> {
    let n = grid.len();
    let two_pi = 2.0 * PI;
    let w = grid.weights();
    let mut g = vec![0.0; n];

    let cl = cells(u, grid);
    for c in 0..n - 1 {
        let rho = two_pi * cl.measure[c];
        let dr = grid.spacing(c);
        let gr = cl.grad[c];
        // d/du of rho·(a g² + c m g²) with m = ½(u_c² + u_{c+1}²)
        let flux = rho * 2.0 * (k.a + k.c * cl.mean_sq[c]) * gr / dr;
        g[c] -= flux;
        g[c + 1] += flux;
        let local = rho * k.c * gr * gr;
        g[c] += local * u[c];
        g[c + 1] += local * u[c + 1];
    }

    let (gd, ge) = if k.d != 0.0 || k.e != 0.0 {
        nonlocal_gradients(u, grid)
    } else {
        (vec![0.0; n], vec![0.0; n])
    };
    for i in 0..n {
        let m = two_pi * w[i];
        g[i] += m * (2.0 * k.b * u[i] - k.f * (p + 1.0) * signed_pow(u[i], p))
            + k.d * gd[i]
            + k.e * ge[i];
    }
    g
}

/// `Γ(u) = αN(u) − P(u)`.
pub fn gamma(u: &RadialFunction, params: &Params, alpha: f64) -> Result<f64> {
    ScalingConfig::new(alpha, params.p)?;
    let bd = breakdown(u, params);
    Ok(gamma_from_breakdown(&bd, alpha))
}

pub fn gamma_from_breakdown(bd: &FunctionalBreakdown, alpha: f64) -> f64 {
    alpha * bd.nehari - bd.pohozaev
}

/// `Γ` from the coefficient formula in `A … F`.
pub fn gamma_direct(s: &Functionals, params: &Params, alpha: f64) -> f64 {
    Coefficients::gamma(params, alpha).apply(s)
}

/// Right-hand side of `I − Γ/((p+1)α−2)` written with the six scalars; every
/// coefficient is positive for admissible α.
pub fn coercivity_rhs(s: &Functionals, params: &Params, alpha: f64) -> f64 {
    let p = params.p;
    let den = (p + 1.0) * alpha - 2.0;
    ((p - 1.0) * alpha - 2.0) * s.a / (2.0 * den)
        + (p - 1.0) * alpha * params.omega * s.b / (2.0 * den)
        + ((p - 3.0) * alpha - 2.0) * params.mu * s.c / den
        + ((p - 5.0) * alpha + 2.0) * params.q * s.d / (2.0 * den)
        + ((p - 7.0) * alpha + 2.0) * params.q * params.mu * s.e / (4.0 * den)
}

/// Lower-bound constant `c` in `I(u) ≥ c (A + ωB + μC)` on the constraint set.
pub fn coercivity_constant(params: &Params, alpha: f64) -> f64 {
    let p = params.p;
    let den = (p + 1.0) * alpha - 2.0;
    let ca = ((p - 1.0) * alpha - 2.0) / (2.0 * den);
    let cb = (p - 1.0) * alpha / (2.0 * den);
    let cc = ((p - 3.0) * alpha - 2.0) / den;
    ca.min(cb).min(cc)
}

/// `q = e⁴/κ²`.
pub fn coupling_from_physical(charge: f64, kappa: f64) -> Result<f64> {
    if !charge.is_finite() {
        return Err(invalid("e", "must be finite"));
    }
    if !kappa.is_finite() || kappa == 0.0 {
        return Err(invalid("kappa", format!("must be finite and non-zero, got {kappa}")));
    }
    Ok(charge.powi(4) / (kappa * kappa))
}
