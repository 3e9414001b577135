//! Constrained descent for `σ = inf_𝓜 I`.
//!
//! The iterate always lies on `𝓜`. Each step takes the `H¹`-type Riesz
//! representative of `I'(u)`, removes its component along `Γ'(u)` in the same
//! inner product, and moves along the negative of what is left. The trial
//! point is made nonnegative and projected back to `𝓜` before the Armijo test.

use serde::{Deserialize, Serialize};

use crate::energy::{nodal_gradient_of, Coefficients, FunctionalBreakdown, Params};
use crate::error::{CsgsError, Result};
use crate::gauge::compute_gauge;
use crate::fibration::{default_alpha, project_to_M, relative_gamma, ScalingConfig};
use crate::grid::{Grid, GridSpec, RadialFunction};

use super::diagnostics::{decay_rate, pde_residual_relative, DecayFit};

pub const DEFAULT_NODES: usize = 4001;

/// Starting profile `a·e^{−r²/w²}`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InitShape {
    /// Defaults to `1/√ω`.
    pub width: Option<f64>,
    /// Defaults to `1/(√π w)`, unit `L²` mass.
    pub amplitude: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Defaults to `R = 20/√ω`, [`DEFAULT_NODES`] uniform nodes.
    pub grid: Option<GridSpec>,
    /// Defaults to [`default_alpha`].
    pub alpha: Option<f64>,
    pub init: InitShape,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub step_floor: f64,
    /// Bound on the relative reduced gradient `‖G_tan‖_{K⁻¹}/‖u‖_K`.
    pub grad_tol: f64,
    /// Bound on `|Γ|` relative to the magnitudes of its terms.
    pub constraint_tol: f64,
    /// Bound on `|N|/(A+ωB)` and `|P|/(A+ωB)` at convergence.
    pub identity_tol: f64,
    /// Compare the predicted reduced derivative with a central difference on
    /// the first three iterations.
    pub check_gradient: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            grid: None,
            alpha: None,
            init: InitShape::default(),
            max_iters: 2000,
            armijo_c: 1e-4,
            step_floor: 1e-12,
            grad_tol: 1e-7,
            constraint_tol: 1e-10,
            identity_tol: 1e-4,
            check_gradient: false,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        use crate::error::invalid;
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be at least 1"));
        }
        for (name, v) in [
            ("armijo_c", self.armijo_c),
            ("step_floor", self.step_floor),
            ("grad_tol", self.grad_tol),
            ("constraint_tol", self.constraint_tol),
            ("identity_tol", self.identity_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be finite and positive, got {v}")));
            }
        }
        for (name, v) in [("width", self.init.width), ("amplitude", self.init.amplitude)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(invalid(name, format!("must be finite and positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn grid_for(&self, params: &Params) -> GridSpec {
        self.grid.unwrap_or(GridSpec {
            radius: 20.0 / params.omega.sqrt(),
            n: DEFAULT_NODES,
            stretch: 1.0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub nehari: f64,
    pub pohozaev: f64,
    pub gamma: f64,
    pub pde_l2: f64,
    pub reduced_grad: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientCheck {
    pub iteration: usize,
    pub predicted: f64,
    pub finite_difference: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    #[serde(skip)]
    pub u_star: RadialFunction,
    pub params: Params,
    pub sigma: f64,
    pub breakdown: FunctionalBreakdown,
    pub residuals: Residuals,
    pub decay: Option<DecayFit>,
    pub alpha: f64,
    pub grid: GridSpec,
    pub iterations: usize,
    pub converged: bool,
    /// `σ` after every accepted step, starting with the projected initial guess.
    #[serde(skip)]
    pub energy_history: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub gradient_checks: Vec<GradientCheck>,
}

impl SolveResult {
    pub fn decay_slope(&self) -> Option<f64> {
        self.decay.map(|d| d.slope)
    }

    /// Profile CSV `r,u,h,V1,V2`.
    pub fn write_profile_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        let gauge = compute_gauge(&self.u_star, self.params.mu);
        writeln!(out, "r,u,h,V1,V2")?;
        let r = self.u_star.grid().nodes();
        for i in 0..r.len() {
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e}",
                r[i],
                self.u_star.values()[i],
                gauge.h.values()[i],
                gauge.v1.values()[i],
                gauge.v2.values()[i]
            )?;
        }
        Ok(())
    }
}

/// Symmetric tridiagonal `K = 2π[Σ_c ρ_c(1 + μ(u_c² + u_{c+1}²)) ∇_cᵀ∇_c + ω diag(w)]`.
struct Preconditioner {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Preconditioner {
    fn new(u: &[f64], grid: &Grid, params: &Params) -> Self {
        let n = grid.len();
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut diag: Vec<f64> = grid.weights().iter().map(|w| two_pi * params.omega * w).collect();
        let mut off = vec![0.0; n - 1];
        for (c, rho) in grid.cell_measure().iter().enumerate() {
            let dr = grid.spacing(c);
            let k = two_pi * rho * (1.0 + params.mu * (u[c] * u[c] + u[c + 1] * u[c + 1])) / (dr * dr);
            diag[c] += k;
            diag[c + 1] += k;
            off[c] = -k;
        }
        Self { diag, off }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.off[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.off[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Thomas algorithm.
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        c[0] = if n > 1 { self.off[0] / self.diag[0] } else { 0.0 };
        d[0] = rhs[0] / self.diag[0];
        for i in 1..n {
            let m = self.diag[i] - self.off[i - 1] * c[i - 1];
            if i + 1 < n {
                c[i] = self.off[i] / m;
            }
            d[i] = (rhs[i] - self.off[i - 1] * d[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        d
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Direction {
    /// Descent direction `−K⁻¹G_tan`.
    step: Vec<f64>,
    /// `⟨G_tan, K⁻¹G_tan⟩ = −I'(u)[d]`.
    slope: f64,
    reduced_grad: f64,
}

fn direction(u: &RadialFunction, params: &Params, alpha: f64) -> Direction {
    let grid = u.grid();
    let v = u.values();
    let g = nodal_gradient_of(v, grid, &Coefficients::energy(params), params.p);
    let gc = nodal_gradient_of(v, grid, &Coefficients::gamma(params, alpha), params.p);
    let k = Preconditioner::new(v, grid, params);
    let kg = k.solve(&g);
    let kc = k.solve(&gc);
    let denom = dot(&gc, &kc);
    let coef = if denom > 0.0 { dot(&g, &kc) / denom } else { 0.0 };
    let tangent: Vec<f64> = g.iter().zip(&gc).map(|(a, b)| a - coef * b).collect();
    let step: Vec<f64> = kg.iter().zip(&kc).map(|(a, b)| -(a - coef * b)).collect();
    let slope = -dot(&tangent, &step);
    let norm_u = dot(v, &k.apply(v)).sqrt();
    Direction {
        reduced_grad: if norm_u > 0.0 { slope.max(0.0).sqrt() / norm_u } else { 0.0 },
        step,
        slope,
    }
}

fn trial(u: &RadialFunction, d: &[f64], tau: f64, params: &Params, alpha: f64) -> Option<(RadialFunction, FunctionalBreakdown)> {
    let moved: Vec<f64> = u.values().iter().zip(d).map(|(a, b)| (a + tau * b).abs()).collect();
    let moved = RadialFunction::new(u.grid().clone(), moved).ok()?;
    let proj = project_to_M(&moved, params, alpha).ok()?;
    Some((proj.u_star, proj.breakdown))
}

fn initial_guess(grid: &std::sync::Arc<Grid>, params: &Params, init: &InitShape) -> RadialFunction {
    let w = init.width.unwrap_or(1.0 / params.omega.sqrt());
    let a = init
        .amplitude
        .unwrap_or(1.0 / (std::f64::consts::PI.sqrt() * w));
    grid.sample(|r| a * (-(r * r) / (w * w)).exp())
}

/// Minimizes `I` over `𝓜`. Running out of iterations or step length is
/// reported through `converged = false`, not as an error.
#[allow(non_snake_case)]
pub fn minimize_on_M(params: &Params, config: &SolveConfig) -> Result<SolveResult> {
    params.validate()?;
    config.validate()?;
    if !(params.p > 5.0) {
        return Err(CsgsError::ExponentOutOfRange {
            p: params.p,
            range: "p > 5",
        });
    }
    let alpha = match config.alpha {
        Some(a) => ScalingConfig::new(a, params.p)?.alpha,
        None => default_alpha(params.p)?,
    };
    let spec = config.grid_for(params);
    let grid = spec.build()?;
    let start = initial_guess(&grid, params, &config.init);
    let proj = project_to_M(&start, params, alpha)?;
    minimize_from(proj.u_star, proj.breakdown, params, alpha, config)
}

/// Runs the descent from a point already on `𝓜`.
pub fn minimize_from(
    mut u: RadialFunction,
    mut bd: FunctionalBreakdown,
    params: &Params,
    alpha: f64,
    config: &SolveConfig,
) -> Result<SolveResult> {
    ScalingConfig::new(alpha, params.p)?;
    let spec = u.grid().spec();
    let mut history = vec![bd.energy];
    let mut checks = Vec::new();
    let mut tau = 1.0;
    let mut iterations = 0;
    let mut dir = direction(&u, params, alpha);
    let mut stalled = false;

    while iterations < config.max_iters {
        let gamma = relative_gamma(&bd, params, alpha);
        if dir.reduced_grad < config.grad_tol && gamma < config.constraint_tol {
            break;
        }
        if config.check_gradient && iterations < 3 {
            let eps = 1e-6;
            let plus = trial(&u, &dir.step, eps, params, alpha);
            let minus = trial(&u, &dir.step, -eps, params, alpha);
            if let (Some((_, bp)), Some((_, bm))) = (plus, minus) {
                let check = GradientCheck {
                    iteration: iterations,
                    predicted: -dir.slope,
                    finite_difference: (bp.energy - bm.energy) / (2.0 * eps),
                };
                log::debug!("reduced derivative check {check:?}");
                checks.push(check);
            }
        }

        let mut accepted = None;
        while tau >= config.step_floor {
            if let Some((cand, cbd)) = trial(&u, &dir.step, tau, params, alpha) {
                if cbd.energy <= bd.energy - config.armijo_c * tau * dir.slope {
                    accepted = Some((cand, cbd));
                    break;
                }
            }
            tau *= 0.5;
        }
        let Some((cand, cbd)) = accepted else {
            log::debug!("line search stalled at iteration {iterations}");
            stalled = true;
            break;
        };
        u = cand;
        bd = cbd;
        history.push(bd.energy);
        iterations += 1;
        tau = (2.0 * tau).min(1.0);
        dir = direction(&u, params, alpha);
        log::trace!(
            "iter {iterations}: I={:.12e} grad={:.3e} tau={tau:.2e}",
            bd.energy,
            dir.reduced_grad
        );
    }

    let scale = bd.a + params.omega * bd.b;
    let residuals = Residuals {
        nehari: bd.nehari.abs() / scale,
        pohozaev: bd.pohozaev.abs() / scale,
        gamma: relative_gamma(&bd, params, alpha),
        pde_l2: pde_residual_relative(&u, params),
        reduced_grad: dir.reduced_grad,
    };
    let converged = !stalled
        && residuals.reduced_grad < config.grad_tol
        && residuals.gamma < config.constraint_tol
        && residuals.nehari < config.identity_tol
        && residuals.pohozaev < config.identity_tol
        && bd.energy > 0.0;
    Ok(SolveResult {
        params: *params,
        decay: decay_rate(&u).ok(),
        sigma: bd.energy,
        breakdown: bd,
        residuals,
        alpha,
        grid: spec,
        iterations,
        converged,
        energy_history: history,
        gradient_checks: checks,
        u_star: u,
    })
}
