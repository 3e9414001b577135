//! Minimization over the constraint set, the semilinear shooting oracle and
//! solution diagnostics.

mod descent;
mod diagnostics;
mod shooting;

pub use descent::{
    DEFAULT_NODES,
    minimize_from, minimize_on_M, GradientCheck, InitShape, Residuals, SolveConfig, SolveResult,
};
pub use diagnostics::{
    decay_rate, decay_rate_on, pde_residual, pde_residual_relative, pde_residual_values,
    radial_laplacian, DecayFit,
};
pub use shooting::{shooting_oracle, shooting_oracle_with, ShootingConfig, ShootingResult};
