//! Numerical toolkit for radial standing waves of a gauged quasilinear
//! Schrödinger equation in the plane.

pub mod energy;
pub mod error;
pub mod fibration;
pub mod gauge;
pub mod grid;
pub mod interp;
pub mod nonexistence;
pub mod solver;
pub mod verify;

pub use energy::{breakdown, FunctionalBreakdown, Functionals, Params};
pub use error::{CsgsError, Result};
pub use fibration::{project_to_M, ScalingConfig};
pub use gauge::{compute_gauge, GaugeFields};
pub use grid::{Grid, GridSpec, RadialFunction};
