//! Radial grids, control-volume quadrature for rotationally symmetric
//! integrals on the plane, and the cumulative/tail primitives the gauge
//! potentials are built from.
//!
//! Every node `r_i` owns the annulus between the midpoints of its neighbouring
//! intervals. Its weight is `∫ r dr` over that annulus, so `2π Σ w_i f_i`
//! approximates `∫_{ℝ²} f dx`. On a uniform grid the interior weights coincide
//! with the composite trapezoid rule on `f(r)·r`; only the two end nodes differ.
//! Gradients live on the intervals between nodes.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CsgsError, Result};

/// Default threshold for `|w(R)|·R` above which a tail integral warns that
/// its integrand has not decayed at the truncation radius.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;

/// Serializable description of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    #[serde(rename = "R")]
    pub radius: f64,
    pub n: usize,
    pub stretch: f64,
}

impl GridSpec {
    pub fn build(&self) -> Result<Arc<Grid>> {
        make_grid(self.radius, self.n, self.stretch).map(Arc::new)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `∫ r dr` over the part of node i's annulus lying below `r_i`.
    lower: Vec<f64>,
    /// `∫ r dr` over each interval `[r_i, r_{i+1}]`.
    cell_measure: Vec<f64>,
    spec: GridSpec,
}

/// Builds a grid on `[0, radius]` with `n` nodes. With `stretch > 1` the
/// spacing grows geometrically so that the last interval is `stretch` times
/// the first one.
pub fn make_grid(radius: f64, n: usize, stretch: f64) -> Result<Grid> {
    if !radius.is_finite() || radius <= 0.0 {
        return Err(invalid("R", format!("must be finite and positive, got {radius}")));
    }
    if n < 2 {
        return Err(invalid("n", format!("need at least 2 nodes, got {n}")));
    }
    if !stretch.is_finite() || stretch < 1.0 {
        return Err(invalid("stretch", format!("must be finite and >= 1, got {stretch}")));
    }

    let intervals = n - 1;
    let ratio = if intervals > 1 {
        stretch.powf(1.0 / (intervals - 1) as f64)
    } else {
        1.0
    };
    let mut nodes = Vec::with_capacity(n);
    nodes.push(0.0);
    if ratio == 1.0 {
        let dr = radius / intervals as f64;
        nodes.extend((1..n).map(|i| i as f64 * dr));
    } else {
        let first = radius * (ratio - 1.0) / (ratio.powi(intervals as i32) - 1.0);
        let mut r = 0.0;
        let mut step = first;
        for _ in 1..n {
            r += step;
            nodes.push(r);
            step *= ratio;
        }
    }
    nodes[n - 1] = radius;
    if nodes.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("n", "grid spacing underflows; nodes not strictly increasing"));
    }

    let mut bounds = Vec::with_capacity(n + 1);
    bounds.push(0.0);
    bounds.extend(nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    bounds.push(radius);

    let weights = (0..n)
        .map(|i| 0.5 * (bounds[i + 1] * bounds[i + 1] - bounds[i] * bounds[i]))
        .collect();
    let lower = (0..n)
        .map(|i| 0.5 * (nodes[i] * nodes[i] - bounds[i] * bounds[i]))
        .collect();
    let cell_measure = nodes
        .windows(2)
        .map(|w| 0.5 * (w[1] * w[1] - w[0] * w[0]))
        .collect();

    Ok(Grid {
        nodes,
        weights,
        lower,
        cell_measure,
        spec: GridSpec {
            radius,
            n,
            stretch,
        },
    })
}

impl Grid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.spec.radius
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn cell_measure(&self) -> &[f64] {
        &self.cell_measure
    }

    pub(crate) fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn spacing(&self, cell: usize) -> f64 {
        self.nodes[cell + 1] - self.nodes[cell]
    }

    /// Samples `f` at every node.
    pub fn sample(self: &Arc<Self>, f: impl Fn(f64) -> f64) -> RadialFunction {
        let values = self.nodes.iter().map(|&r| f(r)).collect();
        RadialFunction {
            grid: Arc::clone(self),
            values,
        }
    }

    pub fn zeros(self: &Arc<Self>) -> RadialFunction {
        RadialFunction {
            grid: Arc::clone(self),
            values: vec![0.0; self.len()],
        }
    }

    /// `2π Σ w_i f_i` for raw nodal values.
    pub fn integrate_values(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        2.0 * PI * self.weights.iter().zip(values).map(|(w, f)| w * f).sum::<f64>()
    }
}

/// A radially symmetric field sampled on a shared grid.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl PartialEq for RadialFunction {
    fn eq(&self, other: &Self) -> bool {
        same_grid(&self.grid, &other.grid) && self.values == other.values
    }
}

fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || a.nodes == b.nodes
}

impl RadialFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(invalid(
                "values",
                format!("expected {} samples, got {}", grid.len(), values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid("values", format!("non-finite sample at node {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Skips the finiteness scan; callers guarantee it.
    pub(crate) fn from_parts(grid: Arc<Grid>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn shares_grid(&self, other: &RadialFunction) -> bool {
        same_grid(&self.grid, &other.grid)
    }

    pub fn ensure_same_grid(&self, other: &RadialFunction) -> Result<()> {
        if self.shares_grid(other) {
            Ok(())
        } else {
            Err(CsgsError::GridMismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RadialFunction {
        RadialFunction::from_parts(
            Arc::clone(&self.grid),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn zip_map(
        &self,
        other: &RadialFunction,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<RadialFunction> {
        self.ensure_same_grid(other)?;
        Ok(RadialFunction::from_parts(
            Arc::clone(&self.grid),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &RadialFunction) -> Result<RadialFunction> {
        self.zip_map(other, |a, b| a + s * b)
    }

    pub fn abs(&self) -> RadialFunction {
        self.map(f64::abs)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Interval gradients `(u_{i+1} - u_i)/(r_{i+1} - r_i)`.
    pub fn cell_gradient(&self) -> Vec<f64> {
        let r = self.grid.nodes();
        self.values
            .windows(2)
            .zip(r.windows(2))
            .map(|(u, r)| (u[1] - u[0]) / (r[1] - r[0]))
            .collect()
    }

    /// Writes `r,value` rows at full double precision.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "r,value")?;
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(out, "{r:e},{v:e}")?;
        }
        Ok(())
    }
}

/// `∫_{ℝ²} f dx = 2π ∫ f(r) r dr`.
pub fn integrate(f: &RadialFunction) -> f64 {
    f.grid.integrate_values(&f.values)
}

/// `∫ |∇f|² dx` from interval gradients.
pub fn gradient_energy(values: &[f64], grid: &Grid) -> f64 {
    let r = grid.nodes();
    2.0 * PI
        * grid
            .cell_measure()
            .iter()
            .enumerate()
            .map(|(c, rho)| {
                let g = (values[c + 1] - values[c]) / (r[c + 1] - r[c]);
                rho * g * g
            })
            .sum::<f64>()
}

/// The mass moment `h(r) = ∫_0^r s u(s)² ds`.
///
/// Node i accumulates the full annuli of all nodes below it plus the inner
/// part of its own annulus, so `h(R)·2π` equals `∫ u² dx` exactly and the
/// result is exact whenever `u` is constant.
pub fn cumulative_moment(u: &RadialFunction) -> RadialFunction {
    RadialFunction::from_parts(Arc::clone(&u.grid), moment_values(&u.values, &u.grid))
}

pub(crate) fn moment_values(u: &[f64], grid: &Grid) -> Vec<f64> {
    let w = grid.weights();
    let lower = grid.lower();
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        let sq = ui * ui;
        out.push(acc + lower[i] * sq);
        acc += w[i] * sq;
    }
    out
}

/// `T(r_i) = ∫_{r_i}^R w(s) ds` by the composite trapezoid rule.
pub fn tail_integral(w: &RadialFunction) -> RadialFunction {
    tail_integral_with_tolerance(w, DEFAULT_TAIL_TOLERANCE)
}

pub fn tail_integral_with_tolerance(w: &RadialFunction, tolerance: f64) -> RadialFunction {
    let grid = &w.grid;
    let r = grid.nodes();
    let n = grid.len();
    let edge = w.values[n - 1].abs() * grid.radius();
    if edge > tolerance {
        log::warn!("tail integrand has not decayed at R: |w(R)|·R = {edge:e} > {tolerance:e}");
    }
    let mut out = vec![0.0; n];
    for i in (0..n - 1).rev() {
        out[i] = out[i + 1] + 0.5 * (r[i + 1] - r[i]) * (w.values[i] + w.values[i + 1]);
    }
    RadialFunction::from_parts(Arc::clone(grid), out)
}

/// Tail sum `∫_{r_k}^R w(s) ds` discretized as the exact adjoint of
/// [`cumulative_moment`]: node k contributes the inner part of its annulus,
/// every node beyond it its whole annulus, each divided by its radius.
///
/// With this pairing `∫ V u² dx` and the corresponding `∫ (h²/r²)(…) dx`
/// coincide to round-off on any grid. `w` at the origin is never read.
pub fn moment_tail(w: &[f64], grid: &Grid) -> Vec<f64> {
    let r = grid.nodes();
    let wt = grid.weights();
    let lower = grid.lower();
    let n = grid.len();
    let mut out = vec![0.0; n];
    let mut beyond = 0.0;
    for k in (1..n).rev() {
        out[k] = beyond + lower[k] * w[k] / r[k];
        beyond += wt[k] * w[k] / r[k];
    }
    out[0] = beyond;
    out
}

pub fn h1_norm(u: &RadialFunction) -> f64 {
    let b = u.grid.integrate_values(&u.values.iter().map(|v| v * v).collect::<Vec<_>>());
    (b + gradient_energy(&u.values, &u.grid)).sqrt()
}

/// `‖u−v‖_{H¹} + ‖∇(u²) − ∇(v²)‖₂`.
pub fn distance_x(u: &RadialFunction, v: &RadialFunction) -> Result<f64> {
    u.ensure_same_grid(v)?;
    let diff = u.axpy(-1.0, v)?;
    let sq_diff: Vec<f64> = u
        .values
        .iter()
        .zip(&v.values)
        .map(|(a, b)| a * a - b * b)
        .collect();
    Ok(h1_norm(&diff) + gradient_energy(&sq_diff, &u.grid).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(r: f64, n: usize) -> Arc<Grid> {
        Arc::new(make_grid(r, n, 1.0).unwrap())
    }

    #[test]
    fn two_node_grid() {
        let g = grid(1.0, 2);
        assert_eq!(g.nodes(), &[0.0, 1.0]);
        let one = g.sample(|_| 1.0);
        assert_relative_eq!(integrate(&one) / (2.0 * PI), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn constant_integrates_exactly() {
        let g = grid(20.0, 2001);
        let one = g.sample(|_| 1.0);
        assert_relative_eq!(integrate(&one) / (2.0 * PI), 200.0, max_relative = 1e-12);
        let s = Arc::new(make_grid(7.0, 300, 4.0).unwrap());
        assert_relative_eq!(integrate(&s.sample(|_| 1.0)), 49.0 * PI, max_relative = 1e-12);
    }

    #[test]
    fn stretched_spacing_ratio() {
        let g = make_grid(10.0, 1001, 3.0).unwrap();
        let first = g.spacing(0);
        let last = g.spacing(999);
        assert_relative_eq!(last / first, 3.0, max_relative = 1e-9);
        assert_eq!(g.nodes()[0], 0.0);
        assert_eq!(*g.nodes().last().unwrap(), 10.0);
        assert!(g.weights().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(make_grid(0.0, 10, 1.0).is_err());
        assert!(make_grid(f64::NAN, 10, 1.0).is_err());
        assert!(make_grid(1.0, 1, 1.0).is_err());
        assert!(make_grid(1.0, 10, 0.5).is_err());
        assert!(make_grid(1.0, 10, f64::INFINITY).is_err());
    }

    #[test]
    fn unit_disc_and_zero() {
        let g = grid(1.0, 101);
        assert_relative_eq!(integrate(&g.sample(|_| 1.0)), PI, max_relative = 1e-14);
        assert_eq!(integrate(&g.zeros()), 0.0);
    }

    #[test]
    fn gaussian_area() {
        let g = grid(8.0, 800_001);
        let f = g.sample(|r| (-r * r).exp());
        assert!((integrate(&f) - PI).abs() < 1e-10);
    }

    #[test]
    fn moment_of_constant() {
        let g = grid(1.0, 64);
        let h = cumulative_moment(&g.sample(|_| 1.0));
        for (r, h) in g.nodes().iter().zip(h.values()) {
            assert_relative_eq!(*h, r * r / 2.0, epsilon = 1e-15);
        }
        assert!(cumulative_moment(&g.zeros()).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn moment_of_gaussian() {
        let g = grid(8.0, 80_001);
        let h = cumulative_moment(&g.sample(|r| (-r * r / 2.0).exp()));
        let worst = g
            .nodes()
            .iter()
            .zip(h.values())
            .map(|(r, h)| (h - 0.5 * (1.0 - (-r * r).exp())).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "worst {worst:e}");
        assert!(h.values().windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn tail_of_linear() {
        let g = grid(1.0, 33);
        let t = tail_integral(&g.sample(|s| s));
        for (r, t) in g.nodes().iter().zip(t.values()) {
            assert_relative_eq!(*t, (1.0 - r * r) / 2.0, epsilon = 1e-14);
        }
        assert!(tail_integral(&g.zeros()).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn tail_frullani() {
        let g = grid(8.0, 8001);
        let w = g.sample(|s| {
            if s == 0.0 {
                0.0
            } else {
                (1.0 - (-s * s).exp()) * (-s * s).exp() / s
            }
        });
        let t = tail_integral(&w);
        assert!((t.values()[0] - std::f64::consts::LN_2 / 2.0).abs() < 1e-6);
        assert!(t.values().windows(2).all(|p| p[1] <= p[0]));
        assert_eq!(*t.values().last().unwrap(), 0.0);
    }

    #[test]
    fn gaussian_h1() {
        let g = grid(10.0, 20_001);
        let u = g.sample(|r| (-r * r / 2.0).exp());
        assert_relative_eq!(h1_norm(&u), (2.0 * PI).sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn distance_symmetric_and_zero() {
        let g = grid(6.0, 601);
        let u = g.sample(|r| (-r * r).exp());
        let v = g.sample(|r| 0.5 * (-r * r / 3.0).exp() * (2.0 * r).cos());
        assert_eq!(distance_x(&u, &u).unwrap(), 0.0);
        assert_relative_eq!(
            distance_x(&u, &v).unwrap(),
            distance_x(&v, &u).unwrap(),
            max_relative = 1e-14
        );
        let other = grid(6.0, 602).zeros();
        assert_eq!(distance_x(&u, &other), Err(CsgsError::GridMismatch));
    }

    #[test]
    fn second_order_refinement() {
        let err = |n: usize| {
            let g = grid(10.0, n);
            (integrate(&g.sample(|r| (-r * r).exp())) - PI).abs()
        };
        let ratio = err(501) / err(1001);
        assert!(ratio >= 3.0, "ratio {ratio}");
    }
}
