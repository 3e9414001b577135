//! Shooting for the semilinear limit `q = μ = 0`:
//! `u'' + u'/r − ωu + λ|u|^{p−1}u = 0`, `u'(0) = 0`, `u → 0`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::energy::{abs_pow, signed_pow};
use crate::error::{invalid, CsgsError, Result};
use crate::grid::{Grid, RadialFunction};
use crate::interp::Pchip;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    /// RK4 step in units of `1/√ω`.
    pub step: f64,
    /// Integration horizon in units of `1/√ω`.
    pub horizon: f64,
    pub bisections: usize,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            horizon: 40.0,
            bisections: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ShootingResult {
    pub u0: f64,
    pub energy: f64,
    /// `‖∇u‖₂²`, `‖u‖₂²` and `∫|u|^{p+1}` along the accepted trajectory.
    pub a: f64,
    pub b: f64,
    pub f: f64,
    /// Radius where the best trajectory leaves the separatrix.
    pub r_break: f64,
    #[serde(skip)]
    pub r: Vec<f64>,
    #[serde(skip)]
    pub u: Vec<f64>,
    #[serde(skip)]
    omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Overshoot,
    Undershoot,
    Horizon,
}

struct Trajectory {
    outcome: Outcome,
    r: Vec<f64>,
    u: Vec<f64>,
    /// Running `∫ u'² r dr`, `∫ u² r dr`, `∫ |u|^{p+1} r dr`.
    sums: Vec<[f64; 3]>,
}

struct Problem {
    omega: f64,
    lambda: f64,
    p: f64,
}

impl Problem {
    /// State `(u, u', ∫u'²r, ∫u²r, ∫|u|^{p+1}r)`.
    fn rhs(&self, r: f64, y: &[f64; 5]) -> [f64; 5] {
        let (u, v) = (y[0], y[1]);
        [
            v,
            -v / r + self.omega * u - self.lambda * signed_pow(u, self.p),
            v * v * r,
            u * u * r,
            abs_pow(u, self.p + 1.0) * r,
        ]
    }

    fn shoot(&self, u0: f64, cfg: &ShootingConfig, record: bool) -> Trajectory {
        let scale = 1.0 / self.omega.sqrt();
        let h = cfg.step * scale;
        let r_max = cfg.horizon * scale;
        let r0 = 1e-2 * h;
        let c = 0.5 * (self.omega * u0 - self.lambda * abs_pow(u0, self.p));
        let mut y = [u0 + 0.5 * c * r0 * r0, c * r0, 0.0, 0.0, 0.0];
        y[3] = 0.5 * u0 * u0 * r0 * r0;
        y[4] = 0.5 * abs_pow(u0, self.p + 1.0) * r0 * r0;
        let mut r = r0;
        let mut rs = vec![0.0];
        let mut us = vec![u0];
        let mut sums = vec![[0.0; 3]];
        if record {
            rs.push(r);
            us.push(y[0]);
            sums.push([y[2], y[3], y[4]]);
        }
        let outcome = loop {
            if r >= r_max {
                break Outcome::Horizon;
            }
            let k1 = self.rhs(r, &y);
            let k2 = self.rhs(r + 0.5 * h, &add(&y, &k1, 0.5 * h));
            let k3 = self.rhs(r + 0.5 * h, &add(&y, &k2, 0.5 * h));
            let k4 = self.rhs(r + h, &add(&y, &k3, h));
            for j in 0..5 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            r += h;
            if y[0] < 0.0 {
                break Outcome::Overshoot;
            }
            if y[1] > 0.0 {
                break Outcome::Undershoot;
            }
            if record {
                rs.push(r);
                us.push(y[0]);
                sums.push([y[2], y[3], y[4]]);
            }
        };
        Trajectory {
            outcome,
            r: rs,
            u: us,
            sums,
        }
    }
}

fn add(y: &[f64; 5], k: &[f64; 5], s: f64) -> [f64; 5] {
    let mut out = *y;
    for j in 0..5 {
        out[j] += s * k[j];
    }
    out
}

/// Positive radial ground state of the semilinear limit and its action
/// `½(A + ωB) − λF/(p+1)`.
pub fn shooting_oracle(omega: f64, lambda: f64, p: f64) -> Result<ShootingResult> {
    shooting_oracle_with(omega, lambda, p, &ShootingConfig::default())
}

pub fn shooting_oracle_with(omega: f64, lambda: f64, p: f64, cfg: &ShootingConfig) -> Result<ShootingResult> {
    for (name, v) in [("omega", omega), ("lambda", lambda)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(invalid(name, format!("must be finite and positive, got {v}")));
        }
    }
    if !(p.is_finite() && p > 1.0) {
        return Err(CsgsError::ExponentOutOfRange { p, range: "p > 1" });
    }
    let problem = Problem { omega, lambda, p };
    // below this amplitude the trajectory cannot reach zero
    let mut lo = ((p + 1.0) * omega / (2.0 * lambda)).powf(1.0 / (p - 1.0));
    let mut hi = 2.0 * lo;
    let mut doublings = 0;
    loop {
        match problem.shoot(hi, cfg, false).outcome {
            Outcome::Overshoot => break,
            _ if doublings >= 60 => {
                return Err(CsgsError::Shooting(format!("no overshoot up to u(0)={hi:e}")))
            }
            _ => {
                lo = hi;
                hi *= 2.0;
                doublings += 1;
            }
        }
    }
    if problem.shoot(lo, cfg, false).outcome == Outcome::Overshoot {
        return Err(CsgsError::Shooting("lower amplitude bound overshoots".into()));
    }
    for _ in 0..cfg.bisections {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match problem.shoot(mid, cfg, false).outcome {
            Outcome::Overshoot => hi = mid,
            _ => lo = mid,
        }
    }
    let traj = problem.shoot(lo, cfg, true);
    let last = *traj.sums.last().expect("trajectory has a start point");
    let two_pi = 2.0 * PI;
    let (a, b, f) = (two_pi * last[0], two_pi * last[1], two_pi * last[2]);
    Ok(ShootingResult {
        u0: lo,
        energy: 0.5 * (a + omega * b) - lambda * f / (p + 1.0),
        a,
        b,
        f,
        r_break: *traj.r.last().expect("trajectory has a start point"),
        r: traj.r,
        u: traj.u,
        omega,
    })
}

impl ShootingResult {
    /// Profile resampled on `grid`, continued past the break radius by the
    /// linearized far field `e^{−√ω r}/√r`.
    pub fn on_grid(&self, grid: &std::sync::Arc<Grid>) -> RadialFunction {
        let interp = Pchip::new(&self.r, &self.u, Some(0.0));
        let rb = self.r_break;
        let ub = *self.u.last().expect("non-empty profile");
        let k = self.omega.sqrt();
        grid.sample(|r| {
            if r <= rb {
                interp.eval(r)
            } else {
                ub * (-(k * (r - rb))).exp() * (rb / r).sqrt()
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cubic_ground_state_amplitude() {
        // Townes profile: u(0) ≈ 2.20620 for ω = λ = 1, p = 3
        let res = shooting_oracle(1.0, 1.0, 3.0).unwrap();
        assert!((res.u0 - 2.206_2).abs() < 1e-3, "{}", res.u0);
        // Pohozaev in 2-D: ωB = 2λF/(p+1)
        assert_relative_eq!(res.b, 2.0 * res.f / 4.0, max_relative = 1e-4);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(shooting_oracle(0.0, 1.0, 3.0).is_err());
        assert!(shooting_oracle(1.0, 1.0, 1.0).is_err());
    }
}
