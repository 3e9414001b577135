//! Shape-preserving piecewise cubic Hermite interpolation (Fritsch–Carlson).

/// Monotone cubic interpolant through `(x_i, y_i)` with strictly increasing `x`.
#[derive(Debug, Clone)]
pub struct Pchip<'a> {
    x: &'a [f64],
    y: &'a [f64],
    slopes: Vec<f64>,
}

impl<'a> Pchip<'a> {
    /// `left_slope` pins the derivative at `x_0` (radial profiles use 0).
    pub fn new(x: &'a [f64], y: &'a [f64], left_slope: Option<f64>) -> Self {
        let n = x.len();
        assert!(n >= 2 && y.len() == n, "pchip needs matching arrays of length >= 2");
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = delta[0];
            d[1] = delta[0];
        } else {
            for k in 1..n - 1 {
                let (a, b) = (delta[k - 1], delta[k]);
                if a * b <= 0.0 {
                    d[k] = 0.0;
                } else {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / a + w2 / b);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        if let Some(s) = left_slope {
            d[0] = s;
        }
        Self { x, y, slopes: d }
    }

    /// Evaluates at `t`; callers keep `t` inside `[x_0, x_{n-1}]`.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let k = match self.x.binary_search_by(|v| v.total_cmp(&t)) {
            Ok(i) => return self.y[i],
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        self.eval_in(k, t)
    }

    /// Evaluates at increasing `ts` with a forward cursor.
    pub fn eval_sorted(&self, ts: &[f64]) -> Vec<f64> {
        let n = self.x.len();
        let mut k = 0;
        ts.iter()
            .map(|&t| {
                while k + 2 < n && t > self.x[k + 1] {
                    k += 1;
                }
                if t == self.x[k] {
                    self.y[k]
                } else if t == self.x[k + 1] {
                    self.y[k + 1]
                } else {
                    self.eval_in(k, t)
                }
            })
            .collect()
    }

    fn eval_in(&self, k: usize, t: f64) -> f64 {
        let h = self.x[k + 1] - self.x[k];
        let s = (t - self.x[k]) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[k] + h10 * h * self.slopes[k] + h01 * self.y[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

/// One-sided three-point end slope with the usual shape-preserving clamps.
fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d * del0 <= 0.0 {
        0.0
    } else if del0 * del1 < 0.0 && d.abs() > 3.0 * del0.abs() {
        3.0 * del0
    } else {
        d
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_nodes_and_lines() {
        let x: Vec<f64> = (0..11).map(|i| i as f64 * 0.3).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let p = Pchip::new(&x, &y, None);
        for (&xi, &yi) in x.iter().zip(&y) {
            assert_eq!(p.eval(xi), yi);
        }
        assert!((p.eval(1.05) - 1.1).abs() < 1e-14);
        let sorted = p.eval_sorted(&[0.0, 0.1, 1.05, 3.0]);
        assert!((sorted[2] - 1.1).abs() < 1e-14);
        assert_eq!(sorted[3], y[10]);
    }

    #[test]
    fn no_overshoot_on_step() {
        let x: Vec<f64> = (0..8).map(f64::from).collect();
        let y = [0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let p = Pchip::new(&x, &y, Some(0.0));
        for i in 0..700 {
            let v = p.eval(i as f64 * 0.01);
            assert!((0.0..=1.0).contains(&v), "overshoot {v}");
        }
    }

    #[test]
    fn smooth_accuracy() {
        let x: Vec<f64> = (0..=400).map(|i| i as f64 * 0.02).collect();
        let y: Vec<f64> = x.iter().map(|r| (-r * r).exp()).collect();
        let p = Pchip::new(&x, &y, Some(0.0));
        let worst = (0..799)
            .map(|i| {
                let t = 0.01 + i as f64 * 0.01;
                (p.eval(t) - (-t * t).exp()).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 5e-5, "{worst:e}");
    }
}
