//! Frequency thresholds above which no nontrivial solution exists for
//! `1 < p < 5`.
//!
//! Non-existence follows once the pointwise function
//! `g(t) = ωt² + c₄t⁴ + c₆t⁶ − λ|t|^{p+1}` is positive for `t ≠ 0`, where
//! `(c₄, c₆)` depend on which of three ranges `q` falls in. Writing
//! `g(t) = t²(ω − ψ(t))` with the deficit `ψ(t) = λt^{p−1} − c₄t² − c₆t⁴`,
//! the least such frequency is `ω* = max(0, sup ψ)`. The Young-inequality
//! certificate `ω̄` bounds it from above.
//!
//! Powers are handled in the log domain: near `p = 5` the certificate grows
//! like `x^{4/(5−p)}` and the maximizer of `ψ` moves out just as fast.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, CsgsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    pub p: f64,
    pub q: f64,
    pub mu: f64,
    pub lambda: f64,
}

impl CouplingParams {
    pub fn new(p: f64, q: f64, mu: f64, lambda: f64) -> Result<Self> {
        let params = Self { p, q, mu, lambda };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 1.0 && self.p < 5.0) {
            return Err(CsgsError::ExponentOutOfRange {
                p: self.p,
                range: "1 < p < 5",
            });
        }
        for (name, v) in [("q", self.q), ("mu", self.mu), ("lambda", self.lambda)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("must be finite and positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        Regime::of(self.q)
    }

    /// `(c₄, c₆)` of the active regime.
    pub fn coefficients(&self) -> (f64, f64) {
        match self.regime() {
            Regime::Weak => (3.0 * self.q, self.q * self.mu),
            Regime::Intermediate => (1.0, self.q * self.mu),
            Regime::Strong => (1.0, 2.0 * self.mu),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// `0 < q < 1/3`
    #[serde(rename = "q<1/3")]
    Weak,
    /// `1/3 ≤ q < 2`
    #[serde(rename = "1/3<=q<2")]
    Intermediate,
    /// `q ≥ 2`
    #[serde(rename = "q>=2")]
    Strong,
}

impl Regime {
    pub fn of(q: f64) -> Self {
        if q < 1.0 / 3.0 {
            Regime::Weak
        } else if q < 2.0 {
            Regime::Intermediate
        } else {
            Regime::Strong
        }
    }
}

/// `g(t)` for the regime selected by `q`.
pub fn g_pointwise(t: f64, omega: f64, params: &CouplingParams) -> Result<f64> {
    params.validate()?;
    let (c4, c6) = params.coefficients();
    let t2 = t * t;
    Ok(omega * t2 + c4 * t2 * t2 + c6 * t2 * t2 * t2 - params.lambda * t.abs().powf(params.p + 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub regime: Regime,
    pub omega_sharp: f64,
    pub omega_sufficient: f64,
    /// Natural logarithms, finite even when the values overflow.
    pub log_omega_sharp: f64,
    pub log_omega_sufficient: f64,
    /// Maximizer of the deficit; absent when `ω* = 0`.
    pub t_star: Option<f64>,
    pub params: CouplingParams,
    /// The certificate for this regime reuses the split written out for
    /// `q < 1/3` with the regime's own sextic coefficient.
    pub sufficient_by_analogy: bool,
    /// Some reported value exceeded the `f64` range.
    pub overflow: bool,
}

/// `ln(e^a + e^b)`.
fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

struct Deficit {
    ln_lambda: f64,
    ln_c4: f64,
    ln_c6: f64,
    p: f64,
}

impl Deficit {
    fn new(params: &CouplingParams) -> Self {
        let (c4, c6) = params.coefficients();
        Self {
            ln_lambda: params.lambda.ln(),
            ln_c4: c4.ln(),
            ln_c6: c6.ln(),
            p: params.p,
        }
    }

    /// Sign of `t ψ'(t)` at `t = eˣ`, as a difference of logs.
    fn slope_sign(&self, x: f64) -> f64 {
        let gain = ((self.p - 1.0) * self.ln_lambda.exp()).ln() + (self.p - 1.0) * x;
        let loss = log_add(2f64.ln() + self.ln_c4 + 2.0 * x, 4f64.ln() + self.ln_c6 + 4.0 * x);
        gain - loss
    }

    /// `ψ(eˣ)` as `(positive, ln|ψ|)`.
    fn value(&self, x: f64) -> (bool, f64) {
        let gain = self.ln_lambda + (self.p - 1.0) * x;
        let loss = log_add(self.ln_c4 + 2.0 * x, self.ln_c6 + 4.0 * x);
        let (hi, lo) = if gain >= loss { (gain, loss) } else { (loss, gain) };
        let ln_abs = hi + (-(lo - hi).exp()).ln_1p();
        (gain > loss, ln_abs)
    }

    /// Bracket `[lo, hi]` in `ln t` containing the local maximum of `ψ`, or
    /// `None` when `ψ` has no interior maximum above its value at 0.
    fn bracket(&self) -> Option<(f64, f64)> {
        let p = self.p;
        let ln_pl = (p - 1.0).ln() + self.ln_lambda;
        if p < 3.0 {
            let ln_ta = (ln_pl - 2f64.ln() - self.ln_c4) / (3.0 - p);
            let ln_tb = (ln_pl - 4f64.ln() - self.ln_c6) / (5.0 - p);
            let lo = (ln_ta - 2f64.ln() / (3.0 - p)).min(ln_tb - 2f64.ln() / (5.0 - p));
            return Some((lo, ln_ta.min(ln_tb)));
        }
        // in s = t², ψ(s) = λs^{β+1} − c₄s − c₆s² with ψ' concave
        let beta = 0.5 * (p - 3.0);
        let ln_s_up = (ln_pl - 4f64.ln() - self.ln_c6) / (1.0 - beta);
        let hi = 0.5 * ln_s_up;
        if beta == 0.0 {
            return (self.slope_sign(hi - 80.0) > 0.0).then_some((hi - 80.0, hi));
        }
        // ψ' peaks here; if it is not positive there, ψ only decreases
        let lo = 0.5 * (beta.ln() + ln_pl - 4f64.ln() - self.ln_c6) / (1.0 - beta);
        (self.slope_sign(lo) > 0.0).then_some((lo, hi))
    }

    /// Bisects the sign change of `ψ'` to full precision.
    fn maximizer(&self, (mut lo, mut hi): (f64, f64)) -> f64 {
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.slope_sign(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Least `ω` with `g > 0` on `t ≠ 0`.
pub fn sharp_threshold(params: &CouplingParams) -> Result<ThresholdResult> {
    params.validate()?;
    let deficit = Deficit::new(params);
    let (t_star, log_sharp) = match deficit.bracket() {
        Some(bracket) => {
            let x = deficit.maximizer(bracket);
            match deficit.value(x) {
                (true, ln_abs) => (Some(x.exp()), ln_abs),
                _ => (None, f64::NEG_INFINITY),
            }
        }
        None => (None, f64::NEG_INFINITY),
    };
    let log_sufficient = log_sufficient_threshold(params);
    let omega_sharp = log_sharp.exp();
    let omega_sufficient = log_sufficient.exp();
    Ok(ThresholdResult {
        regime: params.regime(),
        omega_sharp,
        omega_sufficient,
        log_omega_sharp: log_sharp,
        log_omega_sufficient: log_sufficient,
        t_star: t_star.filter(|t| t.is_finite()),
        params: *params,
        sufficient_by_analogy: params.regime() != Regime::Weak,
        overflow: omega_sharp.is_infinite()
            || omega_sufficient.is_infinite()
            || t_star.is_some_and(|t| t.is_infinite()),
    })
}

fn log_sufficient_threshold(params: &CouplingParams) -> f64 {
    let p = params.p;
    let (_, c6) = params.coefficients();
    ((5.0 - p) / 8.0).ln()
        + 4.0 / (5.0 - p) * ((p + 1.0) * params.lambda).ln()
        + (p - 1.0) / (5.0 - p) * ((p - 1.0) / (24.0 * c6)).ln()
}

/// `ω̄ = (5−p)/8 · ((p+1)λ)^{4/(5−p)} · ((p−1)/(24c₆))^{(p−1)/(5−p)}`; may be
/// `+∞` close to `p = 5`, see [`ThresholdResult::log_omega_sufficient`].
pub fn sufficient_threshold(params: &CouplingParams) -> Result<f64> {
    params.validate()?;
    Ok(log_sufficient_threshold(params).exp())
}

/// `max_t (λt^{p−1} − c₄t²)` for `1 < p < 3`: the deficit without its sextic
/// term, an upper bound for `ω*` over all `μ`.
pub fn mu_free_bound(params: &CouplingParams) -> Result<f64> {
    params.validate()?;
    let p = params.p;
    if p >= 3.0 {
        return Err(CsgsError::ExponentOutOfRange {
            p,
            range: "1 < p < 3",
        });
    }
    let (c4, _) = params.coefficients();
    let t = ((p - 1.0) * params.lambda / (2.0 * c4)).powf(1.0 / (3.0 - p));
    Ok(c4 * t * t * (3.0 - p) / (p - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Q,
    Mu,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Q => "q",
            SweepAxis::Mu => "mu",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub omega_sharp: f64,
    pub omega_sufficient: f64,
    pub t_star: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    /// Indices `i` with `ω*(values[i]) > ω*(values[i−1])`.
    pub violations: Vec<usize>,
    /// For `p < 3` on the `μ` axis: the `μ`-free bound and whether every row
    /// stays below it.
    pub mu_free_bound: Option<f64>,
    pub bounded: Option<bool>,
}

impl SweepTable {
    pub fn monotone(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        write_threshold_rows(self.axis.name(), &self.rows, out)
    }
}

/// CSV `axis,value,omega_sharp,omega_sufficient,t_star`; `t_star` is empty
/// when `ω* = 0`.
pub fn write_threshold_rows<W: std::io::Write>(axis: &str, rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "axis,value,omega_sharp,omega_sufficient,t_star")?;
    for row in rows {
        let t = row.t_star.map(|t| format!("{t:e}")).unwrap_or_default();
        writeln!(
            out,
            "{axis},{:e},{:e},{:e},{t}",
            row.value, row.omega_sharp, row.omega_sufficient
        )?;
    }
    Ok(())
}

/// Thresholds along increasing values of `q` or `μ`, flagging every place
/// where `ω*` increases.
pub fn monotonicity_sweep(axis: SweepAxis, params: &CouplingParams, values: &[f64]) -> Result<SweepTable> {
    params.validate()?;
    if values.is_empty() {
        return Err(invalid("values", "sweep needs at least one value"));
    }
    if values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("values", "must be strictly increasing"));
    }
    let rows = values
        .iter()
        .map(|&v| {
            let mut at = *params;
            match axis {
                SweepAxis::Q => at.q = v,
                SweepAxis::Mu => at.mu = v,
            }
            let res = sharp_threshold(&at)?;
            Ok(SweepRow {
                value: v,
                omega_sharp: res.omega_sharp,
                omega_sufficient: res.omega_sufficient,
                t_star: res.t_star,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = (1..rows.len())
        .filter(|&i| rows[i].omega_sharp > rows[i - 1].omega_sharp)
        .collect();
    let mu_free = if axis == SweepAxis::Mu && params.p < 3.0 {
        Some(mu_free_bound(params)?)
    } else {
        None
    };
    Ok(SweepTable {
        axis,
        bounded: mu_free.map(|b| rows.iter().all(|r| r.omega_sharp <= b)),
        mu_free_bound: mu_free,
        rows,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cp(p: f64, q: f64, mu: f64, lambda: f64) -> CouplingParams {
        CouplingParams::new(p, q, mu, lambda).unwrap()
    }

    #[test]
    fn regimes() {
        assert_eq!(Regime::of(0.1), Regime::Weak);
        assert_eq!(Regime::of(1.0 / 3.0), Regime::Intermediate);
        assert_eq!(Regime::of(2.0), Regime::Strong);
        assert_eq!(cp(3.0, 0.1, 2.0, 1.0).coefficients(), (0.30000000000000004, 0.2));
        assert_eq!(cp(3.0, 3.0, 2.0, 1.0).coefficients(), (1.0, 4.0));
    }

    #[test]
    fn pointwise_basics() {
        let params = cp(3.0, 0.1, 1.0, 1.0);
        assert_eq!(g_pointwise(0.0, 2.0, &params).unwrap(), 0.0);
        let t = 1.3;
        assert_eq!(g_pointwise(t, 0.7, &params).unwrap(), g_pointwise(-t, 0.7, &params).unwrap());
        assert!(g_pointwise(3.5f64.sqrt(), 1.225, &params).unwrap().abs() < 1e-12);
        let bad = CouplingParams { p: 5.0, ..params };
        assert!(g_pointwise(1.0, 1.0, &bad).is_err());
        assert!(CouplingParams::new(5.0, 0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn cubic_closed_forms() {
        let r = sharp_threshold(&cp(3.0, 0.1, 1.0, 1.0)).unwrap();
        assert!((r.omega_sharp - 1.225).abs() < 1e-9);
        assert!((r.t_star.unwrap().powi(2) - 3.5).abs() < 1e-9);
        assert_relative_eq!(r.omega_sufficient, 10.0 / 3.0, max_relative = 1e-12);
        assert!(!r.sufficient_by_analogy);
        let r = sharp_threshold(&cp(3.0, 1.0, 1.0, 2.0)).unwrap();
        assert!((r.omega_sharp - 0.25).abs() < 1e-9);
        assert!(r.sufficient_by_analogy);
    }

    #[test]
    fn no_deficit_for_small_lambda() {
        for p in [2.0, 3.0, 4.0] {
            let r = sharp_threshold(&cp(p, 0.1, 1.0, 1e-6)).unwrap();
            assert!(r.omega_sharp < 1e-6, "p={p}: {}", r.omega_sharp);
        }
        let r = sharp_threshold(&cp(3.0, 0.1, 1.0, 0.2)).unwrap();
        assert_eq!(r.omega_sharp, 0.0);
        assert_eq!(r.t_star, None);
    }

    #[test]
    fn near_critical_exponent() {
        let r = sharp_threshold(&cp(4.999, 0.1, 1.0, 10.0)).unwrap();
        assert!(r.log_omega_sufficient.is_finite());
        assert!(r.log_omega_sufficient >= r.log_omega_sharp);
        assert!(r.overflow);
    }

    #[test]
    fn certificate_dominates() {
        for &(p, q, mu, lambda) in &[(1.5, 0.05, 0.3, 2.0), (2.5, 1.0, 4.0, 0.5), (4.5, 3.0, 0.1, 7.0)] {
            let r = sharp_threshold(&cp(p, q, mu, lambda)).unwrap();
            assert!(r.omega_sufficient >= r.omega_sharp);
            // g stays positive at ω̄
            for k in 1..200 {
                let t = 10f64.powf(-3.0 + 0.03 * k as f64);
                assert!(g_pointwise(t, r.omega_sufficient, &r.params).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn sweeps() {
        let t = monotonicity_sweep(SweepAxis::Q, &cp(3.0, 0.1, 1.0, 1.0), &[0.05, 0.1, 0.2]).unwrap();
        let expect = [3.6125, 1.225, 0.2];
        for (row, e) in t.rows.iter().zip(expect) {
            assert!((row.omega_sharp - e).abs() < 1e-9);
        }
        assert!(t.monotone());
        let t = monotonicity_sweep(SweepAxis::Mu, &cp(2.0, 0.1, 1.0, 1.0), &[1e-3, 1.0, 1e3]).unwrap();
        assert_eq!(t.bounded, Some(true));
        assert!(monotonicity_sweep(SweepAxis::Mu, &cp(2.0, 0.1, 1.0, 1.0), &[1.0, 0.5]).is_err());
    }
}
