//! Counting functions as finite sums of truncated powers, and their Riesz means.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::quad;

/// `weight * (tau - shift)_+^power`, with `0^0 = 1` so steps are right-continuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerTerm {
    pub weight: f64,
    pub shift: f64,
    pub power: f64,
}

impl PowerTerm {
    pub fn eval(&self, tau: f64) -> f64 {
        let s = tau - self.shift;
        if s < 0.0 {
            0.0
        } else if self.power == 0.0 {
            self.weight
        } else {
            self.weight * s.powf(self.power)
        }
    }
}

/// Nondecreasing `N(tau) = sum_k w_k (tau - a_k)_+^{p_k}`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CountingFunction {
    terms: Vec<PowerTerm>,
}

impl CountingFunction {
    /// Terms are sorted by shift; the sum must be nondecreasing, which is
    /// checked on the breakpoints and just past them.
    pub fn new(mut terms: Vec<PowerTerm>) -> Result<Self> {
        if terms.iter().any(|t| !(t.weight.is_finite() && t.shift.is_finite() && t.power >= 0.0)) {
            return Err(Error::Invalid("terms need finite weight and shift and power >= 0".into()));
        }
        terms.sort_by(|a, b| a.shift.total_cmp(&b.shift).then(a.power.total_cmp(&b.power)));
        let f = CountingFunction { terms };
        let mut probes: Vec<f64> = f.breakpoints();
        if let Some(&last) = probes.last() {
            probes.push(last + 1.0 + last.abs());
        }
        let mut prev = 0.0f64;
        for &t in &probes {
            let v = f.eval(t);
            let slope = f.eval(t + 1e-9 * (1.0 + t.abs())) - v;
            if v < prev - 1e-12 * (1.0 + prev.abs()) || slope < -1e-12 * (1.0 + v.abs()) {
                return Err(Error::Invalid(format!("counting function decreases near tau = {t}")));
            }
            prev = v;
        }
        Ok(f)
    }

    /// Right-continuous step function with jump `w` at each `a`.
    pub fn from_steps(steps: &[(f64, f64)]) -> Result<Self> {
        if steps.iter().any(|(_, w)| *w < 0.0) {
            return Err(Error::Invalid("step jumps must be nonnegative".into()));
        }
        Self::new(steps.iter().map(|&(shift, weight)| PowerTerm { weight, shift, power: 0.0 }).collect())
    }

    /// Piecewise-linear interpolation of `(tau_i, N_i)`, zero before the
    /// first knot and constant after the last. A repeated abscissa encodes a jump.
    pub fn piecewise_linear(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::Invalid("knots must be sorted by tau".into()));
        }
        let mut terms = Vec::new();
        let Some(&(t0, n0)) = knots.first() else { return Ok(Self::default()) };
        if n0 != 0.0 {
            terms.push(PowerTerm { weight: n0, shift: t0, power: 0.0 });
        }
        let mut slope = 0.0;
        for w in knots.windows(2) {
            let ((ta, na), (tb, nb)) = (w[0], w[1]);
            if tb == ta {
                if nb != na {
                    terms.push(PowerTerm { weight: nb - na, shift: ta, power: 0.0 });
                }
                continue;
            }
            let s = (nb - na) / (tb - ta);
            if s != slope {
                terms.push(PowerTerm { weight: s - slope, shift: ta, power: 1.0 });
                slope = s;
            }
        }
        if slope != 0.0 {
            terms.push(PowerTerm { weight: -slope, shift: knots[knots.len() - 1].0, power: 1.0 });
        }
        Self::new(terms)
    }

    pub fn terms(&self) -> &[PowerTerm] {
        &self.terms
    }

    pub fn eval(&self, tau: f64) -> f64 {
        self.terms.iter().map(|t| t.eval(tau)).sum()
    }

    /// Sorted distinct shifts.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.terms.iter().map(|t| t.shift).collect();
        b.dedup();
        b
    }

    /// `(tau, N)` rows with 17 significant digits.
    pub fn to_csv(&self, taus: &[f64]) -> String {
        let mut s = String::from("tau,N\n");
        for &t in taus {
            let _ = writeln!(s, "{:.16e},{:.16e}", t, self.eval(t));
        }
        s
    }

    /// Reads `(tau, N)` rows as a right-continuous step function that takes
    /// the value `N` from `tau` until the next row.
    pub fn from_csv_steps(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.chars().next().is_some_and(|c| c.is_alphabetic())) {
                continue;
            }
            let mut it = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.ok_or_else(|| Error::Invalid(format!("line {}: expected two columns", i + 1)))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Invalid(format!("line {}: {e}", i + 1)))
            };
            rows.push((parse(it.next())?, parse(it.next())?));
        }
        let mut steps = Vec::with_capacity(rows.len());
        let mut prev = 0.0;
        for (t, n) in rows {
            steps.push((t, n - prev));
            prev = n;
        }
        Self::from_steps(&steps)
    }
}

/// `ln(Gamma(theta+1) Gamma(p+1) / Gamma(p+theta+1))`.
fn riesz_log_factor(p: f64, theta: f64) -> f64 {
    ln_gamma(theta + 1.0) + ln_gamma(p + 1.0) - ln_gamma(p + theta + 1.0)
}

/// Convolution of `N` with `theta tau_+^{theta-1}`, in closed form: a term
/// `(tau-a)_+^p` maps to `Gamma(theta+1)Gamma(p+1)/Gamma(p+theta+1) (tau-a)_+^{p+theta}`.
/// A step therefore maps to `(tau-a)_+^theta` exactly.
pub fn riesz_transform(n: &CountingFunction, theta: f64) -> Result<CountingFunction> {
    if !(theta > 0.0) {
        return Err(Error::Invalid(format!("Riesz order must be positive, got {theta}")));
    }
    let terms = n
        .terms
        .iter()
        .map(|t| PowerTerm {
            weight: if t.power == 0.0 { t.weight } else { t.weight * riesz_log_factor(t.power, theta).exp() },
            shift: t.shift,
            power: t.power + theta,
        })
        .collect();
    Ok(CountingFunction { terms })
}

/// `int_lower^tau theta (tau - s)^{theta-1} N(s) ds` by quadrature, for `N`
/// vanishing below `lower`; `kinks` are points where `N` is not smooth.
pub fn riesz_numeric<F: Fn(f64) -> f64>(n: F, theta: f64, lower: f64, tau: f64, kinks: &[f64]) -> f64 {
    if tau <= lower {
        return 0.0;
    }
    // substitute (tau - s) = u^{1/theta} to remove the endpoint singularity
    let mut pts: Vec<f64> = kinks.iter().copied().filter(|k| *k > lower && *k < tau).collect();
    pts.push(lower);
    pts.push(tau);
    pts.sort_by(f64::total_cmp);
    let u_of = |s: f64| (tau - s).powf(theta);
    pts.windows(2)
        .map(|w| {
            let (ua, ub) = (u_of(w[1]), u_of(w[0]));
            quad::integrate(|u: f64| n(tau - u.powf(1.0 / theta)), ua, ub, 1e-14, 1e-12).value
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_maps_to_truncated_power() {
        let n = CountingFunction::from_steps(&[(0.5, 1.0)]).unwrap();
        for theta in [0.5, 1.0, 2.0] {
            let r = riesz_transform(&n, theta).unwrap();
            for tau in [0.0, 0.5, 1.0, 3.0] {
                assert_eq!(r.eval(tau), (tau - 0.5f64).max(0.0).powf(theta));
            }
        }
    }

    #[test]
    fn right_continuous() {
        let n = CountingFunction::from_steps(&[(1.0, 2.0)]).unwrap();
        assert_eq!(n.eval(1.0), 2.0);
        assert_eq!(n.eval(1.0 - 1e-15), 0.0);
    }

    #[test]
    fn piecewise_linear_round_trip() {
        let knots = [(0.0, 0.0), (1.0, 2.0), (1.0, 3.0), (2.0, 3.5), (4.0, 3.5)];
        let n = CountingFunction::piecewise_linear(&knots).unwrap();
        for (t, v) in [(0.5, 1.0), (1.0, 3.0), (1.5, 3.25), (3.0, 3.5), (10.0, 3.5)] {
            assert!((n.eval(t) - v).abs() < 1e-14, "{t}");
        }
    }

    #[test]
    fn decreasing_terms_rejected() {
        assert!(CountingFunction::new(vec![PowerTerm { weight: -1.0, shift: 0.0, power: 1.0 }]).is_err());
    }

    #[test]
    fn closed_form_matches_quadrature() {
        let n = CountingFunction::new(vec![
            PowerTerm { weight: 1.0, shift: 0.0, power: 0.5 },
            PowerTerm { weight: 2.0, shift: 1.0, power: 0.0 },
        ])
        .unwrap();
        for theta in [0.3, 1.0, 2.5] {
            let r = riesz_transform(&n, theta).unwrap();
            for tau in [0.5, 1.5, 4.0] {
                let q = riesz_numeric(|s| n.eval(s), theta, 0.0, tau, &[1.0]);
                assert!((r.eval(tau) - q).abs() < 1e-9 * (1.0 + q.abs()), "{theta} {tau}");
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let n = CountingFunction::from_steps(&[(0.0, 1.0), (2.0, 3.0)]).unwrap();
        let csv = n.to_csv(&[0.0, 2.0]);
        let back = CountingFunction::from_csv_steps(&csv).unwrap();
        for t in [-1.0, 0.0, 1.0, 2.0, 5.0] {
            assert_eq!(back.eval(t), n.eval(t));
        }
    }
}
