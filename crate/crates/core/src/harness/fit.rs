//! Log-log regression of sampled counts against catalog exponents.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ExponentPrediction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSample {
    pub mu: f64,
    pub h: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    WithinBand,
    OutsideBand,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    /// Fitted `(mu, h)` exponents.
    pub slopes: [f64; 2],
    pub intercept: f64,
    pub r2: f64,
    /// Largest absolute residual of `log value`.
    pub residual_max: f64,
    pub predicted: [f64; 2],
    pub band: f64,
    pub verdict: Verdict,
}

fn distinct(xs: impl Iterator<Item = f64>) -> usize {
    let mut v: Vec<f64> = xs.collect();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v.len()
}

/// Ordinary least squares of `log value` on `(1, log mu, log h)`; the
/// verdict asks each slope to lie within `band` of the prediction.
pub fn exponent_fit(samples: &[ExponentSample], prediction: &ExponentPrediction, band: f64) -> Result<FitResult> {
    let [term] = prediction.n_terms.as_slice() else {
        return Err(Error::Unsupported(format!(
            "prediction has {} terms; only single power laws can be fitted",
            prediction.n_terms.len()
        )));
    };
    if term.log {
        return Err(Error::Unsupported("logarithmic predictions cannot be fitted by a pure power law".into()));
    }
    if !(band > 0.0) {
        return Err(Error::Invalid(format!("band must be positive, got {band}")));
    }
    if let Some(s) = samples.iter().find(|s| !(s.value > 0.0 && s.mu > 0.0 && s.h > 0.0)) {
        return Err(Error::Invalid(format!(
            "samples need positive mu, h and value, got mu = {}, h = {}, value = {}",
            s.mu, s.h, s.value
        )));
    }
    let (nm, nh) = (distinct(samples.iter().map(|s| s.mu)), distinct(samples.iter().map(|s| s.h)));
    if nm < 4 || nh < 4 {
        return Err(Error::Invalid(format!(
            "degenerate ladder: need at least 4 distinct values of mu and of h, got {nm} and {nh}"
        )));
    }
    let lm: Vec<f64> = samples.iter().map(|s| s.mu.ln()).collect();
    let lh: Vec<f64> = samples.iter().map(|s| s.h.ln()).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.value.ln()).collect();
    let n = samples.len() as f64;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let (mm, mh) = (mean(&lm), mean(&lh));
    let cov = |a: &[f64], ma: f64, b: &[f64], mb: f64| a.iter().zip(b).map(|(x, z)| (x - ma) * (z - mb)).sum::<f64>();
    let (smm, shh, smh) = (cov(&lm, mm, &lm, mm), cov(&lh, mh, &lh, mh), cov(&lm, mm, &lh, mh));
    if smm * shh - smh * smh <= 1e-12 * smm * shh {
        return Err(Error::Invalid("degenerate ladder: log mu and log h are collinear".into()));
    }
    let design: Vec<Vec<f64>> = lm.iter().zip(&lh).map(|(a, b)| vec![1.0, *a, *b]).collect();
    let (coef, r2) = crate::fit::multi_fit(&design, &y)?;
    let residual_max = design
        .iter()
        .zip(&y)
        .map(|(row, yi)| (yi - row.iter().zip(&coef).map(|(a, c)| a * c).sum::<f64>()).abs())
        .fold(0.0, f64::max);
    let slopes = [coef[1], coef[2]];
    let predicted = [term.mu_exp, term.h_exp];
    let within = slopes.iter().zip(&predicted).all(|(s, p)| (s - p).abs() <= band);
    Ok(FitResult {
        slopes,
        intercept: coef[0],
        r2: r2.clamp(0.0, 1.0),
        residual_max,
        predicted,
        band,
        verdict: if within { Verdict::WithinBand } else { Verdict::OutsideBand },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{predicted_exponents, FieldRegime, Regime, Singularity};
    use crate::OperatorKind;

    fn strong_2d() -> ExponentPrediction {
        let r = Regime { singularity: Singularity::Infinity, field: FieldRegime::StrongField };
        predicted_exponents(&OperatorKind::Schrodinger, 2, -2.0, -5.0, r).unwrap()
    }

    fn grid(mut f: impl FnMut(f64, f64) -> f64) -> Vec<ExponentSample> {
        let mut v = Vec::new();
        for mu in [100.0, 200.0, 400.0, 800.0] {
            for h in [0.01, 0.02, 0.04, 0.08] {
                v.push(ExponentSample { mu, h, value: f(mu, h) });
            }
        }
        v
    }

    #[test]
    fn synthetic_noisy_power_law() {
        let mut k = 0u32;
        let s = grid(|mu, h| {
            k += 1;
            let noise = 0.01 * ((k as f64 * 1.7).sin());
            mu.powi(-2) * h.powi(-4) * (1.0 + noise)
        });
        let f = exponent_fit(&s, &strong_2d(), 0.1).unwrap();
        assert_eq!(f.verdict, Verdict::WithinBand);
        assert!((f.slopes[0] + 2.0).abs() < 0.02 && (f.slopes[1] + 4.0).abs() < 0.02);
    }

    #[test]
    fn single_mu_is_degenerate() {
        let s: Vec<ExponentSample> =
            [0.01, 0.02, 0.04, 0.08].iter().map(|&h| ExponentSample { mu: 10.0, h, value: h.powi(-4) }).collect();
        assert!(matches!(exponent_fit(&s, &strong_2d(), 0.1), Err(Error::Invalid(_))));
    }

    #[test]
    fn nonpositive_value_rejected() {
        let mut s = grid(|mu, h| mu * h);
        s[3].value = 0.0;
        assert!(exponent_fit(&s, &strong_2d(), 0.1).is_err());
    }
}
