//! Ordinary least squares helpers.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// `y ~ slope x + intercept`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Invalid(format!("linear fit needs >= 2 paired samples, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Invalid("linear fit: abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept, r2 })
}

/// Least squares for `y ~ X b` with a dense design matrix; returns `b` and R².
pub fn multi_fit(design: &[Vec<f64>], y: &[f64]) -> Result<(Vec<f64>, f64)> {
    let m = y.len();
    let k = design.first().map_or(0, |r| r.len());
    if design.len() != m || m < k || k == 0 {
        return Err(Error::Invalid(format!("design has {} rows for {} samples and {k} unknowns", design.len(), m)));
    }
    let a = nalgebra::DMatrix::from_fn(m, k, |i, j| design[i][j]);
    let b = nalgebra::DVector::from_column_slice(y);
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-12).map_err(|e| Error::Invalid(format!("least squares: {e}")))?;
    let resid = &b - &a * &coef;
    let my = y.iter().sum::<f64>() / m as f64;
    let tss: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let r2 = if tss == 0.0 { 1.0 } else { 1.0 - resid.norm_squared() / tss };
    Ok((coef.iter().copied().collect(), r2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v - 1.0).collect();
        let f = linear_fit(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept + 1.0).abs() < 1e-14 && (f.r2 - 1.0).abs() < 1e-14);
        let rows: Vec<Vec<f64>> = x.iter().map(|v| vec![*v, 1.0]).collect();
        let (b, r2) = multi_fit(&rows, &y).unwrap();
        assert!((b[0] - 2.0).abs() < 1e-12 && (b[1] + 1.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }
}
