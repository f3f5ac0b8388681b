//! Spectral checks for one-dimensional wells.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::{count_below, discretize_on, lowest_eigenvalue, Grid1D, Potential1D, Profile1D, Sampling, Tridiag};
use crate::error::{Error, Result};
use crate::fit::{linear_fit, LinearFit};
use crate::quad;

/// `-1/2 int V` over the line.
pub fn w_functional(v: &Potential1D) -> Result<f64> {
    let non_integrable = |why: &str| Err(Error::Divergent(format!("potential is not integrable: {why}")));
    let total = match v {
        Potential1D::Zero => 0.0,
        Potential1D::Constant { value } => {
            if *value != 0.0 {
                return non_integrable("nonzero constant");
            }
            0.0
        }
        Potential1D::Well { value, a, b } => value * (b - a).max(0.0),
        Potential1D::Gaussian { coeff, width } => coeff * width * std::f64::consts::PI.sqrt(),
        Potential1D::PowerDecay { coeff, q } => {
            if *q <= 0.5 {
                return non_integrable(&format!("decay exponent 2q = {} <= 1", 2.0 * q));
            }
            coeff * std::f64::consts::PI.sqrt() * gamma(q - 0.5) / gamma(*q)
        }
        Potential1D::Homogeneous { coeff, q } => {
            if *coeff == 0.0 {
                0.0
            } else {
                return non_integrable(&format!("|t|^{} fails at 0 or at infinity", -2.0 * q));
            }
        }
        Potential1D::Regularized { coeff, q, s } => {
            if *q <= 0.5 {
                return non_integrable(&format!("decay exponent 2q = {} <= 1", 2.0 * q));
            }
            if *s <= 0.0 {
                return non_integrable("singular at 0");
            }
            coeff * s.powf(1.0 - 2.0 * q) * std::f64::consts::PI.sqrt() * gamma(q - 0.5) / gamma(*q)
        }
        Potential1D::HardyTail { coeff } => 2.0 * coeff,
        Potential1D::Tabulated { t, .. } => match (t.first(), t.last()) {
            (Some(a), Some(b)) => v.integral(*a, *b),
            _ => 0.0,
        },
    };
    Ok(-0.5 * total)
}

/// Resolution and box policy shared by the checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxPolicy {
    /// Grading length of the sinh grid.
    pub grade: f64,
    /// Nodes per unit of the sinh variable.
    pub per_unit: f64,
    /// Relative change of the eigenvalue under box doubling that is accepted.
    pub tol: f64,
    pub max_doublings: usize,
}

impl Default for BoxPolicy {
    fn default() -> Self {
        BoxPolicy { grade: 1.0, per_unit: 200.0, tol: 1e-3, max_doublings: 8 }
    }
}

fn operator(profile: &Profile1D, eps: f64, half_length: f64, policy: &BoxPolicy) -> Result<Tridiag> {
    let grid = Grid1D::graded_density(half_length, policy.grade, policy.per_unit);
    discretize_on(profile, eps, &grid, Sampling::CellAverage)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShallowRow {
    pub eps: f64,
    pub lambda: f64,
    /// `-W^2 eps^2`.
    pub predicted: f64,
    /// `lambda / predicted`, absent when `W = 0`.
    pub ratio: Option<f64>,
    pub negative_count: usize,
    pub half_length: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShallowWellReport {
    pub w: f64,
    pub rows: Vec<ShallowRow>,
}

impl ShallowWellReport {
    /// Ratios move toward 1 as `eps` decreases (rows in the given order of decreasing `eps`).
    pub fn ratio_gaps_decrease(&self) -> bool {
        let gaps: Vec<f64> = self.rows.iter().filter_map(|r| r.ratio).map(|r| (r - 1.0).abs()).collect();
        gaps.windows(2).all(|w| w[1] < w[0])
    }
}

/// Lowest eigenvalue and negative count of `D^2 + eps V` for each `eps`;
/// the box starts at `8/(eps W)` and doubles until the eigenvalue is stable.
pub fn shallow_well_check(profile: &Profile1D, eps_grid: &[f64], policy: &BoxPolicy) -> Result<ShallowWellReport> {
    let w = w_functional(&profile.potential)?;
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if !(eps > 0.0) {
            return Err(Error::Invalid(format!("eps must be positive, got {eps}")));
        }
        let mut half = if w > 0.0 { (8.0 / (eps * w)).max(10.0 * policy.grade) } else { 10.0 * policy.grade };
        let mut op = operator(profile, eps, half, policy)?;
        let mut lambda = lowest_eigenvalue(&op);
        let mut converged = false;
        for _ in 0..policy.max_doublings {
            let wide = operator(profile, eps, 2.0 * half, policy)?;
            let l2 = lowest_eigenvalue(&wide);
            // without a bound state the box eigenvalue only tracks the box size
            let stable = lambda >= 0.0 && l2 >= 0.0 || (l2 - lambda).abs() <= policy.tol * l2.abs();
            half *= 2.0;
            op = wide;
            lambda = l2;
            if stable {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::ResourceCap(format!(
                "eigenvalue at eps = {eps} still moves by more than {} under box doubling at L = {half}",
                policy.tol
            )));
        }
        let predicted = -w * w * eps * eps;
        rows.push(ShallowRow {
            eps,
            lambda,
            predicted,
            ratio: (w != 0.0).then(|| lambda / predicted),
            negative_count: count_below(&op, 0.0),
            half_length: half,
            nodes: op.n,
        });
    }
    Ok(ShallowWellReport { w, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlowDecayRow {
    pub eps: f64,
    pub lambda: f64,
    /// `lambda eps^{-1/(1-q)}`.
    pub scaled: f64,
    /// `scaled / mu`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlowDecayReport {
    pub c: f64,
    pub q: f64,
    /// Lowest eigenvalue of `D^2 - c|t|^{-2q}`.
    pub mu: f64,
    /// Same at doubled resolution.
    pub mu_fine: f64,
    pub rows: Vec<SlowDecayRow>,
    /// Fit of `log|lambda|` against `log eps`.
    pub fit: LinearFit,
    pub predicted_slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SlowDecayOptions {
    pub half_length: f64,
    pub grade: f64,
    pub per_unit: f64,
}

impl Default for SlowDecayOptions {
    fn default() -> Self {
        SlowDecayOptions { half_length: 200.0, grade: 0.05, per_unit: 150.0 }
    }
}

/// `D^2 - eps c <t>^{-2q}` for small `eps`. Dilating `t = l y` with
/// `l = eps^{-1/(2-2q)}` turns the operator into `eps^{1/(1-q)}` times
/// `D^2 - c (l^{-2} + y^2)^{-q}`, whose ground state lives at unit scale.
pub fn slow_decay_check(c: f64, q: f64, eps_grid: &[f64], opts: &SlowDecayOptions) -> Result<SlowDecayReport> {
    if !(q > 0.0 && q < 0.5) {
        return Err(Error::Invalid(format!("q must lie in (0, 1/2), got {q}")));
    }
    if !(c > 0.0) {
        return Err(Error::Invalid(format!("c must be positive, got {c}")));
    }
    let solve = |pot: Potential1D, per_unit: f64| -> Result<f64> {
        let grid = Grid1D::graded_density(opts.half_length, opts.grade, per_unit);
        Ok(lowest_eigenvalue(&discretize_on(&Profile1D::new(pot), 1.0, &grid, Sampling::CellAverage)?))
    };
    let limit = Potential1D::Homogeneous { coeff: -c, q };
    let mu = solve(limit.clone(), opts.per_unit)?;
    let mu_fine = solve(limit, 2.0 * opts.per_unit)?;
    let power = 1.0 / (1.0 - q);
    let mut rows = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Invalid(format!("eps must lie in (0, 1), got {eps}")));
        }
        let s = eps.powf(0.5 * power);
        let scaled = solve(Potential1D::Regularized { coeff: -c, q, s }, opts.per_unit)?;
        let lambda = eps.powf(power) * scaled;
        rows.push(SlowDecayRow { eps, lambda, scaled, ratio: scaled / mu });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.eps.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.lambda.abs().ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(SlowDecayReport { c, q, mu, mu_fine, rows, fit, predicted_slope: power })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylCount1D {
    /// `(2 pi)^{-1} int (-eps V - eta)_+^{1/2}`.
    pub value: f64,
    /// Eigenvalues below `-eta` on the given grid.
    pub numeric: usize,
    pub ratio: Option<f64>,
}

/// Literal semiclassical count for `D^2 + eps V` below `-eta`, with the
/// numerical count on `grid` for comparison.
pub fn weyl_count_1d(v: &Potential1D, eps: f64, eta: f64, grid: &Grid1D) -> Result<WeylCount1D> {
    if eta < 0.0 {
        return Err(Error::Invalid(format!("eta must be nonnegative, got {eta}")));
    }
    let f = |t: f64| (-eps * v.value(t) - eta).max(0.0).sqrt();
    let mut pts: Vec<f64> = v.breakpoints();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let value = match v {
        Potential1D::Well { a, b, .. } => quad::integrate(f, *a, *b, 1e-14, 1e-12).value,
        Potential1D::Tabulated { t, .. } if !t.is_empty() => {
            t.windows(2).map(|w| quad::integrate(f, w[0], w[1], 1e-14, 1e-12).value).sum()
        }
        _ => {
            if eta == 0.0 && v.decay_exponent().is_some_and(|p| p <= 2.0) {
                return Err(Error::Divergent(format!(
                    "(-eps V)^(1/2) decays like |t|^{} and is not integrable at eta = 0",
                    -0.5 * v.decay_exponent().unwrap_or(0.0)
                )));
            }
            let (lo, hi) = (pts.first().copied().unwrap_or(0.0).min(0.0), pts.last().copied().unwrap_or(0.0).max(0.0));
            let mut s = quad::integrate_to_inf(|t| f(hi + t), 0.0, 1e-14, 1e-12).value
                + quad::integrate_to_inf(|t| f(lo - t), 0.0, 1e-14, 1e-12).value;
            let mut knots = vec![lo];
            knots.extend(pts.iter().copied().filter(|p| *p > lo && *p < hi));
            knots.push(hi);
            s += knots.windows(2).map(|w| quad::integrate(f, w[0], w[1], 1e-14, 1e-12).value).sum::<f64>();
            s
        }
    } / (2.0 * std::f64::consts::PI);
    let op = discretize_on(&Profile1D::new(v.clone()), eps, grid, Sampling::CellAverage)?;
    let numeric = count_below(&op, -eta);
    Ok(WeylCount1D { value, numeric, ratio: (value > 0.0).then(|| numeric as f64 / value) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyRow {
    pub half_length: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardyReport {
    pub c: f64,
    pub rows: Vec<HardyRow>,
    /// `count ~ alpha log L + beta`; absent with fewer than two rows.
    pub fit: Option<LinearFit>,
    pub bounded: bool,
}

/// Negative eigenvalues of `D^2 + c 1_{|t|>=1} t^{-2}` on `(-L, L)` for each `L`.
/// The grid is uniform in `asinh t`, which resolves the log-periodic
/// oscillation of supercritical states at every scale.
pub fn hardy_threshold_check(c: f64, lengths: &[f64], per_unit: f64) -> Result<HardyReport> {
    let profile = Profile1D::new(Potential1D::HardyTail { coeff: c });
    let mut rows = Vec::with_capacity(lengths.len());
    for &l in lengths {
        if !(l > 1.0) {
            return Err(Error::Invalid(format!("box half-length must exceed 1, got {l}")));
        }
        let op = discretize_on(&profile, 1.0, &Grid1D::graded_density(l, 1.0, per_unit), Sampling::CellAverage)?;
        rows.push(HardyRow { half_length: l, count: count_below(&op, 0.0) });
    }
    let fit = if rows.len() >= 2 {
        let lx: Vec<f64> = rows.iter().map(|r| r.half_length.ln()).collect();
        let ly: Vec<f64> = rows.iter().map(|r| r.count as f64).collect();
        Some(linear_fit(&lx, &ly)?)
    } else {
        None
    };
    let bounded = rows.windows(2).all(|w| w[0].count == w[1].count);
    Ok(HardyReport { c, rows, fit, bounded })
}

/// Minimum of `sum (u_{i+1}-u_i)^2/d` over `sum u_i^2 d / t_i^2` on the grid
/// `t_i = i d` of `(0, len)` with `u` vanishing at both ends.
pub fn hardy_form_minimum(n: usize, len: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::Invalid("need at least two interior nodes".into()));
    }
    let d = len / (n + 1) as f64;
    let t: Vec<f64> = (1..=n).map(|i| i as f64 * d).collect();
    let diag: Vec<f64> = t.iter().map(|x| 2.0 * x * x / (d * d)).collect();
    let off: Vec<f64> = t.windows(2).map(|w| -w[0] * w[1] / (d * d)).collect();
    Ok(lowest_eigenvalue(&Tridiag::new(diag, off)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn w_closed_forms() {
        assert_eq!(w_functional(&Potential1D::Well { value: -1.0, a: -1.0, b: 1.0 }).unwrap(), 1.0);
        let g = w_functional(&Potential1D::Gaussian { coeff: -1.0, width: 1.0 }).unwrap();
        assert!((g - PI.sqrt() / 2.0).abs() < 1e-15);
        // <t>^{-2}: int = pi
        let p = w_functional(&Potential1D::PowerDecay { coeff: -1.0, q: 1.0 }).unwrap();
        assert!((p - PI / 2.0).abs() < 1e-12);
        assert!(matches!(w_functional(&Potential1D::PowerDecay { coeff: -1.0, q: 0.25 }), Err(Error::Divergent(_))));
    }

    #[test]
    fn odd_tabulated_has_zero_w() {
        let v = Potential1D::Tabulated { t: vec![-2.0, -1.0, 0.0, 1.0, 2.0], values: vec![0.0, 1.0, 0.0, -1.0, 0.0] };
        assert!(w_functional(&v).unwrap().abs() < 1e-14);
    }

    #[test]
    fn literal_weyl_constant_well() {
        let v = Potential1D::Well { value: -4.0, a: 0.0, b: 1.0 };
        let r = weyl_count_1d(&v, 1.0, 0.0, &Grid1D::uniform(5.0, 400)).unwrap();
        assert!((r.value - 1.0 / PI).abs() < 1e-12);
        let r = weyl_count_1d(&v, 1.0, 10.0, &Grid1D::uniform(5.0, 400)).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.numeric, 0);
    }

    #[test]
    fn discrete_hardy_constant() {
        for n in [50, 200, 800] {
            let m = hardy_form_minimum(n, 1.0).unwrap();
            assert!(m >= 0.25 - 1.0 / n as f64, "{n}: {m}");
        }
    }
}
