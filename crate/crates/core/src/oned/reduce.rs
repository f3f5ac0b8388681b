//! Reduction of a 3D problem with a rank-2 field at infinity to a family of
//! 1D operators along the field direction `x_1`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{assemble, count_below, lowest_eigenvalue, Grid1D};
use crate::error::{Error, Result};
use crate::gauge::TensorMode;
use crate::model::ModelSpec;
use crate::quad;

/// Cell-centred tensor grid over the transverse plane `(x_2, x_3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransverseGrid {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub n: [usize; 2],
}

impl TransverseGrid {
    pub fn square(half: f64, n: usize) -> Self {
        TransverseGrid { lo: [-half, -half], hi: [half, half], n: [n, n] }
    }

    pub fn cell_area(&self) -> f64 {
        (self.hi[0] - self.lo[0]) / self.n[0] as f64 * (self.hi[1] - self.lo[1]) / self.n[1] as f64
    }

    pub fn points(&self) -> Vec<[f64; 2]> {
        let d = [(self.hi[0] - self.lo[0]) / self.n[0] as f64, (self.hi[1] - self.lo[1]) / self.n[1] as f64];
        let mut out = Vec::with_capacity(self.n[0] * self.n[1]);
        for i in 0..self.n[0] {
            for j in 0..self.n[1] {
                out.push([self.lo[0] + (i as f64 + 0.5) * d[0], self.lo[1] + (j as f64 + 0.5) * d[1]]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReducedOptions {
    /// `f_inf`, the intensity at infinity.
    pub f_inf: f64,
    /// Half-length of the box along `x_1`.
    pub half_length: f64,
    pub grade: f64,
    pub per_unit: f64,
}

impl Default for ReducedOptions {
    fn default() -> Self {
        ReducedOptions { f_inf: 1.0, half_length: 60.0, grade: 1.0, per_unit: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedField {
    pub grid: TransverseGrid,
    pub f_inf: f64,
    pub points: Vec<[f64; 2]>,
    /// Lowest eigenvalue of the 1D operator at each point.
    pub lambda: Vec<f64>,
    /// `-1/2 int V* dx_1`.
    pub w: Vec<f64>,
    /// Points where the 1D operator has more than one negative eigenvalue.
    pub flagged: Vec<usize>,
}

impl ReducedField {
    /// `(2 pi)^{-1} f_inf area{-lambda >= eta}` by the cell-midpoint rule.
    pub fn count(&self, eta: f64) -> f64 {
        let n = self.lambda.iter().filter(|l| -**l >= eta).count();
        self.f_inf / (2.0 * std::f64::consts::PI) * n as f64 * self.grid.cell_area()
    }

    /// Same with `-W^2` in place of `lambda` (only where `W > 0`).
    pub fn surrogate_count(&self, eta: f64) -> f64 {
        let n = self.w.iter().filter(|w| **w > 0.0 && w.powi(2) >= eta).count();
        self.f_inf / (2.0 * std::f64::consts::PI) * n as f64 * self.grid.cell_area()
    }

    /// `max |lambda + W^2| / W^2` over points with `W > 0`.
    pub fn max_relative_gap(&self) -> f64 {
        self.lambda
            .iter()
            .zip(&self.w)
            .filter(|(_, w)| **w > 0.0)
            .map(|(l, w)| (l + w * w).abs() / (w * w))
            .fold(0.0, f64::max)
    }
}

/// `lambda(x')` and `W(x')` for `D_1 g D_1 + V*(x_1; x')` over the grid.
/// `g` is the `x_1 x_1` coefficient of the metric.
pub fn reduced_lambda_field<V, G>(vstar: V, g: G, grid: &TransverseGrid, opts: &ReducedOptions) -> Result<ReducedField>
where
    V: Fn(f64, [f64; 2]) -> f64 + Sync,
    G: Fn(f64, [f64; 2]) -> f64 + Sync,
{
    if !(opts.f_inf > 0.0) {
        return Err(Error::Invalid(format!("f_inf must be positive, got {}", opts.f_inf)));
    }
    if grid.n[0] == 0 || grid.n[1] == 0 || !(grid.hi[0] > grid.lo[0] && grid.hi[1] > grid.lo[1]) {
        return Err(Error::Invalid("transverse grid must be nonempty".into()));
    }
    let line = Grid1D::graded_density(opts.half_length, opts.grade, opts.per_unit);
    let points = grid.points();
    let solved: Vec<Result<(f64, f64, usize)>> = points
        .par_iter()
        .map(|&p| {
            let op = assemble(&line, |t| g(t, p), |_, _, t| vstar(t, p))?;
            let w = -0.5 * quad::integrate_line(|t| vstar(t, p), 1e-13, 1e-10).value;
            Ok((lowest_eigenvalue(&op), w, count_below(&op, 0.0)))
        })
        .collect();
    let mut lambda = Vec::with_capacity(points.len());
    let mut w = Vec::with_capacity(points.len());
    let mut flagged = Vec::new();
    for (i, r) in solved.into_iter().enumerate() {
        let (l, wi, neg) = r?;
        lambda.push(l.min(0.0));
        w.push(wi);
        if neg > 1 {
            flagged.push(i);
        }
    }
    Ok(ReducedField { grid: *grid, f_inf: opts.f_inf, points, lambda, w, flagged })
}

/// `V*(x) = V(x) + f_1(x) - f_inf` from a 3D model, as a function of
/// `(x_1, (x_2, x_3))`, together with the `x_1 x_1` metric coefficient.
#[allow(clippy::type_complexity)]
pub fn vstar_from_spec(
    spec: &ModelSpec,
    f_inf: f64,
) -> Result<(impl Fn(f64, [f64; 2]) -> f64 + Sync + '_, impl Fn(f64, [f64; 2]) -> f64 + Sync + '_)> {
    if spec.dimension != 3 {
        return Err(Error::Invalid(format!("reduction needs d = 3, got {}", spec.dimension)));
    }
    // the field must point along x_1 far out: F has kernel e_1 there
    let far = [0.0, 1e3, 0.0];
    let t = spec.vector_potential.tensor_at(&far, TensorMode::Analytic)?;
    let col = (t.f[(1, 0)].abs() + t.f[(2, 0)].abs()) / t.f.abs().max().max(f64::MIN_POSITIVE);
    if col > 1e-8 {
        return Err(Error::Invalid("field at infinity is not along x_1".into()));
    }
    let v = move |x1: f64, p: [f64; 2]| {
        let x = [x1, p[0], p[1]];
        let f1 = spec.scalar_intensity(&x).unwrap_or(f_inf);
        spec.potential_at(&x) + f1 - f_inf
    };
    let g = move |x1: f64, p: [f64; 2]| spec.metric.at(&[x1, p[0], p[1]])[(0, 0)];
    Ok((v, g))
}
