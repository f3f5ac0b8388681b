//! Vector potentials with prescribed intensity growth, the magnetic tensor
//! `F_jk = d_k V_j - d_j V_k`, and intensities of `gF`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{norm, Base, Metric};
use crate::quad;

fn default_one() -> f64 {
    1.0
}
fn default_smoothing() -> u32 {
    4
}

/// Radial profile `sigma(r)` with its derivative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Sigma {
    Constant { value: f64 },
    /// `coeff * base(r)^exponent`.
    Power {
        #[serde(default = "default_one")]
        coeff: f64,
        exponent: f64,
        #[serde(default)]
        base: Base,
    },
    Sum { terms: Vec<Sigma> },
}

impl Sigma {
    pub fn value(&self, r: f64) -> f64 {
        match self {
            Sigma::Constant { value } => *value,
            Sigma::Power { coeff, exponent, base } => coeff * base.eval(r).powf(*exponent),
            Sigma::Sum { terms } => terms.iter().map(|t| t.value(r)).sum(),
        }
    }

    pub fn deriv(&self, r: f64) -> f64 {
        match self {
            Sigma::Constant { .. } => 0.0,
            Sigma::Power { coeff, exponent, base } => {
                if *exponent == 0.0 {
                    0.0
                } else {
                    coeff * exponent * base.eval(r).powf(exponent - 1.0) * base.deriv(r)
                }
            }
            Sigma::Sum { terms } => terms.iter().map(|t| t.deriv(r)).sum(),
        }
    }

    /// Whether the profile is smooth through `r = 0`.
    fn regular_at_origin(&self) -> bool {
        match self {
            Sigma::Constant { .. } => true,
            Sigma::Power { exponent, base, .. } => *base == Base::Japanese || *exponent == 0.0,
            Sigma::Sum { terms } => terms.iter().all(|t| t.regular_at_origin()),
        }
    }
}

/// Axial term `V_d = coeff * base(|x|)^exponent` of the odd-dimensional construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axial {
    pub coeff: f64,
    pub exponent: f64,
    #[serde(default)]
    pub base: Base,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum VectorPotentialSpec {
    /// `V = (Lambda x) sigma(|x|)` in even dimension.
    RotationalEven { dim: usize, sigma: Sigma },
    /// Odd dimension: the trailing coordinate sits in the kernel of `Lambda`,
    /// with an optional axial component in the last slot.
    RotationalOdd {
        dim: usize,
        sigma: Sigma,
        #[serde(default)]
        axial: Option<Axial>,
    },
    /// Built from the smoothed quasi-norm `[x]_L = (sum |x_j|^{2n/l_j})^{1/2n}`.
    QuasiHomogeneous {
        dim: usize,
        l: Vec<f64>,
        m: f64,
        #[serde(default = "default_one")]
        a: f64,
        #[serde(default = "default_smoothing")]
        n: u32,
    },
    /// `V_1 = e^nu cos(psi)|x|^m`, `V_2 = e^nu sin(psi)|x|^m`, `V_3 = 0`,
    /// `nu = a|x|^beta`, `psi = int_0^{x_3} (|x'|^2 + y^2)^{(beta-1)/2} dy`.
    ExponentialPhase {
        #[serde(default = "default_one")]
        a: f64,
        beta: f64,
        m: f64,
    },
    /// Bilinear interpolation of `(V_1, V_2)` on a 2D node grid.
    Tabulated {
        origin: [f64; 2],
        spacing: [f64; 2],
        shape: [usize; 2],
        values_x: Vec<f64>,
        values_y: Vec<f64>,
    },
}

/// Antisymmetric magnetic tensor at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticTensor {
    pub point: Vec<f64>,
    pub f: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TensorMode {
    Analytic,
    /// Central differences with step `eta`; `None` uses `1e-4 (1 + |x|)`.
    FiniteDifference(Option<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntensityList {
    /// Nonincreasing positive intensities.
    pub f: Vec<f64>,
    pub kernel_dim: usize,
    /// `f_1` (for d = 2 this is `|F_12|` under the identity metric, for d = 3 `|curl V|`).
    pub scalar: f64,
}

struct QhTerm {
    comp: usize,
    coeff: f64,
    var: usize,
    power: f64,
}

impl VectorPotentialSpec {
    pub fn dim(&self) -> usize {
        match self {
            VectorPotentialSpec::RotationalEven { dim, .. }
            | VectorPotentialSpec::RotationalOdd { dim, .. }
            | VectorPotentialSpec::QuasiHomogeneous { dim, .. } => *dim,
            VectorPotentialSpec::ExponentialPhase { .. } => 3,
            VectorPotentialSpec::Tabulated { .. } => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            VectorPotentialSpec::RotationalEven { dim, .. } if *dim == 0 || dim % 2 != 0 => {
                Err(Error::Invalid(format!("rotational_even needs an even dim, got {dim}")))
            }
            VectorPotentialSpec::RotationalOdd { dim, .. } if dim % 2 != 1 => {
                Err(Error::Invalid(format!("rotational_odd needs an odd dim, got {dim}")))
            }
            VectorPotentialSpec::QuasiHomogeneous { dim, l, n, .. } => {
                if !(*dim == 2 || *dim == 3) || l.len() != *dim {
                    return Err(Error::Invalid("quasi_homogeneous needs dim 2 or 3 and one l per axis".into()));
                }
                if l.iter().any(|&v| v <= 0.0 || v > 2.0 * *n as f64) || *n == 0 {
                    return Err(Error::Invalid("quasi_homogeneous needs 0 < l_j <= 2n".into()));
                }
                Ok(())
            }
            VectorPotentialSpec::ExponentialPhase { beta, .. } if *beta <= 0.0 => {
                Err(Error::Invalid("exponential_phase needs beta > 0".into()))
            }
            VectorPotentialSpec::Tabulated { shape, values_x, values_y, spacing, .. } => {
                let n = shape[0] * shape[1];
                if shape[0] < 2 || shape[1] < 2 || values_x.len() != n || values_y.len() != n {
                    return Err(Error::Invalid("tabulated: shape/values mismatch".into()));
                }
                if spacing[0] <= 0.0 || spacing[1] <= 0.0 {
                    return Err(Error::Invalid("tabulated: spacing must be positive".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Invalid(format!("point has dim {}, potential has dim {}", x.len(), self.dim())));
        }
        Ok(())
    }

    fn qh_terms(dim: usize, m: f64, a: f64) -> Vec<QhTerm> {
        let t = |comp, coeff, var, power| QhTerm { comp, coeff, var, power };
        match dim {
            2 => vec![t(0, -a, 1, m), t(1, 1.0, 0, m)],
            _ if m != -1.0 => vec![t(1, 1.0, 0, m), t(2, 1.0, 0, m + 1.0)],
            _ => vec![t(0, -1.0, 1, m), t(1, 1.0, 0, m)],
        }
    }

    /// Exact evaluation of the construction at `x`.
    pub fn potential_at(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let d = x.len();
        match self {
            VectorPotentialSpec::RotationalEven { sigma, .. }
            | VectorPotentialSpec::RotationalOdd { sigma, .. } => {
                let r = norm(x);
                if r == 0.0 && !sigma.regular_at_origin() {
                    return Err(Error::Domain("profile is singular at x = 0".into()));
                }
                let s = sigma.value(r);
                let mut v = lambda_apply(x);
                v.iter_mut().for_each(|c| *c *= s);
                if let VectorPotentialSpec::RotationalOdd { axial: Some(ax), .. } = self {
                    if r == 0.0 && ax.base == Base::Abs && ax.exponent < 0.0 {
                        return Err(Error::Domain("axial term is singular at x = 0".into()));
                    }
                    v[d - 1] = ax.coeff * ax.base.eval(r).powf(ax.exponent);
                }
                Ok(v)
            }
            VectorPotentialSpec::QuasiHomogeneous { l, m, a, n, .. } => {
                let (q, _) = quasi_norm(x, l, *n)?;
                let mut v = vec![0.0; d];
                for t in Self::qh_terms(d, *m, *a) {
                    v[t.comp] += t.coeff * x[t.var] * q.powf(t.power);
                }
                Ok(v)
            }
            VectorPotentialSpec::ExponentialPhase { a, beta, m } => {
                let r = norm(x);
                if r == 0.0 {
                    return Err(Error::Domain("exponential_phase is singular at x = 0".into()));
                }
                let psi = phase_integral(x, *beta, 0.0)?;
                let amp = (a * r.powf(*beta)).exp() * r.powf(*m);
                Ok(vec![amp * psi.cos(), amp * psi.sin(), 0.0])
            }
            VectorPotentialSpec::Tabulated { origin, spacing, shape, values_x, values_y } => {
                let (vx, _) = bilinear(origin, spacing, shape, values_x, x);
                let (vy, _) = bilinear(origin, spacing, shape, values_y, x);
                Ok(vec![vx, vy])
            }
        }
    }

    /// `J[j][k] = d_k V_j` from the closed-form derivatives of the construction.
    pub fn jacobian_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let d = x.len();
        let mut j = DMatrix::zeros(d, d);
        match self {
            VectorPotentialSpec::RotationalEven { sigma, .. }
            | VectorPotentialSpec::RotationalOdd { sigma, .. } => {
                let r = norm(x);
                if r == 0.0 && !sigma.regular_at_origin() {
                    return Err(Error::Domain("profile is singular at x = 0".into()));
                }
                let s = sigma.value(r);
                let ds_over_r = if r == 0.0 { 0.0 } else { sigma.deriv(r) / r };
                let lx = lambda_apply(x);
                for a in 0..d {
                    for b in 0..d {
                        j[(a, b)] = lambda_entry(d, a, b) * s + lx[a] * ds_over_r * x[b];
                    }
                }
                if let VectorPotentialSpec::RotationalOdd { axial: Some(ax), .. } = self {
                    if r == 0.0 {
                        return Err(Error::Domain("axial term derivative undefined at x = 0".into()));
                    }
                    let k = ax.exponent;
                    let dv = ax.coeff * k * ax.base.eval(r).powf(k - 1.0) * ax.base.deriv(r) / r;
                    for b in 0..d {
                        j[(d - 1, b)] = dv * x[b];
                    }
                }
            }
            VectorPotentialSpec::QuasiHomogeneous { l, m, a, n, .. } => {
                let (q, grad) = quasi_norm(x, l, *n)?;
                for t in Self::qh_terms(d, *m, *a) {
                    let qp = q.powf(t.power);
                    for b in 0..d {
                        let mut v = t.coeff * x[t.var] * t.power * q.powf(t.power - 1.0) * grad[b];
                        if b == t.var {
                            v += t.coeff * qp;
                        }
                        j[(t.comp, b)] += v;
                    }
                }
            }
            VectorPotentialSpec::ExponentialPhase { a, beta, m } => {
                let r = norm(x);
                let s = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if r == 0.0 || s == 0.0 {
                    return Err(Error::Domain("exponential_phase derivative needs x' != 0".into()));
                }
                let psi = phase_integral(x, *beta, 0.0)?;
                let dpsi_ds = phase_integral(x, *beta, 1.0)?; // (beta-1) int (s^2+y^2)^{(beta-3)/2}
                let mut gpsi = [x[0] * dpsi_ds, x[1] * dpsi_ds, 0.0];
                gpsi[2] = (s * s + x[2] * x[2]).powf(0.5 * (beta - 1.0));
                let e = (a * r.powf(*beta)).exp();
                let rm = r.powf(*m);
                let (c, sn) = (psi.cos(), psi.sin());
                for b in 0..3 {
                    let dnu = a * beta * r.powf(beta - 2.0) * x[b];
                    let drm = m * r.powf(m - 2.0) * x[b];
                    j[(0, b)] = e * (dnu * c * rm - sn * gpsi[b] * rm + c * drm);
                    j[(1, b)] = e * (dnu * sn * rm + c * gpsi[b] * rm + sn * drm);
                }
            }
            VectorPotentialSpec::Tabulated { origin, spacing, shape, values_x, values_y } => {
                let (_, gx) = bilinear(origin, spacing, shape, values_x, x);
                let (_, gy) = bilinear(origin, spacing, shape, values_y, x);
                j[(0, 0)] = gx[0];
                j[(0, 1)] = gx[1];
                j[(1, 0)] = gy[0];
                j[(1, 1)] = gy[1];
            }
        }
        Ok(j)
    }

    pub fn tensor_at(&self, x: &[f64], mode: TensorMode) -> Result<MagneticTensor> {
        let jac = match mode {
            TensorMode::Analytic => self.jacobian_at(x)?,
            TensorMode::FiniteDifference(eta) => {
                let d = x.len();
                let eta = eta.unwrap_or(1e-4 * (1.0 + norm(x)));
                if eta <= 0.0 {
                    return Err(Error::Invalid("finite-difference step must be positive".into()));
                }
                let mut jac = DMatrix::zeros(d, d);
                let mut xp = x.to_vec();
                for k in 0..d {
                    xp[k] = x[k] + eta;
                    let vp = self.potential_at(&xp)?;
                    xp[k] = x[k] - eta;
                    let vm = self.potential_at(&xp)?;
                    xp[k] = x[k];
                    for j in 0..d {
                        jac[(j, k)] = (vp[j] - vm[j]) / (2.0 * eta);
                    }
                }
                jac
            }
        };
        Ok(MagneticTensor { point: x.to_vec(), f: antisym_from_jacobian(&jac) })
    }

    /// Closed-form intensities for the rotational constructions in even
    /// dimension and in d = 3; `None` for other kinds.
    pub fn closed_form_intensities(&self, x: &[f64]) -> Result<Option<Vec<f64>>> {
        self.check_dim(x)?;
        let r = norm(x);
        let mut out = match self {
            VectorPotentialSpec::RotationalEven { dim, sigma } => {
                if r == 0.0 && !sigma.regular_at_origin() {
                    return Err(Error::Domain("profile is singular at x = 0".into()));
                }
                let s = sigma.value(r);
                let mut f = vec![(2.0 * s + r * sigma.deriv(r)).abs()];
                f.extend(std::iter::repeat_n((2.0 * s).abs(), dim / 2 - 1));
                f
            }
            VectorPotentialSpec::RotationalOdd { dim: 3, sigma, axial } => {
                if r == 0.0 {
                    return Err(Error::Domain("closed form needs x != 0".into()));
                }
                let (s, ds) = (sigma.value(r), sigma.deriv(r));
                let xp2 = x[0] * x[0] + x[1] * x[1];
                let xd2 = x[2] * x[2];
                let mut f2 = (2.0 * s + xp2 / r * ds).powi(2) + xd2 * xp2 * ds * ds / (r * r);
                if let Some(ax) = axial {
                    let k = ax.exponent;
                    let dv = ax.coeff * k * ax.base.eval(r).powf(k - 1.0) * ax.base.deriv(r);
                    f2 += dv * dv * xp2 / (r * r);
                }
                vec![f2.sqrt()]
            }
            _ => return Ok(None),
        };
        out.sort_by(|a, b| b.total_cmp(a));
        Ok(Some(out))
    }
}

/// `(Lambda x)` with 2x2 blocks `[[0,1],[-1,0]]` and a zero trailing block in odd dimension.
pub fn lambda_apply(x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let mut v = vec![0.0; d];
    for p in 0..d / 2 {
        v[2 * p] = x[2 * p + 1];
        v[2 * p + 1] = -x[2 * p];
    }
    v
}

fn lambda_entry(d: usize, a: usize, b: usize) -> f64 {
    if a / 2 != b / 2 || a == b || (d % 2 == 1 && a == d - 1) {
        0.0
    } else if a.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// `F_jk = d_k V_j - d_j V_k`, with the lower triangle set as the
/// exact negative of the upper one.
fn antisym_from_jacobian(jac: &DMatrix<f64>) -> DMatrix<f64> {
    let d = jac.nrows();
    let mut f = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in j + 1..d {
            let v = jac[(j, k)] - jac[(k, j)];
            f[(j, k)] = v;
            f[(k, j)] = -v;
        }
    }
    f
}

/// `[x]_L` and its gradient.
fn quasi_norm(x: &[f64], l: &[f64], n: u32) -> Result<(f64, Vec<f64>)> {
    let two_n = 2.0 * n as f64;
    let s: f64 = x.iter().zip(l).map(|(xi, li)| xi.abs().powf(two_n / li)).sum();
    if s == 0.0 {
        return Err(Error::Domain("quasi-norm vanishes at x = 0".into()));
    }
    let q = s.powf(1.0 / two_n);
    let grad = x
        .iter()
        .zip(l)
        .map(|(xi, li)| {
            if *xi == 0.0 {
                0.0
            } else {
                q.powf(1.0 - two_n) * xi.abs().powf(two_n / li - 1.0) * xi.signum() / li
            }
        })
        .collect();
    Ok((q, grad))
}

/// `order = 0`: `int_0^{x3} (s^2 + y^2)^{(beta-1)/2} dy`;
/// `order = 1`: `(beta - 1) int_0^{x3} (s^2 + y^2)^{(beta-3)/2} dy`, i.e. `(1/s) d/ds` of the former.
fn phase_integral(x: &[f64], beta: f64, order: f64) -> Result<f64> {
    let s2 = x[0] * x[0] + x[1] * x[1];
    let p = 0.5 * (beta - 1.0) - order;
    if s2 == 0.0 && p <= -0.5 {
        return Err(Error::Domain("phase integral diverges on the x_3 axis".into()));
    }
    let q = quad::integrate(|y| (s2 + y * y).powf(p), 0.0, x[2], 1e-15, 1e-13);
    let c = if order == 0.0 { 1.0 } else { beta - 1.0 };
    Ok(c * q.value)
}

fn bilinear(
    origin: &[f64; 2],
    spacing: &[f64; 2],
    shape: &[usize; 2],
    vals: &[f64],
    x: &[f64],
) -> (f64, [f64; 2]) {
    let fx = ((x[0] - origin[0]) / spacing[0]).clamp(0.0, (shape[0] - 1) as f64);
    let fy = ((x[1] - origin[1]) / spacing[1]).clamp(0.0, (shape[1] - 1) as f64);
    let i = (fx.floor() as usize).min(shape[0] - 2);
    let j = (fy.floor() as usize).min(shape[1] - 2);
    let (tx, ty) = (fx - i as f64, fy - j as f64);
    let at = |a: usize, b: usize| vals[b * shape[0] + a];
    let (v00, v10, v01, v11) = (at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1));
    let v = (1.0 - tx) * (1.0 - ty) * v00 + tx * (1.0 - ty) * v10 + (1.0 - tx) * ty * v01 + tx * ty * v11;
    let gx = ((1.0 - ty) * (v10 - v00) + ty * (v11 - v01)) / spacing[0];
    let gy = ((1.0 - tx) * (v01 - v00) + tx * (v11 - v10)) / spacing[1];
    (v, [gx, gy])
}

fn sqrt_spd(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(g.clone());
    if eig.eigenvalues.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
        return Err(Error::Invalid("metric is not positive definite".into()));
    }
    let s = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    Ok(&eig.eigenvectors * s * eig.eigenvectors.transpose())
}

/// Intensities from the singular values of `g^{1/2} F g^{1/2}`, which share
/// the spectrum of `gF`; singular values come in equal pairs.
pub fn intensities(t: &MagneticTensor, g: &DMatrix<f64>) -> Result<IntensityList> {
    let d = t.f.nrows();
    if g.nrows() != d || g.ncols() != d {
        return Err(Error::Invalid("metric and tensor dimensions differ".into()));
    }
    if (g - g.transpose()).abs().max() > 1e-12 * g.abs().max().max(1.0) {
        return Err(Error::Invalid("metric is not symmetric".into()));
    }
    let h = sqrt_spd(g)?;
    let s = &h * &t.f * &h;
    let mut sv: Vec<f64> = s.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let top = sv.first().copied().unwrap_or(0.0);
    let tol = 1e-12 * top.max(f64::MIN_POSITIVE);
    let mut f = Vec::new();
    let mut k = 0;
    while k + 1 < sv.len() && sv[k] > tol && top > 0.0 {
        f.push(0.5 * (sv[k] + sv[k + 1]));
        k += 2;
    }
    let r = f.len();
    let scalar = f.first().copied().unwrap_or(0.0);
    Ok(IntensityList { f, kernel_dim: d - 2 * r, scalar })
}

/// One verification row: closed-form vs numerically computed intensities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyRow {
    pub point: Vec<f64>,
    pub f_closed: Vec<f64>,
    pub f_numeric: Vec<f64>,
    pub rel_gap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub rows: Vec<VerifyRow>,
    pub max_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares the closed-form intensities against those of the tensor computed in `mode`.
pub fn verify_intensity_formulas(
    spec: &VectorPotentialSpec,
    points: &[Vec<f64>],
    mode: TensorMode,
    tolerance: f64,
) -> Result<VerifyReport> {
    if !matches!(
        spec,
        VectorPotentialSpec::RotationalEven { .. } | VectorPotentialSpec::RotationalOdd { .. }
    ) {
        return Err(Error::Invalid("intensity closed forms exist for rotational kinds only".into()));
    }
    let mut rows = Vec::with_capacity(points.len());
    let mut max_gap: f64 = 0.0;
    for x in points {
        let closed = spec
            .closed_form_intensities(x)?
            .ok_or_else(|| Error::Unsupported(format!("no closed form for dim {}", spec.dim())))?;
        let g = Metric::Identity.at(x);
        let num = intensities(&spec.tensor_at(x, mode)?, &g)?;
        let mut f_numeric = num.f.clone();
        f_numeric.resize(closed.len(), 0.0);
        let scale = closed.first().copied().unwrap_or(0.0).abs().max(f64::MIN_POSITIVE);
        let gap = closed
            .iter()
            .zip(&f_numeric)
            .map(|(a, b)| (a - b).abs() / scale)
            .fold(0.0, f64::max);
        max_gap = max_gap.max(gap);
        rows.push(VerifyRow { point: x.clone(), f_closed: closed, f_numeric, rel_gap: gap, pass: gap <= tolerance });
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(VerifyReport { rows, max_gap, tolerance, pass })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot(dim: usize, m: f64) -> VectorPotentialSpec {
        let sigma = Sigma::Power { coeff: 1.0, exponent: m, base: Base::Abs };
        if dim.is_multiple_of(2) {
            VectorPotentialSpec::RotationalEven { dim, sigma }
        } else {
            VectorPotentialSpec::RotationalOdd { dim, sigma, axial: None }
        }
    }

    #[test]
    fn potential_examples() {
        let s = VectorPotentialSpec::RotationalEven { dim: 2, sigma: Sigma::Constant { value: 1.0 } };
        assert_eq!(s.potential_at(&[1.0, 0.0]).unwrap(), vec![0.0, -1.0]);
        let s = VectorPotentialSpec::RotationalOdd {
            dim: 3,
            sigma: Sigma::Power { coeff: 1.0, exponent: 0.0, base: Base::Abs },
            axial: Some(Axial { coeff: 1.0, exponent: 1.0, base: Base::Abs }),
        };
        assert_eq!(s.potential_at(&[1.0, 0.0, 0.0]).unwrap(), vec![0.0, -1.0, 1.0]);
    }

    #[test]
    fn constant_profile_gives_uniform_field() {
        let c = 0.7;
        let s = VectorPotentialSpec::RotationalEven { dim: 2, sigma: Sigma::Constant { value: c } };
        for x in [[0.0, 0.0], [1.0, -2.0], [3.0, 0.5]] {
            let t = s.tensor_at(&x, TensorMode::Analytic).unwrap();
            assert!((t.f[(0, 1)] - 2.0 * c).abs() < 1e-15);
        }
    }

    #[test]
    fn power_profile_in_2d() {
        let m = -1.5;
        let s = rot(2, m);
        let x = [0.3, 1.1];
        let r = norm(&x);
        let t = s.tensor_at(&x, TensorMode::Analytic).unwrap();
        assert!((t.f[(0, 1)] - (2.0 + m) * r.powf(m)).abs() < 1e-13);
    }

    #[test]
    fn three_dim_example_point() {
        let s = rot(3, -1.0);
        let x = [1.0, 0.0, 1.0];
        let closed = s.closed_form_intensities(&x).unwrap().unwrap();
        assert!((closed[0] * closed[0] - 1.25).abs() < 1e-14);
        let t = s.tensor_at(&x, TensorMode::FiniteDifference(None)).unwrap();
        let il = intensities(&t, &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(il.kernel_dim, 1);
        assert!((il.f[0] * il.f[0] - 1.25).abs() < 1e-7);
    }

    #[test]
    fn four_dim_constant_profile() {
        let s = VectorPotentialSpec::RotationalEven { dim: 4, sigma: Sigma::Constant { value: 0.5 } };
        let t = s.tensor_at(&[0.1, 0.2, -0.3, 0.4], TensorMode::Analytic).unwrap();
        let il = intensities(&t, &DMatrix::identity(4, 4)).unwrap();
        assert_eq!(il.kernel_dim, 0);
        assert!((il.f[0] - 1.0).abs() < 1e-14 && (il.f[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn tensor_is_exactly_antisymmetric() {
        let s = VectorPotentialSpec::QuasiHomogeneous { dim: 3, l: vec![1.0, 2.0, 1.5], m: 0.5, a: 1.0, n: 4 };
        let t = s.tensor_at(&[0.4, -0.7, 1.3], TensorMode::Analytic).unwrap();
        assert_eq!(t.f.clone(), -t.f.transpose());
    }

    #[test]
    fn quasi_homogeneous_fd_matches_analytic() {
        for (dim, l, m) in [(2, vec![1.0, 2.0], 1.0), (3, vec![1.0, 1.0, 2.0], 0.5), (3, vec![2.0, 1.0, 1.0], -1.0)] {
            let s = VectorPotentialSpec::QuasiHomogeneous { dim, l, m, a: 0.8, n: 4 };
            let x: Vec<f64> = [0.7, -1.2, 0.9][..dim].to_vec();
            let a = s.tensor_at(&x, TensorMode::Analytic).unwrap();
            let f = s.tensor_at(&x, TensorMode::FiniteDifference(None)).unwrap();
            assert!((a.f - f.f).abs().max() < 1e-6);
        }
    }

    #[test]
    fn exponential_phase_fd_matches_analytic() {
        let s = VectorPotentialSpec::ExponentialPhase { a: 0.5, beta: 1.5, m: -1.0 };
        let x = [0.6, 0.8, 1.1];
        let a = s.tensor_at(&x, TensorMode::Analytic).unwrap();
        let f = s.tensor_at(&x, TensorMode::FiniteDifference(None)).unwrap();
        let gap = (&a.f - &f.f).abs().max();
        assert!(gap < 1e-6, "{gap}");
    }

    #[test]
    fn singular_point_is_domain_error() {
        assert!(matches!(rot(2, -1.0).potential_at(&[0.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn non_spd_metric_rejected() {
        let t = rot(2, 0.0).tensor_at(&[1.0, 0.0], TensorMode::Analytic).unwrap();
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(intensities(&t, &g).is_err());
    }

    #[test]
    fn tabulated_linear_potential() {
        // V = (0, x1 B): F_12 = d_2 V_1 - d_1 V_2 = -B
        let shape = [5, 5];
        let mut vx = vec![0.0; 25];
        let mut vy = vec![0.0; 25];
        for j in 0..5 {
            for i in 0..5 {
                vx[j * 5 + i] = 0.0;
                vy[j * 5 + i] = 2.0 * i as f64 * 0.5;
            }
        }
        let s = VectorPotentialSpec::Tabulated { origin: [0.0, 0.0], spacing: [0.5, 0.5], shape, values_x: vx, values_y: vy };
        let t = s.tensor_at(&[0.7, 1.1], TensorMode::Analytic).unwrap();
        assert!((t.f[(0, 1)] + 2.0).abs() < 1e-14);
    }
}
