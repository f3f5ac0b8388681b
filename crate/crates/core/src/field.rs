//! Symbolic scalar fields and metrics used by model specifications.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Radial base of a power law: `|x|` or `<x> = (1 + |x|^2)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Base {
    #[default]
    Abs,
    Japanese,
}

impl Base {
    pub fn eval(self, r: f64) -> f64 {
        match self {
            Base::Abs => r,
            Base::Japanese => (1.0 + r * r).sqrt(),
        }
    }

    /// d/dr of the base.
    pub fn deriv(self, r: f64) -> f64 {
        match self {
            Base::Abs => 1.0,
            Base::Japanese => r / (1.0 + r * r).sqrt(),
        }
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Scalar field descriptor as it appears in the JSON `potential` block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScalarField {
    Constant {
        value: f64,
    },
    /// `coeff * base(|x|)^exponent`.
    PowerLaw {
        coeff: f64,
        exponent: f64,
        #[serde(default)]
        base: Base,
    },
    /// `coeff * exp(-|x|^2 / width^2)`.
    Gaussian {
        coeff: f64,
        width: f64,
    },
    /// Piecewise-linear in `|x|`, clamped outside the table.
    RadialProfile {
        radii: Vec<f64>,
        values: Vec<f64>,
    },
    /// Bilinear interpolation on a 2D node grid, row-major with x fastest.
    TabulatedGrid {
        origin: [f64; 2],
        spacing: [f64; 2],
        shape: [usize; 2],
        values: Vec<f64>,
    },
    Sum {
        terms: Vec<ScalarField>,
    },
}

impl ScalarField {
    pub fn zero() -> Self {
        ScalarField::Constant { value: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarField::Gaussian { width, .. } if *width <= 0.0 => {
                Err(Error::Invalid("gaussian width must be positive".into()))
            }
            ScalarField::RadialProfile { radii, values } => {
                if radii.is_empty() || radii.len() != values.len() {
                    return Err(Error::Invalid("radial_profile: radii/values length mismatch".into()));
                }
                if radii.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Invalid("radial_profile: radii must increase".into()));
                }
                Ok(())
            }
            ScalarField::TabulatedGrid { shape, values, spacing, .. } => {
                if shape[0] < 2 || shape[1] < 2 || values.len() != shape[0] * shape[1] {
                    return Err(Error::Invalid("tabulated_grid: shape/values mismatch".into()));
                }
                if spacing[0] <= 0.0 || spacing[1] <= 0.0 {
                    return Err(Error::Invalid("tabulated_grid: spacing must be positive".into()));
                }
                Ok(())
            }
            ScalarField::Sum { terms } => terms.iter().try_for_each(|t| t.validate()),
            _ => Ok(()),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Constant { value } => *value,
            ScalarField::PowerLaw { coeff, exponent, base } => {
                coeff * base.eval(norm(x)).powf(*exponent)
            }
            ScalarField::Gaussian { coeff, width } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                coeff * (-r2 / (width * width)).exp()
            }
            ScalarField::RadialProfile { radii, values } => interp_linear(radii, values, norm(x)),
            ScalarField::TabulatedGrid { origin, spacing, shape, values } => {
                let fx = ((x[0] - origin[0]) / spacing[0]).clamp(0.0, (shape[0] - 1) as f64);
                let fy = ((x[1] - origin[1]) / spacing[1]).clamp(0.0, (shape[1] - 1) as f64);
                let i = (fx.floor() as usize).min(shape[0] - 2);
                let j = (fy.floor() as usize).min(shape[1] - 2);
                let (tx, ty) = (fx - i as f64, fy - j as f64);
                let at = |a: usize, b: usize| values[b * shape[0] + a];
                (1.0 - tx) * (1.0 - ty) * at(i, j)
                    + tx * (1.0 - ty) * at(i + 1, j)
                    + (1.0 - tx) * ty * at(i, j + 1)
                    + tx * ty * at(i + 1, j + 1)
            }
            ScalarField::Sum { terms } => terms.iter().map(|t| t.value(x)).sum(),
        }
    }

    /// True when the field is a function of `|x|` only.
    pub fn is_radial(&self) -> bool {
        match self {
            ScalarField::TabulatedGrid { .. } => false,
            ScalarField::Sum { terms } => terms.iter().all(|t| t.is_radial()),
            _ => true,
        }
    }
}

pub(crate) fn interp_linear(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.partition_point(|&v| v <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

/// Contravariant metric `g^{jk}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Metric {
    #[default]
    Identity,
    Constant {
        matrix: Vec<Vec<f64>>,
    },
    Diagonal {
        entries: Vec<ScalarField>,
    },
}

impl Metric {
    pub fn at(&self, x: &[f64]) -> DMatrix<f64> {
        let d = x.len();
        match self {
            Metric::Identity => DMatrix::identity(d, d),
            Metric::Constant { matrix } => DMatrix::from_fn(d, d, |i, j| matrix[i][j]),
            Metric::Diagonal { entries } => {
                DMatrix::from_fn(d, d, |i, j| if i == j { entries[i].value(x) } else { 0.0 })
            }
        }
    }

    /// `sqrt(g) = det(g^{jk})^{-1/2}`.
    pub fn sqrt_g(&self, x: &[f64]) -> f64 {
        match self {
            Metric::Identity => 1.0,
            _ => self.at(x).determinant().powf(-0.5),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Metric::Identity)
    }

    /// Ellipticity check `eps |xi|^2 <= g xi.xi <= c |xi|^2` at the given point.
    pub fn check_elliptic(&self, x: &[f64], eps: f64, c: f64) -> Result<()> {
        let g = self.at(x);
        let asym = (&g - g.transpose()).abs().max();
        if asym > 1e-12 * g.abs().max().max(1.0) {
            return Err(Error::Invalid(format!("metric not symmetric at {x:?}")));
        }
        let ev = g.symmetric_eigenvalues();
        let (lo, hi) = (ev.min(), ev.max());
        if lo < eps || hi > c {
            return Err(Error::Invalid(format!(
                "metric ellipticity violated at {x:?}: eigenvalues in [{lo}, {hi}], declared [{eps}, {c}]"
            )));
        }
        Ok(())
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Metric::Identity => Ok(()),
            Metric::Constant { matrix } => {
                if matrix.len() != d || matrix.iter().any(|r| r.len() != d) {
                    return Err(Error::Invalid(format!("metric.matrix must be {d}x{d}")));
                }
                Ok(())
            }
            Metric::Diagonal { entries } => {
                if entries.len() != d {
                    return Err(Error::Invalid(format!("metric.entries must have {d} fields")));
                }
                entries.iter().try_for_each(|e| e.validate())
            }
        }
    }
}
