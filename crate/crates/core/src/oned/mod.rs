//! One-dimensional operators `D g D + eps V`: discretization, Sturm counting,
//! lowest eigenvalues, and the auxiliary spectral checks.

mod checks;
mod reduce;

pub use checks::{
    hardy_form_minimum, hardy_threshold_check, shallow_well_check, slow_decay_check, w_functional,
    weyl_count_1d, BoxPolicy, HardyReport, HardyRow, ShallowRow, ShallowWellReport, SlowDecayOptions,
    SlowDecayReport, SlowDecayRow, WeylCount1D,
};
pub use reduce::{reduced_lambda_field, vstar_from_spec, ReducedField, ReducedOptions, TransverseGrid};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::quad;

/// One-dimensional potential descriptors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Potential1D {
    Zero,
    Constant { value: f64 },
    /// `value` on `[a, b]`, zero elsewhere.
    Well { value: f64, a: f64, b: f64 },
    /// `coeff * exp(-t^2 / width^2)`.
    Gaussian { coeff: f64, width: f64 },
    /// `coeff * <t>^{-2q}`.
    PowerDecay { coeff: f64, q: f64 },
    /// `coeff * |t|^{-2q}`.
    Homogeneous { coeff: f64, q: f64 },
    /// `coeff * |t|^{-2}` for `|t| >= 1`, zero inside.
    HardyTail { coeff: f64 },
    /// Piecewise linear through the knots, zero outside.
    Tabulated { t: Vec<f64>, values: Vec<f64> },
    /// `coeff * (s^2 + t^2)^{-q}`: the slow-decay profile after rescaling.
    Regularized { coeff: f64, q: f64, s: f64 },
}

/// How the potential enters the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Value at the node.
    #[default]
    Nodal,
    /// Mean over the dual cell; exact for integrable singularities at cell faces.
    CellAverage,
}

impl Potential1D {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            Potential1D::Zero => 0.0,
            Potential1D::Constant { value } => *value,
            Potential1D::Well { value, a, b } => {
                if t >= *a && t <= *b {
                    *value
                } else {
                    0.0
                }
            }
            Potential1D::Gaussian { coeff, width } => coeff * (-(t / width).powi(2)).exp(),
            Potential1D::PowerDecay { coeff, q } => coeff * (1.0 + t * t).powf(-q),
            Potential1D::Homogeneous { coeff, q } => coeff * t.abs().powf(-2.0 * q),
            Potential1D::HardyTail { coeff } => {
                if t.abs() >= 1.0 {
                    coeff / (t * t)
                } else {
                    0.0
                }
            }
            Potential1D::Tabulated { t: ts, values } => {
                if ts.is_empty() || t < ts[0] || t > ts[ts.len() - 1] {
                    0.0
                } else {
                    crate::field::interp_linear(ts, values, t)
                }
            }
            Potential1D::Regularized { coeff, q, s } => coeff * (s * s + t * t).powf(-q),
        }
    }

    /// `|V(t)| ~ |t|^{-p}` at infinity; `None` for compact support.
    pub fn decay_exponent(&self) -> Option<f64> {
        match self {
            Potential1D::Zero | Potential1D::Well { .. } | Potential1D::Gaussian { .. } | Potential1D::Tabulated { .. } => None,
            Potential1D::Constant { value } => {
                if *value == 0.0 {
                    None
                } else {
                    Some(0.0)
                }
            }
            Potential1D::PowerDecay { q, .. } | Potential1D::Homogeneous { q, .. } | Potential1D::Regularized { q, .. } => {
                Some(2.0 * q)
            }
            Potential1D::HardyTail { .. } => Some(2.0),
        }
    }

    /// Points where the potential is non-smooth.
    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Potential1D::Well { a, b, .. } => vec![*a, *b],
            Potential1D::Homogeneous { .. } => vec![0.0],
            Potential1D::HardyTail { .. } => vec![-1.0, 1.0],
            Potential1D::Tabulated { t, .. } => t.clone(),
            _ => vec![],
        }
    }

    /// `int_a^b V`, closed form where available.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        if a == b {
            return 0.0;
        }
        if b < a {
            return -self.integral(b, a);
        }
        match self {
            Potential1D::Zero => 0.0,
            Potential1D::Constant { value } => value * (b - a),
            Potential1D::Well { value, a: wa, b: wb } => value * (b.min(*wb) - a.max(*wa)).max(0.0),
            Potential1D::Gaussian { coeff, width } => {
                coeff * width * std::f64::consts::PI.sqrt() * 0.5 * (erf(b / width) - erf(a / width))
            }
            Potential1D::Homogeneous { coeff, q } if *q != 0.5 => {
                let p = 1.0 - 2.0 * q;
                let anti = |t: f64| t.signum() * t.abs().powf(p) / p;
                coeff * (anti(b) - anti(a))
            }
            Potential1D::HardyTail { coeff } => {
                let anti = |t: f64| if t <= -1.0 { -1.0 / t } else if t >= 1.0 { 2.0 - 1.0 / t } else { 1.0 };
                coeff * (anti(b) - anti(a))
            }
            _ => {
                let mut pts = vec![a];
                pts.extend(self.breakpoints().into_iter().filter(|&p| p > a && p < b));
                pts.push(b);
                pts.windows(2)
                    .map(|w| quad::integrate(|t| self.value(t), w[0], w[1], 1e-15, 1e-12).value)
                    .sum()
            }
        }
    }
}

/// Declared decay of a 1D potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DecayClass {
    /// Zero outside `[-radius, radius]`.
    Compact { radius: f64 },
    /// `|V| <= bound <t>^{-2q}` with `q > 1`, so that the weight and its
    /// first moment are integrable.
    Integrable { q: f64, bound: f64 },
    /// `|V| <= bound <t>^{-2q}`.
    Power { q: f64, bound: f64 },
}

/// `D g D + V` on the line; `g` defaults to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile1D {
    #[serde(default = "unit_coefficient")]
    pub g: Potential1D,
    pub potential: Potential1D,
    /// Exponent `q` of the weight `<t>^{-q}`.
    #[serde(default)]
    pub weight_q: Option<f64>,
    #[serde(default)]
    pub decay: Option<DecayClass>,
}

fn unit_coefficient() -> Potential1D {
    Potential1D::Constant { value: 1.0 }
}

impl Profile1D {
    pub fn new(potential: Potential1D) -> Self {
        Profile1D { g: unit_coefficient(), potential, weight_q: None, decay: None }
    }

    /// Checks `eps0 <= g <= c` at sampled points.
    pub fn check_coefficient(&self, eps0: f64, c: f64, samples: &[f64]) -> Result<()> {
        for &t in samples {
            let g = self.g.value(t);
            if !(g >= eps0 && g <= c) {
                return Err(Error::Invalid(format!("coefficient g({t}) = {g} outside [{eps0}, {c}]")));
            }
        }
        Ok(())
    }

    /// Checks the declared decay class at sampled points.
    pub fn check_decay(&self, samples: &[f64]) -> Result<()> {
        let Some(decay) = self.decay else { return Ok(()) };
        for &t in samples {
            let v = self.potential.value(t).abs();
            let ok = match decay {
                DecayClass::Compact { radius } => t.abs() <= radius || v == 0.0,
                DecayClass::Integrable { q, bound } => q > 1.0 && v <= bound * (1.0 + t * t).powf(-q) * (1.0 + 1e-12),
                DecayClass::Power { q, bound } => v <= bound * (1.0 + t * t).powf(-q) * (1.0 + 1e-12),
            };
            if !ok {
                return Err(Error::Invalid(format!("potential violates the declared decay {decay:?} at t = {t}: |V| = {v}")));
            }
        }
        Ok(())
    }
}

/// Nodes `x_0 = -L < x_1 < ... < x_{n+1} = L`; the interior ones carry unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub x: Vec<f64>,
}

impl Grid1D {
    pub fn uniform(half_length: f64, n: usize) -> Self {
        let h = 2.0 * half_length / (n + 1) as f64;
        Grid1D { x: (0..n + 2).map(|i| -half_length + h * i as f64).collect() }
    }

    /// `x = a sinh(xi)` with `xi` uniform; spacing ~ `a dxi` near 0 and ~ `|x| dxi` far out.
    pub fn graded(half_length: f64, a: f64, n: usize) -> Self {
        let xi_max = (half_length / a).asinh();
        let d = 2.0 * xi_max / (n + 1) as f64;
        let mut x: Vec<f64> = (0..n + 2).map(|i| a * (-xi_max + d * i as f64).sinh()).collect();
        x[0] = -half_length;
        x[n + 1] = half_length;
        Grid1D { x }
    }

    /// Graded grid with about `per_unit` nodes per unit of `xi`, even node count.
    pub fn graded_density(half_length: f64, a: f64, per_unit: f64) -> Self {
        let xi_max = (half_length / a).asinh();
        let mut n = (2.0 * xi_max * per_unit).ceil() as usize;
        n += n % 2;
        Self::graded(half_length, a, n.max(4))
    }

    pub fn interior(&self) -> usize {
        self.x.len() - 2
    }

    pub fn half_length(&self) -> f64 {
        0.5 * (self.x[self.x.len() - 1] - self.x[0])
    }
}

/// Symmetric tridiagonal matrix with Dirichlet ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiag {
    pub half_length: f64,
    pub n: usize,
    pub diag: Vec<f64>,
    /// `off[i]` couples unknowns `i` and `i + 1`.
    pub off: Vec<f64>,
    pub nodes: Vec<f64>,
}

impl Tridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::Invalid("tridiagonal needs len(off) = len(diag) - 1".into()));
        }
        let n = diag.len();
        Ok(Tridiag { half_length: 0.0, n, diag, off, nodes: vec![] })
    }

    /// Gershgorin enclosure of the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..self.n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < self.n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs())
    }
}

/// Uniform grid, nodal potential: `-(g u')' + eps V u` on `(-L, L)`.
pub fn discretize_1d(profile: &Profile1D, eps: f64, half_length: f64, n: usize) -> Result<Tridiag> {
    if !(half_length > 0.0) || n < 3 {
        return Err(Error::Invalid(format!("need L > 0 and n >= 3, got L = {half_length}, n = {n}")));
    }
    discretize_on(profile, eps, &Grid1D::uniform(half_length, n), Sampling::Nodal)
}

/// Discretization on an arbitrary grid: with `K` the stiffness form and `M`
/// the lumped mass, returns `M^{-1/2} K M^{-1/2}`.
pub fn discretize_on(profile: &Profile1D, eps: f64, grid: &Grid1D, sampling: Sampling) -> Result<Tridiag> {
    let v = |a: f64, b: f64, x: f64| match sampling {
        Sampling::Nodal => profile.potential.value(x),
        Sampling::CellAverage => profile.potential.integral(a, b) / (b - a),
    };
    assemble(grid, |t| profile.g.value(t), |a, b, x| eps * v(a, b, x))
}

/// Shared assembly; `g` is sampled at edge midpoints, `v(a, b, x)` gives the
/// potential for the node `x` with dual cell `[a, b]`.
pub(crate) fn assemble<G: Fn(f64) -> f64, V: Fn(f64, f64, f64) -> f64>(grid: &Grid1D, g: G, v: V) -> Result<Tridiag> {
    let x = &grid.x;
    let n = grid.interior();
    if n < 1 || x.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("grid nodes must increase".into()));
    }
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let ge: Vec<f64> = x.windows(2).map(|w| g(0.5 * (w[0] + w[1]))).collect();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut mass = vec![0.0; n];
    for i in 0..n {
        let (hl, hr) = (h[i], h[i + 1]);
        mass[i] = 0.5 * (hl + hr);
        let (a, b) = (x[i + 1] - 0.5 * hl, x[i + 1] + 0.5 * hr);
        diag[i] = (ge[i] / hl + ge[i + 1] / hr) / mass[i] + v(a, b, x[i + 1]);
    }
    for i in 0..n.saturating_sub(1) {
        off[i] = -ge[i + 1] / h[i + 1] / (mass[i] * mass[i + 1]).sqrt();
    }
    Ok(Tridiag { half_length: grid.half_length(), n, diag, off, nodes: x[1..=n].to_vec() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SturmCount {
    pub count: usize,
    /// Threshold shift applied after an exactly-zero pivot (0 when none).
    pub jitter: f64,
}

fn sturm_raw(op: &Tridiag, thr: f64) -> Option<usize> {
    let mut count = 0;
    let mut q = op.diag[0] - thr;
    if q == 0.0 {
        return None;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..op.n {
        let e = op.off[i - 1];
        q = (op.diag[i] - thr) - e * e / q;
        if q == 0.0 {
            return None;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    Some(count)
}

/// Number of eigenvalues strictly below `thr` from the signs of the
/// `LDL^T` pivots of `T - thr`. An exactly-zero pivot moves the threshold
/// down by a few ulps of the matrix scale, and the move is reported.
pub fn count_below_reported(op: &Tridiag, thr: f64) -> SturmCount {
    if let Some(count) = sturm_raw(op, thr) {
        return SturmCount { count, jitter: 0.0 };
    }
    let scale = op.norm_bound().max(thr.abs()).max(f64::MIN_POSITIVE);
    let mut k = 4.0;
    loop {
        let j = k * f64::EPSILON * scale;
        if let Some(count) = sturm_raw(op, thr - j) {
            return SturmCount { count, jitter: -j };
        }
        k *= 2.0;
    }
}

pub fn count_below(op: &Tridiag, thr: f64) -> usize {
    count_below_reported(op, thr).count
}

/// Eigenvalue with index `k` (0-based, ascending) by bisection on the count.
pub fn kth_eigenvalue(op: &Tridiag, k: usize) -> Result<f64> {
    if k >= op.n {
        return Err(Error::Invalid(format!("index {k} out of range for n = {}", op.n)));
    }
    let (mut lo, mut hi) = op.gershgorin();
    let pad = 1e-12 * (hi - lo).max(1.0);
    lo -= pad;
    hi += pad;
    let floor = 64.0 * f64::EPSILON * op.norm_bound();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= (1e-11 * mid.abs()).max(floor) || mid <= lo || mid >= hi {
            break;
        }
        if count_below(op, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Lowest eigenvalue: bisection, then a Rayleigh quotient from two steps of
/// inverse iteration shifted just below the bracket, kept only when it
/// lands inside the bracket.
pub fn lowest_eigenvalue(op: &Tridiag) -> f64 {
    let (mut lo, mut hi) = op.gershgorin();
    let pad = 1e-12 * (hi - lo).max(1.0);
    lo -= pad;
    hi += pad;
    let floor = 64.0 * f64::EPSILON * op.norm_bound();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= (1e-11 * mid.abs()).max(floor) || mid <= lo || mid >= hi {
            break;
        }
        if count_below(op, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    match rayleigh_refine(op, lo) {
        Some(r) if r >= lo && r <= hi => r,
        _ => 0.5 * (lo + hi),
    }
}

fn rayleigh_refine(op: &Tridiag, shift: f64) -> Option<f64> {
    // T - shift is positive definite since no eigenvalue lies below `shift`
    let n = op.n;
    let mut x = vec![1.0; n];
    for _ in 0..2 {
        // Thomas algorithm on (T - shift) y = x
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut b = op.diag[0] - shift;
        if b <= 0.0 {
            return None;
        }
        c[0] = if n > 1 { op.off[0] / b } else { 0.0 };
        d[0] = x[0] / b;
        for i in 1..n {
            b = op.diag[i] - shift - op.off[i - 1] * c[i - 1];
            if b <= 0.0 {
                return None;
            }
            c[i] = if i + 1 < n { op.off[i] / b } else { 0.0 };
            d[i] = (x[i] - op.off[i - 1] * d[i - 1]) / b;
        }
        for i in (0..n - 1).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        let s = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(s.is_finite() && s > 0.0) {
            return None;
        }
        x = d.iter().map(|v| v / s).collect();
    }
    let mut num = 0.0;
    for i in 0..n {
        let mut tx = op.diag[i] * x[i];
        if i > 0 {
            tx += op.off[i - 1] * x[i - 1];
        }
        if i + 1 < n {
            tx += op.off[i] * x[i + 1];
        }
        num += x[i] * tx;
    }
    Some(num)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn free(n: usize) -> Tridiag {
        discretize_1d(&Profile1D::new(Potential1D::Zero), 1.0, PI / 2.0, n).unwrap()
    }

    #[test]
    fn dirichlet_box_lowest() {
        let e = lowest_eigenvalue(&free(400));
        assert!((e - 1.0).abs() < 1e-4);
    }

    #[test]
    fn dirichlet_box_count() {
        assert_eq!(count_below(&free(400), 10.0), 3);
    }

    #[test]
    fn harmonic_oscillator() {
        let grid = Grid1D::uniform(12.0, 4096);
        let op = assemble(&grid, |_| 1.0, |_, _, x| x * x).unwrap();
        assert!((lowest_eigenvalue(&op) - 1.0).abs() < 1e-4);
        assert!((kth_eigenvalue(&op, 1).unwrap() - 3.0).abs() < 1e-3);
        assert!((kth_eigenvalue(&op, 2).unwrap() - 5.0).abs() < 1e-3);
    }

    #[test]
    fn graded_grid_matches_uniform_spectrum() {
        let prof = Profile1D::new(Potential1D::Gaussian { coeff: -3.0, width: 1.0 });
        let u = discretize_1d(&prof, 1.0, 20.0, 8000).unwrap();
        let g = discretize_on(&prof, 1.0, &Grid1D::graded_density(20.0, 1.0, 400.0), Sampling::Nodal).unwrap();
        assert!((lowest_eigenvalue(&u) - lowest_eigenvalue(&g)).abs() < 1e-4);
    }

    #[test]
    fn zero_pivot_is_jittered() {
        let op = Tridiag::new(vec![0.0, 2.0], vec![0.0]).unwrap();
        let r = count_below_reported(&op, 0.0);
        assert!(r.jitter < 0.0);
        assert_eq!(r.count, 0);
    }

    #[test]
    fn closed_form_integrals() {
        let cases = [
            Potential1D::Gaussian { coeff: -1.0, width: 1.3 },
            Potential1D::Homogeneous { coeff: -1.0, q: 0.25 },
            Potential1D::HardyTail { coeff: -2.0 },
            Potential1D::Well { value: -1.0, a: -0.5, b: 0.7 },
        ];
        for v in cases {
            for (a, b) in [(-3.0, -0.2), (0.1, 2.5), (-2.0, 3.0)] {
                let q = quad::integrate(|t| v.value(t), a, b, 1e-13, 1e-12).value;
                let c = v.integral(a, b);
                if !matches!(v, Potential1D::Homogeneous { .. }) || a * b > 0.0 {
                    assert!((q - c).abs() < 1e-8, "{v:?} {a} {b}: {q} vs {c}");
                }
            }
        }
        // across the integrable singularity
        let v = Potential1D::Homogeneous { coeff: -1.0, q: 0.25 };
        assert!((v.integral(-1.0, 1.0) + 4.0).abs() < 1e-14);
    }
}
