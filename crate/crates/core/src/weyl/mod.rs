//! Landau levels, magnetic and classical Weyl densities, Riesz means,
//! essential-spectrum lattices and the eta-counting integrals.

mod counting;

pub use counting::{riesz_numeric, riesz_transform, CountingFunction, PowerTerm};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, OperatorKind, Region};
use crate::quad;

/// Pointwise Landau levels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauLevelSet {
    pub v: f64,
    pub f: f64,
    pub mu_h: f64,
    pub kind: OperatorKind,
    /// Ascending levels (for Dirac, both branches merged).
    pub levels: Vec<f64>,
    /// Dirac only: the level `V + M` dropped from the upper branch.
    pub excepted: Option<f64>,
}

/// The first `n_max + 1` levels per branch. For Dirac the upper branch
/// `V + (M^2 + 2 j mu h F)^{1/2}` starts at `j = 1`: the `j = 0` level with
/// the sign of the field is excepted (field sign and spin sign both `+1`).
pub fn landau_levels(kind: OperatorKind, v: f64, f: f64, mu_h: f64, n_max: usize) -> Result<LandauLevelSet> {
    if !(f >= 0.0) || !(mu_h > 0.0) {
        return Err(Error::Invalid(format!("need F >= 0 and mu h > 0, got F = {f}, mu h = {mu_h}")));
    }
    let b = mu_h * f;
    let (levels, excepted) = match kind {
        OperatorKind::Schrodinger => ((0..=n_max).map(|n| v + (2 * n + 1) as f64 * b).collect(), None),
        OperatorKind::Pauli => ((0..=n_max).map(|n| v + (2 * n) as f64 * b).collect(), None),
        OperatorKind::Dirac { mass } => {
            if !(mass >= 0.0) {
                return Err(Error::Invalid(format!("Dirac mass must be nonnegative, got {mass}")));
            }
            let mut l: Vec<f64> = (0..=n_max).map(|j| v - (mass * mass + 2.0 * j as f64 * b).sqrt()).collect();
            l.extend((1..=n_max + 1).map(|j| v + (mass * mass + 2.0 * j as f64 * b).sqrt()));
            l.sort_by(f64::total_cmp);
            (l, Some(v + mass))
        }
    };
    Ok(LandauLevelSet { v, f, mu_h, kind, levels, excepted })
}

fn point_data(spec: &ModelSpec, x: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() != spec.dimension {
        return Err(Error::Invalid(format!("point has dimension {}, model has {}", x.len(), spec.dimension)));
    }
    Ok((spec.potential_at(x), spec.scalar_intensity(x)?, spec.sqrt_g(x)))
}

/// Volume of the unit ball in `R^k`.
pub fn unit_ball_volume(k: usize) -> f64 {
    PI.powf(k as f64 / 2.0) / gamma(k as f64 / 2.0 + 1.0)
}

/// `(2 pi h)^{-d} omega_d (tau - V)_+^{d/2} sqrt(g)`.
pub fn weyl_density(x: &[f64], tau: f64, spec: &ModelSpec) -> Result<f64> {
    let d = spec.dimension;
    if x.len() != d {
        return Err(Error::Invalid(format!("point has dimension {}, model has {d}", x.len())));
    }
    let s = (tau - spec.potential_at(x)).max(0.0);
    Ok((2.0 * PI * spec.h).powi(-(d as i32)) * unit_ball_volume(d) * s.powf(d as f64 / 2.0) * spec.sqrt_g(x))
}

/// `(mu h F sqrt(g) / 2 pi) #{levels < tau} / h^2`; the classical density where `F = 0`.
pub fn magnetic_weyl_density_2d(x: &[f64], tau: f64, spec: &ModelSpec) -> Result<f64> {
    if spec.dimension != 2 {
        return Err(Error::Invalid(format!("2D density needs d = 2, got {}", spec.dimension)));
    }
    let (v, f, sg) = point_data(spec, x)?;
    let b = spec.mu * spec.h * f;
    if b == 0.0 {
        return weyl_density(x, tau, spec);
    }
    let count = match spec.kind {
        OperatorKind::Schrodinger => {
            if tau <= v + b {
                0.0
            } else {
                ((tau - v - b) / (2.0 * b)).ceil()
            }
        }
        OperatorKind::Pauli => {
            if tau <= v {
                0.0
            } else {
                ((tau - v) / (2.0 * b)).ceil()
            }
        }
        OperatorKind::Dirac { .. } => {
            return Err(Error::Unsupported(
                "Dirac levels are unbounded below; use dirac_window_density".into(),
            ))
        }
    };
    Ok(b * sg * count / (2.0 * PI * spec.h * spec.h))
}

/// Dirac counterpart: `(mu h F sqrt(g) / 2 pi h^2) #{levels in [lo, hi)}`.
pub fn dirac_window_density(x: &[f64], lo: f64, hi: f64, spec: &ModelSpec) -> Result<f64> {
    let OperatorKind::Dirac { mass } = spec.kind else {
        return Err(Error::Invalid("window density is for the Dirac kind".into()));
    };
    if spec.dimension != 2 || !(hi >= lo) {
        return Err(Error::Invalid("window density needs d = 2 and lo <= hi".into()));
    }
    let (v, f, sg) = point_data(spec, x)?;
    let b = spec.mu * spec.h * f;
    if b == 0.0 {
        return Err(Error::Unsupported("Dirac window density at zero field".into()));
    }
    let reach = (lo - v).abs().max((hi - v).abs());
    let n_max = ((reach * reach - mass * mass).max(0.0) / (2.0 * b)).ceil() as usize + 1;
    let set = landau_levels(spec.kind, v, f, spec.mu * spec.h, n_max)?;
    let count = set.levels.iter().filter(|l| **l >= lo && **l < hi).count();
    Ok(b * sg * count as f64 / (2.0 * PI * spec.h * spec.h))
}

/// Which ladder the 3D density sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelLadder {
    /// `2 n mu h F`.
    Pauli,
    /// `(2 n + 1) mu h F`.
    Schrodinger,
}

/// `h^{-3} (4 pi^2)^{-1} sum_n (tau - V - c_n mu h F)_+^{1/2} F mu h sqrt(g)`.
/// The level sum stops at the first vanishing term.
pub fn magnetic_weyl_density_3d(x: &[f64], tau: f64, spec: &ModelSpec, ladder: LevelLadder) -> Result<f64> {
    if spec.dimension != 3 {
        return Err(Error::Invalid(format!("3D density needs d = 3, got {}", spec.dimension)));
    }
    let (v, f, sg) = point_data(spec, x)?;
    Ok(pauli_sum(tau - v, spec.mu * spec.h * f, ladder) * sg / (spec.h.powi(3) * 4.0 * PI * PI))
}

/// `sum_n (s - c_n b)_+^{1/2} b`; at `b = 0` the Riemann-sum limit `s_+^{3/2}/3`.
pub(crate) fn pauli_sum(s: f64, b: f64, ladder: LevelLadder) -> f64 {
    if b == 0.0 {
        return s.max(0.0).powf(1.5) / 3.0;
    }
    let offset = match ladder {
        LevelLadder::Pauli => 0.0,
        LevelLadder::Schrodinger => 1.0,
    };
    // terms are sqrt(2b) sqrt(m - n) for n < count
    let m = s / (2.0 * b) - offset / 2.0;
    if !(m > 0.0) {
        return 0.0;
    }
    let count = m.ceil();
    if count <= DIRECT_TERMS as f64 {
        let mut total = 0.0;
        let mut n = 0.0;
        while n < count {
            total += (m - n).sqrt();
            n += 1.0;
        }
        return total * (2.0 * b).sqrt() * b;
    }
    // smallest argument theta in (0, 1]; sum sqrt(theta + k) over k < count,
    // the first DIRECT_TERMS exactly and the rest by Euler-Maclaurin
    let theta = m - (count - 1.0);
    let head: f64 = (0..DIRECT_TERMS).map(|k| (theta + k as f64).sqrt()).sum();
    let (a, z) = (theta + DIRECT_TERMS as f64, m);
    let d1 = |x: f64| 0.5 / x.sqrt();
    let d3 = |x: f64| 0.375 * x.powf(-2.5);
    let d5 = |x: f64| 105.0 / 32.0 * x.powf(-4.5);
    let tail = (z.powf(1.5) - a.powf(1.5)) * (2.0 / 3.0) + 0.5 * (a.sqrt() + z.sqrt()) + (d1(z) - d1(a)) / 12.0
        - (d3(z) - d3(a)) / 720.0
        + (d5(z) - d5(a)) / 30240.0;
    (head + tail) * (2.0 * b).sqrt() * b
}

const DIRECT_TERMS: usize = 64;

pub fn magnetic_weyl_density_3d_pauli(x: &[f64], tau: f64, spec: &ModelSpec) -> Result<f64> {
    magnetic_weyl_density_3d(x, tau, spec, LevelLadder::Pauli)
}

/// The 3D density at a point as a counting function of `tau`.
pub fn pauli_counting_function(v: f64, f: f64, mu_h: f64, h: f64, sqrt_g: f64, tau_max: f64) -> Result<CountingFunction> {
    let b = mu_h * f;
    if !(b > 0.0) {
        return Err(Error::Invalid("counting function needs a positive field".into()));
    }
    let w = b * sqrt_g / (h.powi(3) * 4.0 * PI * PI);
    let mut terms = Vec::new();
    let mut n = 0.0;
    while v + 2.0 * n * b < tau_max {
        terms.push(PowerTerm { weight: w, shift: v + 2.0 * n * b, power: 0.5 });
        n += 1.0;
    }
    CountingFunction::new(terms)
}

/// Levels of the essential-spectrum lattice with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EssentialSpectrumLattice {
    pub f_inf: Vec<f64>,
    pub kind: OperatorKind,
    pub levels: Vec<f64>,
    pub multiplicities: Vec<usize>,
}

/// Lattice points `sum z_j f_j` below `cutoff`: `z` odd for Schrödinger,
/// even (including 0) for Pauli; Dirac is supported for one intensity.
pub fn essential_levels(kind: OperatorKind, f_inf: &[f64], cutoff: f64) -> Result<EssentialSpectrumLattice> {
    if !cutoff.is_finite() {
        return Err(Error::Invalid("cutoff must be finite".into()));
    }
    if f_inf.iter().any(|f| !(*f > 0.0)) {
        return Err(Error::Invalid("intensities at infinity must be positive".into()));
    }
    let mut raw: Vec<f64> = Vec::new();
    if !f_inf.is_empty() {
        match kind {
            OperatorKind::Schrodinger | OperatorKind::Pauli => {
                let start = if matches!(kind, OperatorKind::Schrodinger) { 1u64 } else { 0 };
                let mut z = vec![start; f_inf.len()];
                'outer: loop {
                    let s: f64 = z.iter().zip(f_inf).map(|(z, f)| *z as f64 * f).sum();
                    if s < cutoff {
                        raw.push(s);
                    }
                    // odometer over z_j in steps of 2, pruning by the partial sum
                    let mut j = 0;
                    loop {
                        if j == z.len() {
                            break 'outer;
                        }
                        z[j] += 2;
                        let s: f64 = z.iter().zip(f_inf).map(|(z, f)| *z as f64 * f).sum();
                        if s < cutoff {
                            break;
                        }
                        z[j] = start;
                        j += 1;
                    }
                }
            }
            OperatorKind::Dirac { .. } => {
                if f_inf.len() != 1 {
                    return Err(Error::Unsupported("Dirac lattice with more than one intensity".into()));
                }
                let set = landau_levels(kind, 0.0, f_inf[0], 1.0, ((cutoff * cutoff) / (2.0 * f_inf[0])).ceil() as usize + 1)?;
                raw = set.levels.into_iter().filter(|l| *l < cutoff).collect();
            }
        }
    }
    raw.sort_by(f64::total_cmp);
    let mut levels: Vec<f64> = Vec::new();
    let mut multiplicities: Vec<usize> = Vec::new();
    for l in raw {
        match levels.last() {
            Some(&p) if (l - p).abs() <= 1e-12 * (1.0 + l.abs()) => *multiplicities.last_mut().unwrap() += 1,
            _ => {
                levels.push(l);
                multiplicities.push(1);
            }
        }
    }
    Ok(EssentialSpectrumLattice { f_inf: f_inf.to_vec(), kind, levels, multiplicities })
}

/// `V + sum_j z_j (f_j - f_inf_j)` at a point.
pub fn perturbed_level_value(v: f64, f: &[f64], f_inf: &[f64], z: &[f64]) -> Result<f64> {
    if f.len() != f_inf.len() || f.len() != z.len() {
        return Err(Error::Invalid(format!("length mismatch: f {}, f_inf {}, z {}", f.len(), f_inf.len(), z.len())));
    }
    Ok(v + f.iter().zip(f_inf).zip(z).map(|((f, fi), z)| z * (f - fi)).sum::<f64>())
}

/// The perturbed level potential of a model as a field.
#[derive(Debug, Clone)]
pub struct LevelPotential<'a> {
    pub spec: &'a ModelSpec,
    pub f_inf: Vec<f64>,
    pub z: Vec<f64>,
}

impl LevelPotential<'_> {
    pub fn value(&self, x: &[f64]) -> Result<f64> {
        let mut f = self.spec.magnetic_data(x, crate::gauge::TensorMode::Analytic)?.intensities.f;
        f.resize(self.f_inf.len(), 0.0);
        perturbed_level_value(self.spec.potential_at(x), &f, &self.f_inf, &self.z)
    }

    /// Product of the first `r` intensities times `sqrt(g)`.
    fn weight(&self, x: &[f64]) -> Result<f64> {
        let f = self.spec.magnetic_data(x, crate::gauge::TensorMode::Analytic)?.intensities.f;
        let r = self.f_inf.len();
        Ok((0..r).map(|j| f.get(j).copied().unwrap_or(0.0)).product::<f64>() * self.spec.sqrt_g(x))
    }
}

pub fn perturbed_level_potential<'a>(spec: &'a ModelSpec, f_inf: &[f64], z: &[f64]) -> Result<LevelPotential<'a>> {
    if f_inf.len() != z.len() {
        return Err(Error::Invalid(format!("length mismatch: f_inf {}, z {}", f_inf.len(), z.len())));
    }
    Ok(LevelPotential { spec, f_inf: f_inf.to_vec(), z: z.to_vec() })
}

/// Which side of the level is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Eigenvalues below the level: region `-V_z >= eta`.
    #[default]
    Below,
    /// Eigenvalues above the level: region `V_z >= eta`.
    Above,
}

/// Quadrature controls for the eta-counting integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EtaQuadrature {
    /// The integrand region must end before this radius.
    pub r_max: f64,
    /// Radial samples per ray used to bracket boundary crossings.
    pub radial_samples: usize,
    /// Rays per angular dimension.
    pub angular: usize,
}

impl Default for EtaQuadrature {
    fn default() -> Self {
        EtaQuadrature { r_max: 1e4, radial_samples: 400, angular: 32 }
    }
}

/// `int_{R^d} w(x) phi(s(x)) dx` where `s(x) >= 0` defines the region and
/// `phi(s)` the profile, by rays from the origin. Each ray is scanned on a
/// graded radial grid, crossings of `s = 0` are bisected, and the pieces
/// are integrated with adaptive quadrature.
fn ray_integral<S, W, P>(d: usize, s: S, w: W, phi: P, q: &EtaQuadrature) -> Result<f64>
where
    S: Fn(&[f64]) -> Result<f64>,
    W: Fn(&[f64]) -> Result<f64>,
    P: Fn(f64) -> f64,
{
    let (dirs, dir_weights) = sphere_rule(d, q.angular);
    let mut total = 0.0;
    for (u, dw) in dirs.iter().zip(&dir_weights) {
        let at = |r: f64| -> Vec<f64> { u.iter().map(|c| c * r).collect() };
        let sr = |r: f64| s(&at(r));
        // graded radii: r = sinh-type spacing from 0 to r_max
        let n = q.radial_samples.max(8);
        let a = 0.5f64;
        let xi_max = (q.r_max / a).asinh();
        let radii: Vec<f64> = (0..=n).map(|k| a * (xi_max * k as f64 / n as f64).sinh()).collect();
        if sr(q.r_max)? >= 0.0 {
            return Err(Error::Divergent(format!(
                "integration region reaches r = {} along direction {u:?}; the potential does not decay enough",
                q.r_max
            )));
        }
        let mut vals = Vec::with_capacity(radii.len());
        for &r in &radii {
            vals.push(sr(r)?);
        }
        let mut edges: Vec<(f64, f64)> = Vec::new();
        let mut start: Option<f64> = if vals[0] >= 0.0 { Some(0.0) } else { None };
        for k in 1..radii.len() {
            let (in0, in1) = (vals[k - 1] >= 0.0, vals[k] >= 0.0);
            if in0 != in1 {
                let (mut lo, mut hi) = (radii[k - 1], radii[k]);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if (sr(mid)? >= 0.0) == in0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let root = 0.5 * (lo + hi);
                if in1 {
                    start = Some(root);
                } else if let Some(s0) = start.take() {
                    edges.push((s0, root));
                }
            }
        }
        let err: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
        for (r0, r1) in edges {
            let val = quad::integrate(
                |r| {
                    let x = at(r);
                    match (s(&x), w(&x)) {
                        (Ok(sv), Ok(wv)) => wv * phi(sv.max(0.0)) * r.powi(d as i32 - 1),
                        (Err(e), _) | (_, Err(e)) => {
                            err.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    }
                },
                r0,
                r1,
                1e-14,
                1e-11,
            );
            total += dw * val.value;
        }
        if let Some(e) = err.into_inner() {
            return Err(e);
        }
    }
    Ok(total)
}

/// Directions and weights integrating over the unit sphere `S^{d-1}`.
pub(crate) fn sphere_rule(d: usize, m: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let m = m.max(1);
    match d {
        1 => (vec![vec![1.0], vec![-1.0]], vec![1.0, 1.0]),
        2 => {
            let dirs = (0..m).map(|k| {
                let t = 2.0 * PI * (k as f64 + 0.5) / m as f64;
                vec![t.cos(), t.sin()]
            });
            (dirs.collect(), vec![2.0 * PI / m as f64; m])
        }
        _ => {
            // Gauss-Legendre in cos(polar) times uniform azimuth
            let (x, wx) = quad::gauss_legendre(m);
            let na = 2 * m;
            let mut dirs = Vec::with_capacity(m * na);
            let mut wts = Vec::with_capacity(m * na);
            for (c, wc) in x.iter().zip(&wx) {
                let s = (1.0 - c * c).sqrt();
                for k in 0..na {
                    let p = 2.0 * PI * (k as f64 + 0.5) / na as f64;
                    dirs.push(vec![s * p.cos(), s * p.sin(), *c]);
                    wts.push(wc * 2.0 * PI / na as f64);
                }
            }
            (dirs, wts)
        }
    }
}

/// `(2 pi)^{-r} sum_{z in W} int_{-/+ V_z >= eta} f_1 ... f_r sqrt(g) dx` with
/// `r` the number of intensities at infinity.
pub fn eta_count_landau(
    spec: &ModelSpec,
    f_inf: &[f64],
    zs: &[Vec<f64>],
    eta: f64,
    side: Side,
    q: &EtaQuadrature,
) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::Invalid(format!("eta must be positive, got {eta}")));
    }
    let r = f_inf.len();
    if 2 * r != spec.dimension {
        return Err(Error::Unsupported(format!(
            "Landau eta-count needs d = 2r, got d = {} and r = {r}",
            spec.dimension
        )));
    }
    let sign = match side {
        Side::Below => -1.0,
        Side::Above => 1.0,
    };
    let mut total = 0.0;
    for z in zs {
        let lp = perturbed_level_potential(spec, f_inf, z)?;
        total += ray_integral(spec.dimension, |x| Ok(sign * lp.value(x)? - eta), |x| lp.weight(x), |_| 1.0, q)?;
    }
    Ok(total / (2.0 * PI).powi(r as i32))
}

/// `(2 pi)^{-d+p} omega_{d-2p} int_{-V >= eta} f_1 ... f_p (-V - eta)_+^{(d-2p)/2} sqrt(g) dx`.
pub fn eta_count_pauli(spec: &ModelSpec, p: usize, eta: f64, q: &EtaQuadrature) -> Result<f64> {
    let d = spec.dimension;
    if 2 * p > d || p == 0 {
        return Err(Error::Invalid(format!("need 1 <= p and 2p <= d, got p = {p}, d = {d}")));
    }
    if !(eta > 0.0) {
        return Err(Error::Invalid(format!("eta must be positive, got {eta}")));
    }
    let k = d - 2 * p;
    let weight = |x: &[f64]| -> Result<f64> {
        let f = spec.magnetic_data(x, crate::gauge::TensorMode::Analytic)?.intensities.f;
        Ok((0..p).map(|j| f.get(j).copied().unwrap_or(0.0)).product::<f64>() * spec.sqrt_g(x))
    };
    let integral = ray_integral(d, |x| Ok(-spec.potential_at(x) - eta), weight, |s| s.powf(k as f64 / 2.0), q)?;
    Ok((2.0 * PI).powi(p as i32 - d as i32) * unit_ball_volume(k) * integral)
}

/// Pointwise density integrated by [`integrated_count`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Classical,
    Magnetic2d,
    Magnetic3dPauli,
    Magnetic3dSchrodinger,
}

impl DensityKind {
    pub fn eval(self, x: &[f64], tau: f64, spec: &ModelSpec) -> Result<f64> {
        match self {
            DensityKind::Classical => weyl_density(x, tau, spec),
            DensityKind::Magnetic2d => magnetic_weyl_density_2d(x, tau, spec),
            DensityKind::Magnetic3dPauli => magnetic_weyl_density_3d(x, tau, spec, LevelLadder::Pauli),
            DensityKind::Magnetic3dSchrodinger => magnetic_weyl_density_3d(x, tau, spec, LevelLadder::Schrodinger),
        }
    }

    /// `q` with level `n` active iff `q > 2n`; the density jumps or kinks
    /// where `q` crosses an even integer. Only the crossing of 0 matters for
    /// the classical density.
    fn level_coordinate(self, x: &[f64], tau: f64, spec: &ModelSpec) -> Result<f64> {
        let (v, f, _) = point_data(spec, x)?;
        let b = spec.mu * spec.h * f;
        if self == DensityKind::Classical || b == 0.0 {
            return Ok(tau - v);
        }
        let offset = match self {
            DensityKind::Magnetic2d => match spec.kind {
                OperatorKind::Schrodinger => 1.0,
                _ => 0.0,
            },
            DensityKind::Magnetic3dSchrodinger => 1.0,
            _ => 0.0,
        };
        Ok((tau - v) / b - offset)
    }

    fn max_level(self) -> usize {
        match self {
            DensityKind::Classical => 0,
            _ => RAY_LEVELS,
        }
    }
}

/// Level thresholds located per ray; jumps of higher levels are left to
/// the adaptive quadrature.
const RAY_LEVELS: usize = 64;
const RAY_SAMPLES: usize = 200;

/// Root of `g` in a bracket by the Illinois variant of regula falsi,
/// stopping at relative bracket width 1e-13; bisects if `g` is not finite.
fn crossing<G: Fn(f64) -> f64>(g: G, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64) -> f64 {
    let mut side = 0;
    for _ in 0..200 {
        if (b - a).abs() <= 1e-13 * a.abs().max(b.abs()) {
            break;
        }
        let mut m = (a * gb - b * ga) / (gb - ga);
        if !m.is_finite() || m <= a.min(b) || m >= a.max(b) {
            m = 0.5 * (a + b);
        }
        let gm = g(m);
        if !gm.is_finite() {
            break;
        }
        if (gm > 0.0) == (gb > 0.0) {
            b = m;
            gb = gm;
            if side == 1 {
                ga *= 0.5;
            }
            side = 1;
        } else {
            a = m;
            ga = gm;
            if side == -1 {
                gb *= 0.5;
            }
            side = -1;
        }
        if gm == 0.0 {
            return m;
        }
    }
    0.5 * (a + b)
}

/// Radii in `(r_in, r_out)` where the active-level count changes along `u`,
/// from a geometric scan followed by bisection.
fn ray_breakpoints<Q: Fn(f64) -> f64>(q: Q, r_in: f64, r_out: f64, max_level: usize) -> Vec<f64> {
    let span = if r_out.is_finite() { r_out - r_in } else { 1e8 * (1.0 + r_in) };
    let unit = 1e-4 * (1.0 + r_in).min(span);
    let top = (1.0 + span / unit).ln();
    let radius = |k: usize| {
        let t = k as f64 / RAY_SAMPLES as f64;
        if k == RAY_SAMPLES {
            r_in + span
        } else {
            r_in + unit * ((t * top).exp() - 1.0)
        }
    };
    let level = |v: f64| if v > 0.0 { ((v / 2.0).ceil() as usize).min(max_level + 1) } else { 0 };
    let mut out = Vec::new();
    let (mut ra, mut qa) = (radius(0), q(radius(0)));
    for k in 1..=RAY_SAMPLES {
        let rb = radius(k);
        let qb = q(rb);
        let (la, lb) = (level(qa), level(qb));
        if la != lb {
            let (lo, hi) = (la.min(lb), la.max(lb));
            for n in lo..hi.min(max_level + 1) {
                let target = 2.0 * n as f64;
                out.push(crossing(|r| q(r) - target, ra, rb, qa - target, qb - target));
            }
        }
        ra = rb;
        qa = qb;
    }
    out.sort_by(f64::total_cmp);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratedCount {
    pub value: f64,
    /// Sum of the radial quadrature error estimates.
    pub error: f64,
}

/// `int_region density(x, tau) dx` over an annulus, by rays from the origin
/// with adaptive radial quadrature (mapped to a finite interval when
/// `r_out = inf`). `angular` is the number of rays per angular dimension.
pub fn integrated_count(
    spec: &ModelSpec,
    tau: f64,
    region: &Region,
    density: DensityKind,
    angular: usize,
    rel_tol: f64,
) -> Result<IntegratedCount> {
    use rayon::prelude::*;
    let Region::Annulus { r_in, r_out } = *region else {
        return Err(Error::Unsupported("integrated_count takes an annulus region".into()));
    };
    if !(r_in >= 0.0 && r_out > r_in) {
        return Err(Error::Invalid(format!("annulus needs 0 <= r_in < r_out, got [{r_in}, {r_out}]")));
    }
    let d = spec.dimension;
    let (dirs, weights) = sphere_rule(d, angular);
    let per_ray: Vec<Result<(f64, f64)>> = dirs
        .par_iter()
        .zip(&weights)
        .map(|(u, w)| {
            let err: std::cell::RefCell<Option<Error>> = std::cell::RefCell::new(None);
            let f = |r: f64| {
                if r <= 0.0 {
                    return 0.0;
                }
                let x: Vec<f64> = u.iter().map(|c| c * r).collect();
                match density.eval(&x, tau, spec) {
                    Ok(v) => v * r.powi(d as i32 - 1),
                    Err(e) => {
                        err.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            };
            let coord = |r: f64| {
                let x: Vec<f64> = u.iter().map(|c| c * r).collect();
                density.level_coordinate(&x, tau, spec).unwrap_or(f64::NAN)
            };
            let breaks = ray_breakpoints(coord, r_in, r_out, density.max_level());
            let q = if r_out.is_infinite() {
                quad::integrate_to_inf_with_breaks(f, r_in, &breaks, 0.0, rel_tol)
            } else {
                let mut edges = vec![r_in];
                edges.extend(breaks.iter().copied().filter(|b| *b > r_in && *b < r_out));
                edges.push(r_out);
                quad::integrate_with_breaks(f, &edges, 0.0, rel_tol)
            };
            match err.into_inner() {
                Some(e) => Err(e),
                None => Ok((w * q.value, w * q.error)),
            }
        })
        .collect();
    let (mut value, mut error) = (0.0, 0.0);
    for r in per_ray {
        let (v, e) = r?;
        value += v;
        error += e;
    }
    if !value.is_finite() {
        return Err(Error::Divergent("density integral is not finite on the region".into()));
    }
    Ok(IntegratedCount { value, error })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Base, ScalarField};
    use crate::gauge::{Sigma, VectorPotentialSpec};

    fn flat(d: usize, kind: OperatorKind) -> ModelSpec {
        let vp = if d == 2 {
            VectorPotentialSpec::RotationalEven { dim: 2, sigma: Sigma::Constant { value: 0.5 } }
        } else {
            VectorPotentialSpec::RotationalOdd { dim: 3, sigma: Sigma::Constant { value: 0.5 }, axial: None }
        };
        let mut s = ModelSpec::schrodinger(d, ScalarField::zero(), vp, 1.0, 1.0);
        s.kind = kind;
        s
    }

    #[test]
    fn pauli_sum_tail_matches_direct() {
        for (s, b) in [(1000.0f64, 1.3f64), (12345.6, 0.77), (1e6, 3.1), (130.0, 1.0)] {
            for ladder in [LevelLadder::Pauli, LevelLadder::Schrodinger] {
                let offset = if ladder == LevelLadder::Pauli { 0.0 } else { 1.0 };
                let mut direct = 0.0;
                let mut n = 0.0;
                while s - (2.0 * n + offset) * b > 0.0 {
                    direct += (s - (2.0 * n + offset) * b).sqrt() * b;
                    n += 1.0;
                }
                let fast = pauli_sum(s, b, ladder);
                assert!((fast / direct - 1.0).abs() < 1e-12, "{s} {b}: {fast} vs {direct}");
            }
        }
    }

    #[test]
    fn levels_by_kind() {
        let s = landau_levels(OperatorKind::Schrodinger, 0.0, 1.0, 1.0, 2).unwrap();
        assert_eq!(s.levels, vec![1.0, 3.0, 5.0]);
        let p = landau_levels(OperatorKind::Pauli, -2.0, 1.0, 1.0, 2).unwrap();
        assert_eq!(p.levels, vec![-2.0, 0.0, 2.0]);
        let d = landau_levels(OperatorKind::Dirac { mass: 1.0 }, 0.0, 1.0, 1.0, 1).unwrap();
        assert_eq!(d.excepted, Some(1.0));
        let want = [-(3f64.sqrt()), -1.0, 3f64.sqrt(), 5f64.sqrt()];
        assert_eq!(d.levels.len(), 4);
        for (a, b) in d.levels.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(landau_levels(OperatorKind::Dirac { mass: -1.0 }, 0.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn unit_field_2d_density() {
        let s = flat(2, OperatorKind::Schrodinger);
        let v = magnetic_weyl_density_2d(&[0.3, 0.1], 4.0, &s).unwrap();
        assert!((v - 2.0 / (2.0 * PI)).abs() < 1e-15);
    }

    #[test]
    fn pauli_3d_examples() {
        let s = flat(3, OperatorKind::Pauli);
        let one = magnetic_weyl_density_3d_pauli(&[0.1, 0.2, 0.3], 1.0, &s).unwrap();
        assert!((one - 1.0 / (4.0 * PI * PI)).abs() < 1e-15);
        let three = magnetic_weyl_density_3d_pauli(&[0.1, 0.2, 0.3], 3.0, &s).unwrap();
        assert!((three - (3f64.sqrt() + 1.0) / (4.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn classical_densities() {
        let s2 = flat(2, OperatorKind::Schrodinger);
        assert!((weyl_density(&[0.0, 0.0], 1.0, &s2).unwrap() - 1.0 / (4.0 * PI)).abs() < 1e-15);
        let s3 = flat(3, OperatorKind::Schrodinger);
        assert!((weyl_density(&[0.0, 0.0, 0.0], 1.0, &s3).unwrap() - 1.0 / (6.0 * PI * PI)).abs() < 1e-15);
    }

    #[test]
    fn lattices() {
        let l = essential_levels(OperatorKind::Schrodinger, &[1.0], 7.0).unwrap();
        assert_eq!(l.levels, vec![1.0, 3.0, 5.0]);
        let l = essential_levels(OperatorKind::Schrodinger, &[1.0, 1.0], 5.0).unwrap();
        assert_eq!(l.levels, vec![2.0, 4.0]);
        assert_eq!(l.multiplicities, vec![1, 2]);
        let l = essential_levels(OperatorKind::Pauli, &[1.0], 5.0).unwrap();
        assert_eq!(l.levels, vec![0.0, 2.0, 4.0]);
        assert!(essential_levels(OperatorKind::Pauli, &[], 5.0).unwrap().levels.is_empty());
    }

    #[test]
    fn landau_disk_area() {
        // V = -<x>^{-2}, unit field: (1/2)(1/eta - 1)_+
        let mut s = flat(2, OperatorKind::Schrodinger);
        s.potential = ScalarField::PowerLaw { coeff: -1.0, exponent: -2.0, base: Base::Japanese };
        let q = EtaQuadrature { angular: 8, ..Default::default() };
        let v = eta_count_landau(&s, &[1.0], &[vec![1.0]], 0.25, Side::Below, &q).unwrap();
        assert!((v - 1.5).abs() < 1e-9, "{v}");
        assert_eq!(eta_count_landau(&s, &[1.0], &[vec![1.0]], 1.5, Side::Below, &q).unwrap(), 0.0);
    }
    #[test]
    fn exterior_count_closed_form() {
        // V = -|x|^-4, F = |x|^-5 on |x| > 1, tau = 0, mu h >= 1:
        // sum_n h^-2 (mu h)^-2 (2n+1)^-3 / 3 = h^-2 (mu h)^-2 (7 zeta(3)/8) / 3
        let zeta3 = (1..200000).map(|k| (k as f64).powi(-3)).sum::<f64>();
        let (mu, h) = (40.0, 0.05);
        let s = ModelSpec::schrodinger(
            2,
            ScalarField::PowerLaw { coeff: -1.0, exponent: -4.0, base: Base::Abs },
            VectorPotentialSpec::RotationalEven {
                dim: 2,
                sigma: Sigma::Power { coeff: 1.0 / 3.0, exponent: -5.0, base: Base::Abs },
            },
            mu,
            h,
        );
        let want = (7.0 * zeta3 / 8.0) / 3.0 / (h * h * (mu * h).powi(2));
        let region = Region::Annulus { r_in: 1.0, r_out: f64::INFINITY };
        let got = integrated_count(&s, 0.0, &region, DensityKind::Magnetic2d, 4, 1e-10).unwrap();
        assert!((got.value / want - 1.0).abs() < 1e-6, "{} {want}", got.value);
    }
}
