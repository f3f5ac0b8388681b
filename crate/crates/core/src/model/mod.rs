//! Operator specification, scaling functions, effective parameters, zones,
//! remainder integrals and the exponent catalog.

mod catalog;

pub use catalog::{
    predicted_exponents, predicted_exponents_for, ExponentPrediction, FieldRegime, PowerTerm, Regime,
    Singularity,
};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{norm, Base, Metric, ScalarField};
use crate::gauge::{intensities, IntensityList, MagneticTensor, TensorMode, VectorPotentialSpec};
use crate::quad::{self, Quad};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum OperatorKind {
    Schrodinger,
    Pauli,
    Dirac { mass: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Annulus { r_in: f64, r_out: f64 },
    /// `|x| >= r_in`, clipped to the cube `[-bound, bound]^d` when discretized.
    Exterior { r_in: f64, bound: f64 },
}

/// Scaling functions `gamma = eps0 b(x)`, `rho = b(x)^m`, `rho1 = b(x)^m1`
/// with `b` either `|x|` or `<x>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingTriple {
    pub gamma_eps: f64,
    pub m: f64,
    pub m1: f64,
    #[serde(default)]
    pub base: Base,
}

impl ScalingTriple {
    pub fn gamma(&self, r: f64) -> f64 {
        self.gamma_eps * self.base.eval(r)
    }
    pub fn rho(&self, r: f64) -> f64 {
        self.base.eval(r).powf(self.m)
    }
    pub fn rho1(&self, r: f64) -> f64 {
        self.base.eval(r).powf(self.m1)
    }

    /// Checks `eps0 <= 1/2` and, by central differences at the given
    /// points, `|grad gamma| <= 1/2`.
    pub fn validate(&self, sample_points: &[Vec<f64>]) -> Result<()> {
        if !(self.gamma_eps > 0.0 && self.gamma_eps <= 0.5) {
            return Err(Error::Invalid(format!("scaling.gamma_eps must lie in (0, 1/2], got {}", self.gamma_eps)));
        }
        for x in sample_points {
            let eta = 1e-6 * (1.0 + norm(x));
            let mut g2 = 0.0;
            let mut xp = x.clone();
            for k in 0..x.len() {
                xp[k] = x[k] + eta;
                let a = self.gamma(norm(&xp));
                xp[k] = x[k] - eta;
                let b = self.gamma(norm(&xp));
                xp[k] = x[k];
                g2 += ((a - b) / (2.0 * eta)).powi(2);
            }
            if g2.sqrt() > 0.5 + 1e-6 {
                return Err(Error::Invalid(format!("|grad gamma| = {} > 1/2 at {x:?}", g2.sqrt())));
            }
        }
        Ok(())
    }
}

fn default_ellipticity() -> [f64; 2] {
    [1e-6, 1e6]
}

/// A magnetic operator instance `sum P_j g^{jk} P_k + V`, `P_j = h D_j - mu V_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpecJson", into = "ModelSpecJson")]
pub struct ModelSpec {
    pub dimension: usize,
    pub metric: Metric,
    pub potential: ScalarField,
    pub vector_potential: VectorPotentialSpec,
    pub mu: f64,
    pub h: f64,
    pub kind: OperatorKind,
    pub domain: Option<Domain>,
    pub scaling: Option<ScalingTriple>,
    /// Declared ellipticity bounds `(eps, c)` of the metric.
    pub ellipticity: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindTag {
    Schrodinger,
    Pauli,
    Dirac,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSpecJson {
    dimension: usize,
    kind: KindTag,
    mu: f64,
    h: f64,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    mass: Option<f64>,
    #[serde(default)]
    metric: Metric,
    potential: ScalarField,
    vector_potential: VectorPotentialSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scaling: Option<ScalingTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<Domain>,
    #[serde(default = "default_ellipticity")]
    ellipticity: [f64; 2],
}

impl TryFrom<ModelSpecJson> for ModelSpec {
    type Error = Error;
    fn try_from(j: ModelSpecJson) -> Result<Self> {
        let kind = match (j.kind, j.mass) {
            (KindTag::Schrodinger, _) => OperatorKind::Schrodinger,
            (KindTag::Pauli, _) => OperatorKind::Pauli,
            (KindTag::Dirac, Some(m)) => OperatorKind::Dirac { mass: m },
            (KindTag::Dirac, None) => return Err(Error::Invalid("M: required for kind = dirac".into())),
        };
        let spec = ModelSpec {
            dimension: j.dimension,
            metric: j.metric,
            potential: j.potential,
            vector_potential: j.vector_potential,
            mu: j.mu,
            h: j.h,
            kind,
            domain: j.domain,
            scaling: j.scaling,
            ellipticity: j.ellipticity,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<ModelSpec> for ModelSpecJson {
    fn from(s: ModelSpec) -> Self {
        let (kind, mass) = match s.kind {
            OperatorKind::Schrodinger => (KindTag::Schrodinger, None),
            OperatorKind::Pauli => (KindTag::Pauli, None),
            OperatorKind::Dirac { mass } => (KindTag::Dirac, Some(mass)),
        };
        ModelSpecJson {
            dimension: s.dimension,
            kind,
            mu: s.mu,
            h: s.h,
            mass,
            metric: s.metric,
            potential: s.potential,
            vector_potential: s.vector_potential,
            scaling: s.scaling,
            domain: s.domain,
            ellipticity: s.ellipticity,
        }
    }
}

/// Pointwise magnetic data: tensor, intensities and scalar intensity.
#[derive(Debug, Clone, PartialEq)]
pub struct MagneticData {
    pub tensor: MagneticTensor,
    pub intensities: IntensityList,
}

impl ModelSpec {
    /// Schrödinger operator with identity metric.
    pub fn schrodinger(dimension: usize, potential: ScalarField, vector_potential: VectorPotentialSpec, mu: f64, h: f64) -> Self {
        ModelSpec {
            dimension,
            metric: Metric::Identity,
            potential,
            vector_potential,
            mu,
            h,
            kind: OperatorKind::Schrodinger,
            domain: None,
            scaling: None,
            ellipticity: default_ellipticity(),
        }
    }

    pub fn from_json(s: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dimension == 2 || self.dimension == 3) {
            return Err(Error::Invalid(format!("dimension: must be 2 or 3, got {}", self.dimension)));
        }
        if !(self.mu > 0.0) {
            return Err(Error::Invalid(format!("mu: must be positive, got {}", self.mu)));
        }
        if !(self.h > 0.0) {
            return Err(Error::Invalid(format!("h: must be positive, got {}", self.h)));
        }
        if let OperatorKind::Dirac { mass } = self.kind {
            if !(mass >= 0.0) {
                return Err(Error::Invalid(format!("M: must be nonnegative, got {mass}")));
            }
        }
        if self.vector_potential.dim() != self.dimension {
            return Err(Error::Invalid(format!(
                "vector_potential: dim {} does not match dimension {}",
                self.vector_potential.dim(),
                self.dimension
            )));
        }
        self.vector_potential.validate().map_err(|e| Error::Invalid(format!("vector_potential: {e}")))?;
        self.potential.validate().map_err(|e| Error::Invalid(format!("potential: {e}")))?;
        self.metric.validate(self.dimension).map_err(|e| Error::Invalid(format!("metric: {e}")))?;
        let [eps, c] = self.ellipticity;
        for x in self.sample_points(16) {
            self.metric.check_elliptic(&x, eps, c).map_err(|e| Error::Invalid(format!("metric: {e}")))?;
        }
        Ok(())
    }

    /// Deterministic sample points used by validators (spiral through the unit-to-4 shell).
    pub fn sample_points(&self, n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| {
                let t = i as f64 + 0.5;
                let r = 0.5 + 3.5 * t / n as f64;
                let a = 2.399_963 * t;
                let mut x = vec![r * a.cos(), r * a.sin()];
                if self.dimension == 3 {
                    let z = 1.0 - 2.0 * t / n as f64;
                    let s = (1.0 - z * z).sqrt();
                    x = vec![r * s * a.cos(), r * s * a.sin(), r * z];
                }
                x
            })
            .collect()
    }

    pub fn potential_at(&self, x: &[f64]) -> f64 {
        self.potential.value(x)
    }

    pub fn sqrt_g(&self, x: &[f64]) -> f64 {
        self.metric.sqrt_g(x)
    }

    pub fn magnetic_data(&self, x: &[f64], mode: TensorMode) -> Result<MagneticData> {
        let tensor = self.vector_potential.tensor_at(x, mode)?;
        let intensities = intensities(&tensor, &self.metric.at(x))?;
        Ok(MagneticData { tensor, intensities })
    }

    /// Scalar intensity `F(x)` from the analytic tensor.
    pub fn scalar_intensity(&self, x: &[f64]) -> Result<f64> {
        Ok(self.magnetic_data(x, TensorMode::Analytic)?.intensities.scalar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveParams {
    pub mu_eff: f64,
    pub h_eff: f64,
    pub product: f64,
}

fn scaling_factors(triple: &ScalingTriple, x: &[f64]) -> Result<(f64, f64, f64)> {
    let r = norm(x);
    let (g, rho, rho1) = (triple.gamma(r), triple.rho(r), triple.rho1(r));
    for (name, v) in [("gamma", g), ("rho", rho), ("rho1", rho1)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{name} = {v} at {x:?}")));
        }
    }
    Ok((g, rho, rho1))
}

/// `(mu rho1 gamma / rho, h / (rho gamma))`.
pub fn effective_params(spec: &ModelSpec, triple: &ScalingTriple, x: &[f64]) -> Result<EffectiveParams> {
    let (g, rho, rho1) = scaling_factors(triple, x)?;
    let mu_eff = spec.mu * rho1 * g / rho;
    let h_eff = spec.h / (rho * g);
    Ok(EffectiveParams { mu_eff, h_eff, product: mu_eff * h_eff })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZoneLabel {
    Semiclassical,
    Singular,
    NormalField,
    StrongField,
    ForbiddenCandidate,
}

/// Constants of the zone inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneConfig {
    /// `c` in `mu rho1 <= 2c rho/gamma` and `mu rho1 >= c rho/gamma`.
    pub c: f64,
    /// A strong-field point is a forbidden candidate when `V + mu h F >= forbidden_eps * rho^2`.
    pub forbidden_eps: f64,
}

impl Default for ZoneConfig {
    fn default() -> Self {
        ZoneConfig { c: 1.0, forbidden_eps: 0.0 }
    }
}

pub fn classify_zone(
    spec: &ModelSpec,
    triple: &ScalingTriple,
    x: &[f64],
    cfg: &ZoneConfig,
) -> Result<BTreeSet<ZoneLabel>> {
    let (g, rho, rho1) = scaling_factors(triple, x)?;
    let mut out = BTreeSet::new();
    let rg = rho * g;
    if rg >= spec.h {
        out.insert(ZoneLabel::Semiclassical);
    }
    if rg <= 2.0 * spec.h {
        out.insert(ZoneLabel::Singular);
    }
    let lhs = spec.mu * rho1;
    if lhs <= 2.0 * cfg.c * rho / g {
        out.insert(ZoneLabel::NormalField);
    }
    if lhs >= cfg.c * rho / g {
        out.insert(ZoneLabel::StrongField);
        let f = spec.scalar_intensity(x)?;
        if spec.potential_at(x) + spec.mu * spec.h * f >= cfg.forbidden_eps * rho * rho {
            out.insert(ZoneLabel::ForbiddenCandidate);
        }
    }
    Ok(out)
}

/// Checks `rho1 gamma^2 + rho gamma >= eps` at the points; returns the
/// offending points (a warning, not an error).
pub fn singular_zone_condition(triple: &ScalingTriple, points: &[Vec<f64>], eps: f64) -> Vec<Vec<f64>> {
    points
        .iter()
        .filter(|x| {
            let r = norm(x);
            let g = triple.gamma(r);
            triple.rho1(r) * g * g + triple.rho(r) * g < eps
        })
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    /// Axis-aligned box.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `r_in <= |x| <= r_out`; `r_in = 0` gives a ball, `r_out = inf` an
    /// exterior (omitted in JSON, which has no infinity).
    Annulus {
        r_in: f64,
        #[serde(default = "unbounded", skip_serializing_if = "is_unbounded")]
        r_out: f64,
    },
}

fn unbounded() -> f64 {
    f64::INFINITY
}

fn is_unbounded(r: &f64) -> bool {
    *r == f64::INFINITY
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct R1Result {
    pub value: f64,
    pub error: f64,
}

const R1_TOL: f64 = 1e-8;
const R1_GUARD: f64 = 1e250;

fn r1_integrand(d: usize, t: &ScalingTriple, r: f64) -> f64 {
    let (g, rho, rho1) = (t.gamma(r), t.rho(r), t.rho1(r));
    if d == 2 {
        rho * rho / (rho1 * g * g)
    } else {
        rho * rho / g
    }
}

/// Exponent `k` with `integrand ~ r^k` for the `|x|` base.
fn r1_power(d: usize, t: &ScalingTriple) -> f64 {
    if d == 2 {
        2.0 * t.m - t.m1 - 2.0
    } else {
        2.0 * t.m - 1.0
    }
}

fn sphere_area(d: usize) -> f64 {
    if d == 2 {
        2.0 * std::f64::consts::PI
    } else {
        4.0 * std::f64::consts::PI
    }
}

/// `mu^{-1} h^{1-d}` times the integral of `rho^2 rho1^{-1} gamma^{-2}` (d = 2)
/// or `rho^2 gamma^{-1}` (d = 3) over the region.
pub fn remainder_integral_r1(spec: &ModelSpec, triple: &ScalingTriple, region: &Region) -> Result<R1Result> {
    let d = spec.dimension;
    let pref = 1.0 / spec.mu * spec.h.powi(1 - d as i32);
    let q = match region {
        Region::Annulus { r_in, r_out } => radial_r1(d, triple, *r_in, *r_out)?,
        Region::Box { lo, hi } => box_r1(d, triple, lo, hi)?,
    };
    Ok(R1Result { value: pref * q.value, error: pref * q.error })
}

fn divergence_message(d: usize, t: &ScalingTriple, at_infinity: bool) -> String {
    let k = r1_power(d, t);
    let expr = if d == 2 { "2m - m1 - 2 + 2" } else { "2m - 1 + 3" };
    if at_infinity {
        format!("integrand ~ |x|^{k} diverges at infinity: requires {expr} < 0, got {}", k + d as f64)
    } else {
        format!("integrand ~ |x|^{k} diverges at 0: requires {expr} > 0, got {}", k + d as f64)
    }
}

/// Integrates over `u = ln r`, so the integrand `phi(e^u) e^{du}` is smooth
/// for power laws; infinite ends are consumed chunk by chunk.
fn radial_r1(d: usize, t: &ScalingTriple, r_in: f64, r_out: f64) -> Result<Quad> {
    if !(r_in >= 0.0 && r_out > r_in) {
        return Err(Error::Invalid(format!("annulus needs 0 <= r_in < r_out, got [{r_in}, {r_out}]")));
    }
    let area = sphere_area(d);
    let g = |u: f64| {
        let r = u.exp();
        area * r1_integrand(d, t, r) * (d as f64 * u).exp()
    };
    let chunk = |a: f64, b: f64, toward_inf: bool| -> Result<Quad> {
        quad::midpoint_richardson(g, a, b, R1_TOL * 1e-2, 12, R1_GUARD)
            .map_err(|_| Error::Divergent(divergence_message(d, t, toward_inf)))
    };
    let mut total = Quad { value: 0.0, error: 0.0 };
    let a = (r_in > 0.0).then(|| r_in.ln());
    let b = r_out.is_finite().then(|| r_out.ln());
    match (a, b) {
        (Some(a), Some(b)) => {
            // unit-width pieces keep the exponential integrand well resolved
            let n = ((b - a).ceil() as usize).max(1);
            let w = (b - a) / n as f64;
            for i in 0..n {
                let q = chunk(a + w * i as f64, a + w * (i + 1) as f64, false)?;
                total.value += q.value;
                total.error += q.error;
            }
        }
        (Some(a), None) => march(&chunk, a, 1.0, d, t, &mut total, true)?,
        (None, Some(b)) => march(&chunk, b, -1.0, d, t, &mut total, false)?,
        (None, None) => {
            march(&chunk, 0.0, 1.0, d, t, &mut total, true)?;
            march(&chunk, 0.0, -1.0, d, t, &mut total, false)?;
        }
    }
    Ok(total)
}

fn march<C: Fn(f64, f64, bool) -> Result<Quad>>(
    chunk: &C,
    start: f64,
    dir: f64,
    d: usize,
    t: &ScalingTriple,
    total: &mut Quad,
    toward_inf: bool,
) -> Result<()> {
    let w = 1.0;
    let mut u = start;
    let mut prev = f64::INFINITY;
    let mut small = 0;
    for _ in 0..400 {
        let (lo, hi) = if dir > 0.0 { (u, u + w) } else { (u - w, u) };
        let q = chunk(lo, hi, toward_inf)?;
        total.value += q.value;
        total.error += q.error;
        if !total.value.is_finite() || total.value.abs() > R1_GUARD {
            return Err(Error::Divergent(divergence_message(d, t, toward_inf)));
        }
        let c = q.value.abs();
        if c <= R1_TOL * 1e-3 * total.value.abs() && c < prev {
            small += 1;
            if small >= 3 {
                // geometric tail bound from the last ratio
                let ratio = c / prev;
                total.error += c * ratio / (1.0 - ratio).max(1e-12);
                return Ok(());
            }
        } else {
            small = 0;
        }
        if c >= prev && c > 0.0 && total.value.abs() > 0.0 && u.abs() > 30.0 {
            return Err(Error::Divergent(divergence_message(d, t, toward_inf)));
        }
        prev = c;
        u += dir * w;
    }
    Err(Error::Divergent(divergence_message(d, t, toward_inf)))
}

/// Tensor-product nested midpoint on a box (the scaling functions are radial,
/// but the box is not).
fn box_r1(d: usize, t: &ScalingTriple, lo: &[f64], hi: &[f64]) -> Result<Quad> {
    if lo.len() != d || hi.len() != d || lo.iter().zip(hi).any(|(a, b)| b <= a) {
        return Err(Error::Invalid("box region must have d increasing extents".into()));
    }
    let f = |x: &[f64]| r1_integrand(d, t, norm(x));
    let inner = |x0: f64| -> f64 {
        let g1 = |x1: f64| {
            if d == 2 {
                f(&[x0, x1])
            } else {
                let g2 = |x2: f64| f(&[x0, x1, x2]);
                quad::midpoint_richardson(g2, lo[2], hi[2], R1_TOL * 1e-2, 8, R1_GUARD)
                    .map(|q| q.value)
                    .unwrap_or(f64::INFINITY)
            }
        };
        quad::midpoint_richardson(g1, lo[1], hi[1], R1_TOL * 1e-2, 8, R1_GUARD)
            .map(|q| q.value)
            .unwrap_or(f64::INFINITY)
    };
    let q = quad::midpoint_richardson(inner, lo[0], hi[0], R1_TOL, 8, R1_GUARD)
        .map_err(|_| Error::Divergent(divergence_message(d, t, false)))?;
    if !q.value.is_finite() {
        return Err(Error::Divergent(divergence_message(d, t, false)));
    }
    Ok(q)
}
