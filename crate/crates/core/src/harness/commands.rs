//! Parameter blocks and drivers for each subcommand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

use super::fit::{exponent_fit, ExponentSample, Verdict};
use super::{csv_float as f, Check, Outcome, RunError, Subcommand};
use crate::eigcount::{accumulation_experiment, landau_degeneracy_experiment, GridSpec};
use crate::gauge::{verify_intensity_formulas, TensorMode, VectorPotentialSpec};
use crate::model::{predicted_exponents_for, ModelSpec, Regime, Region};
use crate::oned::{
    hardy_threshold_check, reduced_lambda_field, shallow_well_check, slow_decay_check, vstar_from_spec, BoxPolicy,
    Profile1D, ReducedOptions, SlowDecayOptions, TransverseGrid,
};
use crate::weyl::{eta_count_landau, eta_count_pauli, integrated_count, DensityKind, EtaQuadrature, Side};

fn parse<T: DeserializeOwned>(params: &Value) -> Result<T, RunError> {
    serde_path_to_error::deserialize(params.clone()).map_err(|e| {
        let path = e.path().to_string();
        let at = if path == "." { "params".to_string() } else { format!("params.{path}") };
        RunError::Config(format!("{at}: {}", e.inner()))
    })
}

fn strictly_monotone(name: &str, v: &[f64]) -> Result<(), RunError> {
    if v.is_empty() {
        return Err(RunError::Config(format!("params.{name}: ladder is empty")));
    }
    let up = v.windows(2).all(|w| w[1] > w[0]);
    let down = v.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(RunError::Config(format!("params.{name}: ladder must be strictly monotone")));
    }
    Ok(())
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).unwrap_or(Value::Null)
}

pub(super) fn execute(sub: Subcommand, params: &Value, seed: u64) -> Result<Outcome, RunError> {
    match sub {
        Subcommand::GaugeCheck => gauge_check(parse(params)?, seed),
        Subcommand::OnedShallow => oned_shallow(parse(params)?),
        Subcommand::OnedSlowdecay => oned_slowdecay(parse(params)?),
        Subcommand::OnedHardy => oned_hardy(parse(params)?),
        Subcommand::Landau => landau(parse(params)?, seed),
        Subcommand::Accumulate => accumulate(parse(params)?, seed),
        Subcommand::EtaCount => eta_count(parse(params)?),
        Subcommand::ExponentFit => exponent_fit_cmd(parse(params)?),
        Subcommand::Reduce3d => reduce3d(parse(params)?),
    }
}

fn default_gauge_tol() -> f64 {
    1e-9
}
fn default_points() -> usize {
    50
}
fn default_radii() -> [f64; 2] {
    [0.25, 2.0]
}
fn default_mode() -> TensorMode {
    TensorMode::Analytic
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeParams {
    pub vector_potential: VectorPotentialSpec,
    /// Explicit points; otherwise `n_points` seeded points in the annulus `radii`.
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_points")]
    pub n_points: usize,
    #[serde(default = "default_radii")]
    pub radii: [f64; 2],
    #[serde(default = "default_mode")]
    pub mode: TensorMode,
    #[serde(default = "default_gauge_tol")]
    pub tolerance: f64,
}

/// `n` points with `r_in <= |x| <= r_out`, by rejection from the cube.
pub fn seeded_points(dim: usize, n: usize, radii: [f64; 2], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(-radii[1]..=radii[1])).collect();
        let r = crate::field::norm(&x);
        if r >= radii[0] && r <= radii[1] {
            out.push(x);
        }
    }
    out
}

fn gauge_check(p: GaugeParams, seed: u64) -> Result<Outcome, RunError> {
    if !(p.radii[0] > 0.0 && p.radii[1] > p.radii[0]) {
        return Err(RunError::Config("params.radii: need 0 < r_in < r_out".into()));
    }
    let dim = p.vector_potential.dim();
    let points = p.points.unwrap_or_else(|| seeded_points(dim, p.n_points, p.radii, seed));
    let rep = verify_intensity_formulas(&p.vector_potential, &points, p.mode, p.tolerance)?;
    let mut csv = String::from("row,point,f_closed,f_numeric,rel_gap\n");
    for (i, r) in rep.rows.iter().enumerate() {
        let join = |v: &[f64]| v.iter().map(|x| f(*x)).collect::<Vec<_>>().join(" ");
        csv += &format!("{i},{},{},{},{}\n", join(&r.point), join(&r.f_closed), join(&r.f_numeric), f(r.rel_gap));
    }
    let check = Check::new(
        "intensity closed forms",
        rep.pass,
        format!("max rel_gap {:.3e} over {} points, tolerance {:.1e}", rep.max_gap, rep.rows.len(), rep.tolerance),
    );
    Ok(Outcome::new(vec![check], to_value(&rep)).with_csv("intensities.csv", csv))
}

fn default_ratio_tol() -> f64 {
    0.05
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShallowParams {
    pub profile: Profile1D,
    pub eps: Vec<f64>,
    #[serde(default)]
    pub policy: BoxPolicy,
    /// Bound on `|lambda/(-W^2 eps^2) - 1|` at the smallest `eps`.
    #[serde(default = "default_ratio_tol")]
    pub ratio_tol: f64,
}

fn oned_shallow(p: ShallowParams) -> Result<Outcome, RunError> {
    strictly_monotone("eps", &p.eps)?;
    let rep = shallow_well_check(&p.profile, &p.eps, &p.policy)?;
    let mut csv = String::from("eps,lambda,predicted,ratio,negative_count,half_length,nodes\n");
    for r in &rep.rows {
        let ratio = r.ratio.map(f).unwrap_or_default();
        csv += &format!(
            "{},{},{},{ratio},{},{},{}\n",
            f(r.eps),
            f(r.lambda),
            f(r.predicted),
            r.negative_count,
            f(r.half_length),
            r.nodes
        );
    }
    let single = rep.rows.iter().all(|r| r.negative_count == 1);
    let smallest = rep.rows.iter().min_by(|a, b| a.eps.total_cmp(&b.eps));
    let last_gap = smallest.and_then(|r| r.ratio).map(|r| (r - 1.0).abs());
    let mut by_eps = rep.clone();
    by_eps.rows.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let checks = vec![
        Check::new(
            "one negative eigenvalue",
            single,
            format!("counts {:?}", rep.rows.iter().map(|r| r.negative_count).collect::<Vec<_>>()),
        ),
        Check::new(
            "ratio at smallest eps",
            last_gap.is_some_and(|g| g < p.ratio_tol),
            format!("|ratio - 1| = {last_gap:?}, tolerance {}", p.ratio_tol),
        ),
        Check::new("ratio gaps decrease", by_eps.ratio_gaps_decrease(), "ordered by decreasing eps".to_string()),
    ];
    Ok(Outcome::new(checks, to_value(&rep)).with_csv("shallow.csv", csv))
}

fn default_slope_tol() -> f64 {
    0.05
}
fn default_prefactor_tol() -> f64 {
    0.1
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlowDecayParams {
    pub c: f64,
    pub q: f64,
    pub eps: Vec<f64>,
    #[serde(default)]
    pub options: SlowDecayOptions,
    #[serde(default = "default_slope_tol")]
    pub slope_tol: f64,
    /// Bound on `|lambda eps^{-1/(1-q)} / mu - 1|` at the smallest `eps`.
    #[serde(default = "default_prefactor_tol")]
    pub ratio_tol: f64,
}

fn oned_slowdecay(p: SlowDecayParams) -> Result<Outcome, RunError> {
    strictly_monotone("eps", &p.eps)?;
    let rep = slow_decay_check(p.c, p.q, &p.eps, &p.options)?;
    let mut csv = String::from("eps,lambda,scaled,ratio\n");
    for r in &rep.rows {
        csv += &format!("{},{},{},{}\n", f(r.eps), f(r.lambda), f(r.scaled), f(r.ratio));
    }
    let slope_gap = (rep.fit.slope - rep.predicted_slope).abs();
    let smallest = rep.rows.iter().min_by(|a, b| a.eps.total_cmp(&b.eps)).map(|r| r.ratio);
    let checks = vec![
        Check::new(
            "decay exponent",
            slope_gap <= p.slope_tol,
            format!("slope {:.4} vs {:.4}, tolerance {}", rep.fit.slope, rep.predicted_slope, p.slope_tol),
        ),
        Check::new(
            "prefactor",
            smallest.is_some_and(|r| (r - 1.0).abs() <= p.ratio_tol),
            format!("ratio to mu at smallest eps {smallest:?}, mu = {:.8}", rep.mu),
        ),
    ];
    Ok(Outcome::new(checks, to_value(&rep)).with_csv("slowdecay.csv", csv))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardyExpectation {
    Bounded,
    LogGrowth,
}

fn default_per_unit() -> f64 {
    40.0
}
fn default_r2() -> f64 {
    0.99
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardyParams {
    pub c: f64,
    pub lengths: Vec<f64>,
    pub expect: HardyExpectation,
    #[serde(default = "default_per_unit")]
    pub per_unit: f64,
    #[serde(default = "default_r2")]
    pub r2_min: f64,
}

fn oned_hardy(p: HardyParams) -> Result<Outcome, RunError> {
    strictly_monotone("lengths", &p.lengths)?;
    let rep = hardy_threshold_check(p.c, &p.lengths, p.per_unit)?;
    let mut csv = String::from("half_length,count\n");
    for r in &rep.rows {
        csv += &format!("{},{}\n", f(r.half_length), r.count);
    }
    let counts: Vec<usize> = rep.rows.iter().map(|r| r.count).collect();
    let check = match p.expect {
        HardyExpectation::Bounded => Check::new("count constant in L", rep.bounded, format!("counts {counts:?}")),
        HardyExpectation::LogGrowth => {
            let ok = rep.fit.is_some_and(|fit| fit.slope > 0.0 && fit.r2 > p.r2_min);
            let detail = match rep.fit {
                Some(fit) => format!("alpha {:.4}, R^2 {:.5}, counts {counts:?}", fit.slope, fit.r2),
                None => "fewer than two lengths".into(),
            };
            Check::new("count grows like alpha log L", ok, detail)
        }
    };
    Ok(Outcome::new(vec![check], to_value(&rep)).with_csv("hardy.csv", csv))
}

fn one() -> usize {
    1
}
fn default_dense_limit() -> usize {
    1200
}
fn default_landau_range() -> [f64; 2] {
    [0.85, 1.0]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandauParams {
    pub b: f64,
    /// `(L, n)` Dirichlet runs.
    #[serde(default)]
    pub runs: Vec<(f64, usize)>,
    #[serde(default = "one")]
    pub levels: usize,
    /// `(n, flux)` periodic tori.
    #[serde(default)]
    pub tori: Vec<(usize, usize)>,
    #[serde(default = "default_dense_limit")]
    pub dense_limit: usize,
    /// Accepted range of the lowest-level ratio in the first run.
    #[serde(default = "default_landau_range")]
    pub ratio_range: [f64; 2],
}

fn landau(p: LandauParams, seed: u64) -> Result<Outcome, RunError> {
    if p.runs.is_empty() && p.tori.is_empty() {
        return Err(RunError::Config("params.runs: need at least one run or torus".into()));
    }
    let rep = landau_degeneracy_experiment(p.b, &p.runs, p.levels, &p.tori, p.dense_limit, seed)?;
    let mut csv = String::from("l,n,level,lo,hi,count,expected,ratio\n");
    for run in &rep.runs {
        for r in &run.rows {
            csv += &format!(
                "{},{},{},{},{},{},{},{}\n",
                f(run.l),
                run.n,
                r.level,
                f(r.lo),
                f(r.hi),
                r.count,
                f(r.expected),
                f(r.ratio)
            );
        }
    }
    let mut torus_csv = String::from("n,flux,l,count,dense_count\n");
    for t in &rep.tori {
        let dense = t.dense_count.map(|c| c.to_string()).unwrap_or_default();
        torus_csv += &format!("{},{},{},{},{dense}\n", t.n, t.flux, f(t.l), t.count);
    }
    let mut checks = Vec::new();
    if let Some(first) = rep.runs.first() {
        let ratio = first.rows.first().map_or(f64::NAN, |r| r.ratio);
        checks.push(Check::new(
            "lowest level degeneracy",
            ratio >= p.ratio_range[0] && ratio <= p.ratio_range[1],
            format!("L = {} ratio {ratio:.4}, range {:?}", first.l, p.ratio_range),
        ));
    }
    if rep.runs.len() >= 2 {
        let deficits: Vec<f64> = rep.runs.iter().map(|r| r.deficit()).collect();
        checks.push(Check::new(
            "deficit shrinks with L",
            deficits.windows(2).all(|w| w[1] < w[0]),
            format!("deficits {deficits:?}"),
        ));
    }
    for t in &rep.tori {
        let ok = t.count == t.flux && t.dense_count.is_none_or(|d| d == t.flux);
        checks.push(Check::new(
            &format!("torus n = {} flux = {}", t.n, t.flux),
            ok,
            format!("inertia {} dense {:?}", t.count, t.dense_count),
        ));
    }
    let warnings: Vec<String> = rep.runs.iter().flat_map(|r| r.warnings.iter().map(|w| format!("L = {}: {w}", r.l))).collect();
    Ok(Outcome::new(checks, to_value(&rep)).with_csv("landau.csv", csv).with_csv("torus.csv", torus_csv).with_warnings(warnings))
}

fn default_accumulation_range() -> [f64; 2] {
    [0.8, 1.2]
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccumulateParams {
    pub model: ModelSpec,
    pub b: f64,
    pub grid: GridSpec,
    pub etas: Vec<f64>,
    #[serde(default)]
    pub quadrature: EtaQuadrature,
    #[serde(default = "default_accumulation_range")]
    pub ratio_range: [f64; 2],
}

fn accumulate(p: AccumulateParams, seed: u64) -> Result<Outcome, RunError> {
    strictly_monotone("etas", &p.etas)?;
    let rep = accumulation_experiment(&p.model, p.b, &p.grid, &p.etas, &p.quadrature, seed)?;
    let mut csv = String::from("eta,numeric,formula,ratio\n");
    let mut checks = Vec::new();
    for r in &rep.rows {
        let ratio = r.ratio.map(f).unwrap_or_default();
        csv += &format!("{},{},{},{ratio}\n", f(r.eta), r.numeric, f(r.formula));
        let ok = r.ratio.is_some_and(|x| x >= p.ratio_range[0] && x <= p.ratio_range[1]);
        checks.push(Check::new(
            &format!("ratio at eta = {}", r.eta),
            ok,
            format!("numeric {} formula {:.4}", r.numeric, r.formula),
        ));
    }
    Ok(Outcome::new(checks, to_value(&rep)).with_csv("accumulation.csv", csv).with_warnings(rep.warnings.clone()))
}

#[derive(Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaMethod {
    Landau {
        f_inf: Vec<f64>,
        /// Multi-indices of the level; defaults to the lowest level `z = (1, ..., 1)`.
        #[serde(default)]
        zs: Option<Vec<Vec<f64>>>,
        #[serde(default)]
        side: Side,
    },
    Pauli {
        p: usize,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaCountParams {
    pub model: ModelSpec,
    pub method: EtaMethod,
    pub etas: Vec<f64>,
    #[serde(default)]
    pub quadrature: EtaQuadrature,
}

fn eta_count(p: EtaCountParams) -> Result<Outcome, RunError> {
    strictly_monotone("etas", &p.etas)?;
    let mut values = Vec::with_capacity(p.etas.len());
    for &eta in &p.etas {
        let v = match &p.method {
            EtaMethod::Landau { f_inf, zs, side } => {
                let zs = zs.clone().unwrap_or_else(|| vec![vec![1.0; f_inf.len()]]);
                eta_count_landau(&p.model, f_inf, &zs, eta, *side, &p.quadrature)?
            }
            EtaMethod::Pauli { p: order } => eta_count_pauli(&p.model, *order, eta, &p.quadrature)?,
        };
        values.push(v);
    }
    let mut csv = String::from("eta,count\n");
    for (e, v) in p.etas.iter().zip(&values) {
        csv += &format!("{},{}\n", f(*e), f(*v));
    }
    let mut pairs: Vec<(f64, f64)> = p.etas.iter().copied().zip(values.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = pairs.windows(2).all(|w| w[1].1 <= w[0].1);
    let finite = values.iter().all(|v| v.is_finite() && *v >= 0.0);
    let check = Check::new("count nonnegative and nonincreasing in eta", monotone && finite, format!("{values:?}"));
    Ok(Outcome::new(vec![check], json!({ "etas": p.etas, "counts": values })).with_csv("eta_count.csv", csv))
}

fn default_band() -> f64 {
    0.1
}
fn default_angular() -> usize {
    8
}
fn default_rel_tol() -> f64 {
    1e-9
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentFitParams {
    /// `mu` and `h` of the model are replaced by the ladders; `scaling`
    /// supplies `(m, m1)` for the catalog lookup.
    pub model: ModelSpec,
    #[serde(default)]
    pub tau: f64,
    pub region: Region,
    pub density: DensityKind,
    pub regime: Regime,
    pub mu: Vec<f64>,
    pub h: Vec<f64>,
    #[serde(default = "default_band")]
    pub band: f64,
    #[serde(default = "default_angular")]
    pub angular: usize,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

/// Integrated density over the full `mu x h` ladder, in row-major order.
pub fn sample_counts(p: &ExponentFitParams) -> crate::Result<Vec<(ExponentSample, f64)>> {
    let mut out = Vec::with_capacity(p.mu.len() * p.h.len());
    for &mu in &p.mu {
        for &h in &p.h {
            let mut spec = p.model.clone();
            spec.mu = mu;
            spec.h = h;
            let c = integrated_count(&spec, p.tau, &p.region, p.density, p.angular, p.rel_tol)?;
            out.push((ExponentSample { mu, h, value: c.value }, c.error));
        }
    }
    Ok(out)
}

fn exponent_fit_cmd(p: ExponentFitParams) -> Result<Outcome, RunError> {
    strictly_monotone("mu", &p.mu)?;
    strictly_monotone("h", &p.h)?;
    let Some(triple) = p.model.scaling.as_ref() else {
        return Err(RunError::Config("params.model.scaling: required for the catalog lookup".into()));
    };
    let prediction = predicted_exponents_for(&p.model.kind, p.model.dimension, triple, p.regime)?;
    let samples = sample_counts(&p)?;
    let mut csv = String::from("mu,h,value,quad_error\n");
    for (s, e) in &samples {
        csv += &format!("{},{},{},{}\n", f(s.mu), f(s.h), f(s.value), f(*e));
    }
    let plain: Vec<ExponentSample> = samples.iter().map(|(s, _)| *s).collect();
    let fit = exponent_fit(&plain, &prediction, p.band)?;
    let check = Check::new(
        "slopes within band of catalog exponents",
        fit.verdict == Verdict::WithinBand,
        format!(
            "fitted ({:.4}, {:.4}) vs ({}, {}), band {}; {}",
            fit.slopes[0], fit.slopes[1], fit.predicted[0], fit.predicted[1], fit.band, prediction.citation
        ),
    );
    let summary = json!({ "fit": fit, "prediction": prediction });
    Ok(Outcome::new(vec![check], summary).with_csv("samples.csv", csv))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Reduce3dParams {
    pub model: ModelSpec,
    pub grid: TransverseGrid,
    #[serde(default)]
    pub options: ReducedOptions,
    #[serde(default)]
    pub etas: Vec<f64>,
    /// Optional bound on `max |lambda + W^2| / W^2`.
    #[serde(default)]
    pub gap_tol: Option<f64>,
}

fn reduce3d(p: Reduce3dParams) -> Result<Outcome, RunError> {
    if !p.etas.is_empty() {
        strictly_monotone("etas", &p.etas)?;
    }
    let (v, g) = vstar_from_spec(&p.model, p.options.f_inf)?;
    let field = reduced_lambda_field(v, g, &p.grid, &p.options)?;
    let mut csv = String::from("x2,x3,lambda,w\n");
    for ((pt, l), w) in field.points.iter().zip(&field.lambda).zip(&field.w) {
        csv += &format!("{},{},{},{}\n", f(pt[0]), f(pt[1]), f(*l), f(*w));
    }
    let mut counts = String::from("eta,count,surrogate\n");
    for &eta in &p.etas {
        counts += &format!("{},{},{}\n", f(eta), f(field.count(eta)), f(field.surrogate_count(eta)));
    }
    let mut checks = vec![Check::new(
        "at most one negative eigenvalue per line",
        field.flagged.is_empty(),
        format!("{} flagged points", field.flagged.len()),
    )];
    if let Some(tol) = p.gap_tol {
        let gap = field.max_relative_gap();
        checks.push(Check::new("lambda close to -W^2", gap <= tol, format!("max gap {gap:.4e}, tolerance {tol}")));
    }
    let summary = json!({
        "f_inf": field.f_inf,
        "flagged": field.flagged,
        "max_relative_gap": field.max_relative_gap(),
        "counts": p.etas.iter().map(|e| json!({ "eta": e, "count": field.count(*e), "surrogate": field.surrogate_count(*e) })).collect::<Vec<_>>(),
    });
    Ok(Outcome::new(checks, summary).with_csv("lambda_field.csv", csv).with_csv("counts.csv", counts))
}
