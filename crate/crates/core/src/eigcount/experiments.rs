//! Landau-level degeneracy and accumulation near the lowest level.

use std::f64::consts::PI;

use serde::Serialize;

use super::{assemble_magnetic_2d, assemble_torus_landau, count_ladder, dense_eigenvalues, Boundary, GridSpec};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::gauge::{Sigma, VectorPotentialSpec};
use crate::model::ModelSpec;
use crate::weyl::{eta_count_landau, EtaQuadrature, Side};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauRow {
    pub level: usize,
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    /// `B L^2 / 2 pi`.
    pub expected: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauRun {
    pub l: f64,
    pub n: usize,
    pub spacing: f64,
    /// `spacing^2 B`.
    pub resolution: f64,
    pub warnings: Vec<String>,
    pub rows: Vec<LandauRow>,
}

impl LandauRun {
    /// `1 - ratio` of the lowest level.
    pub fn deficit(&self) -> f64 {
        self.rows.first().map_or(f64::NAN, |r| 1.0 - r.ratio)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusCheck {
    pub n: usize,
    pub flux: usize,
    pub l: f64,
    /// Eigenvalues in `(0, 2B)` by inertia.
    pub count: usize,
    /// Same from a dense eigensolve, when small enough.
    pub dense_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandauReport {
    pub b: f64,
    pub runs: Vec<LandauRun>,
    pub tori: Vec<TorusCheck>,
}

/// Constant field `b` with `mu = h = 1` and `V = 0`. Each `(L, n)` run counts
/// Dirichlet eigenvalues on `[0, L]^2` in the windows `(2kB, (2k+2)B)`,
/// `k < levels`; each `(n, flux)` torus counts the lowest band of the
/// periodic lattice, which holds exactly `flux` states.
pub fn landau_degeneracy_experiment(
    b: f64,
    runs: &[(f64, usize)],
    levels: usize,
    tori: &[(usize, usize)],
    dense_limit: usize,
    seed: u64,
) -> Result<LandauReport> {
    if !(b > 0.0) || levels == 0 {
        return Err(Error::Invalid("need b > 0 and at least one level".into()));
    }
    let spec = ModelSpec::schrodinger(
        2,
        ScalarField::zero(),
        VectorPotentialSpec::RotationalEven { dim: 2, sigma: Sigma::Constant { value: 0.5 * b } },
        1.0,
        1.0,
    );
    let mut out_runs = Vec::with_capacity(runs.len());
    for &(l, n) in runs {
        let grid = GridSpec::square(l, n, Boundary::Dirichlet);
        let hm = assemble_magnetic_2d(&spec, &grid)?;
        let taus: Vec<f64> = (0..=levels).map(|k| 2.0 * k as f64 * b).collect();
        let counts = count_ladder(&hm, &taus, seed)?;
        let expected = b * l * l / (2.0 * PI);
        let rows = (0..levels)
            .map(|k| {
                let count = counts[k + 1].count - counts[k].count;
                LandauRow { level: k, lo: taus[k], hi: taus[k + 1], count, expected, ratio: count as f64 / expected }
            })
            .collect();
        let d = grid.spacing()[0];
        out_runs.push(LandauRun { l, n, spacing: d, resolution: d * d * b, warnings: hm.warnings.clone(), rows });
    }
    let mut out_tori = Vec::with_capacity(tori.len());
    for &(n, flux) in tori {
        let (hm, l) = assemble_torus_landau(b, n, flux, 1.0, 1.0)?;
        let c = count_ladder(&hm, &[0.0, 2.0 * b], seed)?;
        let dense_count = (hm.dim <= dense_limit).then(|| {
            dense_eigenvalues(&hm).iter().filter(|e| **e > 0.0 && **e < 2.0 * b).count()
        });
        out_tori.push(TorusCheck { n, flux, l, count: c[1].count - c[0].count, dense_count });
    }
    Ok(LandauReport { b, runs: out_runs, tori: out_tori })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccumulationRow {
    pub eta: f64,
    /// Eigenvalues in `[B - sup|V| - margin, B - eta)`.
    pub numeric: usize,
    pub formula: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccumulationReport {
    pub b: f64,
    pub sup_v: f64,
    /// Eigenvalues below the window; zero when nothing leaks below the band.
    pub floor_count: usize,
    pub rows: Vec<AccumulationRow>,
    pub warnings: Vec<String>,
}

/// Eigenvalues of the model on `grid` just below the lowest Landau level
/// `B`, against the principal term `(2 pi)^{-1} int_{-V >= eta} B dx`.
/// The model's field must be the constant `b`.
pub fn accumulation_experiment(
    spec: &ModelSpec,
    b: f64,
    grid: &GridSpec,
    etas: &[f64],
    q: &EtaQuadrature,
    seed: u64,
) -> Result<AccumulationReport> {
    if !(b > 0.0) {
        return Err(Error::Invalid(format!("b must be positive, got {b}")));
    }
    if (spec.mu * spec.h - 1.0).abs() > 1e-12 {
        return Err(Error::Invalid("accumulation experiment expects mu h = 1".into()));
    }
    let mut sup_v: f64 = 0.0;
    for j in 0..grid.n[1] {
        for i in 0..grid.n[0] {
            sup_v = sup_v.max(spec.potential_at(&grid.node(i, j)).abs());
        }
    }
    if sup_v >= 2.0 * b {
        return Err(Error::LevelOverlap(format!(
            "sup|V| = {sup_v} reaches the gap 2B = {} between Landau levels",
            2.0 * b
        )));
    }
    let hm = assemble_magnetic_2d(spec, grid)?;
    let floor = b - sup_v - 0.5 * (2.0 * b - sup_v);
    let mut taus = vec![floor];
    taus.extend(etas.iter().map(|e| b - e));
    let counts = count_ladder(&hm, &taus, seed)?;
    let floor_count = counts[0].count;
    let mut rows = Vec::with_capacity(etas.len());
    for (k, &eta) in etas.iter().enumerate() {
        let numeric = counts[k + 1].count - floor_count;
        let formula = eta_count_landau(spec, &[b], &[vec![1.0]], eta, Side::Below, q)?;
        rows.push(AccumulationRow { eta, numeric, formula, ratio: (formula > 0.0).then(|| numeric as f64 / formula) });
    }
    Ok(AccumulationReport { b, sup_v, floor_count, rows, warnings: hm.warnings.clone() })
}
