//! Finite-difference magnetic Hamiltonians in 2D with Peierls phases and
//! eigenvalue counting by banded `LDL^H` inertia.

mod experiments;

pub use experiments::{
    accumulation_experiment, landau_degeneracy_experiment, AccumulationReport, AccumulationRow, LandauReport,
    LandauRow, LandauRun, TorusCheck,
};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Metric;
use crate::model::{ModelSpec, OperatorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Dirichlet,
    Periodic,
}

/// Rectangle `[lo, hi]` with `n` nodes per axis. Dirichlet grids have
/// spacing `(hi - lo)/(n + 1)` and omit the boundary; periodic grids have
/// spacing `(hi - lo)/n` and identify the ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: [f64; 2],
    pub hi: [f64; 2],
    pub n: [usize; 2],
    #[serde(default)]
    pub boundary: Boundary,
}

impl GridSpec {
    /// `[0, l]^2`.
    pub fn square(l: f64, n: usize, boundary: Boundary) -> Self {
        GridSpec { lo: [0.0, 0.0], hi: [l, l], n: [n, n], boundary }
    }

    /// `[-l/2, l/2]^2`.
    pub fn centered(l: f64, n: usize, boundary: Boundary) -> Self {
        GridSpec { lo: [-0.5 * l, -0.5 * l], hi: [0.5 * l, 0.5 * l], n: [n, n], boundary }
    }

    pub fn spacing(&self) -> [f64; 2] {
        let cells = |k: usize| match self.boundary {
            Boundary::Dirichlet => (self.n[k] + 1) as f64,
            Boundary::Periodic => self.n[k] as f64,
        };
        [(self.hi[0] - self.lo[0]) / cells(0), (self.hi[1] - self.lo[1]) / cells(1)]
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        let d = self.spacing();
        let off = match self.boundary {
            Boundary::Dirichlet => 1.0,
            Boundary::Periodic => 0.0,
        };
        [self.lo[0] + (i as f64 + off) * d[0], self.lo[1] + (j as f64 + off) * d[1]]
    }

    pub fn unknowns(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn validate(&self) -> Result<()> {
        let min_n = match self.boundary {
            Boundary::Dirichlet => 1,
            Boundary::Periodic => 3,
        };
        if self.n[0] < min_n || self.n[1] < min_n || !(self.hi[0] > self.lo[0] && self.hi[1] > self.lo[1]) {
            return Err(Error::Invalid(format!("grid needs hi > lo and at least {min_n} nodes per axis")));
        }
        Ok(())
    }
}

/// Index map: the axis with fewer nodes runs fastest; periodic grids fold
/// the slow axis (0, N-1, 1, N-2, ...) so wrap links stay in the band.
#[derive(Debug, Clone, Copy)]
struct Ordering {
    n: [usize; 2],
    fast: usize,
    fold: bool,
}

impl Ordering {
    fn new(grid: &GridSpec) -> Self {
        Ordering { n: grid.n, fast: if grid.n[0] <= grid.n[1] { 0 } else { 1 }, fold: grid.boundary == Boundary::Periodic }
    }

    fn index(&self, ij: [usize; 2]) -> usize {
        let (f, s) = (ij[self.fast], ij[1 - self.fast]);
        let ns = self.n[1 - self.fast];
        let pos = if self.fold {
            if s < ns.div_ceil(2) {
                2 * s
            } else {
                2 * (ns - 1 - s) + 1
            }
        } else {
            s
        };
        pos * self.n[self.fast] + f
    }
}

/// Hermitian matrix stored as its diagonal and strictly upper triangle
/// (compressed by column).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHermitian {
    pub dim: usize,
    pub diag: Vec<f64>,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    vals: Vec<Complex64>,
    pub bandwidth: usize,
    /// Gershgorin bound on the spectral radius.
    pub norm_bound: f64,
    pub warnings: Vec<String>,
}

impl SparseHermitian {
    /// From the diagonal and upper entries `(row, col, value)` with `row < col`;
    /// duplicates are summed.
    pub fn from_upper(diag: Vec<f64>, mut upper: Vec<(usize, usize, Complex64)>) -> Result<Self> {
        let dim = diag.len();
        if upper.iter().any(|(r, c, _)| r >= c || *c >= dim) {
            return Err(Error::Invalid("upper entries need row < col < dim".into()));
        }
        upper.sort_by_key(|(r, c, _)| (*c, *r));
        let mut col_ptr = vec![0usize; dim + 1];
        let mut row_idx = Vec::with_capacity(upper.len());
        let mut vals: Vec<Complex64> = Vec::with_capacity(upper.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in upper {
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            last = Some((r, c));
            row_idx.push(r);
            vals.push(v);
            col_ptr[c + 1] += 1;
        }
        for c in 0..dim {
            col_ptr[c + 1] += col_ptr[c];
        }
        let mut bandwidth = 0;
        let mut radius: Vec<f64> = diag.iter().map(|d| d.abs()).collect();
        for c in 0..dim {
            for k in col_ptr[c]..col_ptr[c + 1] {
                bandwidth = bandwidth.max(c - row_idx[k]);
                radius[c] += vals[k].norm();
                radius[row_idx[k]] += vals[k].norm();
            }
        }
        let norm_bound = radius.into_iter().fold(0.0, f64::max);
        Ok(SparseHermitian { dim, diag, col_ptr, row_idx, vals, bandwidth, norm_bound, warnings: vec![] })
    }

    /// Upper entries `(row, value)` of column `c`.
    fn column(&self, c: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        (self.col_ptr[c]..self.col_ptr[c + 1]).map(move |k| (self.row_idx[k], self.vals[k]))
    }

    pub fn nnz_upper(&self) -> usize {
        self.vals.len()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.dim,
            self.diag.iter().map(|d| Complex64::new(*d, 0.0)),
        ));
        for c in 0..self.dim {
            for (r, v) in self.column(c) {
                m[(r, c)] = v;
                m[(c, r)] = v.conj();
            }
        }
        m
    }

    /// Conjugation by `diag(exp(i phase))`: `H_pq -> exp(i(phase_p - phase_q)) H_pq`.
    pub fn conjugate_by_phases(&self, phase: &[f64]) -> Result<Self> {
        if phase.len() != self.dim {
            return Err(Error::Invalid("phase vector length must equal the dimension".into()));
        }
        let mut out = self.clone();
        for c in 0..self.dim {
            for k in out.col_ptr[c]..out.col_ptr[c + 1] {
                let r = out.row_idx[k];
                out.vals[k] *= Complex64::from_polar(1.0, phase[r] - phase[c]);
            }
        }
        Ok(out)
    }
}

fn metric_diagonal(metric: &Metric, x: &[f64]) -> Result<[f64; 2]> {
    match metric {
        Metric::Identity => Ok([1.0, 1.0]),
        _ => {
            let g = metric.at(x);
            if g[(0, 1)].abs() > 1e-14 * g.abs().max() || g[(1, 0)].abs() > 1e-14 * g.abs().max() {
                return Err(Error::Unsupported("non-diagonal metric on the grid".into()));
            }
            Ok([g[(0, 0)], g[(1, 1)]])
        }
    }
}

/// Five-point magnetic Laplacian plus `V`: neighbour hopping
/// `-(h^2 g / d^2) exp(-i mu d A(mid) / h)` along each link and diagonal
/// `sum of link weights + V`.
pub fn assemble_magnetic_2d(spec: &ModelSpec, grid: &GridSpec) -> Result<SparseHermitian> {
    assemble_magnetic_2d_gauged(spec, grid, None)
}

/// As [`assemble_magnetic_2d`], with the node-sampled gauge function `chi`
/// added to each link integral: the phase along `p -> q` becomes
/// `mu (d A(mid) + chi(q) - chi(p)) / h`.
pub fn assemble_magnetic_2d_gauged(
    spec: &ModelSpec,
    grid: &GridSpec,
    chi: Option<&(dyn Fn(&[f64]) -> f64 + Sync)>,
) -> Result<SparseHermitian> {
    if spec.dimension != 2 {
        return Err(Error::Invalid(format!("grid assembly needs d = 2, got {}", spec.dimension)));
    }
    if matches!(spec.kind, OperatorKind::Dirac { .. }) {
        return Err(Error::Unsupported("Dirac operators are not discretized on the grid".into()));
    }
    grid.validate()?;
    let ord = Ordering::new(grid);
    let d = grid.spacing();
    let (mu, h) = (spec.mu, spec.h);
    let dim = grid.unknowns();
    let mut diag = vec![0.0; dim];
    let mut upper = Vec::with_capacity(2 * dim);
    let mut max_f: f64 = 0.0;
    let chi_at = |x: &[f64]| chi.map_or(0.0, |c| c(x));
    for j in 0..grid.n[1] {
        for i in 0..grid.n[0] {
            let x = grid.node(i, j);
            let p = ord.index([i, j]);
            diag[p] += spec.potential_at(&x);
            max_f = max_f.max(spec.scalar_intensity(&x)?);
            for axis in 0..2 {
                // both links along the axis count on the diagonal, including
                // links to the Dirichlet boundary
                for side in [-0.5, 0.5] {
                    let mut mid = x;
                    mid[axis] += side * d[axis];
                    let g = metric_diagonal(&spec.metric, &mid)?[axis];
                    diag[p] += h * h * g / (d[axis] * d[axis]);
                }
                let at_end = if axis == 0 { i + 1 == grid.n[0] } else { j + 1 == grid.n[1] };
                let next = match (at_end, grid.boundary) {
                    (false, _) => Some(if axis == 0 { [i + 1, j] } else { [i, j + 1] }),
                    (true, Boundary::Periodic) => Some(if axis == 0 { [0, j] } else { [i, 0] }),
                    (true, Boundary::Dirichlet) => None,
                };
                if let Some(nb) = next {
                    let mut mid = x;
                    mid[axis] += 0.5 * d[axis];
                    let t = h * h * metric_diagonal(&spec.metric, &mid)?[axis] / (d[axis] * d[axis]);
                    let q = ord.index(nb);
                    let a = spec.vector_potential.potential_at(&mid)?;
                    let theta = mu * (d[axis] * a[axis] + chi_at(&grid.node(nb[0], nb[1])) - chi_at(&x)) / h;
                    let hop = -Complex64::from_polar(t, -theta);
                    if p < q {
                        upper.push((p, q, hop));
                    } else {
                        upper.push((q, p, hop.conj()));
                    }
                }
            }
        }
    }
    let mut hm = SparseHermitian::from_upper(diag, upper)?;
    let ratio = d[0].max(d[1]).powi(2) * mu * max_f / h;
    if ratio > 0.2 {
        hm.warnings.push(format!(
            "grid does not resolve the magnetic length: spacing^2 mu max|F| / h = {ratio:.3} > 0.2"
        ));
    }
    Ok(hm)
}

/// Constant field `b` on the `n x n` periodic lattice of side
/// `l = (2 pi flux h / (mu b))^{1/2}`, in a discrete Landau gauge whose
/// plaquette phases all equal `mu b d^2 / h` (so `n^2` plaquettes carry
/// `2 pi flux`). Returns the matrix and `l`.
pub fn assemble_torus_landau(b: f64, n: usize, flux: usize, mu: f64, h: f64) -> Result<(SparseHermitian, f64)> {
    if !(b > 0.0) || n < 3 || flux == 0 {
        return Err(Error::Invalid("torus needs b > 0, n >= 3 and a positive flux".into()));
    }
    let l = (2.0 * std::f64::consts::PI * flux as f64 * h / (mu * b)).sqrt();
    let grid = GridSpec::square(l, n, Boundary::Periodic);
    let ord = Ordering::new(&grid);
    let d = l / n as f64;
    let phi = mu * b * d * d / h;
    let t = h * h / (d * d);
    let dim = n * n;
    let diag = vec![4.0 * t; dim];
    let mut upper = Vec::with_capacity(2 * dim);
    let mut link = |p: usize, q: usize, theta: f64| {
        let hop = -Complex64::from_polar(t, -theta);
        if p < q {
            upper.push((p, q, hop));
        } else {
            upper.push((q, p, hop.conj()));
        }
    };
    for j in 0..n {
        for i in 0..n {
            let p = ord.index([i, j]);
            // x-links carry no phase except across the seam
            let (qx, tx) = if i + 1 < n { (ord.index([i + 1, j]), 0.0) } else { (ord.index([0, j]), -phi * (n * j) as f64) };
            link(p, qx, tx);
            let qy = ord.index([i, (j + 1) % n]);
            link(p, qy, phi * i as f64);
        }
    }
    Ok((SparseHermitian::from_upper(diag, upper)?, l))
}

/// Outcome of one inertia count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InertiaResult {
    pub shift: f64,
    /// Eigenvalues strictly below the shift actually factored.
    pub count: usize,
    /// `shift + jitter`.
    pub applied_shift: f64,
    pub jitter: f64,
    pub attempts: usize,
    /// `min |pivot| / norm bound`.
    pub pivot_margin: f64,
}

const MAX_ATTEMPTS: usize = 6;

/// Negative count of `H - tau I` from an unpivoted banded `LDL^H`
/// factorization kept in a `(b+1) x (b+1)` circular window. A pivot below
/// `1e-13 |H|` is treated as a breakdown: the shift moves by a seeded random
/// sign times `1e-12 |H| 10^attempt` and the factorization restarts.
pub fn count_below_2d(hm: &SparseHermitian, tau: f64, seed: u64) -> Result<InertiaResult> {
    let scale = hm.norm_bound.max(tau.abs()).max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ tau.to_bits());
    let mut jitter = 0.0;
    for attempt in 0..MAX_ATTEMPTS {
        if let Some((count, margin)) = ldl_inertia(hm, tau + jitter, 1e-13 * scale) {
            return Ok(InertiaResult {
                shift: tau,
                count,
                applied_shift: tau + jitter,
                jitter,
                attempts: attempt + 1,
                pivot_margin: margin / scale,
            });
        }
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        jitter = sign * 1e-12 * scale * 10f64.powi(attempt as i32);
    }
    Err(Error::Breakdown { shift: tau, attempts: MAX_ATTEMPTS })
}

/// Counts at each shift, in parallel, returned in input order.
pub fn count_ladder(hm: &SparseHermitian, taus: &[f64], seed: u64) -> Result<Vec<InertiaResult>> {
    taus.par_iter().map(|&t| count_below_2d(hm, t, seed)).collect()
}

fn ldl_inertia(hm: &SparseHermitian, tau: f64, tiny: f64) -> Option<(usize, f64)> {
    let n = hm.dim;
    let b = hm.bandwidth.min(n.saturating_sub(1));
    let m = b + 1;
    let mut w = vec![Complex64::new(0.0, 0.0); m * m];
    let load = |w: &mut [Complex64], r: usize| {
        let s = r % m;
        w[s * m + s] = Complex64::new(hm.diag[r] - tau, 0.0);
        for (c, v) in hm.column(r) {
            w[(c % m) * m + s] = v;
        }
    };
    for r in 0..m.min(n) {
        load(&mut w, r);
    }
    let mut u = vec![Complex64::new(0.0, 0.0); b];
    let mut count = 0;
    let mut margin = f64::INFINITY;
    for k in 0..n {
        let sk = k % m;
        let dk = w[sk * m + sk].re;
        if !(dk.abs() > tiny) {
            return None;
        }
        margin = margin.min(dk.abs());
        if dk < 0.0 {
            count += 1;
        }
        let last = (k + b).min(n - 1);
        let len = last - k;
        for (o, uo) in u.iter_mut().enumerate().take(len) {
            *uo = w[sk * m + (k + 1 + o) % m];
        }
        let inv = 1.0 / dk;
        for o in 0..len {
            let ci = u[o].conj() * inv;
            if ci == Complex64::new(0.0, 0.0) {
                continue;
            }
            let i = k + 1 + o;
            let row = (i % m) * m;
            // columns i..=last, contiguous in the ring except for one wrap
            let start = i % m;
            let cnt = last - i + 1;
            let first = cnt.min(m - start);
            let src = &u[o..o + cnt];
            for (dst, s) in w[row + start..row + start + first].iter_mut().zip(&src[..first]) {
                *dst -= ci * s;
            }
            for (dst, s) in w[row..row + cnt - first].iter_mut().zip(&src[first..]) {
                *dst -= ci * s;
            }
        }
        // retire slot sk and bring in index k + m
        for c in 0..m {
            w[sk * m + c] = Complex64::new(0.0, 0.0);
            w[c * m + sk] = Complex64::new(0.0, 0.0);
        }
        if k + m < n {
            load(&mut w, k + m);
        }
    }
    Some((count, margin))
}

/// Eigenvalues of the densified matrix, ascending.
pub fn dense_eigenvalues(hm: &SparseHermitian) -> Vec<f64> {
    let mut e: Vec<f64> = hm.to_dense().symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

pub fn dense_count(hm: &SparseHermitian, tau: f64) -> usize {
    dense_eigenvalues(hm).iter().filter(|e| **e < tau).count()
}
