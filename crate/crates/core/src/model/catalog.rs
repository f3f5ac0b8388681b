//! Static exponent catalog for power-law singularities.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{OperatorKind, ScalingTriple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Singularity {
    Origin,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldRegime {
    /// `mu` disjoint from 0 with `mu h` bounded.
    Bounded,
    /// `mu h -> infinity` inside the admissible window.
    StrongField,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Regime {
    pub singularity: Singularity,
    pub field: FieldRegime,
}

/// `mu^mu_exp h^h_exp`, optionally times `(|log mu h| + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerTerm {
    pub mu_exp: f64,
    pub h_exp: f64,
    pub log: bool,
}

impl PowerTerm {
    fn new(mu_exp: f64, h_exp: f64) -> Self {
        PowerTerm { mu_exp, h_exp, log: false }
    }
    fn log(mu_exp: f64, h_exp: f64) -> Self {
        PowerTerm { mu_exp, h_exp, log: true }
    }
    pub fn eval(&self, mu: f64, h: f64) -> f64 {
        let l = if self.log { (mu * h).ln().abs() + 1.0 } else { 1.0 };
        mu.powf(self.mu_exp) * h.powf(self.h_exp) * l
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentPrediction {
    /// Terms of the principal part; the count is of the order of their sum.
    pub n_terms: Vec<PowerTerm>,
    pub remainder_terms: Vec<PowerTerm>,
    pub validity: String,
    pub citation: &'static str,
}

struct Row {
    name: &'static str,
    citation: &'static str,
    kind: KindSel,
    d: usize,
    singularity: Singularity,
    field: Option<FieldRegime>,
    admissible: fn(f64, f64) -> bool,
    build: fn(f64, f64) -> (Vec<PowerTerm>, Vec<PowerTerm>, String),
}

#[derive(Clone, Copy, PartialEq)]
enum KindSel {
    Schrodinger,
    Pauli,
}

fn e_bounded(m: f64, m1: f64) -> f64 {
    2.0 * (m + 1.0) / (2.0 * m - m1)
}

fn strong_window(m: f64, m1: f64) -> String {
    format!("c h^-1 <= mu <= h^({})", -(m1 + 1.0 - m) / (m + 1.0))
}

fn rem_mixed(m: f64, m1: f64) -> PowerTerm {
    PowerTerm::new(-(m + 1.0) / (m1 + 1.0 - m), -1.0)
}

fn catalog() -> Vec<Row> {
    use FieldRegime::*;
    use Singularity::*;
    vec![
        Row {
            name: "2d-schrodinger-origin-singular",
            citation: "2D power singularity at 0, m1 < min(m-1, 2m); counting bound by cases of m",
            kind: KindSel::Schrodinger,
            d: 2,
            singularity: Origin,
            field: Some(Bounded),
            admissible: |m, m1| m1 < (m - 1.0).min(2.0 * m),
            build: |m, m1| {
                let n = if m > -1.0 {
                    PowerTerm::new(0.0, -2.0)
                } else if m == -1.0 {
                    PowerTerm::log(0.0, -2.0)
                } else {
                    let e = e_bounded(m, m1);
                    PowerTerm::new(e, -2.0 + e)
                };
                (vec![n], vec![], "mu disjoint from 0, h -> 0".into())
            },
        },
        Row {
            name: "2d-schrodinger-infinity-singular",
            citation: "2D power singularity at infinity, m1 > max(m-1, 2m); counting bound by cases of m",
            kind: KindSel::Schrodinger,
            d: 2,
            singularity: Infinity,
            field: Some(Bounded),
            admissible: |m, m1| m1 > (m - 1.0).max(2.0 * m),
            build: |m, m1| {
                let n = if m < -1.0 {
                    PowerTerm::new(0.0, -2.0)
                } else if m == -1.0 {
                    PowerTerm::log(0.0, -2.0)
                } else {
                    let e = e_bounded(m, m1);
                    PowerTerm::new(e, -2.0 + e)
                };
                (vec![n], vec![], "mu disjoint from 0, h -> 0".into())
            },
        },
        Row {
            name: "2d-schrodinger-origin-regular",
            citation: "2D power singularity at 0, m1 >= min(m-1, 2m), m > -1: remainder h^-1 mu^-1 or h^-1 mu^(-(m+1)/(m1+1-m))",
            kind: KindSel::Schrodinger,
            d: 2,
            singularity: Origin,
            field: Some(Bounded),
            admissible: |m, m1| m > -1.0 && m1 >= (m - 1.0).min(2.0 * m) && m1 != 2.0 * m,
            build: |m, m1| {
                let r = if m1 < 2.0 * m { PowerTerm::new(-1.0, -1.0) } else { rem_mixed(m, m1) };
                (vec![PowerTerm::new(0.0, -2.0)], vec![r], "mu disjoint from 0, mu h bounded, h -> 0".into())
            },
        },
        Row {
            name: "2d-schrodinger-infinity-regular",
            citation: "2D power singularity at infinity, m1 <= max(m-1, 2m), m < -1: remainder h^-1 mu^-1 or h^-1 mu^(-(m+1)/(m1+1-m))",
            kind: KindSel::Schrodinger,
            d: 2,
            singularity: Infinity,
            field: Some(Bounded),
            admissible: |m, m1| m < -1.0 && m1 <= (m - 1.0).max(2.0 * m) && m1 != 2.0 * m,
            build: |m, m1| {
                let r = if m1 > 2.0 * m { PowerTerm::new(-1.0, -1.0) } else { rem_mixed(m, m1) };
                (vec![PowerTerm::new(0.0, -2.0)], vec![r], "mu disjoint from 0, mu h bounded, h -> 0".into())
            },
        },
        Row {
            name: "2d-schrodinger-origin-strong",
            citation: "2D strong field, singularity at 0, m > -1, m1 > 2m: N ~ mu^(-2(m+1)/(m1-2m)) h^(-2(m1+1-m)/(m1-2m))",
            kind: KindSel::Schrodinger,
            d: 2,
            singularity: Origin,
            field: Some(StrongField),
            admissible: |m, m1| m > -1.0 && m1 > 2.0 * m,
            build: |m, m1| strong(2.0, m, m1, rem_mixed(m, m1)),
        },
        Row {
            name: "2d-schrodinger-infinity-strong",
            citation: "2D strong field, singularity at infinity, m < -1, m1 < 2m: N ~ mu^(-2(m+1)/(m1-2m)) h^(-2(m1+1-m)/(m1-2m))",
            kind: KindSel::Schrodinger,
            d: 2,
            singularity: Infinity,
            field: Some(StrongField),
            admissible: |m, m1| m < -1.0 && m1 < 2.0 * m,
            build: |m, m1| strong(2.0, m, m1, rem_mixed(m, m1)),
        },
        Row {
            name: "2d-pauli-origin",
            citation: "2D Pauli, singularity at 0, m > -1, 2m != m1 > -2: N ~ h^-2 + mu h^-1",
            kind: KindSel::Pauli,
            d: 2,
            singularity: Origin,
            field: None,
            admissible: |m, m1| m > -1.0 && m1 > -2.0 && m1 != 2.0 * m,
            build: |m, m1| {
                let r = if m1 < 2.0 * m { PowerTerm::new(-1.0, -1.0) } else { rem_mixed(m, m1) };
                pauli(r)
            },
        },
        Row {
            name: "2d-pauli-infinity",
            citation: "2D Pauli, singularity at infinity, m < -1, 2m != m1 < -2: N ~ h^-2 + mu h^-1",
            kind: KindSel::Pauli,
            d: 2,
            singularity: Infinity,
            field: None,
            admissible: |m, m1| m < -1.0 && m1 < -2.0 && m1 != 2.0 * m,
            build: |m, m1| {
                let r = if m1 > 2.0 * m { PowerTerm::new(-1.0, -1.0) } else { rem_mixed(m, m1) };
                pauli(r)
            },
        },
        Row {
            name: "3d-schrodinger-origin-singular",
            citation: "3D singularity at 0, m1 < 2m <= -2: N = O(h^-3 (mu h)^(2(m+1)/(2m-m1))), log case at m = -1",
            kind: KindSel::Schrodinger,
            d: 3,
            singularity: Origin,
            field: Some(Bounded),
            admissible: |m, m1| m1 < 2.0 * m && m <= -1.0,
            build: three_d_singular,
        },
        Row {
            name: "3d-schrodinger-infinity-singular",
            citation: "3D singularity at infinity, m1 > 2m >= -2: N = O(h^-3 (mu h)^(2(m+1)/(2m-m1))), log case at m = -1",
            kind: KindSel::Schrodinger,
            d: 3,
            singularity: Infinity,
            field: Some(Bounded),
            admissible: |m, m1| m1 > 2.0 * m && m >= -1.0,
            build: three_d_singular,
        },
        Row {
            name: "3d-schrodinger-origin-regular",
            citation: "3D singularity at 0, m > -1: N = O(h^-3), remainder O(h^-2)",
            kind: KindSel::Schrodinger,
            d: 3,
            singularity: Origin,
            field: Some(Bounded),
            admissible: |m, _| m > -1.0,
            build: |_, _| {
                (vec![PowerTerm::new(0.0, -3.0)], vec![PowerTerm::new(0.0, -2.0)], "mu h bounded, h -> 0".into())
            },
        },
        Row {
            name: "3d-schrodinger-infinity-regular",
            citation: "3D singularity at infinity, m < -1: N = O(h^-3), remainder O(h^-2)",
            kind: KindSel::Schrodinger,
            d: 3,
            singularity: Infinity,
            field: Some(Bounded),
            admissible: |m, _| m < -1.0,
            build: |_, _| {
                (vec![PowerTerm::new(0.0, -3.0)], vec![PowerTerm::new(0.0, -2.0)], "mu h bounded, h -> 0".into())
            },
        },
        Row {
            name: "3d-schrodinger-origin-strong",
            citation: "3D strong field, singularity at 0, m > -1, m1 > 2m: N ~ mu^(-3(m+1)/(m1-2m)) h^(-3(m1+1-m)/(m1-2m))",
            kind: KindSel::Schrodinger,
            d: 3,
            singularity: Origin,
            field: Some(StrongField),
            admissible: |m, m1| m > -1.0 && m1 > 2.0 * m,
            build: |m, m1| strong3(m, m1),
        },
        Row {
            name: "3d-schrodinger-infinity-strong",
            citation: "3D strong field, singularity at infinity, m < -1, m1 < 2m: N ~ mu^(-3(m+1)/(m1-2m)) h^(-3(m1+1-m)/(m1-2m))",
            kind: KindSel::Schrodinger,
            d: 3,
            singularity: Infinity,
            field: Some(StrongField),
            admissible: |m, m1| m < -1.0 && m1 < 2.0 * m,
            build: |m, m1| strong3(m, m1),
        },
    ]
}

fn strong(dd: f64, m: f64, m1: f64, rem: PowerTerm) -> (Vec<PowerTerm>, Vec<PowerTerm>, String) {
    let q = m1 - 2.0 * m;
    let n = PowerTerm::new(-dd * (m + 1.0) / q, -dd * (m1 + 1.0 - m) / q);
    (vec![n], vec![rem], strong_window(m, m1))
}

fn strong3(m: f64, m1: f64) -> (Vec<PowerTerm>, Vec<PowerTerm>, String) {
    let q = m1 - 2.0 * m;
    let rem = PowerTerm::new(-2.0 * (m + 1.0) / q, -2.0 * (m1 + 1.0 - m) / q);
    strong(3.0, m, m1, rem)
}

fn pauli(rem: PowerTerm) -> (Vec<PowerTerm>, Vec<PowerTerm>, String) {
    (
        vec![PowerTerm::new(0.0, -2.0), PowerTerm::new(1.0, -1.0)],
        vec![rem, PowerTerm::new(0.0, 0.0)],
        "mu >= 1, h -> 0".into(),
    )
}

fn three_d_singular(m: f64, m1: f64) -> (Vec<PowerTerm>, Vec<PowerTerm>, String) {
    if m == -1.0 {
        (vec![PowerTerm::log(0.0, -3.0)], vec![PowerTerm::log(0.0, -2.0)], "mu h bounded, h -> 0".into())
    } else {
        let e = e_bounded(m, m1);
        (
            vec![PowerTerm::new(e, -3.0 + e)],
            vec![PowerTerm::new(e, -2.0 + e)],
            "mu h bounded, h -> 0".into(),
        )
    }
}

/// Looks up the catalog row matching `(kind, d, regime, m, m1)`.
pub fn predicted_exponents(
    kind: &OperatorKind,
    d: usize,
    m: f64,
    m1: f64,
    regime: Regime,
) -> Result<ExponentPrediction> {
    let sel = match kind {
        OperatorKind::Schrodinger => KindSel::Schrodinger,
        OperatorKind::Pauli => KindSel::Pauli,
        OperatorKind::Dirac { .. } => {
            return Err(Error::UnknownRegime {
                query: "Dirac".into(),
                nearest: catalog().iter().map(|r| r.name.to_string()).collect(),
            })
        }
    };
    let rows = catalog();
    let hit = rows.iter().find(|r| {
        r.kind == sel
            && r.d == d
            && r.singularity == regime.singularity
            && r.field.is_none_or(|f| f == regime.field)
            && (r.admissible)(m, m1)
    });
    match hit {
        Some(r) => {
            let (n_terms, remainder_terms, validity) = (r.build)(m, m1);
            Ok(ExponentPrediction { n_terms, remainder_terms, validity, citation: r.citation })
        }
        None => {
            let nearest = rows
                .iter()
                .filter(|r| r.kind == sel && r.d == d)
                .map(|r| format!("{}: {}", r.name, r.citation))
                .collect();
            Err(Error::UnknownRegime {
                query: format!("{kind:?}, d={d}, m={m}, m1={m1}, {regime:?}"),
                nearest,
            })
        }
    }
}

/// Same lookup with the exponents taken from a scaling triple.
pub fn predicted_exponents_for(
    kind: &OperatorKind,
    d: usize,
    triple: &ScalingTriple,
    regime: Regime,
) -> Result<ExponentPrediction> {
    predicted_exponents(kind, d, triple.m, triple.m1, regime)
}
