use std::f64::consts::PI;
use std::path::Path;

use magspec::field::{Base, ScalarField};
use magspec::gauge::{Sigma, VectorPotentialSpec};
use magspec::harness::{exponent_fit, run, ExponentSample, RunOptions, Subcommand, Verdict};
use magspec::model::{predicted_exponents, FieldRegime, Regime, Region, Singularity};
use magspec::oned::{Potential1D, Profile1D};
use magspec::weyl::DensityKind;
use magspec::{ModelSpec, OperatorKind, ScalingTriple};
use proptest::prelude::*;
use serde_json::json;

const STRONG_INF: Regime = Regime { singularity: Singularity::Infinity, field: FieldRegime::StrongField };

fn ladder() -> Vec<(f64, f64)> {
    let mut v = Vec::new();
    for mu in [100.0, 150.0, 220.0, 330.0] {
        for h in [0.02, 0.014, 0.01, 0.007] {
            v.push((mu, h));
        }
    }
    v
}

proptest! {
    #[test]
    fn fit_slopes_are_scale_invariant(
        noise in prop::collection::vec(-0.05f64..0.05, 16), scale in 1e-6f64..1e6,
    ) {
        let pred = predicted_exponents(&OperatorKind::Schrodinger, 2, -2.0, -5.0, STRONG_INF).unwrap();
        let base: Vec<ExponentSample> = ladder()
            .into_iter()
            .zip(&noise)
            .map(|((mu, h), e)| ExponentSample { mu, h, value: mu.powi(-2) * h.powi(-4) * e.exp() })
            .collect();
        let scaled: Vec<ExponentSample> = base.iter().map(|s| ExponentSample { value: s.value * scale, ..*s }).collect();
        let a = exponent_fit(&base, &pred, 0.1).unwrap();
        let b = exponent_fit(&scaled, &pred, 0.1).unwrap();
        for k in 0..2 {
            prop_assert!((a.slopes[k] - b.slopes[k]).abs() < 1e-12, "{:?} vs {:?}", a.slopes, b.slopes);
        }
        prop_assert!((b.intercept - a.intercept - scale.ln()).abs() < 1e-9);
        prop_assert_eq!(a.verdict, b.verdict);
    }

    #[test]
    fn r_squared_is_a_fraction(values in prop::collection::vec(1e-3f64..1e3, 16)) {
        let pred = predicted_exponents(&OperatorKind::Schrodinger, 2, -2.0, -5.0, STRONG_INF).unwrap();
        let s: Vec<ExponentSample> =
            ladder().into_iter().zip(&values).map(|((mu, h), v)| ExponentSample { mu, h, value: *v }).collect();
        let f = exponent_fit(&s, &pred, 0.1).unwrap();
        prop_assert!((0.0..=1.0).contains(&f.r2));
        prop_assert_eq!(f.verdict, exponent_fit(&s, &pred, 0.1).unwrap().verdict);
    }
}

fn exponent_config() -> String {
    let mut model = ModelSpec::schrodinger(
        2,
        ScalarField::PowerLaw { coeff: -1.0, exponent: -4.0, base: Base::Abs },
        VectorPotentialSpec::RotationalEven {
            dim: 2,
            sigma: Sigma::Power { coeff: 1.0 / 3.0, exponent: -5.0, base: Base::Abs },
        },
        1.0,
        1.0,
    );
    model.scaling = Some(ScalingTriple { gamma_eps: 0.5, m: -2.0, m1: -5.0, base: Base::Abs });
    json!({
        "subcommand": "exponent-fit",
        "params": {
            "model": model,
            "region": Region::Annulus { r_in: 1.0, r_out: f64::INFINITY },
            "density": DensityKind::Magnetic2d,
            "regime": STRONG_INF,
            "mu": [200.0, 300.0, 450.0, 700.0],
            "h": [0.02, 0.014, 0.01, 0.007],
            "angular": 4
        }
    })
    .to_string()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn exponent_fit_run_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = exponent_config();
    let ra = run(Subcommand::ExponentFit, &cfg, &a, RunOptions::default()).unwrap();
    let rb = run(Subcommand::ExponentFit, &cfg, &b, RunOptions { seed: None, threads: Some(1) }).unwrap();
    assert_eq!(ra.exit_code, 0, "{:?}", ra.report);
    assert_eq!(rb.exit_code, 0);
    for name in ["report.json", "samples.csv"] {
        assert_eq!(read(&a, name), read(&b, name), "{name} differs");
    }
    // every sample is the closed form h^-2 (mu h)^-2 7 zeta(3) / 24
    let zeta3: f64 = (1..200_000).map(|k| (k as f64).powi(-3)).sum();
    let csv = read(&a, "samples.csv");
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |n: &str| header.iter().position(|h| *h == n).unwrap();
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let (mu, h, v) = (f[col("mu")], f[col("h")], f[col("value")]);
        let want = 7.0 * zeta3 / 24.0 / (h * h * (mu * h).powi(2));
        assert!((v / want - 1.0).abs() < 1e-6, "{mu} {h}: {v} vs {want}");
    }
}

#[test]
fn exit_code_zero_iff_every_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    for (expect, code) in [("bounded", 0), ("log_growth", 1)] {
        let cfg = json!({"params": {"c": -0.1, "lengths": [100.0, 1000.0, 10000.0], "expect": expect}}).to_string();
        let out = dir.path().join(expect);
        let st = run(Subcommand::OnedHardy, &cfg, &out, RunOptions::default()).unwrap();
        assert_eq!(st.exit_code, code);
        assert_eq!(st.report.checks.iter().all(|c| c.pass), code == 0);
        let report: serde_json::Value = serde_json::from_str(&read(&out, "report.json")).unwrap();
        assert_eq!(report["schema_version"], 1);
        assert_eq!(report["exit_code"], code);
    }
}

#[test]
fn numerical_rejection_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    // q = 1 is outside the slow-decay range
    let cfg = json!({"params": {"c": 1.0, "q": 1.0, "eps": [1e-2, 1e-3, 1e-4]}}).to_string();
    let st = run(Subcommand::OnedSlowdecay, &cfg, dir.path(), RunOptions::default()).unwrap();
    assert_eq!(st.exit_code, 2);
    assert!(st.report.error.is_some());
    assert!(st.report.checks.is_empty());
}

#[test]
fn shallow_well_run_writes_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let profile = Profile1D::new(Potential1D::Gaussian { coeff: -1.0, width: 1.0 });
    let cfg = json!({"params": {"profile": profile, "eps": [0.1, 0.05, 0.025]}}).to_string();
    let st = run(Subcommand::OnedShallow, &cfg, dir.path(), RunOptions::default()).unwrap();
    assert_eq!(st.exit_code, 0, "{:?}", st.report);
    let csv = read(dir.path(), "shallow.csv");
    assert_eq!(csv.lines().count(), 4);
    // predicted lambda = -(W eps)^2 with W = sqrt(pi) / 2
    let w = PI.sqrt() / 2.0;
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').take(3).map(|x| x.parse().unwrap()).collect();
        assert!((f[2] + (w * f[0]).powi(2)).abs() < 1e-12 * f[2].abs());
    }
}

#[test]
fn verdicts_follow_the_band() {
    let pred = predicted_exponents(&OperatorKind::Schrodinger, 2, -2.0, -5.0, STRONG_INF).unwrap();
    let s: Vec<ExponentSample> =
        ladder().into_iter().map(|(mu, h)| ExponentSample { mu, h, value: mu.powf(-2.3) * h.powi(-4) }).collect();
    assert_eq!(exponent_fit(&s, &pred, 0.1).unwrap().verdict, Verdict::OutsideBand);
    assert_eq!(exponent_fit(&s, &pred, 0.5).unwrap().verdict, Verdict::WithinBand);
}
