use std::f64::consts::PI;

use magspec::field::{Base, ScalarField};
use magspec::gauge::{Sigma, VectorPotentialSpec};
use magspec::model::{
    classify_zone, effective_params, predicted_exponents_for, remainder_integral_r1, FieldRegime, Regime, Region,
    Singularity, ZoneConfig, ZoneLabel,
};
use magspec::{ModelSpec, OperatorKind, ScalingTriple};
use proptest::prelude::*;

fn spec(d: usize, mu: f64, h: f64) -> ModelSpec {
    let sigma = Sigma::Power { coeff: 1.0, exponent: -1.5, base: Base::Japanese };
    let vp = if d == 2 {
        VectorPotentialSpec::RotationalEven { dim: 2, sigma }
    } else {
        VectorPotentialSpec::RotationalOdd { dim: 3, sigma, axial: None }
    };
    ModelSpec::schrodinger(d, ScalarField::PowerLaw { coeff: -1.0, exponent: -1.0, base: Base::Japanese }, vp, mu, h)
}

fn triple(gamma_eps: f64, m: f64, m1: f64) -> ScalingTriple {
    ScalingTriple { gamma_eps, m, m1, base: Base::Abs }
}

proptest! {
    #[test]
    fn effective_product_identity(
        mu in 0.1f64..1e3, h in 1e-3f64..1.0, m in -3.0f64..1.0, m1 in -4.0f64..1.0,
        eps in 0.01f64..0.5, r in 0.1f64..50.0, a in 0.0f64..6.3,
    ) {
        let s = spec(2, mu, h);
        let t = triple(eps, m, m1);
        let x = [r * a.cos(), r * a.sin()];
        let p = effective_params(&s, &t, &x).unwrap();
        prop_assert!(p.mu_eff > 0.0 && p.h_eff > 0.0);
        let want = mu * h * t.rho1(r) / t.rho(r).powi(2);
        prop_assert!((p.product / want - 1.0).abs() < 1e-13);
        prop_assert!((p.mu_eff * p.h_eff / p.product - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_label_is_monotone_in_h(
        h1 in 1e-3f64..0.5, grow in 1.0f64..20.0, m in -2.0f64..1.0, r in 0.05f64..20.0,
    ) {
        let t = triple(0.5, m, m - 1.0);
        let x = [r, 0.0];
        let cfg = ZoneConfig::default();
        let lo = classify_zone(&spec(2, 1.0, h1), &t, &x, &cfg).unwrap();
        let hi = classify_zone(&spec(2, 1.0, h1 * grow), &t, &x, &cfg).unwrap();
        if lo.contains(&ZoneLabel::Singular) {
            prop_assert!(hi.contains(&ZoneLabel::Singular));
        }
        prop_assert!(lo.contains(&ZoneLabel::Semiclassical) || lo.contains(&ZoneLabel::Singular));
    }

    #[test]
    fn exponents_ignore_gamma_coefficient(eps in 0.01f64..0.5, scale in 0.01f64..1.0) {
        let regime = Regime { singularity: Singularity::Infinity, field: FieldRegime::StrongField };
        let a = predicted_exponents_for(&OperatorKind::Schrodinger, 2, &triple(eps, -2.0, -5.0), regime).unwrap();
        let b = predicted_exponents_for(&OperatorKind::Schrodinger, 2, &triple(eps * scale, -2.0, -5.0), regime).unwrap();
        prop_assert_eq!(a.n_terms, b.n_terms);
        prop_assert_eq!(a.remainder_terms, b.remainder_terms);
    }
}

#[test]
fn remainder_integral_matches_antiderivative() {
    // d = 3: rho^2 / gamma = r^{2m - 1} / eps over 1 <= r <= 2
    for m in [-1.5, -0.5, 0.25] {
        let (mu, h, eps) = (3.0, 0.1, 0.25);
        let t = triple(eps, m, m - 1.0);
        let q = remainder_integral_r1(&spec(3, mu, h), &t, &Region::Annulus { r_in: 1.0, r_out: 2.0 }).unwrap();
        let k = 2.0 * m + 2.0;
        let exact = 4.0 * PI / eps * (2f64.powf(k) - 1.0) / k / mu / (h * h);
        assert!((q.value / exact - 1.0).abs() < 1e-6, "m = {m}: {} vs {exact}", q.value);
    }
}

#[test]
fn exterior_remainder_in_two_dimensions() {
    // d = 2: rho^2 / (rho1 gamma^2) = r^{2m - m1 - 2} / eps^2, here r^{-4} on r >= 1
    let (mu, h, eps) = (2.0, 0.05, 0.5);
    let t = triple(eps, -1.0, 0.0);
    let q = remainder_integral_r1(&spec(2, mu, h), &t, &Region::Annulus { r_in: 1.0, r_out: f64::INFINITY }).unwrap();
    let exact = 2.0 * PI / (eps * eps) / 2.0 / mu / h;
    assert!((q.value / exact - 1.0).abs() < 1e-6, "{} vs {exact}", q.value);
}

#[test]
fn divergent_remainder_is_an_error() {
    let t = triple(0.5, 1.0, 0.0);
    assert!(remainder_integral_r1(&spec(3, 1.0, 0.1), &t, &Region::Annulus { r_in: 1.0, r_out: f64::INFINITY }).is_err());
}

#[test]
fn spec_json_round_trip() {
    let s = spec(3, 12.5, 0.02);
    let text = serde_json::to_string(&s).unwrap();
    let back = ModelSpec::from_json(&text).unwrap();
    assert_eq!(back, s);
    back.validate().unwrap();
}
