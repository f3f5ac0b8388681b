use magspec::field::Base;
use magspec::gauge::{intensities, MagneticTensor, Sigma, TensorMode, VectorPotentialSpec};
use nalgebra::{Complex, DMatrix};
use proptest::prelude::*;

fn antisymmetric(d: usize, entries: &[f64]) -> DMatrix<f64> {
    let mut f = DMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i + 1..d {
            f[(i, j)] = entries[k];
            f[(j, i)] = -entries[k];
            k += 1;
        }
    }
    f
}

/// Orthogonal factor of the QR decomposition of a random matrix.
fn orthogonal(d: usize, entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_iterator(d, d, entries.iter().copied()).qr().q()
}

proptest! {
    #[test]
    fn intensities_invariant_under_rotation(
        d in 2usize..=5,
        f in prop::collection::vec(-3.0f64..3.0, 10),
        q in prop::collection::vec(-1.0f64..1.0, 25),
    ) {
        let fm = antisymmetric(d, &f);
        let o = orthogonal(d, &q[..d * d]);
        let id = DMatrix::identity(d, d);
        let a = intensities(&MagneticTensor { point: vec![0.0; d], f: fm.clone() }, &id).unwrap();
        let b = intensities(&MagneticTensor { point: vec![0.0; d], f: &o * fm * o.transpose() }, &id).unwrap();
        prop_assert_eq!(a.f.len(), b.f.len());
        prop_assert_eq!(a.kernel_dim, b.kernel_dim);
        prop_assert_eq!(2 * a.f.len() + a.kernel_dim, d);
        for (x, y) in a.f.iter().zip(&b.f) {
            prop_assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn intensities_pair_with_spectrum(
        d in 2usize..=4,
        f in prop::collection::vec(-3.0f64..3.0, 6),
        g in prop::collection::vec(-0.5f64..0.5, 16),
    ) {
        let fm = antisymmetric(d, &f);
        // random SPD metric
        let b = DMatrix::from_iterator(d, d, g[..d * d].iter().copied());
        let metric = &b * b.transpose() + DMatrix::identity(d, d);
        let list = intensities(&MagneticTensor { point: vec![0.0; d], f: fm.clone() }, &metric).unwrap();
        let gf = (&metric * &fm).map(|v| Complex::new(v, 0.0));
        let eig = gf.eigenvalues().unwrap();
        for fj in &list.f {
            prop_assert!(*fj > 0.0);
            for sign in [1.0, -1.0] {
                let hit = eig.iter().any(|e| (e - Complex::new(0.0, sign * fj)).norm() < 1e-8 * (1.0 + fj));
                prop_assert!(hit, "+-i {} not in {:?}", fj, eig);
            }
        }
    }

    #[test]
    fn analytic_tensor_is_exactly_antisymmetric(
        x in prop::collection::vec(0.2f64..3.0, 3), m in -2.5f64..1.5,
    ) {
        let vp = VectorPotentialSpec::RotationalOdd {
            dim: 3,
            sigma: Sigma::Power { coeff: 1.0, exponent: m, base: Base::Japanese },
            axial: None,
        };
        for mode in [TensorMode::Analytic, TensorMode::FiniteDifference(None)] {
            let t = vp.tensor_at(&x, mode).unwrap();
            prop_assert_eq!(&t.f, &(-t.f.transpose()));
        }
    }
}

#[test]
fn power_profile_intensity_bounded_below_on_annulus() {
    // d = 2, sigma = |x|^m, m != -2: f_1 / |x|^m = |2 + m| on every sample
    for m in [-3.0, -1.0, 0.5, 2.0] {
        let vp = VectorPotentialSpec::RotationalEven {
            dim: 2,
            sigma: Sigma::Power { coeff: 1.0, exponent: m, base: Base::Abs },
        };
        let pts = magspec::harness::seeded_points(2, 40, [0.5, 4.0], 7);
        let ratios: Vec<f64> = pts
            .iter()
            .map(|x| {
                let t = vp.tensor_at(x, TensorMode::Analytic).unwrap();
                let f = intensities(&t, &DMatrix::identity(2, 2)).unwrap();
                f.scalar / magspec::field::norm(x).powf(m)
            })
            .collect();
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((lo - (2.0 + m).abs()).abs() < 1e-9, "m = {m}: {lo}");
    }
}

#[test]
fn four_dimensional_rotational_matches_closed_form() {
    let vp = VectorPotentialSpec::RotationalEven {
        dim: 4,
        sigma: Sigma::Power { coeff: 1.0, exponent: -1.0, base: Base::Japanese },
    };
    let x = [0.3, -1.1, 0.7, 2.0];
    let t = vp.tensor_at(&x, TensorMode::Analytic).unwrap();
    let list = intensities(&t, &DMatrix::identity(4, 4)).unwrap();
    let closed = vp.closed_form_intensities(&x).unwrap().unwrap();
    assert_eq!(list.f.len(), 2);
    assert_eq!(list.kernel_dim, 0);
    for (a, b) in list.f.iter().zip(&closed) {
        assert!((a - b).abs() < 1e-10 * b.abs());
    }
}
