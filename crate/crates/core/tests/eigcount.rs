use magspec::eigcount::{
    assemble_magnetic_2d, assemble_magnetic_2d_gauged, count_below_2d, count_ladder, dense_count, dense_eigenvalues,
    Boundary, GridSpec,
};
use magspec::field::ScalarField;
use magspec::fit::linear_fit;
use magspec::gauge::{Sigma, VectorPotentialSpec};
use magspec::ModelSpec;
use proptest::prelude::*;

fn model(b: f64, depth: f64, width: f64) -> ModelSpec {
    ModelSpec::schrodinger(
        2,
        ScalarField::Gaussian { coeff: -depth, width },
        VectorPotentialSpec::RotationalEven { dim: 2, sigma: Sigma::Constant { value: 0.5 * b } },
        1.0,
        1.0,
    )
}

fn free() -> ModelSpec {
    ModelSpec::schrodinger(
        2,
        ScalarField::zero(),
        VectorPotentialSpec::RotationalEven { dim: 2, sigma: Sigma::Constant { value: 0.0 } },
        1.0,
        1.0,
    )
}

fn clear_of_spectrum(eig: &[f64], tau: f64) -> bool {
    eig.iter().all(|e| (e - tau).abs() > 1e-8 * (1.0 + tau.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn inertia_matches_dense(
        nx in 2usize..12, ny in 2usize..12, b in 0.0f64..3.0, depth in 0.0f64..6.0,
        width in 0.3f64..2.0, tau in -4.0f64..12.0, periodic in any::<bool>(), seed in any::<u64>(),
    ) {
        let boundary = if periodic { Boundary::Periodic } else { Boundary::Dirichlet };
        let (nx, ny) = if periodic { (nx.max(3), ny.max(3)) } else { (nx, ny) };
        let grid = GridSpec { lo: [-2.0, -2.5], hi: [2.0, 2.5], n: [nx, ny], boundary };
        let hm = assemble_magnetic_2d(&model(b, depth, width), &grid).unwrap();
        let eig = dense_eigenvalues(&hm);
        prop_assume!(clear_of_spectrum(&eig, tau));
        prop_assert_eq!(count_below_2d(&hm, tau, seed).unwrap().count, dense_count(&hm, tau));
    }

    #[test]
    fn assembled_matrix_is_hermitian(n in 2usize..10, b in 0.0f64..3.0, depth in 0.0f64..4.0) {
        let hm = assemble_magnetic_2d(&model(b, depth, 1.0), &GridSpec::centered(4.0, n, Boundary::Dirichlet)).unwrap();
        let m = hm.to_dense();
        prop_assert_eq!(&m, &m.adjoint());
    }

    #[test]
    fn gauge_transforms_leave_counts_unchanged(
        coeffs in prop::collection::vec(-2.0f64..2.0, 4), b in 0.2f64..2.0, tau in 0.0f64..8.0,
    ) {
        let spec = model(b, 3.0, 1.0);
        let grid = GridSpec::centered(5.0, 11, Boundary::Dirichlet);
        let chi = move |x: &[f64]| {
            coeffs[0] * (1.1 * x[0]).sin() + coeffs[1] * x[0] * x[1] + coeffs[2] * (0.7 * x[1]).cos() + coeffs[3] * x[1] * x[1]
        };
        let a = assemble_magnetic_2d(&spec, &grid).unwrap();
        let g = assemble_magnetic_2d_gauged(&spec, &grid, Some(&chi)).unwrap();
        prop_assume!(clear_of_spectrum(&dense_eigenvalues(&a), tau));
        prop_assert_eq!(count_below_2d(&a, tau, 1).unwrap().count, count_below_2d(&g, tau, 2).unwrap().count);
    }

    #[test]
    fn ladder_counts_are_monotone(mut taus in prop::collection::vec(-2.0f64..15.0, 2..8), b in 0.0f64..2.0) {
        taus.sort_by(f64::total_cmp);
        let hm = assemble_magnetic_2d(&model(b, 2.0, 1.0), &GridSpec::centered(6.0, 16, Boundary::Dirichlet)).unwrap();
        let counts: Vec<usize> = count_ladder(&hm, &taus, 0).unwrap().iter().map(|r| r.count).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]));
    }
}

/// Lowest eigenvalue by bisection on inertia counts.
fn lowest_by_bisection(hm: &magspec::eigcount::SparseHermitian, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if count_below_2d(hm, mid, 0).unwrap().count == 0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn free_dirichlet_error_is_second_order() {
    // lowest eigenvalue of -Laplacian on (0, pi)^2 is 2
    let (mut ln_d, mut ln_err) = (Vec::new(), Vec::new());
    for n in [15usize, 31, 63] {
        let grid = GridSpec::square(std::f64::consts::PI, n, Boundary::Dirichlet);
        let hm = assemble_magnetic_2d(&free(), &grid).unwrap();
        let l = lowest_by_bisection(&hm, 1.0, 3.0);
        ln_d.push(grid.spacing()[0].ln());
        ln_err.push((2.0 - l).abs().ln());
    }
    let fit = linear_fit(&ln_d, &ln_err).unwrap();
    assert!((fit.slope - 2.0).abs() < 0.1, "slope {}", fit.slope);
}

#[test]
fn dirichlet_counts_do_not_exceed_periodic() {
    let l = 4.0;
    for n in [8usize, 15, 24] {
        // equal spacing l / (n + 1)
        let d = assemble_magnetic_2d(&free(), &GridSpec::square(l, n, Boundary::Dirichlet)).unwrap();
        let p = assemble_magnetic_2d(&free(), &GridSpec::square(l, n + 1, Boundary::Periodic)).unwrap();
        for tau in [0.5, 2.0, 5.0, 10.0, 30.0] {
            let (cd, cp) = (count_below_2d(&d, tau, 0).unwrap().count, count_below_2d(&p, tau, 0).unwrap().count);
            assert!(cd <= cp, "n = {n}, tau = {tau}: {cd} > {cp}");
        }
    }
}

#[test]
fn counts_are_reproducible_for_a_seed() {
    let hm = assemble_magnetic_2d(&model(1.0, 2.0, 1.0), &GridSpec::centered(6.0, 20, Boundary::Periodic)).unwrap();
    let a = count_ladder(&hm, &[0.5, 1.0, 1.5, 3.0], 42).unwrap();
    let b = count_ladder(&hm, &[0.5, 1.0, 1.5, 3.0], 42).unwrap();
    assert_eq!(a, b);
}
