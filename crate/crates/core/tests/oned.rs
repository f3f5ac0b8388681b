use magspec::fit::linear_fit;
use magspec::oned::{
    count_below, count_below_reported, discretize_1d, kth_eigenvalue, lowest_eigenvalue, reduced_lambda_field,
    Potential1D, Profile1D, ReducedOptions, TransverseGrid, Tridiag,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn dense_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    m.symmetric_eigenvalues().iter().copied().collect()
}

fn tridiag_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..40).prop_flat_map(|n| {
        (prop::collection::vec(-4.0f64..4.0, n), prop::collection::vec(-2.0f64..2.0, n - 1))
    })
}

proptest! {
    #[test]
    fn sturm_count_matches_dense((diag, off) in tridiag_strategy(), thr in -6.0f64..6.0) {
        let op = Tridiag::new(diag.clone(), off.clone()).unwrap();
        let c = count_below(&op, thr);
        // thresholds within roundoff of an eigenvalue are legitimately ambiguous
        let eig = dense_eigenvalues(&diag, &off);
        prop_assume!(eig.iter().all(|l| (l - thr).abs() > 1e-9));
        prop_assert_eq!(c, eig.iter().filter(|l| **l < thr).count());
    }

    #[test]
    fn sturm_count_monotone_in_threshold((diag, off) in tridiag_strategy(), mut thr in prop::collection::vec(-8.0f64..8.0, 2..10)) {
        let op = Tridiag::new(diag, off).unwrap();
        thr.sort_by(f64::total_cmp);
        let counts: Vec<usize> = thr.iter().map(|t| count_below(&op, *t)).collect();
        prop_assert!(counts.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(counts.last().copied().unwrap_or(0) <= op.diag.len());
    }

    #[test]
    fn lowest_eigenvalue_monotone_in_potential(depth in 0.1f64..5.0, extra in 0.0f64..3.0, width in 0.3f64..3.0) {
        let lower = Profile1D::new(Potential1D::Gaussian { coeff: -depth - extra, width });
        let upper = Profile1D::new(Potential1D::Gaussian { coeff: -depth, width });
        let a = lowest_eigenvalue(&discretize_1d(&lower, 1.0, 12.0, 600).unwrap());
        let b = lowest_eigenvalue(&discretize_1d(&upper, 1.0, 12.0, 600).unwrap());
        prop_assert!(a <= b + 1e-12);
    }

    #[test]
    fn reported_count_is_deterministic((diag, off) in tridiag_strategy(), thr in -6.0f64..6.0) {
        let op = Tridiag::new(diag, off).unwrap();
        prop_assert_eq!(count_below_reported(&op, thr), count_below_reported(&op, thr));
    }
}

#[test]
fn harmonic_convergence_order_is_two() {
    // lowest level of D^2 + t^2 is 1
    let prof = Profile1D::new(Potential1D::Homogeneous { coeff: 1.0, q: -1.0 });
    let ns = [200usize, 400, 800, 1600];
    let (mut ln_n, mut ln_err) = (Vec::new(), Vec::new());
    for n in ns {
        let l = lowest_eigenvalue(&discretize_1d(&prof, 1.0, 8.0, n).unwrap());
        ln_n.push((n as f64).ln());
        ln_err.push((l - 1.0).abs().ln());
    }
    let fit = linear_fit(&ln_n, &ln_err).unwrap();
    assert!((fit.slope + 2.0).abs() < 0.1, "slope {}", fit.slope);
}

#[test]
fn harmonic_ladder_is_odd_integers() {
    let prof = Profile1D::new(Potential1D::Homogeneous { coeff: 1.0, q: -1.0 });
    let op = discretize_1d(&prof, 1.0, 12.0, 4096).unwrap();
    for k in 0..4 {
        let l = kth_eigenvalue(&op, k).unwrap();
        assert!((l - (2 * k + 1) as f64).abs() < 2e-3, "level {k}: {l}");
    }
    assert_eq!(count_below(&op, 6.0), 3);
}

#[test]
fn reduced_count_nonincreasing_in_eta() {
    let v = |t: f64, p: [f64; 2]| -1.5 * (-(t * t) - 0.5 * (p[0] * p[0] + p[1] * p[1])).exp();
    let opts = ReducedOptions { half_length: 20.0, per_unit: 30.0, ..ReducedOptions::default() };
    let r = reduced_lambda_field(v, |_, _| 1.0, &TransverseGrid::square(3.0, 9), &opts).unwrap();
    let etas = [1e-4, 0.01, 0.05, 0.1, 0.2, 0.4, 0.8];
    let counts: Vec<f64> = etas.iter().map(|e| r.count(*e)).collect();
    assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
    assert!(counts[0] > 0.0);
    assert_eq!(*counts.last().unwrap(), 0.0);
}
