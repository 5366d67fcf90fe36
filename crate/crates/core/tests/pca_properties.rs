//! Property tests of the PCA pipeline, cross-checked against brute-force
//! oracles on small instances.

use egpc_core::{
    center, crv, fit_pca, min_components, project, reconstruct, unvectorize, vectorize,
    DataMatrix, PcaModel,
};
use egpc_test_support::{explicit_covariance, jacobi_eigh, random_instance};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn fit_random(l: usize, m: usize, seed: u64) -> (DataMatrix, PcaModel) {
    let (x, _) = random_instance(l, 1, m, seed);
    let x = DataMatrix::from_matrix(x).unwrap();
    let model = fit_pca(&x).unwrap();
    (x, model)
}

#[test]
fn orthonormality_after_every_fit() {
    for (l, m, seed) in [(5, 3, 1), (12, 40, 2), (30, 8, 3), (50, 120, 4), (7, 2, 5)] {
        let (_, model) = fit_random(l, m, seed);
        let v = model.eigenvectors();
        let dev = (v.transpose() * v - DMatrix::identity(model.q(), model.q())).amax();
        assert!(dev < 1e-10, "l={l} m={m}: orthonormality off by {dev:.3e}");
    }
}

#[test]
fn spectral_residual_against_explicit_covariance() {
    for (l, m, seed) in [(6, 20, 10), (20, 15, 11), (50, 60, 12)] {
        let (x, model) = fit_random(l, m, seed);
        let c = explicit_covariance(x.matrix());
        let lambda_1 = model.eigenvalues()[0];
        for i in 0..model.rank() {
            let v = model.eigenvectors().column(i);
            let residual = (&c * v - v * model.eigenvalues()[i]).amax();
            assert!(
                residual < 1e-8 * lambda_1,
                "l={l} m={m}: residual {residual:.3e} at component {i}"
            );
        }
    }
}

#[test]
fn eigenvalues_match_jacobi_on_explicit_covariance() {
    for (l, m, seed) in [(6, 20, 21), (12, 9, 22), (50, 80, 23)] {
        let (x, model) = fit_random(l, m, seed);
        let (oracle, _) = jacobi_eigh(&explicit_covariance(x.matrix()));
        let lambda_1 = model.eigenvalues()[0];
        for i in 0..model.q() {
            let got = model.eigenvalues()[i];
            let want = oracle[i].max(0.0);
            assert!(
                (got - want).abs() <= 1e-9 * lambda_1.max(1.0),
                "l={l} m={m}: eigenvalue {i}: {got} vs oracle {want}"
            );
        }
    }
}

#[test]
fn score_variance_equals_eigenvalue() {
    for (l, m, seed) in [(8, 50, 31), (25, 200, 32)] {
        let (x, model) = fit_random(l, m, seed);
        let r = model.rank();
        let mut scores = Vec::with_capacity(m);
        for j in 0..m {
            scores.push(project(&model, &x.column(j), r).unwrap());
        }
        for i in 0..r {
            let mean: f64 = scores.iter().map(|s| s[i]).sum::<f64>() / m as f64;
            let var: f64 =
                scores.iter().map(|s| (s[i] - mean).powi(2)).sum::<f64>() / (m as f64 - 1.0);
            let rel = (var - model.eigenvalues()[i]).abs() / model.eigenvalues()[i];
            assert!(rel < 1e-8, "component {i}: var {var} vs lambda {}", model.eigenvalues()[i]);
        }
    }
}

#[test]
fn projector_identity_on_training_span() {
    for (l, m, seed) in [(9, 4, 41), (15, 40, 42), (40, 10, 43)] {
        let (x, model) = fit_random(l, m, seed);
        for j in 0..m {
            let col = x.column(j);
            let rec = reconstruct(&model, &project(&model, &col, model.q()).unwrap()).unwrap();
            let rel = (&rec - &col).amax() / col.amax().max(1.0);
            assert!(rel < 1e-9, "l={l} m={m}: column {j} off by {rel:.3e}");
        }
    }
}

#[test]
fn crv_is_monotone_between_zero_and_one() {
    let (_, model) = fit_random(18, 25, 51);
    let mut prev = 0.0;
    for t in 1..=model.q() {
        let value = crv(&model, t).unwrap();
        assert!((0.0..=1.0).contains(&value));
        assert!(value >= prev, "CRV decreased at t={t}");
        prev = value;
    }
    assert_eq!(crv(&model, model.q()).unwrap(), 1.0);
    assert_eq!(min_components(&model, 1.0).unwrap(), model.rank());
}

#[test]
fn two_sample_and_constant_boundaries() {
    // m = 2: rank at most 1
    let x = DataMatrix::from_columns(&[
        DVector::from_vec(vec![1.0, 2.0, 3.0]),
        DVector::from_vec(vec![4.0, 0.0, -1.0]),
    ])
    .unwrap();
    let model = fit_pca(&x).unwrap();
    assert_eq!(model.q(), 1);
    assert_eq!(model.rank(), 1);
    let rec = reconstruct(&model, &project(&model, &x.column(0), 1).unwrap()).unwrap();
    assert!((rec - x.column(0)).amax() < 1e-9);

    // constant data: rank 0, CRV undefined
    let c = DVector::from_vec(vec![2.0, 2.0]);
    let x = DataMatrix::from_columns(&[c.clone(), c.clone(), c]).unwrap();
    let model = fit_pca(&x).unwrap();
    assert_eq!(model.rank(), 0);
    assert!(crv(&model, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vec_unvec_round_trip(points in prop::collection::vec(
        prop::array::uniform3(-1e6f64..1e6), 1..40,
    )) {
        let cloud = egpc_core::PointCloud::new(points).unwrap();
        let v = vectorize(&cloud);
        prop_assert_eq!(v.len(), 3 * cloud.n_points());
        let back = unvectorize(&v).unwrap();
        prop_assert_eq!(back, cloud);
    }

    #[test]
    fn centering_zeroes_every_row_mean(cols in 2usize..6, rows in 1usize..8, seed in 0u64..1000) {
        let (x, _) = random_instance(rows, 1, cols, seed);
        let scale = x.amax();
        let x = DataMatrix::from_matrix(x).unwrap();
        let (centered, mean) = center(&x);
        for i in 0..rows {
            let row_sum: f64 = centered.matrix().row(i).iter().sum();
            prop_assert!(row_sum.abs() <= 1e-9 * cols as f64 * scale.max(1.0));
            let original: f64 = x.matrix().row(i).iter().sum::<f64>() / cols as f64;
            prop_assert!((mean[i] - original).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn projection_scores_match_training_block(seed in 0u64..500) {
        let (x, model) = fit_random(10, 14, seed);
        // scores of training column j equal column j of V^T X_mu
        let (centered, _) = center(&x);
        let z = model.eigenvectors().transpose() * centered.matrix();
        for j in 0..x.n_samples() {
            let s = project(&model, &x.column(j), model.q()).unwrap();
            prop_assert!((s - z.column(j)).amax() < 1e-10);
        }
    }
}
