//! Secure training and prediction against a plaintext least-squares oracle.

use eva_core::protocol::{run_inproc, EngineConfig, Inputs};
use eva_core::random::gen_gaussian;
use eva_core::regression::{
    evaluate, least_squares, max_relative_error, r_squared, s3plrp, s3plrt, with_intercept, ModelShares, Standardizer,
    VerticalDataset,
};
use eva_core::transport::{InProcNetwork, Ledger, Role};
use eva_core::{mat_mul, Error, Matrix, RngStream};
use nalgebra::DMatrix;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

/// Least squares by SVD, independent of the normal equations.
fn svd_solution(design: &Matrix, y: &Matrix) -> DMatrix<f64> {
    to_na(design).svd(true, true).solve(&to_na(y), 1e-14).unwrap()
}

fn synthetic(samples: usize, features: usize, seed: u64) -> (Matrix, Matrix) {
    let mut rng = RngStream::new(seed, 300);
    let raw = gen_gaussian(samples, features, &mut rng);
    let (_, x) = Standardizer::fit_transform(&raw).unwrap();
    let beta = gen_gaussian(features + 1, 1, &mut rng);
    let noise = gen_gaussian(samples, 1, &mut rng).scale(0.3);
    let y = mat_mul(&with_intercept(&x), &beta).unwrap().add(&noise).unwrap();
    (x, y)
}

#[test]
fn training_matches_least_squares() {
    for (seed, (samples, features)) in [(200, 8), (400, 10), (60, 3)].into_iter().enumerate() {
        let (x, y) = synthetic(samples, features, seed as u64);
        let data = VerticalDataset::partition(&x, &y, features / 2).unwrap();
        let net = InProcNetwork::new(Ledger::new());
        let (model, out) = s3plrt(&net, 1, seed as u64, &data, &EngineConfig::unit_scale()).unwrap();
        assert!(out.accepted());
        assert_eq!(out.stats.messages, 73);
        let beta = to_na(&model.combined().unwrap());
        let oracle = svd_solution(&data.design(), &y);
        let lnre = (&beta - &oracle).norm() / beta.norm();
        assert!(lnre <= 1e-6, "{samples}x{features}: lnre {lnre:e}");
    }
}

#[test]
fn orthonormal_design_recovers_exact_coefficients() {
    // Hadamard columns scaled to unit norm.
    let h = Matrix::from_rows(&[
        [1.0, 1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0, -1.0],
        [1.0, 1.0, -1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0],
    ])
    .unwrap()
    .scale(0.5);
    let beta_true = Matrix::column(&[2.0, -1.0, 0.5, 3.0]).unwrap();
    let y = mat_mul(&h, &beta_true).unwrap();
    let (x1, x2) = eva_core::regression::split_columns(&h, 2).unwrap();
    let data = VerticalDataset { x1, x2, y, split: 1 };
    let net = InProcNetwork::new(Ledger::new());
    let (model, _) = s3plrt(&net, 1, 3, &data, &EngineConfig::unit_scale()).unwrap();
    let err = model.combined().unwrap().relative_error(&beta_true).unwrap();
    assert!(err <= 1e-10, "{err:e}");
}

#[test]
fn prediction_matches_plaintext_pipeline() {
    let (x, y) = synthetic(300, 6, 11);
    let (train_x, test_x) = (x.row_range(0, 200).unwrap(), x.row_range(200, 300).unwrap());
    let train_y = y.row_range(0, 200).unwrap();
    let data = VerticalDataset::partition(&train_x, &train_y, 3).unwrap();
    let test = VerticalDataset::partition(&test_x, &y.row_range(200, 300).unwrap(), 3).unwrap();
    let net = InProcNetwork::new(Ledger::new());
    let config = EngineConfig::unit_scale();
    let (model, _) = s3plrt(&net, 1, 5, &data, &config).unwrap();
    let out = s3plrp(&net, 2, 5, &test.x1, &test.x2, &model, &config).unwrap();
    assert!(out.accepted());
    assert_eq!(out.stats.messages, 24);
    let secure = out.reconstruct().unwrap();

    let same_model = to_na(&test.design()) * to_na(&model.combined().unwrap());
    assert!((to_na(&secure) - &same_model).norm() / same_model.norm() <= 1e-10);

    let plain = to_na(&test.design()) * svd_solution(&data.design(), &train_y);
    let plain = Matrix::from_vec(plain.nrows(), 1, plain.as_slice().to_vec()).unwrap();
    let mre = max_relative_error(&secure, &plain).unwrap();
    assert!(mre <= 1e-8, "prediction mre {mre:e}");
}

#[test]
fn metrics_agree_with_plaintext_model() {
    let (x, y) = synthetic(400, 10, 21);
    let data = VerticalDataset::partition(&x, &y, 5).unwrap();
    let net = InProcNetwork::new(Ledger::new());
    let config = EngineConfig::unit_scale();
    let (model, _) = s3plrt(&net, 1, 9, &data, &config).unwrap();
    let pred = s3plrp(&net, 2, 9, &data.x1, &data.x2, &model, &config)
        .unwrap()
        .reconstruct()
        .unwrap();
    let plain = least_squares(&data.design(), &y).unwrap();
    let r2_plain = r_squared(&mat_mul(&data.design(), &plain).unwrap(), &y).unwrap();
    let report = evaluate(&pred, &y, &model.combined().unwrap(), &plain, r2_plain).unwrap();
    assert!(report.lnre <= 1e-6);
    assert!(report.rrs <= 1e-4);
    assert!((report.rmse * report.rmse - report.mse).abs() <= 1e-12 * report.mse);
    assert!(report.r2 <= 1.0);
}

#[test]
fn zero_third_share_reduces_to_hybrid_product() {
    let mut rng = RngStream::new(4, 301);
    let x1 = gen_gaussian(7, 3, &mut rng);
    let x2 = gen_gaussian(7, 3, &mut rng);
    let beta1 = gen_gaussian(3, 1, &mut rng);
    let beta2 = gen_gaussian(3, 1, &mut rng);
    let model = ModelShares {
        beta1: beta1.clone(),
        beta2: beta2.clone(),
        beta3: Matrix::zeros(3, 1),
    };
    let net = InProcNetwork::new(Ledger::new());
    let pred = s3plrp(&net, 1, 1, &x1, &x2, &model, &EngineConfig::unit_scale())
        .unwrap()
        .reconstruct()
        .unwrap();
    let hybrid = run_inproc(
        2,
        1,
        &Inputs::S2phm {
            a1: x1.clone(),
            a2: beta1,
            b1: x2.clone(),
            b2: beta2,
        },
        &EngineConfig::unit_scale(),
    )
    .unwrap()
    .reconstruct()
    .unwrap();
    assert!(pred.relative_error(&hybrid).unwrap() <= 1e-10);
}

#[test]
fn singular_gram_surfaces_inversion_error() {
    let mut rng = RngStream::new(6, 302);
    let f = gen_gaussian(30, 3, &mut rng);
    // Last feature duplicates the first.
    let x = Matrix::from_fn(30, 4, |i, j| f.get(i, j % 3));
    let y = gen_gaussian(30, 1, &mut rng);
    let data = VerticalDataset::partition(&x, &y, 2).unwrap();
    let net = InProcNetwork::new(Ledger::new());
    let err = s3plrt(&net, 1, 1, &data, &EngineConfig::unit_scale()).unwrap_err();
    assert!(matches!(err.root(), Error::SingularInput { .. }), "{err}");
}

#[test]
fn labels_never_leave_carol_verbatim() {
    let (x, y) = synthetic(50, 4, 31);
    let data = VerticalDataset::partition(&x, &y, 2).unwrap();
    let ledger = Ledger::with_transcript();
    let net = InProcNetwork::new(ledger.clone());
    s3plrt(&net, 1, 2, &data, &EngineConfig::unit_scale()).unwrap();
    for receiver in [Role::Alice, Role::Bob] {
        for env in ledger.received_by(1, receiver) {
            for m in &env.matrices {
                let seen = m.shape() == y.shape() && m.relative_error(&y).unwrap() < 1e-3;
                assert!(!seen, "labels reached {receiver} at step {}", env.step);
            }
        }
    }
}

#[test]
fn partition_and_standardizer_invariants() {
    let (x, y) = synthetic(40, 5, 41);
    let data = VerticalDataset::partition(&x, &y, 2).unwrap();
    assert_eq!(data.design(), with_intercept(&x));
    for j in 0..data.width() {
        let in_first = data.x1.col(j).iter().any(|v| *v != 0.0);
        let in_second = data.x2.col(j).iter().any(|v| *v != 0.0);
        assert!(in_first != in_second, "column {j}");
    }
    assert!(data.x1.col(0).iter().all(|v| *v == 1.0));

    let raw = Matrix::from_rows(&[[1.0, 7.0], [2.0, 7.0], [3.0, 7.0]]).unwrap();
    let (fit, scaled) = Standardizer::fit_transform(&raw).unwrap();
    assert_eq!(scaled.col(0), vec![-1.0, 0.0, 1.0]);
    assert_eq!(scaled.col(1), vec![0.0, 0.0, 0.0]);
    assert_eq!(fit.constant, vec![false, true]);
}
