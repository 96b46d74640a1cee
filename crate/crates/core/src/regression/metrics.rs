//! Plaintext reference model and accuracy metrics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{invert, mat_mul, Matrix};

/// Normal-equation least squares `(X^T X)^-1 X^T y`.
pub fn least_squares(design: &Matrix, labels: &Matrix) -> Result<Matrix> {
    let xt = design.transpose();
    let gram = mat_mul(&xt, design)?;
    let inv = invert(&gram)?;
    Ok(mat_mul(&inv, &mat_mul(&xt, labels)?)?)
}

/// Coefficient of determination of `predicted` against `actual`.
pub fn r_squared(predicted: &Matrix, actual: &Matrix) -> Result<f64> {
    check_lengths(predicted, actual)?;
    let y = actual.data();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedMetric("labels have zero variance".into()));
    }
    let ss_res: f64 = predicted.data().iter().zip(y).map(|(p, v)| (v - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

fn check_lengths(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::InvalidInput(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Largest elementwise relative deviation of `value` from `reference`;
/// entries whose reference is zero contribute their absolute deviation.
pub fn max_relative_error(value: &Matrix, reference: &Matrix) -> Result<f64> {
    check_lengths(value, reference)?;
    Ok(value
        .data()
        .iter()
        .zip(reference.data())
        .map(|(v, r)| {
            let d = (v - r).abs();
            if *r == 0.0 {
                d
            } else {
                d / r.abs()
            }
        })
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    /// `||beta - beta_plain|| / ||beta||`.
    pub lnre: f64,
    pub r2: f64,
    /// `|R^2 - R^2_plain| / R^2_plain`, as a fraction.
    pub rrs: f64,
    /// Largest elementwise relative error of `beta` against `beta_plain`.
    pub mre: f64,
}

/// Prediction errors of `predicted` against `labels`, and parameter and
/// R-square agreement of the secure model with the plaintext one.
pub fn evaluate(
    predicted: &Matrix,
    labels: &Matrix,
    beta: &Matrix,
    beta_plain: &Matrix,
    r2_plain: f64,
) -> Result<MetricsReport> {
    check_lengths(predicted, labels)?;
    check_lengths(beta, beta_plain)?;
    let n = labels.len() as f64;
    let (abs, sq) = predicted
        .data()
        .iter()
        .zip(labels.data())
        .fold((0.0, 0.0), |(a, s), (p, y)| (a + (p - y).abs(), s + (p - y).powi(2)));
    let mse = sq / n;
    let beta_norm = beta.frobenius_norm();
    if beta_norm == 0.0 {
        return Err(Error::UndefinedMetric("parameter vector has zero norm".into()));
    }
    if r2_plain == 0.0 {
        return Err(Error::UndefinedMetric("plaintext R-square is zero".into()));
    }
    let r2 = r_squared(predicted, labels)?;
    Ok(MetricsReport {
        mae: abs / n,
        mse,
        rmse: mse.sqrt(),
        lnre: beta.sub(beta_plain)?.frobenius_norm() / beta_norm,
        r2,
        rrs: (r2 - r2_plain).abs() / r2_plain.abs(),
        mre: max_relative_error(beta, beta_plain)?,
    })
}
