//! Vertical partitioning of a design matrix and feature standardization.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Design shares `x1`, `x2` (same shape, disjoint column supports, exact
/// zero padding) and labels `y`. Column 0 is the intercept and belongs to
/// `x1`; feature columns `1..=split` belong to `x1`, the rest to `x2`.
#[derive(Clone, Debug, PartialEq)]
pub struct VerticalDataset {
    pub x1: Matrix,
    pub x2: Matrix,
    pub y: Matrix,
    pub split: usize,
}

/// Prepends a column of ones.
pub fn with_intercept(features: &Matrix) -> Matrix {
    Matrix::from_fn(features.rows(), features.cols() + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            features.get(i, j - 1)
        }
    })
}

/// Splits design columns `[0, first_cols)` into one share and the rest into
/// the other, zero-padding both to the full width.
pub fn split_columns(design: &Matrix, first_cols: usize) -> Result<(Matrix, Matrix)> {
    if first_cols == 0 || first_cols >= design.cols() {
        return Err(Error::InvalidInput(format!(
            "split at column {first_cols} of {} leaves one owner without features",
            design.cols()
        )));
    }
    let x1 = Matrix::from_fn(design.rows(), design.cols(), |i, j| {
        if j < first_cols {
            design.get(i, j)
        } else {
            0.0
        }
    });
    let x2 = Matrix::from_fn(design.rows(), design.cols(), |i, j| {
        if j >= first_cols {
            design.get(i, j)
        } else {
            0.0
        }
    });
    Ok((x1, x2))
}

impl VerticalDataset {
    /// Partitions `features` (without intercept) after its first `split`
    /// columns; the intercept goes with the first owner.
    pub fn partition(features: &Matrix, labels: &Matrix, split: usize) -> Result<Self> {
        if labels.shape() != (features.rows(), 1) {
            return Err(Error::InvalidInput(format!(
                "labels {:?} for {} samples",
                labels.shape(),
                features.rows()
            )));
        }
        if split == 0 || split >= features.cols() {
            return Err(Error::InvalidInput(format!(
                "feature split {split} of {} leaves one owner empty",
                features.cols()
            )));
        }
        let design = with_intercept(features);
        let (x1, x2) = split_columns(&design, split + 1)?;
        Ok(Self {
            x1,
            x2,
            y: labels.clone(),
            split,
        })
    }

    /// `x1 + x2`, the full design matrix with intercept.
    pub fn design(&self) -> Matrix {
        self.x1.add(&self.x2).expect("shares have equal shapes")
    }

    pub fn samples(&self) -> usize {
        self.x1.rows()
    }

    /// Model width: features plus intercept.
    pub fn width(&self) -> usize {
        self.x1.cols()
    }
}

/// Per-column centering and scaling fitted on training data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns with zero sample variance; these are only centered.
    pub constant: Vec<bool>,
}

impl Standardizer {
    pub fn fit(features: &Matrix) -> Result<Self> {
        let n = features.rows();
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "standardization needs at least 2 samples, got {n}"
            )));
        }
        let mut means = Vec::with_capacity(features.cols());
        let mut stds = Vec::with_capacity(features.cols());
        let mut constant = Vec::with_capacity(features.cols());
        for j in 0..features.cols() {
            let col = features.col(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let std = var.sqrt();
            let flat = !(std > 1e-12 * mean.abs().max(1.0));
            if flat {
                log::warn!("feature column {j} has zero variance; centering only");
            }
            means.push(mean);
            stds.push(if flat { 1.0 } else { std });
            constant.push(flat);
        }
        Ok(Self { means, stds, constant })
    }

    pub fn transform(&self, features: &Matrix) -> Result<Matrix> {
        if features.cols() != self.means.len() {
            return Err(Error::InvalidInput(format!(
                "standardizer fitted on {} columns, got {}",
                self.means.len(),
                features.cols()
            )));
        }
        Ok(Matrix::from_fn(features.rows(), features.cols(), |i, j| {
            (features.get(i, j) - self.means[j]) / self.stds[j]
        }))
    }

    pub fn fit_transform(features: &Matrix) -> Result<(Self, Matrix)> {
        let s = Self::fit(features)?;
        let t = s.transform(features)?;
        Ok((s, t))
    }
}
