//! Three-party training and prediction.
//!
//! Training: the Gram matrix `X^T X` is shared by hybrid two-party
//! multiplication of the design shares, inverted jointly, and multiplied
//! with `X^T` and the labels by hybrid three-party multiplication. Carol,
//! the label holder, only joins the last stage.
//!
//! Every party divides its Gram share by the (public) sample count before
//! inversion and its coefficient share afterwards, so the inverse is of
//! order one like the disguising matrices.

use crate::error::Result;
use crate::matrix::Matrix;
use crate::protocol::schedule::{s3plrp, s3plrt};
use crate::protocol::{hybrid, run_session, s2pi, s2pm, EngineConfig, Inputs, Party, SessionOutcome};
use crate::transport::{Network, Role};

use super::VerticalDataset;

pub fn train_alice(p: &mut Party<'_>, x1: &Matrix) -> Result<Matrix> {
    let x1t = x1.transpose();
    let scale = x1.rows() as f64;
    let gram = hybrid::s2phm_alice(p, s3plrt::GRAM, &x1t, x1)?.scale(1.0 / scale);
    let inverse = s2pi::alice(p, s3plrt::INVERSE, &gram)?;
    Ok(hybrid::s3phm_alice(p, s3plrt::COEFFICIENTS, &inverse, &x1t)?.scale(1.0 / scale))
}

pub fn train_bob(p: &mut Party<'_>, x2: &Matrix) -> Result<Matrix> {
    let x2t = x2.transpose();
    let scale = x2.rows() as f64;
    let gram = hybrid::s2phm_bob(p, s3plrt::GRAM, &x2t, x2)?.scale(1.0 / scale);
    let inverse = s2pi::bob(p, s3plrt::INVERSE, &gram)?;
    Ok(hybrid::s3phm_bob(p, s3plrt::COEFFICIENTS, &inverse, &x2t)?.scale(1.0 / scale))
}

pub fn train_carol(p: &mut Party<'_>, y: &Matrix) -> Result<Matrix> {
    let scale = y.rows() as f64;
    Ok(hybrid::s3phm_carol(p, s3plrt::COEFFICIENTS, y)?.scale(1.0 / scale))
}

pub fn predict_alice(p: &mut Party<'_>, x1: &Matrix, beta1: &Matrix) -> Result<Matrix> {
    let shared = hybrid::s2phm_alice(p, s3plrp::SHARED, x1, beta1)?;
    let with_carol = s2pm::left(p, s3plrp::ALICE_CAROL, Role::Carol, x1)?;
    Ok(shared.add(&with_carol.v)?)
}

pub fn predict_bob(p: &mut Party<'_>, x2: &Matrix, beta2: &Matrix) -> Result<Matrix> {
    let shared = hybrid::s2phm_bob(p, s3plrp::SHARED, x2, beta2)?;
    let with_carol = s2pm::left(p, s3plrp::BOB_CAROL, Role::Carol, x2)?;
    Ok(shared.add(&with_carol.v)?)
}

pub fn predict_carol(p: &mut Party<'_>, beta3: &Matrix) -> Result<Matrix> {
    let from_alice = s2pm::right(p, s3plrp::ALICE_CAROL, Role::Alice, beta3)?;
    let from_bob = s2pm::right(p, s3plrp::BOB_CAROL, Role::Bob, beta3)?;
    Ok(from_alice.v.add(&from_bob.v)?)
}

/// Model held as three additive shares.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelShares {
    pub beta1: Matrix,
    pub beta2: Matrix,
    pub beta3: Matrix,
}

impl ModelShares {
    pub fn combined(&self) -> Result<Matrix> {
        Ok(self.beta1.add(&self.beta2)?.add(&self.beta3)?)
    }
}

fn take(outcome: &SessionOutcome, role: Role) -> Matrix {
    outcome.shares[&role].clone()
}

/// Secure training over `network`; returns the model shares and the session
/// record.
pub fn s3plrt(
    network: &dyn Network,
    session: u64,
    seed: u64,
    data: &VerticalDataset,
    config: &EngineConfig,
) -> Result<(ModelShares, SessionOutcome)> {
    let inputs = Inputs::S3plrt {
        x1: data.x1.clone(),
        x2: data.x2.clone(),
        y: data.y.clone(),
    };
    let outcome = run_session(network, session, seed, &inputs, config)?;
    let model = ModelShares {
        beta1: take(&outcome, Role::Alice),
        beta2: take(&outcome, Role::Bob),
        beta3: take(&outcome, Role::Carol),
    };
    Ok((model, outcome))
}

/// Secure prediction on test design shares; the outcome's shares sum to the
/// predictions.
pub fn s3plrp(
    network: &dyn Network,
    session: u64,
    seed: u64,
    x1: &Matrix,
    x2: &Matrix,
    model: &ModelShares,
    config: &EngineConfig,
) -> Result<SessionOutcome> {
    let inputs = Inputs::S3plrp {
        x1: x1.clone(),
        beta1: model.beta1.clone(),
        x2: x2.clone(),
        beta2: model.beta2.clone(),
        beta3: model.beta3.clone(),
    };
    run_session(network, session, seed, &inputs, config)
}
