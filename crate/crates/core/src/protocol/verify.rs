//! Randomized result verification: the parties' verification shares must sum
//! to the standard matrix, checked against random 0/1 vectors.

use rand::Rng;
use serde::Serialize;

use crate::matrix::{mat_mul, Matrix, MatrixError};
use crate::random::bernoulli_vector;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifyConfig {
    /// Number of independent challenge vectors.
    pub rounds: u32,
    /// Residual entries up to `epsilon * (sum ||VF||_F + ||St||_F)` count as
    /// zero.
    pub epsilon: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            rounds: 20,
            epsilon: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Verdict {
    pub accepted: bool,
    pub rounds: u32,
    /// Round in which the residual first exceeded the threshold.
    pub failed_round: Option<u32>,
    pub threshold: f64,
    pub max_residual: f64,
}

/// Checks `sum(shares) - standard` against `config.rounds` random 0/1
/// vectors, rejecting as soon as one product has an entry over the
/// threshold.
pub fn check<R: Rng + ?Sized>(
    shares: &[&Matrix],
    standard: &Matrix,
    config: &VerifyConfig,
    rng: &mut R,
) -> Result<Verdict, MatrixError> {
    if config.rounds == 0 || !(config.epsilon > 0.0) {
        return Err(MatrixError::Unsupported(format!(
            "verification needs rounds >= 1 and epsilon > 0, got {} and {}",
            config.rounds, config.epsilon
        )));
    }
    let mut residual = standard.neg();
    let mut scale = standard.frobenius_norm();
    for s in shares {
        residual.add_assign(s)?;
        scale += s.frobenius_norm();
    }
    let threshold = config.epsilon * scale;
    let mut max_residual = 0.0f64;
    for round in 0..config.rounds {
        let challenge = bernoulli_vector(residual.cols(), rng);
        let product = mat_mul(&residual, &challenge)?;
        let worst = product.max_abs();
        max_residual = max_residual.max(worst);
        if worst > threshold {
            return Ok(Verdict {
                accepted: false,
                rounds: config.rounds,
                failed_round: Some(round),
                threshold,
                max_residual,
            });
        }
    }
    Ok(Verdict {
        accepted: true,
        rounds: config.rounds,
        failed_round: None,
        threshold,
        max_residual,
    })
}
