//! Per-party protocol logic.
//!
//! Each protocol is a set of functions, one per participating role, that a
//! party runs against its own [`Endpoint`]. Steps are addressed relative to a
//! `base` so sub-protocols compose into larger schedules; see [`schedule`].

pub mod hybrid;
pub mod s2pi;
pub mod s2pm;
pub mod s3pm;
pub mod schedule;
pub mod session;
pub mod verify;

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::preprocess::{DisguiseRanges, PreprocessBundle};
use crate::random::{DynamicRange, RngStream};
use crate::transport::{Endpoint, Envelope, ProtocolId, Role};

pub use session::{run_inproc, run_session, Inputs, SessionOutcome, SessionTimings};
pub use verify::{Verdict, VerifyConfig};

/// A party's output of one multiplication: additive result share, the
/// verification share and the common standard matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Share {
    pub v: Matrix,
    pub vf: Matrix,
    pub st: Matrix,
}

/// Where an injected fault lands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TamperTarget {
    /// The value that determines the party's result share, changed before
    /// its verification share is derived from it.
    Share,
    /// The party's verification share, after its result share is fixed.
    Verification,
}

/// A single-element additive fault injected by one party into the
/// sub-protocol starting at step `base`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tamper {
    pub role: Role,
    pub base: u16,
    pub target: TamperTarget,
    pub row: usize,
    pub col: usize,
    pub magnitude: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EngineConfig {
    pub verify: VerifyConfig,
    /// Skips the verification phase entirely when false.
    pub verify_enabled: bool,
    /// Range of the commodity server's disguising matrices and of random
    /// share draws.
    pub disguise: DynamicRange,
    /// Disguise range for the products inside joint inversion.
    pub inversion_disguise: DynamicRange,
    /// Condition bound for the random congruence factors of inversion.
    pub nonsingular_cond: f64,
    pub tamper: Option<Tamper>,
}

impl EngineConfig {
    /// Disguises without exponent spread, matched to operands of order one
    /// such as standardized features. Wider disguises cost precision through
    /// cancellation when the data is much smaller than they are.
    pub fn unit_scale() -> Self {
        Self {
            disguise: DynamicRange::new(0).expect("zero range is valid"),
            ..Self::default()
        }
    }

    pub fn disguise_ranges(&self) -> DisguiseRanges {
        DisguiseRanges {
            product: self.disguise,
            inversion: self.inversion_disguise,
        }
    }
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            verify: VerifyConfig::default(),
            verify_enabled: true,
            disguise: DynamicRange::default(),
            inversion_disguise: DynamicRange::new(0).expect("zero range is valid"),
            nonsingular_cond: 1e3,
            tamper: None,
        }
    }
}

/// Outcome of one verification check run by one party.
#[derive(Clone, Debug, Serialize)]
pub struct SubReport {
    pub role: Role,
    pub base: u16,
    pub kind: ProtocolId,
    pub verdict: Verdict,
}

/// Per-party session state.
pub struct Party<'a> {
    pub role: Role,
    pub session: u64,
    pub protocol: ProtocolId,
    pub rng: RngStream,
    pub config: &'a EngineConfig,
    endpoint: &'a dyn Endpoint,
    reports: Vec<SubReport>,
    verify_time: Duration,
}

impl<'a> Party<'a> {
    pub fn new(
        endpoint: &'a dyn Endpoint,
        protocol: ProtocolId,
        session: u64,
        seed: u64,
        config: &'a EngineConfig,
    ) -> Self {
        let role = endpoint.role();
        Self {
            role,
            session,
            protocol,
            rng: RngStream::new(seed, stream_id(session, role)),
            config,
            endpoint,
            reports: Vec::new(),
            verify_time: Duration::ZERO,
        }
    }

    pub fn send(&self, step: u16, to: Role, matrices: Vec<Matrix>) -> Result<()> {
        self.endpoint.send(Envelope {
            protocol: self.protocol,
            session: self.session,
            step,
            sender: self.role,
            receiver: to,
            matrices,
        })?;
        Ok(())
    }

    pub fn recv(&self, step: u16, from: Role, expected: usize) -> Result<Vec<Matrix>> {
        let env = self.endpoint.recv(self.session, from, step)?;
        if env.matrices.len() != expected {
            return Err(Error::InvalidInput(format!(
                "step {step} from {from} carried {} matrices, expected {expected}",
                env.matrices.len()
            )));
        }
        Ok(env.matrices)
    }

    pub fn recv_one(&self, step: u16, from: Role) -> Result<Matrix> {
        Ok(self.recv(step, from, 1)?.pop().unwrap())
    }

    pub fn recv_bundle(&self, step: u16) -> Result<PreprocessBundle> {
        let env = self.endpoint.recv(self.session, Role::CommodityServer, step)?;
        Ok(PreprocessBundle::from_matrices(env.matrices)?)
    }

    /// Applies the configured fault if it targets this party, sub-protocol
    /// and stage.
    pub fn tamper(&self, base: u16, target: TamperTarget, value: &mut Matrix) {
        if let Some(t) = self.config.tamper {
            if t.role == self.role && t.base == base && t.target == target {
                let (i, j) = (t.row % value.rows(), t.col % value.cols());
                value.set(i, j, value.get(i, j) + t.magnitude);
                log::debug!(
                    "{} injected {:e} at ({i}, {j}) of step base {base}",
                    self.role,
                    t.magnitude
                );
            }
        }
    }

    /// Runs the randomized check on `own` plus the peers' verification
    /// shares, recording the verdict.
    pub fn verify(&mut self, base: u16, kind: ProtocolId, own: &Share, peers: &[&Matrix]) -> Result<()> {
        if !self.config.verify_enabled {
            return Ok(());
        }
        let started = Instant::now();
        let mut all: Vec<&Matrix> = vec![&own.vf];
        all.extend_from_slice(peers);
        let verdict = verify::check(&all, &own.st, &self.config.verify, &mut self.rng)?;
        if !verdict.accepted {
            log::info!(
                "{} rejected {kind} at base {base}: residual {:e} over threshold {:e}",
                self.role,
                verdict.max_residual,
                verdict.threshold
            );
        }
        self.reports.push(SubReport {
            role: self.role,
            base,
            kind,
            verdict,
        });
        self.verify_time += started.elapsed();
        Ok(())
    }

    pub fn into_reports(self) -> (Vec<SubReport>, Duration) {
        (self.reports, self.verify_time)
    }
}

/// Stream id of a party's generator: session in the high bits, role code in
/// the low byte.
pub fn stream_id(session: u64, role: Role) -> u64 {
    (session << 8) | role as u64
}

pub(crate) fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidInput(msg()))
    }
}
