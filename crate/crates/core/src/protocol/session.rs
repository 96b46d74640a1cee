//! Runs one protocol session: the commodity server delivers its bundles,
//! then each participating party runs on its own thread against its own
//! endpoint.

use std::collections::BTreeMap;
use std::thread;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::preprocess::{self, BundleRequest, DimSpec};
use crate::regression::secure as regression;
use crate::transport::{InProcNetwork, Ledger, Network, ProtocolId, Role, SessionStats};

use super::s3pm::Chain;
use super::schedule;
use super::{hybrid, require, s2pi, s2pm, s3pm, stream_id, EngineConfig, Party, SubReport};

/// Private inputs of every party for one session.
#[derive(Clone, Debug)]
pub enum Inputs {
    S2pm {
        a: Matrix,
        b: Matrix,
    },
    S3pm {
        a: Matrix,
        b: Matrix,
        c: Matrix,
    },
    S2pi {
        a: Matrix,
        b: Matrix,
    },
    S2phm {
        a1: Matrix,
        a2: Matrix,
        b1: Matrix,
        b2: Matrix,
    },
    S3phm {
        a1: Matrix,
        a2: Matrix,
        b1: Matrix,
        b2: Matrix,
        c: Matrix,
    },
    /// Zero-padded design shares and labels.
    S3plrt {
        x1: Matrix,
        x2: Matrix,
        y: Matrix,
    },
    /// Test design shares with the model shares of each party.
    S3plrp {
        x1: Matrix,
        beta1: Matrix,
        x2: Matrix,
        beta2: Matrix,
        beta3: Matrix,
    },
}

fn same_shape(a: &Matrix, b: &Matrix, what: &str) -> Result<()> {
    require(a.shape() == b.shape(), || {
        format!("{what}: {:?} vs {:?}", a.shape(), b.shape())
    })
}

fn chained(a: &Matrix, b: &Matrix, what: &str) -> Result<()> {
    require(a.cols() == b.rows(), || {
        format!("{what}: {:?} x {:?} not multipliable", a.shape(), b.shape())
    })
}

impl Inputs {
    pub fn protocol(&self) -> ProtocolId {
        match self {
            Inputs::S2pm { .. } => ProtocolId::S2pm,
            Inputs::S3pm { .. } => ProtocolId::S3pm,
            Inputs::S2pi { .. } => ProtocolId::S2pi,
            Inputs::S2phm { .. } => ProtocolId::S2phm,
            Inputs::S3phm { .. } => ProtocolId::S3phm,
            Inputs::S3plrt { .. } => ProtocolId::S3plrt,
            Inputs::S3plrp { .. } => ProtocolId::S3plrp,
        }
    }

    /// Parties holding an input and producing a share.
    pub fn roles(&self) -> &'static [Role] {
        match self {
            Inputs::S2pm { .. } | Inputs::S2pi { .. } | Inputs::S2phm { .. } => &[Role::Alice, Role::Bob],
            _ => &[Role::Alice, Role::Bob, Role::Carol],
        }
    }

    /// Checks operand shapes and derives the commodity-server plan, which
    /// depends on dimensions only.
    pub fn plan(&self) -> Result<Vec<BundleRequest>> {
        Ok(match self {
            Inputs::S2pm { a, b } => {
                chained(a, b, "s2pm")?;
                schedule::s2pm_plan(0, Role::Alice, Role::Bob, DimSpec::two(a.rows(), a.cols(), b.cols()))
            }
            Inputs::S3pm { a, b, c } => {
                chained(a, b, "s3pm")?;
                chained(b, c, "s3pm")?;
                schedule::s3pm_plan(
                    0,
                    Role::Alice,
                    Role::Bob,
                    Role::Carol,
                    DimSpec::three(a.rows(), a.cols(), b.cols(), c.cols()),
                )
            }
            Inputs::S2pi { a, b } => {
                same_shape(a, b, "s2pi")?;
                require(a.is_square(), || {
                    format!("s2pi needs square operands, got {:?}", a.shape())
                })?;
                schedule::s2pi_plan(0, a.rows())
            }
            Inputs::S2phm { a1, a2, b1, b2 } => {
                same_shape(a1, b1, "s2phm left operands")?;
                same_shape(a2, b2, "s2phm right operands")?;
                chained(a1, a2, "s2phm")?;
                schedule::s2phm_plan(0, a1.rows(), a1.cols(), a2.cols())
            }
            Inputs::S3phm { a1, a2, b1, b2, c } => {
                same_shape(a1, b1, "s3phm left operands")?;
                same_shape(a2, b2, "s3phm middle operands")?;
                chained(a1, a2, "s3phm")?;
                chained(a2, c, "s3phm")?;
                schedule::s3phm_plan(0, DimSpec::three(a1.rows(), a1.cols(), a2.cols(), c.cols()))
            }
            Inputs::S3plrt { x1, x2, y } => {
                same_shape(x1, x2, "s3plrt design shares")?;
                require(y.shape() == (x1.rows(), 1), || {
                    format!("labels {:?} for {} samples", y.shape(), x1.rows())
                })?;
                schedule::s3plrt_plan(x1.rows(), x1.cols())
            }
            Inputs::S3plrp {
                x1,
                beta1,
                x2,
                beta2,
                beta3,
            } => {
                same_shape(x1, x2, "s3plrp design shares")?;
                same_shape(beta1, beta2, "s3plrp model shares")?;
                same_shape(beta1, beta3, "s3plrp model shares")?;
                require(beta1.shape() == (x1.cols(), 1), || {
                    format!("model shares {:?} for {} features", beta1.shape(), x1.cols())
                })?;
                schedule::s3plrp_plan(x1.rows(), x1.cols())
            }
        })
    }

    fn run_party(&self, p: &mut Party<'_>) -> Result<Matrix> {
        const ABC: Chain = Chain {
            first: Role::Alice,
            middle: Role::Bob,
            last: Role::Carol,
        };
        let role = p.role;
        let share = match (self, role) {
            (Inputs::S2pm { a, .. }, Role::Alice) => s2pm::left(p, 0, Role::Bob, a)?.v,
            (Inputs::S2pm { b, .. }, Role::Bob) => s2pm::right(p, 0, Role::Alice, b)?.v,
            (Inputs::S3pm { a, .. }, Role::Alice) => s3pm::first(p, 0, ABC, a)?.v,
            (Inputs::S3pm { b, .. }, Role::Bob) => s3pm::middle(p, 0, ABC, b)?.v,
            (Inputs::S3pm { c, .. }, Role::Carol) => s3pm::last(p, 0, ABC, c)?.v,
            (Inputs::S2pi { a, .. }, Role::Alice) => s2pi::alice(p, 0, a)?,
            (Inputs::S2pi { b, .. }, Role::Bob) => s2pi::bob(p, 0, b)?,
            (Inputs::S2phm { a1, a2, .. }, Role::Alice) => hybrid::s2phm_alice(p, 0, a1, a2)?,
            (Inputs::S2phm { b1, b2, .. }, Role::Bob) => hybrid::s2phm_bob(p, 0, b1, b2)?,
            (Inputs::S3phm { a1, a2, .. }, Role::Alice) => hybrid::s3phm_alice(p, 0, a1, a2)?,
            (Inputs::S3phm { b1, b2, .. }, Role::Bob) => hybrid::s3phm_bob(p, 0, b1, b2)?,
            (Inputs::S3phm { c, .. }, Role::Carol) => hybrid::s3phm_carol(p, 0, c)?,
            (Inputs::S3plrt { x1, .. }, Role::Alice) => regression::train_alice(p, x1)?,
            (Inputs::S3plrt { x2, .. }, Role::Bob) => regression::train_bob(p, x2)?,
            (Inputs::S3plrt { y, .. }, Role::Carol) => regression::train_carol(p, y)?,
            (Inputs::S3plrp { x1, beta1, .. }, Role::Alice) => regression::predict_alice(p, x1, beta1)?,
            (Inputs::S3plrp { x2, beta2, .. }, Role::Bob) => regression::predict_bob(p, x2, beta2)?,
            (Inputs::S3plrp { beta3, .. }, Role::Carol) => regression::predict_carol(p, beta3)?,
            (_, role) => {
                return Err(Error::InvalidInput(format!(
                    "{role} has no part in {}",
                    self.protocol()
                )))
            }
        };
        Ok(share)
    }
}

#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct SessionTimings {
    pub preprocess_ms: f64,
    /// Slowest party, verification excluded.
    pub online_ms: f64,
    /// Slowest party's verification time.
    pub verify_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug)]
pub struct SessionOutcome {
    pub protocol: ProtocolId,
    pub session: u64,
    pub shares: BTreeMap<Role, Matrix>,
    pub reports: Vec<SubReport>,
    pub stats: SessionStats,
    pub timings: SessionTimings,
}

impl SessionOutcome {
    /// Sum of all parties' shares.
    pub fn reconstruct(&self) -> Result<Matrix> {
        let mut it = self.shares.values();
        let mut sum = it
            .next()
            .cloned()
            .ok_or_else(|| Error::InvalidInput("session produced no shares".into()))?;
        for s in it {
            sum.add_assign(s)?;
        }
        Ok(sum)
    }

    /// True when every verification check of every party passed.
    pub fn accepted(&self) -> bool {
        self.reports.iter().all(|r| r.verdict.accepted)
    }

    pub fn rejecting_roles(&self) -> Vec<Role> {
        let mut roles: Vec<Role> = self
            .reports
            .iter()
            .filter(|r| !r.verdict.accepted)
            .map(|r| r.role)
            .collect();
        roles.dedup();
        roles
    }

    pub fn share(&self, role: Role) -> Option<&Matrix> {
        self.shares.get(&role)
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Runs `inputs` as session `session` over `network`. All randomness derives
/// from `(seed, session, role)`.
pub fn run_session(
    network: &dyn Network,
    session: u64,
    seed: u64,
    inputs: &Inputs,
    config: &EngineConfig,
) -> Result<SessionOutcome> {
    let started = Instant::now();
    let protocol = inputs.protocol();
    let plan = inputs.plan()?;
    network.ledger().open_session(session);

    let cs = network.endpoint(Role::CommodityServer)?;
    let mut cs_rng = crate::random::RngStream::new(seed, stream_id(session, Role::CommodityServer));
    preprocess::serve(
        cs.as_ref(),
        protocol,
        session,
        &plan,
        &config.disguise_ranges(),
        &mut cs_rng,
    )?;
    let preprocess_time = started.elapsed();

    let results: Vec<(Role, Result<(Matrix, Vec<SubReport>, Duration, Duration)>)> = thread::scope(|scope| {
        let handles: Vec<_> = inputs
            .roles()
            .iter()
            .map(|&role| {
                let handle = scope.spawn(move || {
                    let run = || -> Result<(Matrix, Vec<SubReport>, Duration, Duration)> {
                        let endpoint = network.endpoint(role)?;
                        let party_start = Instant::now();
                        let mut party = Party::new(endpoint.as_ref(), protocol, session, seed, config);
                        let share = inputs.run_party(&mut party)?;
                        let total = party_start.elapsed();
                        let (reports, verify) = party.into_reports();
                        Ok((share, reports, total.saturating_sub(verify), verify))
                    };
                    let out = run();
                    if out.is_err() {
                        network.abort(session);
                    }
                    out
                });
                (role, handle)
            })
            .collect();
        handles
            .into_iter()
            .map(|(role, h)| (role, h.join().expect("party thread panicked")))
            .collect()
    });

    let mut failure: Option<Error> = None;
    let mut shares = BTreeMap::new();
    let mut reports = Vec::new();
    let mut timings = SessionTimings {
        preprocess_ms: ms(preprocess_time),
        ..SessionTimings::default()
    };
    for (role, result) in results {
        match result {
            Ok((share, mut rep, online, verify)) => {
                shares.insert(role, share);
                reports.append(&mut rep);
                timings.online_ms = timings.online_ms.max(ms(online));
                timings.verify_ms = timings.verify_ms.max(ms(verify));
            }
            Err(e) => {
                let e = Error::Party {
                    role,
                    source: Box::new(e),
                };
                // Keep the root cause rather than a peer's abort notice.
                if failure.as_ref().is_none_or(|f| f.is_abort() && !e.is_abort()) {
                    failure = Some(e);
                }
            }
        }
    }
    if let Some(e) = failure {
        return Err(e);
    }
    timings.total_ms = ms(started.elapsed());
    Ok(SessionOutcome {
        protocol,
        session,
        shares,
        reports,
        stats: network.ledger().stats(session)?,
        timings,
    })
}

/// Runs one session on a fresh in-process network.
pub fn run_inproc(session: u64, seed: u64, inputs: &Inputs, config: &EngineConfig) -> Result<SessionOutcome> {
    let network = InProcNetwork::new(Ledger::new());
    run_session(&network, session, seed, inputs, config)
}
