//! Message transport between protocol parties.
//!
//! Every message travels as an [`Envelope`] and is encoded with the wire
//! format in [`codec`] regardless of backend, so the in-process and TCP
//! backends account identical bytes in the shared [`Ledger`].

pub mod codec;
pub mod inproc;
pub mod ledger;
pub mod mailbox;
pub mod tcp;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::MatrixError;

pub use codec::Envelope;
pub use inproc::InProcNetwork;
pub use ledger::{Ledger, PairStats, Phase, PhaseStats, SessionStats};
pub use tcp::TcpNetwork;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Role {
    CommodityServer = 0,
    Alice = 1,
    Bob = 2,
    Carol = 3,
    Client = 4,
}

impl Role {
    pub const ALL: [Role; 5] = [Role::CommodityServer, Role::Alice, Role::Bob, Role::Carol, Role::Client];

    pub fn name(self) -> &'static str {
        match self {
            Role::CommodityServer => "cs",
            Role::Alice => "alice",
            Role::Bob => "bob",
            Role::Carol => "carol",
            Role::Client => "client",
        }
    }

    pub fn parse(name: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl TryFrom<u8> for Role {
    type Error = TransportError;

    fn try_from(code: u8) -> Result<Self, Self::Error> {
        Role::ALL
            .into_iter()
            .find(|r| *r as u8 == code)
            .ok_or_else(|| TransportError::Malformed(format!("unknown role code {code}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum ProtocolId {
    CsBundle = 0,
    S2pm = 1,
    S3pm = 2,
    S2pi = 3,
    S2phm = 4,
    S3phm = 5,
    S3plrt = 6,
    S3plrp = 7,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 8] = [
        ProtocolId::CsBundle,
        ProtocolId::S2pm,
        ProtocolId::S3pm,
        ProtocolId::S2pi,
        ProtocolId::S2phm,
        ProtocolId::S3phm,
        ProtocolId::S3plrt,
        ProtocolId::S3plrp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::CsBundle => "cs-bundle",
            ProtocolId::S2pm => "s2pm",
            ProtocolId::S3pm => "s3pm",
            ProtocolId::S2pi => "s2pi",
            ProtocolId::S2phm => "s2phm",
            ProtocolId::S3phm => "s3phm",
            ProtocolId::S3plrt => "s3plrt",
            ProtocolId::S3plrp => "s3plrp",
        }
    }

    pub fn parse(name: &str) -> Option<ProtocolId> {
        ProtocolId::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(name))
    }
}

impl fmt::Display for ProtocolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl TryFrom<u8> for ProtocolId {
    type Error = TransportError;

    fn try_from(code: u8) -> Result<Self, Self::Error> {
        ProtocolId::ALL
            .into_iter()
            .find(|p| *p as u8 == code)
            .ok_or_else(|| TransportError::Malformed(format!("unknown protocol id {code}")))
    }
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("malformed envelope: {0}")]
    Malformed(String),
    #[error("invalid matrix in envelope: {0}")]
    Matrix(#[from] MatrixError),
    #[error("session {session}: {role} sent step {step} after step {last}")]
    StepOrder {
        session: u64,
        role: Role,
        step: u16,
        last: u16,
    },
    #[error("endpoint for {expected} cannot send as {actual}")]
    WrongSender { expected: Role, actual: Role },
    #[error("no route to {0}")]
    NoRoute(Role),
    #[error("session {session}: timed out waiting for step {step} from {from}")]
    Timeout { session: u64, from: Role, step: u16 },
    #[error("session {session}: transport aborted")]
    Aborted { session: u64 },
    #[error("unknown session {0}")]
    UnknownSession(u64),
    #[error("session {session}: io error talking to {peer}: {source}")]
    Io {
        session: u64,
        peer: Role,
        #[source]
        source: std::io::Error,
    },
}

/// One role's view of the network.
pub trait Endpoint: Send + Sync {
    fn role(&self) -> Role;

    /// Encodes and delivers `envelope`, recording it in the ledger.
    fn send(&self, envelope: Envelope) -> Result<(), TransportError>;

    /// Blocks until the message `(session, from, step)` addressed to this
    /// role arrives. Out-of-order arrivals are buffered.
    fn recv(&self, session: u64, from: Role, step: u16) -> Result<Envelope, TransportError>;
}

/// A set of endpoints sharing one ledger.
pub trait Network: Send + Sync {
    fn endpoint(&self, role: Role) -> Result<Arc<dyn Endpoint>, TransportError>;

    /// Wakes every blocked receiver of `session` with an abort error.
    fn abort(&self, session: u64);

    fn ledger(&self) -> &Ledger;
}

/// Tracks the last step each sender used per session.
#[derive(Default)]
pub(crate) struct StepGuard {
    last: std::sync::Mutex<std::collections::HashMap<u64, u16>>,
}

impl StepGuard {
    pub(crate) fn check(&self, role: Role, envelope: &Envelope) -> Result<(), TransportError> {
        if envelope.sender != role {
            return Err(TransportError::WrongSender {
                expected: role,
                actual: envelope.sender,
            });
        }
        let mut last = self.last.lock().unwrap();
        if let Some(&prev) = last.get(&envelope.session) {
            if envelope.step <= prev {
                return Err(TransportError::StepOrder {
                    session: envelope.session,
                    role,
                    step: envelope.step,
                    last: prev,
                });
            }
        }
        last.insert(envelope.session, envelope.step);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn role_and_protocol_codes() {
        for r in Role::ALL {
            assert_eq!(Role::try_from(r as u8).unwrap(), r);
            assert_eq!(Role::parse(r.name()), Some(r));
        }
        for p in ProtocolId::ALL {
            assert_eq!(ProtocolId::try_from(p as u8).unwrap(), p);
            assert_eq!(ProtocolId::parse(p.name()), Some(p));
        }
        assert_eq!(ProtocolId::S3plrp as u8, 7);
        assert!(Role::try_from(5).is_err());
    }
}
