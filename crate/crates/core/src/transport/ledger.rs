//! Byte and round accounting per session.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use super::{Envelope, Role, TransportError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Preprocess,
    Online,
    Verify,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PhaseStats {
    pub messages: u64,
    pub payload_bytes: u64,
    pub header_bytes: u64,
}

impl PhaseStats {
    fn add(&mut self, payload: u64, header: u64) {
        self.messages += 1;
        self.payload_bytes += payload;
        self.header_bytes += header;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PairStats {
    pub from: Role,
    pub to: Role,
    pub messages: u64,
    pub payload_bytes: u64,
    pub header_bytes: u64,
}

/// Cumulative counters for one session. `messages` is the round count: one
/// round per directed envelope, commodity-server deliveries included.
/// Header bytes exclude the TCP frame prefix so every backend reports the
/// same totals.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SessionStats {
    pub messages: u64,
    pub payload_bytes: u64,
    pub header_bytes: u64,
    pub preprocess: PhaseStats,
    pub online: PhaseStats,
    pub verify: PhaseStats,
    pub pairs: Vec<PairStats>,
}

impl SessionStats {
    pub fn pair(&self, from: Role, to: Role) -> Option<&PairStats> {
        self.pairs.iter().find(|p| p.from == from && p.to == to)
    }

    pub fn messages_from(&self, role: Role) -> u64 {
        self.pairs.iter().filter(|p| p.from == role).map(|p| p.messages).sum()
    }
}

/// One ledger entry, in global send order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LedgerEvent {
    pub seq: u64,
    pub session: u64,
    pub step: u16,
    pub sender: Role,
    pub receiver: Role,
    pub phase: Phase,
    pub payload_bytes: u64,
    pub header_bytes: u64,
}

#[derive(Default)]
struct Inner {
    sessions: HashMap<u64, Accumulator>,
    events: Vec<LedgerEvent>,
    transcript: Option<Vec<Envelope>>,
}

#[derive(Default)]
struct Accumulator {
    total: PhaseStats,
    preprocess: PhaseStats,
    online: PhaseStats,
    verify: PhaseStats,
    pairs: BTreeMap<(Role, Role), PhaseStats>,
}

/// Shared, thread-safe ledger. Clones refer to the same counters.
#[derive(Clone, Default)]
pub struct Ledger {
    inner: Arc<Mutex<Inner>>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Also keeps a copy of every envelope sent, for transcript inspection.
    pub fn with_transcript() -> Self {
        let ledger = Self::default();
        ledger.inner.lock().unwrap().transcript = Some(Vec::new());
        ledger
    }

    /// Registers a session so it reports zeros before any traffic.
    pub fn open_session(&self, session: u64) {
        self.inner.lock().unwrap().sessions.entry(session).or_default();
    }

    /// Commodity-server traffic is preprocessing; everything else is online.
    pub fn phase_of(envelope: &Envelope) -> Phase {
        if envelope.sender == Role::CommodityServer {
            Phase::Preprocess
        } else {
            Phase::Online
        }
    }

    pub fn record(&self, envelope: &Envelope) {
        let payload = envelope.payload_bytes() as u64;
        let header = envelope.header_bytes() as u64;
        let phase = Self::phase_of(envelope);
        let mut inner = self.inner.lock().unwrap();
        let acc = inner.sessions.entry(envelope.session).or_default();
        acc.total.add(payload, header);
        match phase {
            Phase::Preprocess => acc.preprocess.add(payload, header),
            Phase::Online => acc.online.add(payload, header),
            Phase::Verify => acc.verify.add(payload, header),
        }
        acc.pairs
            .entry((envelope.sender, envelope.receiver))
            .or_default()
            .add(payload, header);
        let seq = inner.events.len() as u64;
        inner.events.push(LedgerEvent {
            seq,
            session: envelope.session,
            step: envelope.step,
            sender: envelope.sender,
            receiver: envelope.receiver,
            phase,
            payload_bytes: payload,
            header_bytes: header,
        });
        if let Some(t) = inner.transcript.as_mut() {
            t.push(envelope.clone());
        }
    }

    pub fn stats(&self, session: u64) -> Result<SessionStats, TransportError> {
        let inner = self.inner.lock().unwrap();
        let acc = inner
            .sessions
            .get(&session)
            .ok_or(TransportError::UnknownSession(session))?;
        Ok(SessionStats {
            messages: acc.total.messages,
            payload_bytes: acc.total.payload_bytes,
            header_bytes: acc.total.header_bytes,
            preprocess: acc.preprocess,
            online: acc.online,
            verify: acc.verify,
            pairs: acc
                .pairs
                .iter()
                .map(|(&(from, to), s)| PairStats {
                    from,
                    to,
                    messages: s.messages,
                    payload_bytes: s.payload_bytes,
                    header_bytes: s.header_bytes,
                })
                .collect(),
        })
    }

    pub fn events(&self, session: u64) -> Vec<LedgerEvent> {
        let inner = self.inner.lock().unwrap();
        inner.events.iter().filter(|e| e.session == session).cloned().collect()
    }

    /// Envelopes of `session` delivered to `receiver`; empty unless the
    /// ledger was built with [`Ledger::with_transcript`].
    pub fn received_by(&self, session: u64, receiver: Role) -> Vec<Envelope> {
        let inner = self.inner.lock().unwrap();
        inner
            .transcript
            .iter()
            .flatten()
            .filter(|e| e.session == session && e.receiver == receiver)
            .cloned()
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::transport::ProtocolId;

    fn env(sender: Role, receiver: Role, step: u16, n: usize) -> Envelope {
        Envelope {
            protocol: ProtocolId::S2pm,
            session: 5,
            step,
            sender,
            receiver,
            matrices: vec![Matrix::zeros(n, n)],
        }
    }

    #[test]
    fn empty_session_reports_zeros() {
        let ledger = Ledger::new();
        ledger.open_session(9);
        assert_eq!(ledger.stats(9).unwrap(), SessionStats::default());
        assert!(matches!(ledger.stats(10), Err(TransportError::UnknownSession(10))));
    }

    #[test]
    fn counts_payload_and_headers_separately() {
        let ledger = Ledger::new();
        ledger.record(&env(Role::CommodityServer, Role::Alice, 0, 10));
        ledger.record(&env(Role::Alice, Role::Bob, 2, 10));
        let s = ledger.stats(5).unwrap();
        assert_eq!(s.messages, 2);
        assert_eq!(s.payload_bytes, 1600);
        assert_eq!(s.header_bytes, 54);
        assert_eq!(s.preprocess.messages, 1);
        assert_eq!(s.online.payload_bytes, 800);
        assert_eq!(s.pair(Role::Alice, Role::Bob).unwrap().messages, 1);
        assert_eq!(s.messages_from(Role::CommodityServer), 1);
        assert_eq!(ledger.events(5).len(), 2);
    }
}
