//! In-process backend: envelopes are encoded and decoded through the wire
//! codec and handed to the receiver's mailbox.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use super::mailbox::{Mailbox, DEFAULT_RECV_TIMEOUT};
use super::{Endpoint, Envelope, Ledger, Network, Role, StepGuard, TransportError};

pub struct InProcNetwork {
    mailboxes: Arc<HashMap<Role, Arc<Mailbox>>>,
    endpoints: HashMap<Role, Arc<InProcEndpoint>>,
    ledger: Ledger,
}

impl InProcNetwork {
    pub fn new(ledger: Ledger) -> Self {
        Self::with_timeout(ledger, DEFAULT_RECV_TIMEOUT)
    }

    pub fn with_timeout(ledger: Ledger, timeout: Duration) -> Self {
        let mailboxes: Arc<HashMap<Role, Arc<Mailbox>>> = Arc::new(
            Role::ALL
                .into_iter()
                .map(|r| (r, Arc::new(Mailbox::new(timeout))))
                .collect(),
        );
        let endpoints = Role::ALL
            .into_iter()
            .map(|role| {
                let ep = InProcEndpoint {
                    role,
                    mailboxes: Arc::clone(&mailboxes),
                    ledger: ledger.clone(),
                    steps: StepGuard::default(),
                };
                (role, Arc::new(ep))
            })
            .collect();
        Self {
            mailboxes,
            endpoints,
            ledger,
        }
    }
}

impl Network for InProcNetwork {
    fn endpoint(&self, role: Role) -> Result<Arc<dyn Endpoint>, TransportError> {
        let ep = self.endpoints.get(&role).ok_or(TransportError::NoRoute(role))?;
        Ok(Arc::clone(ep) as Arc<dyn Endpoint>)
    }

    fn abort(&self, session: u64) {
        for mb in self.mailboxes.values() {
            mb.abort(session);
        }
    }

    fn ledger(&self) -> &Ledger {
        &self.ledger
    }
}

struct InProcEndpoint {
    role: Role,
    mailboxes: Arc<HashMap<Role, Arc<Mailbox>>>,
    ledger: Ledger,
    steps: StepGuard,
}

impl Endpoint for InProcEndpoint {
    fn role(&self) -> Role {
        self.role
    }

    fn send(&self, envelope: Envelope) -> Result<(), TransportError> {
        self.steps.check(self.role, &envelope)?;
        let mailbox = self
            .mailboxes
            .get(&envelope.receiver)
            .ok_or(TransportError::NoRoute(envelope.receiver))?;
        let bytes = envelope.encode()?;
        self.ledger.record(&envelope);
        mailbox.deliver(Envelope::decode(&bytes)?);
        Ok(())
    }

    fn recv(&self, session: u64, from: Role, step: u16) -> Result<Envelope, TransportError> {
        self.mailboxes[&self.role].take(session, from, step)
    }
}
