//! Receive-side buffering keyed by `(session, sender, step)`.

use std::collections::{HashMap, HashSet};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use super::{Envelope, Role, TransportError};

pub const DEFAULT_RECV_TIMEOUT: Duration = Duration::from_secs(300);

type Key = (u64, Role, u16);

#[derive(Default)]
struct State {
    pending: HashMap<Key, Envelope>,
    aborted: HashSet<u64>,
}

pub struct Mailbox {
    state: Mutex<State>,
    ready: Condvar,
    timeout: Duration,
}

impl Mailbox {
    pub fn new(timeout: Duration) -> Self {
        Self {
            state: Mutex::new(State::default()),
            ready: Condvar::new(),
            timeout,
        }
    }

    pub fn deliver(&self, envelope: Envelope) {
        let key = (envelope.session, envelope.sender, envelope.step);
        let mut state = self.state.lock().unwrap();
        if state.pending.insert(key, envelope).is_some() {
            log::warn!("duplicate delivery for {key:?}, keeping the latest");
        }
        self.ready.notify_all();
    }

    pub fn take(&self, session: u64, from: Role, step: u16) -> Result<Envelope, TransportError> {
        let deadline = Instant::now() + self.timeout;
        let mut state = self.state.lock().unwrap();
        loop {
            if let Some(env) = state.pending.remove(&(session, from, step)) {
                return Ok(env);
            }
            if state.aborted.contains(&session) {
                return Err(TransportError::Aborted { session });
            }
            let now = Instant::now();
            if now >= deadline {
                return Err(TransportError::Timeout { session, from, step });
            }
            state = self.ready.wait_timeout(state, deadline - now).unwrap().0;
        }
    }

    pub fn abort(&self, session: u64) {
        self.state.lock().unwrap().aborted.insert(session);
        self.ready.notify_all();
    }
}

impl Default for Mailbox {
    fn default() -> Self {
        Self::new(DEFAULT_RECV_TIMEOUT)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::transport::ProtocolId;
    use std::sync::Arc;

    fn env(step: u16) -> Envelope {
        Envelope {
            protocol: ProtocolId::S2pm,
            session: 1,
            step,
            sender: Role::Alice,
            receiver: Role::Bob,
            matrices: vec![Matrix::identity(2)],
        }
    }

    #[test]
    fn out_of_order_delivery_is_buffered() {
        let mb = Mailbox::default();
        mb.deliver(env(3));
        mb.deliver(env(2));
        assert_eq!(mb.take(1, Role::Alice, 2).unwrap().step, 2);
        assert_eq!(mb.take(1, Role::Alice, 3).unwrap().step, 3);
    }

    #[test]
    fn timeout_and_abort() {
        let mb = Arc::new(Mailbox::new(Duration::from_millis(20)));
        assert!(matches!(
            mb.take(1, Role::Alice, 0),
            Err(TransportError::Timeout { .. })
        ));
        let waiter = {
            let mb = Arc::clone(&mb);
            std::thread::spawn(move || mb.take(7, Role::Bob, 0))
        };
        mb.abort(7);
        assert!(matches!(
            waiter.join().unwrap(),
            Err(TransportError::Aborted { session: 7 }) | Err(TransportError::Timeout { .. })
        ));
    }
}
