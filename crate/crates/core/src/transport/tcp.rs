//! TCP backend. Each hosted role listens on its own address; outgoing
//! connections are opened lazily per receiver and carry length-prefixed
//! frames. A reader thread per accepted connection feeds the role's mailbox.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::io::BufReader;
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use super::codec::{read_frame, write_frame};
use super::mailbox::{Mailbox, DEFAULT_RECV_TIMEOUT};
use super::{Endpoint, Envelope, Ledger, Network, Role, StepGuard, TransportError};

const CONNECT_RETRY: Duration = Duration::from_secs(10);
const ACCEPT_POLL: Duration = Duration::from_millis(2);

pub struct TcpNetwork {
    endpoints: HashMap<Role, Arc<TcpEndpoint>>,
    ledger: Ledger,
    shutdown: Arc<AtomicBool>,
    addrs: HashMap<Role, SocketAddr>,
}

impl TcpNetwork {
    /// Hosts `local` roles, listening on their entries in `addrs`. Peers not
    /// in `local` are reached at their `addrs` entry.
    pub fn bind(addrs: &HashMap<Role, SocketAddr>, local: &[Role], ledger: Ledger) -> Result<Self, TransportError> {
        let shutdown = Arc::new(AtomicBool::new(false));
        let mut listeners = Vec::new();
        let mut resolved = addrs.clone();
        for &role in local {
            let addr = addrs.get(&role).ok_or(TransportError::NoRoute(role))?;
            let listener = TcpListener::bind(addr).map_err(|source| TransportError::Io {
                session: 0,
                peer: role,
                source,
            })?;
            let bound = listener.local_addr().map_err(|source| TransportError::Io {
                session: 0,
                peer: role,
                source,
            })?;
            resolved.insert(role, bound);
            listeners.push((role, listener));
        }
        let routes = Arc::new(resolved.clone());
        let mut endpoints = HashMap::new();
        for (role, listener) in listeners {
            let mailbox = Arc::new(Mailbox::new(DEFAULT_RECV_TIMEOUT));
            spawn_acceptor(role, listener, Arc::clone(&mailbox), Arc::clone(&shutdown))?;
            endpoints.insert(
                role,
                Arc::new(TcpEndpoint {
                    role,
                    routes: Arc::clone(&routes),
                    conns: Mutex::new(HashMap::new()),
                    mailbox,
                    ledger: ledger.clone(),
                    steps: StepGuard::default(),
                }),
            );
        }
        Ok(Self {
            endpoints,
            ledger,
            shutdown,
            addrs: resolved,
        })
    }

    /// All roles hosted in this process on ephemeral loopback ports.
    pub fn loopback(ledger: Ledger) -> Result<Self, TransportError> {
        let any: SocketAddr = "127.0.0.1:0".parse().unwrap();
        let addrs = Role::ALL.into_iter().map(|r| (r, any)).collect();
        Self::bind(&addrs, &Role::ALL, ledger)
    }

    pub fn addr(&self, role: Role) -> Option<SocketAddr> {
        self.addrs.get(&role).copied()
    }
}

impl Drop for TcpNetwork {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::SeqCst);
    }
}

impl Network for TcpNetwork {
    fn endpoint(&self, role: Role) -> Result<Arc<dyn Endpoint>, TransportError> {
        let ep = self.endpoints.get(&role).ok_or(TransportError::NoRoute(role))?;
        Ok(Arc::clone(ep) as Arc<dyn Endpoint>)
    }

    fn abort(&self, session: u64) {
        for ep in self.endpoints.values() {
            ep.mailbox.abort(session);
        }
    }

    fn ledger(&self) -> &Ledger {
        &self.ledger
    }
}

fn spawn_acceptor(
    role: Role,
    listener: TcpListener,
    mailbox: Arc<Mailbox>,
    shutdown: Arc<AtomicBool>,
) -> Result<(), TransportError> {
    listener.set_nonblocking(true).map_err(|source| TransportError::Io {
        session: 0,
        peer: role,
        source,
    })?;
    thread::Builder::new()
        .name(format!("eva-accept-{role}"))
        .spawn(move || {
            while !shutdown.load(Ordering::SeqCst) {
                match listener.accept() {
                    Ok((stream, peer)) => {
                        log::debug!("{role} accepted connection from {peer}");
                        let mailbox = Arc::clone(&mailbox);
                        let spawned = thread::Builder::new()
                            .name(format!("eva-read-{role}"))
                            .spawn(move || read_loop(role, stream, mailbox));
                        if let Err(e) = spawned {
                            log::error!("{role}: cannot spawn reader: {e}");
                        }
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::WouldBlock => thread::sleep(ACCEPT_POLL),
                    Err(e) => {
                        log::error!("{role}: accept failed: {e}");
                        break;
                    }
                }
            }
        })
        .map_err(|source| TransportError::Io {
            session: 0,
            peer: role,
            source,
        })?;
    Ok(())
}

fn read_loop(role: Role, stream: TcpStream, mailbox: Arc<Mailbox>) {
    if let Err(e) = stream.set_nonblocking(false) {
        log::error!("{role}: {e}");
        return;
    }
    let mut reader = BufReader::new(stream);
    loop {
        match read_frame(&mut reader) {
            Ok(Some(frame)) => match Envelope::decode(&frame) {
                Ok(env) if env.receiver == role => mailbox.deliver(env),
                Ok(env) => log::warn!("{role}: dropping envelope addressed to {}", env.receiver),
                Err(e) => {
                    log::error!("{role}: undecodable frame: {e}");
                    return;
                }
            },
            Ok(None) => return,
            Err(e) => {
                log::debug!("{role}: connection closed: {e}");
                return;
            }
        }
    }
}

struct TcpEndpoint {
    role: Role,
    routes: Arc<HashMap<Role, SocketAddr>>,
    conns: Mutex<HashMap<Role, TcpStream>>,
    mailbox: Arc<Mailbox>,
    ledger: Ledger,
    steps: StepGuard,
}

impl TcpEndpoint {
    fn connect(&self, session: u64, peer: Role) -> Result<TcpStream, TransportError> {
        let addr = *self.routes.get(&peer).ok_or(TransportError::NoRoute(peer))?;
        let deadline = Instant::now() + CONNECT_RETRY;
        loop {
            match TcpStream::connect(addr) {
                Ok(stream) => {
                    stream.set_nodelay(true).ok();
                    return Ok(stream);
                }
                Err(source) if Instant::now() >= deadline => return Err(TransportError::Io { session, peer, source }),
                Err(_) => thread::sleep(Duration::from_millis(20)),
            }
        }
    }
}

impl Endpoint for TcpEndpoint {
    fn role(&self) -> Role {
        self.role
    }

    fn send(&self, envelope: Envelope) -> Result<(), TransportError> {
        self.steps.check(self.role, &envelope)?;
        let bytes = envelope.encode()?;
        let (session, peer) = (envelope.session, envelope.receiver);
        let mut conns = self.conns.lock().unwrap();
        let stream = match conns.entry(peer) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => e.insert(self.connect(session, peer)?),
        };
        if let Err(source) = write_frame(stream, &bytes) {
            conns.remove(&peer);
            return Err(TransportError::Io { session, peer, source });
        }
        self.ledger.record(&envelope);
        Ok(())
    }

    fn recv(&self, session: u64, from: Role, step: u16) -> Result<Envelope, TransportError> {
        self.mailbox.take(session, from, step)
    }
}
