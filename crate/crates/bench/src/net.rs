//! Network backend selection.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use eva_core::transport::{InProcNetwork, Ledger, Network, Role, TcpNetwork};
use serde::Serialize;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TransportKind {
    #[default]
    Inproc,
    Tcp,
}

/// A `ROLE=HOST:PORT` listen address.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub role: Role,
    pub addr: SocketAddr,
}

impl FromStr for Binding {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (role, addr) = s
            .split_once('=')
            .ok_or_else(|| anyhow!("expected ROLE=HOST:PORT, got {s:?}"))?;
        let role = Role::parse(role.trim()).ok_or_else(|| anyhow!("unknown role {role:?}"))?;
        let addr = addr
            .trim()
            .parse()
            .with_context(|| format!("bad socket address {addr:?}"))?;
        Ok(Self { role, addr })
    }
}

/// Builds a network hosting every role in this process. TCP roles without
/// a binding listen on an ephemeral loopback port.
pub fn build(kind: TransportKind, bindings: &[Binding]) -> anyhow::Result<Box<dyn Network>> {
    match kind {
        TransportKind::Inproc => {
            if !bindings.is_empty() {
                bail!("--bind only applies to the tcp transport");
            }
            Ok(Box::new(InProcNetwork::new(Ledger::new())))
        }
        TransportKind::Tcp => {
            let loopback: SocketAddr = "127.0.0.1:0".parse().unwrap();
            let mut addrs: HashMap<Role, SocketAddr> = Role::ALL.into_iter().map(|r| (r, loopback)).collect();
            for b in bindings {
                addrs.insert(b.role, b.addr);
            }
            let net = TcpNetwork::bind(&addrs, &Role::ALL, Ledger::new())?;
            for role in Role::ALL {
                log::debug!("{role} listening on {}", net.addr(role).unwrap());
            }
            Ok(Box::new(net))
        }
    }
}
