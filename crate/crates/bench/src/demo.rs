//! One session of one protocol, checked against the plaintext result.

use eva_core::preprocess::DimSpec;
use eva_core::protocol::{run_session, EngineConfig, SessionTimings, SubReport};
use eva_core::transport::{Network, ProtocolId, SessionStats};
use eva_core::{DynamicRange, RngStream};
use serde::Serialize;

use crate::report::Check;
use crate::workloads;

/// Relative error above which a demo result counts as wrong.
pub const DEMO_TOLERANCE: f64 = 1e-10;
/// Inversion accuracy depends on conditioning.
pub const INVERSION_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct DemoConfig {
    pub protocol: ProtocolId,
    pub dims: DimSpec,
    pub delta: u32,
    pub seed: u64,
    pub engine: EngineConfig,
    /// Makes inversion inputs sum to zero.
    pub singular: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DemoReport {
    pub protocol: ProtocolId,
    pub dims: DimSpec,
    pub delta: u32,
    pub seed: u64,
    pub accepted: bool,
    pub relative_error: f64,
    pub stats: SessionStats,
    pub timings: SessionTimings,
    pub verdicts: Vec<SubReport>,
    pub checks: Vec<Check>,
}

pub fn tolerance(protocol: ProtocolId) -> f64 {
    if protocol == ProtocolId::S2pi {
        INVERSION_TOLERANCE
    } else {
        DEMO_TOLERANCE
    }
}

/// Runs the demo as session 1 on `network`. A singular inversion surfaces
/// as an error.
pub fn run(config: &DemoConfig, network: &dyn Network) -> eva_core::Result<DemoReport> {
    let range = DynamicRange::new(config.delta)?;
    let mut rng = RngStream::new(config.seed, u64::from(config.protocol as u8));
    let inputs = if config.singular && config.protocol == ProtocolId::S2pi {
        workloads::singular_inversion(config.dims.n, &range, &mut rng)
    } else {
        workloads::generate(config.protocol, config.dims, &range, &mut rng)?
    };
    let outcome = run_session(network, 1, config.seed, &inputs, &config.engine)?;
    let expected = workloads::plaintext(&inputs)?;
    let relative_error = outcome.reconstruct()?.relative_error(&expected)?;

    let mut checks = vec![
        Check::new(
            "verification",
            outcome.accepted(),
            format!("{} checks", outcome.reports.len()),
        ),
        Check::at_most("relative error", relative_error, tolerance(config.protocol)),
    ];
    if let Some(rounds) = workloads::expected_rounds(config.protocol) {
        checks.push(Check::equal("rounds", outcome.stats.messages, rounds));
    }
    let DimSpec { n, s, t, m } = config.dims;
    let square = config.protocol == ProtocolId::S2pi || (s == n && m == n && (t == n || !uses_t(config.protocol)));
    if square {
        if let Some(bytes) = workloads::expected_payload_bytes(config.protocol, n) {
            checks.push(Check::equal("payload bytes", outcome.stats.payload_bytes, bytes));
        }
    }
    Ok(DemoReport {
        protocol: config.protocol,
        dims: config.dims,
        delta: config.delta,
        seed: config.seed,
        accepted: outcome.accepted(),
        relative_error,
        stats: outcome.stats,
        timings: outcome.timings,
        verdicts: outcome.reports,
        checks,
    })
}

fn uses_t(protocol: ProtocolId) -> bool {
    matches!(protocol, ProtocolId::S3pm | ProtocolId::S3phm)
}

#[cfg(test)]
mod tests {
    use eva_core::transport::{InProcNetwork, Ledger};

    use super::*;
    use crate::report::all_passed;

    fn config(protocol: ProtocolId, n: usize) -> DemoConfig {
        DemoConfig {
            protocol,
            dims: DimSpec::square(n),
            delta: 4,
            seed: 1,
            engine: EngineConfig::default(),
            singular: false,
        }
    }

    #[test]
    fn every_protocol_passes_its_checks() {
        for p in workloads::MATRIX_PROTOCOLS {
            let net = InProcNetwork::new(Ledger::new());
            let report = run(&config(p, 6), &net).unwrap();
            assert!(all_passed(&report.checks), "{p}: {:?}", report.checks);
            assert_eq!(report.checks.len(), 4);
        }
    }

    #[test]
    fn rectangular_dims_skip_byte_check() {
        let net = InProcNetwork::new(Ledger::new());
        let mut cfg = config(ProtocolId::S3pm, 3);
        cfg.dims = DimSpec::three(3, 4, 5, 2);
        let report = run(&cfg, &net).unwrap();
        assert!(all_passed(&report.checks));
        assert_eq!(report.checks.len(), 3);
    }

    #[test]
    fn singular_inversion_is_an_error() {
        let net = InProcNetwork::new(Ledger::new());
        let mut cfg = config(ProtocolId::S2pi, 4);
        cfg.singular = true;
        let err = run(&cfg, &net).unwrap_err();
        assert!(matches!(err.root(), eva_core::Error::SingularInput { .. }));
    }
}
