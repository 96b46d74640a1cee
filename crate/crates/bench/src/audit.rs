//! Communication audit: measured rounds and payload against the closed forms.

use eva_core::preprocess::DimSpec;
use eva_core::protocol::{run_session, EngineConfig};
use eva_core::random::gen_gaussian;
use eva_core::regression::{s3plrp, s3plrt, VerticalDataset};
use eva_core::transport::{Network, ProtocolId};
use eva_core::{DynamicRange, RngStream};
use serde::Serialize;

use crate::report::Check;
use crate::workloads;

#[derive(Clone, Debug, Serialize)]
pub struct AuditRow {
    pub protocol: ProtocolId,
    pub n: usize,
    pub rounds: u64,
    pub expected_rounds: Option<u64>,
    pub payload_bytes: u64,
    pub expected_payload_bytes: Option<u64>,
    pub header_bytes: u64,
    pub preprocess_bytes: u64,
}

impl AuditRow {
    pub fn checks(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        let label = format!("{} n={}", self.protocol, self.n);
        if let Some(rounds) = self.expected_rounds {
            checks.push(Check::equal(format!("{label} rounds"), self.rounds, rounds));
        }
        if let Some(bytes) = self.expected_payload_bytes {
            checks.push(Check::equal(format!("{label} payload"), self.payload_bytes, bytes));
        }
        checks
    }
}

/// Runs one honest session per protocol and size on `network`. Regression
/// sessions use `n` samples of `n / 2` features; their payload is reported
/// without a closed form.
pub fn run(network: &dyn Network, sizes: &[usize], seed: u64) -> eva_core::Result<Vec<AuditRow>> {
    let range = DynamicRange::default();
    let engine = EngineConfig::default();
    let mut rows = Vec::new();
    let mut session = 1;
    for &n in sizes {
        for protocol in workloads::MATRIX_PROTOCOLS {
            let mut rng = RngStream::new(seed, session);
            let inputs = workloads::generate(protocol, DimSpec::square(n), &range, &mut rng)?;
            let outcome = run_session(network, session, seed, &inputs, &engine)?;
            rows.push(row(protocol, n, &outcome.stats));
            session += 1;
        }

        let features = (n / 2).max(2);
        let mut rng = RngStream::new(seed, session);
        let x = gen_gaussian(n, features, &mut rng);
        let y = gen_gaussian(n, 1, &mut rng);
        let data = VerticalDataset::partition(&x, &y, features / 2)?;
        let unit = EngineConfig::unit_scale();
        let (model, train) = s3plrt(network, session, seed, &data, &unit)?;
        rows.push(row(ProtocolId::S3plrt, n, &train.stats));
        session += 1;
        let predict = s3plrp(network, session, seed, &data.x1, &data.x2, &model, &unit)?;
        rows.push(row(ProtocolId::S3plrp, n, &predict.stats));
        session += 1;
    }
    Ok(rows)
}

fn row(protocol: ProtocolId, n: usize, stats: &eva_core::transport::SessionStats) -> AuditRow {
    AuditRow {
        protocol,
        n,
        rounds: stats.messages,
        expected_rounds: workloads::expected_rounds(protocol),
        payload_bytes: stats.payload_bytes,
        expected_payload_bytes: workloads::expected_payload_bytes(protocol, n),
        header_bytes: stats.header_bytes,
        preprocess_bytes: stats.preprocess.payload_bytes,
    }
}

pub fn checks(rows: &[AuditRow]) -> Vec<Check> {
    rows.iter().flat_map(AuditRow::checks).collect()
}
