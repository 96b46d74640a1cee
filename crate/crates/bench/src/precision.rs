//! Error sweeps over matrix size and dynamic range.

use eva_core::preprocess::DimSpec;
use eva_core::protocol::{run_inproc, EngineConfig, Inputs};
use eva_core::transport::ProtocolId;
use eva_core::{DynamicRange, Matrix, RngStream};
use rayon::prelude::*;
use serde::Serialize;

use crate::report::Check;
use crate::workloads;

/// A trial whose relative error exceeds this counts as a wrong result.
pub const FAILURE_THRESHOLD: f64 = 1e-3;
/// Worst-case error bound asserted for the product protocols.
pub const PRODUCT_MRE_LIMIT: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct SweepConfig {
    pub protocols: Vec<ProtocolId>,
    pub sizes: Vec<usize>,
    pub deltas: Vec<u32>,
    pub trials: usize,
    pub seed: u64,
    pub verify_rounds: u32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            protocols: workloads::PRODUCT_PROTOCOLS.to_vec(),
            sizes: vec![10, 20, 30, 40, 50],
            deltas: vec![0, 2, 4, 6, 8, 10],
            trials: 100,
            seed: 0,
            verify_rounds: 20,
        }
    }
}

/// Results of all trials at one `(protocol, n, delta)`.
#[derive(Clone, Debug, Serialize)]
pub struct Cell {
    pub protocol: ProtocolId,
    pub n: usize,
    pub delta: u32,
    pub trials: usize,
    /// Largest relative Frobenius error over the trials.
    pub mre: f64,
    pub mean_error: f64,
    pub failures: usize,
    pub failure_rate: f64,
    pub rejections: usize,
}

/// Computes the reference result of a trial.
pub type Oracle<'a> = dyn Fn(&Inputs) -> Matrix + Sync + 'a;

/// Runs the sweep with the library's own plaintext kernels as reference.
pub fn run(config: &SweepConfig) -> eva_core::Result<Vec<Cell>> {
    run_with_oracle(config, &|inputs: &Inputs| {
        workloads::plaintext(inputs).expect("plaintext reference on generated inputs")
    })
}

/// Runs the sweep; trials run in parallel, each with its own streams, so
/// results do not depend on scheduling.
pub fn run_with_oracle(config: &SweepConfig, oracle: &Oracle<'_>) -> eva_core::Result<Vec<Cell>> {
    let mut cells = Vec::new();
    for (pi, &protocol) in config.protocols.iter().enumerate() {
        for (ni, &n) in config.sizes.iter().enumerate() {
            for (di, &delta) in config.deltas.iter().enumerate() {
                let cell_id = ((pi * 64 + ni) * 64 + di) as u64;
                cells.push(run_cell(config, protocol, n, delta, cell_id, oracle)?);
            }
        }
    }
    Ok(cells)
}

fn run_cell(
    config: &SweepConfig,
    protocol: ProtocolId,
    n: usize,
    delta: u32,
    cell_id: u64,
    oracle: &Oracle<'_>,
) -> eva_core::Result<Cell> {
    let range = DynamicRange::new(delta)?;
    let mut engine = EngineConfig {
        disguise: range,
        ..EngineConfig::default()
    };
    engine.verify.rounds = config.verify_rounds;
    let results: Vec<(f64, bool)> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = RngStream::new(config.seed, (cell_id << 32) | trial);
            let inputs = workloads::generate(protocol, DimSpec::square(n), &range, &mut rng)?;
            let outcome = run_inproc(trial, config.seed ^ cell_id, &inputs, &engine)?;
            let error = outcome.reconstruct()?.relative_error(&oracle(&inputs))?;
            Ok((error, outcome.accepted()))
        })
        .collect::<eva_core::Result<_>>()?;
    let trials = results.len();
    let mre = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let mean_error = results.iter().map(|r| r.0).sum::<f64>() / trials.max(1) as f64;
    let failures = results.iter().filter(|r| !(r.0 <= FAILURE_THRESHOLD)).count();
    log::info!("{protocol} n={n} delta={delta}: mre {mre:.2e}, {failures} failures");
    Ok(Cell {
        protocol,
        n,
        delta,
        trials,
        mre,
        mean_error,
        failures,
        failure_rate: failures as f64 / trials.max(1) as f64,
        rejections: results.iter().filter(|r| !r.1).count(),
    })
}

/// Zero failures everywhere, and the product-protocol error bound.
pub fn checks(cells: &[Cell]) -> Vec<Check> {
    let failures: usize = cells.iter().map(|c| c.failures).sum();
    let trials: usize = cells.iter().map(|c| c.trials).sum();
    let rejections: usize = cells.iter().map(|c| c.rejections).sum();
    let mut checks = vec![
        Check::new(
            "failure rate",
            failures == 0,
            format!("{failures} of {trials} trials over {FAILURE_THRESHOLD:.0e}"),
        ),
        Check::new(
            "verification",
            rejections == 0,
            format!("{rejections} rejected sessions"),
        ),
    ];
    let products: Vec<&Cell> = cells
        .iter()
        .filter(|c| workloads::PRODUCT_PROTOCOLS.contains(&c.protocol))
        .collect();
    if !products.is_empty() {
        let worst = products.iter().map(|c| c.mre).fold(0.0, f64::max);
        checks.push(Check::at_most("product mre", worst, PRODUCT_MRE_LIMIT));
    }
    checks
}
