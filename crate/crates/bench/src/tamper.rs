//! Fault injection against the verification phase, and honest-run
//! completeness.
//!
//! Each trial first runs honestly to learn the verification threshold, then
//! repeats the same session (same inputs and randomness) with one element of
//! one party's share or verification share shifted by a multiple of that
//! threshold.

use eva_core::preprocess::DimSpec;
use eva_core::protocol::{run_inproc, EngineConfig, Tamper, TamperTarget};
use eva_core::transport::{ProtocolId, Role};
use eva_core::{DynamicRange, RngStream};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::report::{wilson_lower, Check, Z_99};
use crate::workloads;

/// Lower confidence bound the single-round detection rate must clear.
pub const SINGLE_ROUND_FLOOR: f64 = 0.48;

#[derive(Clone, Debug, Serialize)]
pub struct TamperConfig {
    pub protocol: ProtocolId,
    pub n: usize,
    pub delta: u32,
    pub trials: usize,
    pub rounds: u32,
    /// Fault size in units of the honest verification threshold.
    pub multiplier: f64,
    pub seed: u64,
}

impl Default for TamperConfig {
    fn default() -> Self {
        Self {
            protocol: ProtocolId::S2pm,
            n: 8,
            delta: 4,
            trials: 10_000,
            rounds: 20,
            multiplier: 10.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TamperReport {
    pub protocol: ProtocolId,
    pub rounds: u32,
    pub trials: usize,
    pub multiplier: f64,
    /// Sessions in which at least one party rejected.
    pub detected: usize,
    pub detection_rate: f64,
    pub detection_ci99_lower: f64,
    /// Individual party checks, and how many of them rejected.
    pub checks_run: usize,
    pub checks_rejected: usize,
    pub per_check_rate: f64,
    /// Probability that every party misses the fault in all rounds.
    pub miss_bound: f64,
    pub honest_rejections: usize,
}

fn roles(protocol: ProtocolId) -> &'static [Role] {
    match protocol {
        ProtocolId::S2pm => &[Role::Alice, Role::Bob],
        _ => &[Role::Alice, Role::Bob, Role::Carol],
    }
}

pub fn run(config: &TamperConfig) -> eva_core::Result<TamperReport> {
    if !matches!(config.protocol, ProtocolId::S2pm | ProtocolId::S3pm) {
        return Err(eva_core::Error::InvalidInput(format!(
            "tamper injection supports s2pm and s3pm, not {}",
            config.protocol
        )));
    }
    let range = DynamicRange::new(config.delta)?;
    let mut engine = EngineConfig::default();
    engine.verify.rounds = config.rounds;
    let parties = roles(config.protocol);

    let results: Vec<(bool, usize, usize, bool)> = (0..config.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = RngStream::new(config.seed, trial);
            let inputs = workloads::generate(config.protocol, DimSpec::square(config.n), &range, &mut rng)?;
            let seed = config.seed.wrapping_add(trial);
            let honest = run_inproc(trial, seed, &inputs, &engine)?;
            let scale = honest.reports.iter().map(|r| r.verdict.threshold).fold(0.0, f64::max);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let tamper = Tamper {
                role: parties[rng.random_range(0..parties.len())],
                base: 0,
                target: if rng.random::<bool>() {
                    TamperTarget::Share
                } else {
                    TamperTarget::Verification
                },
                row: rng.random_range(0..config.n),
                col: rng.random_range(0..config.n),
                magnitude: sign * config.multiplier * scale,
            };
            let faulty = run_inproc(
                trial,
                seed,
                &inputs,
                &EngineConfig {
                    tamper: Some(tamper),
                    ..engine.clone()
                },
            )?;
            let rejected = faulty.reports.iter().filter(|r| !r.verdict.accepted).count();
            Ok((!faulty.accepted(), faulty.reports.len(), rejected, honest.accepted()))
        })
        .collect::<eva_core::Result<_>>()?;

    let trials = results.len();
    let detected = results.iter().filter(|r| r.0).count();
    let checks_run: usize = results.iter().map(|r| r.1).sum();
    let checks_rejected: usize = results.iter().map(|r| r.2).sum();
    Ok(TamperReport {
        protocol: config.protocol,
        rounds: config.rounds,
        trials,
        multiplier: config.multiplier,
        detected,
        detection_rate: detected as f64 / trials.max(1) as f64,
        detection_ci99_lower: wilson_lower(detected as u64, trials as u64, Z_99),
        checks_run,
        checks_rejected,
        per_check_rate: checks_rejected as f64 / checks_run.max(1) as f64,
        miss_bound: 0.5f64.powi((config.rounds as usize * parties.len()) as i32),
        honest_rejections: results.iter().filter(|r| !r.3).count(),
    })
}

/// Gates: with many rounds every fault is caught; with one round the
/// detection rate is at least one half, with confidence. A zero multiplier
/// must never be flagged.
pub fn checks(report: &TamperReport) -> Vec<Check> {
    let mut checks = vec![Check::equal("honest rejections", report.honest_rejections, 0)];
    if report.multiplier == 0.0 {
        checks.push(Check::equal("false alarms", report.detected, 0));
    } else if report.rounds == 1 {
        checks.push(Check::new(
            "single-round detection",
            report.detection_rate >= 0.5 && report.detection_ci99_lower > SINGLE_ROUND_FLOOR,
            format!(
                "rate {:.4}, 99% lower bound {:.4} > {SINGLE_ROUND_FLOOR}",
                report.detection_rate, report.detection_ci99_lower
            ),
        ));
    } else {
        checks.push(Check::equal("detected", report.detected, report.trials));
    }
    checks
}

#[derive(Clone, Debug, Serialize)]
pub struct CompletenessReport {
    pub protocol: ProtocolId,
    pub trials: usize,
    pub rejections: usize,
}

/// Runs `trials` honest sessions and counts rejections.
pub fn completeness(
    protocol: ProtocolId,
    n: usize,
    delta: u32,
    trials: usize,
    seed: u64,
) -> eva_core::Result<CompletenessReport> {
    let range = DynamicRange::new(delta)?;
    let engine = EngineConfig::default();
    let accepted: Vec<bool> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = RngStream::new(seed, (u64::from(protocol as u8) << 32) | trial);
            let inputs = workloads::generate(protocol, DimSpec::square(n), &range, &mut rng)?;
            Ok(run_inproc(trial, seed, &inputs, &engine)?.accepted())
        })
        .collect::<eva_core::Result<_>>()?;
    Ok(CompletenessReport {
        protocol,
        trials,
        rejections: accepted.iter().filter(|a| !**a).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::all_passed;

    fn small(protocol: ProtocolId, rounds: u32, multiplier: f64) -> TamperConfig {
        TamperConfig {
            protocol,
            n: 4,
            trials: 200,
            rounds,
            multiplier,
            ..TamperConfig::default()
        }
    }

    #[test]
    fn faults_are_caught() {
        for p in [ProtocolId::S2pm, ProtocolId::S3pm] {
            let report = run(&small(p, 20, 10.0)).unwrap();
            assert!(all_passed(&checks(&report)), "{report:?}");
            assert_eq!(report.detected, 200);
        }
    }

    #[test]
    fn single_round_catches_about_half_per_check() {
        let report = run(&small(ProtocolId::S2pm, 1, 10.0)).unwrap();
        assert!(
            report.per_check_rate > 0.35 && report.per_check_rate < 0.65,
            "{report:?}"
        );
        assert!(report.detection_rate >= report.per_check_rate);
    }

    #[test]
    fn zero_fault_raises_no_alarm() {
        let report = run(&small(ProtocolId::S3pm, 20, 0.0)).unwrap();
        assert_eq!(report.detected, 0);
        assert!(all_passed(&checks(&report)));
    }

    #[test]
    fn inversion_is_not_a_tamper_target() {
        assert!(run(&small(ProtocolId::S2pi, 20, 10.0)).is_err());
    }

    #[test]
    fn honest_runs_are_accepted() {
        let report = completeness(ProtocolId::S3phm, 4, 4, 20, 3).unwrap();
        assert_eq!(report.rejections, 0);
    }
}
