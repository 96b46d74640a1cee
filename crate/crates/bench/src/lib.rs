//! Experiment harness for the disguised matrix protocols: demos, precision
//! sweeps, tamper injection, communication audits and regression runs. Each
//! experiment returns a serializable report whose checks decide the exit
//! status of the `eva` binary.

pub mod audit;
pub mod demo;
pub mod net;
pub mod precision;
pub mod regress;
pub mod report;
pub mod tamper;
pub mod workloads;

pub use report::Check;
