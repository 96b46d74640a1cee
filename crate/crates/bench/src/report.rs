//! Pass/fail checks and report output.

use std::fs;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }

    /// `value <= limit`, with both in the detail line.
    pub fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self::new(name, value <= limit, format!("{value:.3e} <= {limit:.0e}"))
    }

    pub fn equal<T: PartialEq + std::fmt::Display>(name: impl Into<String>, observed: T, expected: T) -> Self {
        let passed = observed == expected;
        Self::new(name, passed, format!("observed {observed}, expected {expected}"))
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Writes `value` as pretty JSON to `path`.
pub fn write_json<T: Serialize>(value: &T, path: &Path) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing report to {}", path.display()))
}

/// Lower end of the Wilson score interval for `successes` out of `trials`
/// at normal quantile `z`.
pub fn wilson_lower(successes: u64, trials: u64, z: f64) -> f64 {
    if trials == 0 {
        return 0.0;
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let centre = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (centre - spread) / (1.0 + z2 / n)
}

/// Two-sided 99% normal quantile.
pub const Z_99: f64 = 2.575_829_303_548_901;
