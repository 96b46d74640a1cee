//! End-to-end secure regression on synthetic or CSV data, scored against
//! the plaintext least-squares fit.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use eva_core::protocol::{EngineConfig, SessionTimings};
use eva_core::random::gen_gaussian;
use eva_core::regression::{
    evaluate, least_squares, max_relative_error, r_squared, s3plrp, s3plrt, with_intercept, MetricsReport,
    Standardizer, VerticalDataset,
};
use eva_core::transport::Network;
use eva_core::{mat_mul, Matrix, RngStream};
use rand::seq::SliceRandom;
use serde::Serialize;

use crate::report::Check;

pub const LNRE_LIMIT: f64 = 1e-6;
pub const RRS_LIMIT: f64 = 1e-4;
pub const PREDICTION_LIMIT: f64 = 1e-8;

/// Which CSV column holds the labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// A bare integer is a column index unless the header has a column of
    /// that name.
    pub fn parse(s: &str) -> Self {
        match s.parse() {
            Ok(i) => Self::Index(i),
            Err(_) => Self::Name(s.to_string()),
        }
    }

    fn resolve(&self, headers: &csv::StringRecord) -> anyhow::Result<usize> {
        let by_name = |name: &str| headers.iter().position(|h| h.trim() == name);
        let found = match self {
            Self::Name(name) => by_name(name),
            Self::Index(i) => by_name(&i.to_string()).or((*i < headers.len()).then_some(*i)),
        };
        found.ok_or_else(|| {
            let names: Vec<&str> = headers.iter().collect();
            anyhow!("label column {self:?} not found; columns are {names:?}")
        })
    }
}

#[derive(Clone, Debug)]
pub enum DataSource {
    /// Gaussian features, a Gaussian true model and Gaussian label noise.
    Synthetic {
        samples: usize,
        features: usize,
        noise: f64,
    },
    Csv {
        path: PathBuf,
        label: LabelColumn,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        Self::Synthetic {
            samples: 400,
            features: 10,
            noise: 0.3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegressConfig {
    pub source: DataSource,
    /// Fraction of samples held out for prediction; zero predicts on the
    /// training set.
    pub test_fraction: f64,
    /// Features owned by the first party; defaults to half.
    pub split: Option<usize>,
    pub seed: u64,
}

impl Default for RegressConfig {
    fn default() -> Self {
        Self {
            source: DataSource::default(),
            test_fraction: 0.0,
            split: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PhaseReport {
    pub rounds: u64,
    pub payload_bytes: u64,
    pub accepted: bool,
    pub timings: SessionTimings,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegressReport {
    pub source: String,
    pub train_samples: usize,
    pub eval_samples: usize,
    pub features: usize,
    pub split: usize,
    #[serde(flatten)]
    pub metrics: MetricsReport,
    pub r2_plain: f64,
    /// Largest elementwise relative error of the secure predictions against
    /// the plaintext model's predictions.
    pub prediction_mre: f64,
    pub beta: Vec<f64>,
    pub beta_plain: Vec<f64>,
    pub training: PhaseReport,
    pub prediction: PhaseReport,
    pub checks: Vec<Check>,
}

/// Reads a numeric CSV with a header row into features and labels.
pub fn load_csv(path: &Path, label: &LabelColumn) -> anyhow::Result<(Matrix, Matrix, Vec<String>)> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let label_col = label.resolve(&headers)?;
    if headers.len() < 3 {
        bail!(
            "{} needs at least two feature columns besides the label",
            path.display()
        );
    }
    let names = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_col)
        .map(|(_, h)| h.trim().to_string())
        .collect();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .with_context(|| format!("row {} column {:?}: not a number: {cell:?}", i + 2, &headers[j]))?;
            if !v.is_finite() {
                bail!("row {} column {:?}: non-finite value", i + 2, &headers[j]);
            }
            if j == label_col {
                y.push(v);
            } else {
                x.push(v);
            }
        }
        rows += 1;
    }
    let features = headers.len() - 1;
    Ok((
        Matrix::from_vec(rows, features, x)?,
        Matrix::from_vec(rows, 1, y)?,
        names,
    ))
}

fn synthetic(samples: usize, features: usize, noise: f64, rng: &mut RngStream) -> (Matrix, Matrix) {
    let x = gen_gaussian(samples, features, rng);
    let beta = gen_gaussian(features + 1, 1, rng);
    let noise = gen_gaussian(samples, 1, rng).scale(noise);
    let y = mat_mul(&with_intercept(&x), &beta)
        .and_then(|m| m.add(&noise))
        .expect("shapes agree by construction");
    (x, y)
}

fn select_rows(m: &Matrix, rows: &[usize]) -> Matrix {
    Matrix::from_fn(rows.len(), m.cols(), |i, j| m.get(rows[i], j))
}

fn phase(outcome: &eva_core::protocol::SessionOutcome) -> PhaseReport {
    PhaseReport {
        rounds: outcome.stats.messages,
        payload_bytes: outcome.stats.payload_bytes,
        accepted: outcome.accepted(),
        timings: outcome.timings,
    }
}

/// Trains on the training split and predicts on the evaluation split, as
/// sessions 1 and 2 of `network`.
pub fn run(config: &RegressConfig, network: &dyn Network) -> anyhow::Result<RegressReport> {
    let mut rng = RngStream::new(config.seed, 0x5245_4752);
    let (x, y, source) = match &config.source {
        DataSource::Synthetic {
            samples,
            features,
            noise,
        } => {
            let (x, y) = synthetic(*samples, *features, *noise, &mut rng);
            (x, y, format!("synthetic {samples}x{features}"))
        }
        DataSource::Csv { path, label } => {
            let (x, y, _) = load_csv(path, label)?;
            (x, y, path.display().to_string())
        }
    };
    if !(0.0..1.0).contains(&config.test_fraction) {
        bail!("test fraction must lie in [0, 1), got {}", config.test_fraction);
    }

    let samples = x.rows();
    let mut order: Vec<usize> = (0..samples).collect();
    let held_out = (samples as f64 * config.test_fraction).round() as usize;
    if held_out > 0 {
        order.shuffle(&mut rng);
    }
    let (train_rows, test_rows) = order.split_at(samples - held_out);
    let (train_x, train_y) = (select_rows(&x, train_rows), select_rows(&y, train_rows));
    if train_x.rows() <= train_x.cols() + 1 {
        bail!(
            "{} training samples cannot determine {} coefficients",
            train_x.rows(),
            train_x.cols() + 1
        );
    }

    let scaler = Standardizer::fit(&train_x)?;
    let split = config.split.unwrap_or(x.cols() / 2);
    let train = VerticalDataset::partition(&scaler.transform(&train_x)?, &train_y, split)?;
    let eval = if held_out > 0 {
        VerticalDataset::partition(
            &scaler.transform(&select_rows(&x, test_rows))?,
            &select_rows(&y, test_rows),
            split,
        )?
    } else {
        train.clone()
    };

    let engine = EngineConfig::unit_scale();
    let (model, trained) = s3plrt(network, 1, config.seed, &train, &engine)?;
    let predicted = s3plrp(network, 2, config.seed, &eval.x1, &eval.x2, &model, &engine)?;
    let secure = predicted.reconstruct()?;

    let beta = model.combined()?;
    let beta_plain = least_squares(&train.design(), &train.y)?;
    let plain_predictions = mat_mul(&eval.design(), &beta_plain)?;
    let r2_plain = r_squared(&plain_predictions, &eval.y)?;
    let metrics = evaluate(&secure, &eval.y, &beta, &beta_plain, r2_plain)?;
    let prediction_mre = max_relative_error(&secure, &plain_predictions)?;

    let training = phase(&trained);
    let prediction = phase(&predicted);
    let mut checks = vec![
        Check::new("training verification", training.accepted, ""),
        Check::new("prediction verification", prediction.accepted, ""),
        Check::at_most("rrs", metrics.rrs, RRS_LIMIT),
    ];
    if matches!(config.source, DataSource::Synthetic { .. }) {
        checks.push(Check::at_most("lnre", metrics.lnre, LNRE_LIMIT));
        checks.push(Check::at_most("prediction mre", prediction_mre, PREDICTION_LIMIT));
    }
    Ok(RegressReport {
        source,
        train_samples: train.samples(),
        eval_samples: eval.samples(),
        features: x.cols(),
        split,
        metrics,
        r2_plain,
        prediction_mre,
        beta: beta.into_data(),
        beta_plain: beta_plain.into_data(),
        training,
        prediction,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use std::io::Write;

    use eva_core::transport::{InProcNetwork, Ledger};

    use super::*;
    use crate::report::all_passed;

    fn net() -> InProcNetwork {
        InProcNetwork::new(Ledger::new())
    }

    #[test]
    fn synthetic_run_passes() {
        let report = run(&RegressConfig::default(), &net()).unwrap();
        assert!(all_passed(&report.checks), "{:?}", report.checks);
        assert_eq!(report.training.rounds, 73);
        assert_eq!(report.prediction.rounds, 24);
        assert_eq!(report.beta.len(), 11);
    }

    #[test]
    fn held_out_split() {
        let config = RegressConfig {
            test_fraction: 0.25,
            ..RegressConfig::default()
        };
        let report = run(&config, &net()).unwrap();
        assert_eq!((report.train_samples, report.eval_samples), (300, 100));
        assert!(all_passed(&report.checks), "{:?}", report.checks);
    }

    fn csv_file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_label_by_name_or_index() {
        let f = csv_file("a,y,b\n1,2,3\n4,5,6.5\n");
        let (x, y, names) = load_csv(f.path(), &LabelColumn::parse("y")).unwrap();
        assert_eq!(x.data(), &[1.0, 3.0, 4.0, 6.5]);
        assert_eq!(y.data(), &[2.0, 5.0]);
        assert_eq!(names, ["a", "b"]);
        let (x, _, _) = load_csv(f.path(), &LabelColumn::parse("0")).unwrap();
        assert_eq!(x.data(), &[2.0, 3.0, 5.0, 6.5]);
    }

    #[test]
    fn csv_errors_are_specific() {
        let f = csv_file("a,b,c\n1,2,3\n");
        let err = load_csv(f.path(), &LabelColumn::parse("price")).unwrap_err();
        assert!(err.to_string().contains("not found"), "{err}");
        let f = csv_file("a,b,c\n1,x,3\n");
        let err = load_csv(f.path(), &LabelColumn::parse("c")).unwrap_err();
        assert!(format!("{err:#}").contains("not a number"), "{err:#}");
    }
}
