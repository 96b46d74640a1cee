//! `eva`: run the secure matrix protocols and their experiments.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use eva_bench::net::{self, Binding, TransportKind};
use eva_bench::report::{all_passed, write_json};
use eva_bench::{audit, demo, precision, regress, tamper, Check};
use eva_core::preprocess::DimSpec;
use eva_core::protocol::EngineConfig;
use eva_core::transport::ProtocolId;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "eva", version, about = "Disguised secure matrix computation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the full report as JSON.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one session and compare it with the plaintext result.
    Demo(DemoArgs),
    /// Sweep relative error over matrix sizes and dynamic ranges.
    Precision(PrecisionArgs),
    /// Inject faults and measure detection.
    Tamper(TamperArgs),
    /// Compare measured rounds and bytes with the closed forms.
    CommAudit(AuditArgs),
    /// Train and evaluate a secure linear regression.
    Regress(RegressArgs),
}

#[derive(Args)]
struct NetArgs {
    #[arg(long, value_enum, default_value_t = TransportKind::Inproc)]
    transport: TransportKind,
    /// Listen address for a role, as ROLE=HOST:PORT (tcp only, repeatable).
    #[arg(long = "bind")]
    bind: Vec<Binding>,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long, default_value = "s2pm", value_parser = parse_protocol)]
    protocol: ProtocolId,
    /// Square size; overridden by --dims.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Chain dimensions n,s,t,m.
    #[arg(long, value_parser = parse_dims)]
    dims: Option<DimSpec>,
    #[arg(long, default_value_t = 4)]
    delta: u32,
    /// Verification rounds.
    #[arg(long, default_value_t = 20)]
    rounds: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Make the inversion inputs sum to zero.
    #[arg(long)]
    singular: bool,
    #[command(flatten)]
    net: NetArgs,
}

#[derive(Args)]
struct PrecisionArgs {
    /// Comma-separated protocols; defaults to the four products.
    #[arg(long, value_delimiter = ',', value_parser = parse_protocol)]
    protocol: Vec<ProtocolId>,
    /// Comma-separated sizes.
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50")]
    n: Vec<usize>,
    /// Comma-separated dynamic ranges.
    #[arg(long, value_delimiter = ',', default_value = "0,2,4,6,8,10")]
    delta: Vec<u32>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 20)]
    rounds: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TamperArgs {
    #[arg(long, default_value = "s2pm", value_parser = parse_protocol)]
    protocol: ProtocolId,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    delta: u32,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 20)]
    rounds: u32,
    /// Fault size in units of the honest verification threshold.
    #[arg(long, default_value_t = 10.0)]
    multiplier: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, value_delimiter = ',', default_value = "10,20")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    net: NetArgs,
}

#[derive(Args)]
struct RegressArgs {
    /// Numeric CSV with a header row; synthetic data when absent.
    #[arg(long, requires = "label")]
    csv: Option<PathBuf>,
    /// Label column, by header name or zero-based index.
    #[arg(long)]
    label: Option<String>,
    #[arg(long, default_value_t = 400)]
    samples: usize,
    #[arg(long, default_value_t = 10)]
    features: usize,
    #[arg(long, default_value_t = 0.3)]
    noise: f64,
    /// Fraction of rows held out for prediction.
    #[arg(long, default_value_t = 0.0)]
    test_fraction: f64,
    /// Number of features owned by the first party.
    #[arg(long)]
    split: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    net: NetArgs,
}

fn parse_protocol(s: &str) -> Result<ProtocolId, String> {
    ProtocolId::parse(s).ok_or_else(|| format!("unknown protocol {s:?}"))
}

fn parse_dims(s: &str) -> Result<DimSpec, String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [n] => Ok(DimSpec::square(n)),
        [n, s, t, m] => Ok(DimSpec::three(n, s, t, m)),
        _ => Err(format!("expected n or n,s,t,m, got {s:?}")),
    }
}

fn print_checks(checks: &[Check]) {
    for c in checks {
        println!(
            "  [{}] {:<28} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
}

fn finish<T: Serialize>(report: &T, checks: &[Check], out: Option<&PathBuf>) -> anyhow::Result<bool> {
    print_checks(checks);
    if let Some(path) = out {
        write_json(report, path)?;
        println!("report written to {}", path.display());
    }
    Ok(all_passed(checks))
}

fn engine(rounds: u32) -> EngineConfig {
    let mut config = EngineConfig::default();
    config.verify.rounds = rounds;
    config
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let out = cli.out.as_ref();
    match cli.command {
        Command::Demo(args) => {
            let network = net::build(args.net.transport, &args.net.bind)?;
            let config = demo::DemoConfig {
                protocol: args.protocol,
                dims: args.dims.unwrap_or(DimSpec::square(args.n)),
                delta: args.delta,
                seed: args.seed,
                engine: engine(args.rounds),
                singular: args.singular,
            };
            if !eva_bench::workloads::MATRIX_PROTOCOLS.contains(&config.protocol) {
                bail!("demo runs matrix protocols; use `regress` for {}", config.protocol);
            }
            let report = demo::run(&config, network.as_ref()).context("demo session failed")?;
            println!(
                "{} dims {:?} delta {}: relative error {:.3e}, {} rounds, {} payload bytes, {:.2} ms",
                report.protocol,
                report.dims,
                report.delta,
                report.relative_error,
                report.stats.messages,
                report.stats.payload_bytes,
                report.timings.total_ms
            );
            finish(&report, &report.checks, out)
        }
        Command::Precision(args) => {
            let config = precision::SweepConfig {
                protocols: if args.protocol.is_empty() {
                    eva_bench::workloads::PRODUCT_PROTOCOLS.to_vec()
                } else {
                    args.protocol
                },
                sizes: args.n,
                deltas: args.delta,
                trials: args.trials,
                seed: args.seed,
                verify_rounds: args.rounds,
            };
            let cells = precision::run(&config)?;
            println!(
                "{:<8} {:>5} {:>5} {:>12} {:>12} {:>8}",
                "proto", "n", "delta", "mre", "mean", "fail%"
            );
            for c in &cells {
                println!(
                    "{:<8} {:>5} {:>5} {:>12.3e} {:>12.3e} {:>8.2}",
                    c.protocol.to_string(),
                    c.n,
                    c.delta,
                    c.mre,
                    c.mean_error,
                    100.0 * c.failure_rate
                );
            }
            let checks = precision::checks(&cells);
            finish(&cells, &checks, out)
        }
        Command::Tamper(args) => {
            let config = tamper::TamperConfig {
                protocol: args.protocol,
                n: args.n,
                delta: args.delta,
                trials: args.trials,
                rounds: args.rounds,
                multiplier: args.multiplier,
                seed: args.seed,
            };
            let report = tamper::run(&config)?;
            println!(
                "{} rounds {}: detected {}/{} ({:.4}, 99% lower {:.4}); per-check rate {:.4}; miss bound {:.3e}",
                report.protocol,
                report.rounds,
                report.detected,
                report.trials,
                report.detection_rate,
                report.detection_ci99_lower,
                report.per_check_rate,
                report.miss_bound
            );
            let checks = tamper::checks(&report);
            finish(&report, &checks, out)
        }
        Command::CommAudit(args) => {
            let network = net::build(args.net.transport, &args.net.bind)?;
            let rows = audit::run(network.as_ref(), &args.n, args.seed)?;
            println!(
                "{:<8} {:>5} {:>7} {:>9} {:>12} {:>12}",
                "proto", "n", "rounds", "expected", "payload", "expected"
            );
            let show = |v: Option<u64>| v.map_or("-".to_string(), |v| v.to_string());
            for r in &rows {
                println!(
                    "{:<8} {:>5} {:>7} {:>9} {:>12} {:>12}",
                    r.protocol.to_string(),
                    r.n,
                    r.rounds,
                    show(r.expected_rounds),
                    r.payload_bytes,
                    show(r.expected_payload_bytes)
                );
            }
            let checks = audit::checks(&rows);
            finish(&rows, &checks, out)
        }
        Command::Regress(args) => {
            let network = net::build(args.net.transport, &args.net.bind)?;
            let source = match args.csv {
                Some(path) => regress::DataSource::Csv {
                    path,
                    label: regress::LabelColumn::parse(args.label.as_deref().unwrap_or_default()),
                },
                None => regress::DataSource::Synthetic {
                    samples: args.samples,
                    features: args.features,
                    noise: args.noise,
                },
            };
            let config = regress::RegressConfig {
                source,
                test_fraction: args.test_fraction,
                split: args.split,
                seed: args.seed,
            };
            let r = regress::run(&config, network.as_ref())?;
            println!(
                "{}: {} train / {} eval samples, {} features",
                r.source, r.train_samples, r.eval_samples, r.features
            );
            let m = &r.metrics;
            println!(
                "  mae {:.4e}  mse {:.4e}  rmse {:.4e}  r2 {:.6}  lnre {:.3e}  rrs {:.3e}  mre {:.3e}  prediction mre {:.3e}",
                m.mae, m.mse, m.rmse, m.r2, m.lnre, m.rrs, m.mre, r.prediction_mre
            );
            println!(
                "  training {} rounds {:.1} ms, prediction {} rounds {:.1} ms",
                r.training.rounds, r.training.timings.total_ms, r.prediction.rounds, r.prediction.timings.total_ms
            );
            finish(&r, &r.checks, out)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EVA_LOG", "warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("eva: one or more checks failed");
            ExitCode::from(1)
        }
        Err(e) => {
            // Library errors already embed their sources in their message.
            let mut message = String::new();
            for cause in e.chain().map(|c| c.to_string()) {
                if !message.contains(&cause) {
                    message = if message.is_empty() {
                        cause
                    } else {
                        format!("{message}: {cause}")
                    };
                }
            }
            eprintln!("eva: error: {message}");
            ExitCode::from(2)
        }
    }
}
