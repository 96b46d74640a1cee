//! End-to-end sessions over the in-process network, checked against
//! plaintext results computed with nalgebra.

use eva_core::protocol::schedule::{s2phm, s2pi, s3phm, S2PM_STEPS, S3PM_STEPS};
use eva_core::protocol::{run_inproc, EngineConfig, Inputs, SessionOutcome, Tamper, TamperTarget, VerifyConfig};
use eva_core::random::{gen_dynamic_uniform, gen_gaussian, gen_nonsingular};
use eva_core::transport::{ProtocolId, Role};
use eva_core::{DynamicRange, Error, Matrix, RngStream};
use nalgebra::DMatrix;

fn to_na(m: &Matrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.data())
}

fn rel(ours: &Matrix, oracle: &DMatrix<f64>) -> f64 {
    (to_na(ours) - oracle).norm() / oracle.norm()
}

fn dyn_mat(rows: usize, cols: usize, rng: &mut RngStream) -> Matrix {
    gen_dynamic_uniform(rows, cols, &DynamicRange::default(), rng)
}

fn run(inputs: &Inputs, seed: u64) -> SessionOutcome {
    run_inproc(1, seed, inputs, &EngineConfig::default()).unwrap()
}

#[test]
fn two_party_product_matches_oracle() {
    for (seed, (n, s, m)) in [(4, 4, 4), (10, 10, 10), (3, 7, 5), (6, 2, 1), (1, 5, 1)]
        .into_iter()
        .enumerate()
    {
        let mut rng = RngStream::new(seed as u64, 100);
        let a = dyn_mat(n, s, &mut rng);
        let b = dyn_mat(s, m, &mut rng);
        let out = run(
            &Inputs::S2pm {
                a: a.clone(),
                b: b.clone(),
            },
            seed as u64,
        );
        assert!(out.accepted());
        let err = rel(&out.reconstruct().unwrap(), &(to_na(&a) * to_na(&b)));
        assert!(err <= 1e-10, "{n}x{s}x{m}: {err:e}");
    }
}

#[test]
fn three_party_product_matches_oracle() {
    for (seed, (n, s, t, m)) in [(5, 5, 5, 5), (2, 3, 4, 5), (4, 1, 6, 2), (11, 11, 40, 1)]
        .into_iter()
        .enumerate()
    {
        let mut rng = RngStream::new(seed as u64, 101);
        let a = dyn_mat(n, s, &mut rng);
        let b = dyn_mat(s, t, &mut rng);
        let c = dyn_mat(t, m, &mut rng);
        let out = run(
            &Inputs::S3pm {
                a: a.clone(),
                b: b.clone(),
                c: c.clone(),
            },
            seed as u64,
        );
        assert!(out.accepted());
        let err = rel(&out.reconstruct().unwrap(), &(to_na(&a) * to_na(&b) * to_na(&c)));
        assert!(err <= 1e-10, "{n}x{s}x{t}x{m}: {err:e}");
    }
}

#[test]
fn hybrid_products_match_oracle() {
    let mut rng = RngStream::new(3, 102);
    let (n, s, t, m) = (6, 5, 4, 3);
    let (a1, b1) = (dyn_mat(n, s, &mut rng), dyn_mat(n, s, &mut rng));
    let (a2, b2) = (dyn_mat(s, t, &mut rng), dyn_mat(s, t, &mut rng));
    let c = dyn_mat(t, m, &mut rng);
    let sum1 = to_na(&a1) + to_na(&b1);
    let sum2 = to_na(&a2) + to_na(&b2);

    let out = run(
        &Inputs::S2phm {
            a1: a1.clone(),
            a2: a2.clone(),
            b1: b1.clone(),
            b2: b2.clone(),
        },
        5,
    );
    assert!(out.accepted());
    assert!(rel(&out.reconstruct().unwrap(), &(&sum1 * &sum2)) <= 1e-10);

    let out = run(
        &Inputs::S3phm {
            a1,
            a2,
            b1,
            b2,
            c: c.clone(),
        },
        6,
    );
    assert!(out.accepted());
    assert!(rel(&out.reconstruct().unwrap(), &(sum1 * sum2 * to_na(&c))) <= 1e-10);
}

#[test]
fn inversion_matches_oracle() {
    for seed in 0..10u64 {
        let mut rng = RngStream::new(seed, 103);
        let n = 2 + seed as usize;
        let target = gen_nonsingular(n, &mut rng, 1e4).unwrap();
        let b = gen_gaussian(n, n, &mut rng);
        let a = target.sub(&b).unwrap();
        let out = run(&Inputs::S2pi { a, b }, seed);
        assert!(out.accepted());
        let oracle = to_na(&target).try_inverse().unwrap();
        let err = rel(&out.reconstruct().unwrap(), &oracle);
        assert!(err <= 1e-8, "n={n}: {err:e}");
    }
}

#[test]
fn singular_sum_aborts_inversion() {
    let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
    let b = Matrix::from_rows(&[[0.0, 0.0], [-1.0, 0.0]]).unwrap();
    let err = run_inproc(9, 1, &Inputs::S2pi { a, b }, &EngineConfig::default()).unwrap_err();
    assert!(matches!(err.root(), Error::SingularInput { session: 9, .. }), "{err}");
}

#[test]
fn rounds_and_bytes_follow_closed_forms() {
    let n = 10usize;
    let mut rng = RngStream::new(4, 104);
    let mut sq = || dyn_mat(n, n, &mut rng);
    let cases = [
        (Inputs::S2pm { a: sq(), b: sq() }, 6, 11),
        (
            Inputs::S3pm {
                a: sq(),
                b: sq(),
                c: sq(),
            },
            15,
            26,
        ),
        (
            Inputs::S2pi {
                a: Matrix::identity(n).scale(3.0),
                b: sq().scale(1e-6),
            },
            19,
            34,
        ),
        (
            Inputs::S2phm {
                a1: sq(),
                a2: sq(),
                b1: sq(),
                b2: sq(),
            },
            12,
            22,
        ),
        (
            Inputs::S3phm {
                a1: sq(),
                a2: sq(),
                b1: sq(),
                b2: sq(),
                c: sq(),
            },
            42,
            74,
        ),
    ];
    for (inputs, rounds, words) in cases {
        let out = run(&inputs, 2);
        assert_eq!(out.stats.messages, rounds, "{}", inputs.protocol());
        assert_eq!(
            out.stats.payload_bytes,
            (words * n * n * 8) as u64,
            "{}",
            inputs.protocol()
        );
        assert_eq!(out.stats.verify.messages, 0);
    }
    assert_eq!(s2pi::STEPS, 19);
    assert_eq!(s2phm::STEPS, 12);
    assert_eq!(s3phm::STEPS, 42);
    assert_eq!((S2PM_STEPS, S3PM_STEPS), (6, 15));
}

#[test]
fn commodity_server_sends_one_bundle_per_party_per_product() {
    let mut rng = RngStream::new(5, 105);
    let mut sq = || dyn_mat(4, 4, &mut rng);
    let out = run(
        &Inputs::S3phm {
            a1: sq(),
            a2: sq(),
            b1: sq(),
            b2: sq(),
            c: sq(),
        },
        3,
    );
    // Two two-party and two three-party products.
    assert_eq!(out.stats.messages_from(Role::CommodityServer), 2 * 2 + 2 * 3);
    assert_eq!(out.stats.preprocess.messages, 10);
}

fn tampered(target: TamperTarget, role: Role, magnitude: f64, rounds: u32) -> EngineConfig {
    EngineConfig {
        verify: VerifyConfig {
            rounds,
            ..VerifyConfig::default()
        },
        tamper: Some(Tamper {
            role,
            base: 0,
            target,
            row: 1,
            col: 2,
            magnitude,
        }),
        ..EngineConfig::default()
    }
}

/// Largest verification threshold seen in an honest run.
fn honest_scale(inputs: &Inputs, seed: u64) -> f64 {
    let out = run(inputs, seed);
    assert!(out.accepted());
    out.reports.iter().map(|r| r.verdict.threshold).fold(0.0, f64::max)
}

#[test]
fn tampering_is_detected_by_every_party() {
    let mut rng = RngStream::new(6, 106);
    let two = Inputs::S2pm {
        a: dyn_mat(5, 5, &mut rng),
        b: dyn_mat(5, 5, &mut rng),
    };
    let three = Inputs::S3pm {
        a: dyn_mat(5, 5, &mut rng),
        b: dyn_mat(5, 5, &mut rng),
        c: dyn_mat(5, 5, &mut rng),
    };
    for (inputs, roles) in [
        (&two, &[Role::Alice, Role::Bob][..]),
        (&three, &[Role::Alice, Role::Bob, Role::Carol][..]),
    ] {
        let scale = honest_scale(inputs, 11);
        for &role in roles {
            for target in [TamperTarget::Share, TamperTarget::Verification] {
                let out = run_inproc(1, 11, inputs, &tampered(target, role, 10.0 * scale, 20)).unwrap();
                assert!(!out.accepted(), "{} {role} {target:?}", inputs.protocol());
                // Every honest checker rejects too.
                assert_eq!(out.rejecting_roles().len(), roles.len());
            }
        }
    }
}

#[test]
fn zero_magnitude_tamper_is_accepted() {
    let mut rng = RngStream::new(7, 107);
    let inputs = Inputs::S2pm {
        a: dyn_mat(4, 4, &mut rng),
        b: dyn_mat(4, 4, &mut rng),
    };
    let out = run_inproc(1, 1, &inputs, &tampered(TamperTarget::Share, Role::Bob, 0.0, 20)).unwrap();
    assert!(out.accepted());
}

#[test]
fn verification_can_be_disabled() {
    let mut rng = RngStream::new(8, 108);
    let inputs = Inputs::S2pm {
        a: dyn_mat(3, 3, &mut rng),
        b: dyn_mat(3, 3, &mut rng),
    };
    let config = EngineConfig {
        verify_enabled: false,
        ..EngineConfig::default()
    };
    let out = run_inproc(1, 1, &inputs, &config).unwrap();
    assert!(out.reports.is_empty());
    assert_eq!(out.timings.verify_ms, 0.0);
}

#[test]
fn zero_rounds_is_an_error() {
    let mut rng = RngStream::new(9, 109);
    let inputs = Inputs::S2pm {
        a: dyn_mat(3, 3, &mut rng),
        b: dyn_mat(3, 3, &mut rng),
    };
    let mut config = EngineConfig::default();
    config.verify.rounds = 0;
    assert!(run_inproc(1, 1, &inputs, &config).is_err());
}

#[test]
fn shape_mismatch_is_rejected_before_any_traffic() {
    let inputs = Inputs::S2pm {
        a: Matrix::zeros(2, 3),
        b: Matrix::zeros(4, 2),
    };
    assert!(matches!(
        run_inproc(1, 1, &inputs, &EngineConfig::default()),
        Err(Error::InvalidInput(_))
    ));
}

#[test]
fn sessions_are_reproducible_from_the_seed() {
    let mut rng = RngStream::new(10, 110);
    let inputs = Inputs::S3pm {
        a: dyn_mat(3, 3, &mut rng),
        b: dyn_mat(3, 3, &mut rng),
        c: dyn_mat(3, 3, &mut rng),
    };
    let first = run(&inputs, 77);
    let again = run(&inputs, 77);
    let other = run(&inputs, 78);
    assert_eq!(first.shares, again.shares);
    assert_ne!(first.shares, other.shares);
    assert_eq!(first.protocol, ProtocolId::S3pm);
}
