//! Step layouts of the composed protocols and the bundle plans the commodity
//! server derives from them. Every node computes the same plan from the
//! (public) operand dimensions.

use crate::preprocess::{BundleKind, BundleRequest, DimSpec, DisguiseClass};
use crate::transport::Role;

use super::{s2pm, s3pm};

pub const S2PM_STEPS: u16 = s2pm::STEPS;
pub const S3PM_STEPS: u16 = s3pm::STEPS;

/// Inversion: two products building the masked sum, one share message,
/// then the unmasking product.
pub mod s2pi {
    pub const FIRST: u16 = 0;
    pub const SECOND: u16 = 6;
    pub const SUM_SHARE: u16 = 12;
    pub const THIRD: u16 = 13;
    pub const STEPS: u16 = 19;
}

pub mod s2phm {
    pub const ALICE_LEFT: u16 = 0;
    pub const BOB_LEFT: u16 = 6;
    pub const STEPS: u16 = 12;
}

pub mod s3phm {
    pub const ALICE_CAROL: u16 = 0;
    pub const BOB_CAROL: u16 = 6;
    pub const ALICE_BOB_CAROL: u16 = 12;
    pub const BOB_ALICE_CAROL: u16 = 27;
    pub const STEPS: u16 = 42;
}

pub mod s3plrt {
    pub const GRAM: u16 = 0;
    pub const INVERSE: u16 = 12;
    pub const COEFFICIENTS: u16 = 31;
    pub const STEPS: u16 = 73;
}

pub mod s3plrp {
    pub const SHARED: u16 = 0;
    pub const ALICE_CAROL: u16 = 12;
    pub const BOB_CAROL: u16 = 18;
    pub const STEPS: u16 = 24;
}

pub fn s2pm_plan(base: u16, left: Role, right: Role, dims: DimSpec) -> Vec<BundleRequest> {
    vec![BundleRequest {
        base,
        kind: BundleKind::Two { left, right },
        dims,
        class: DisguiseClass::Product,
    }]
}

pub fn s3pm_plan(base: u16, first: Role, middle: Role, last: Role, dims: DimSpec) -> Vec<BundleRequest> {
    vec![BundleRequest {
        base,
        kind: BundleKind::Three { first, middle, last },
        dims,
        class: DisguiseClass::Product,
    }]
}

/// Inversion of an `n x n` sum.
pub fn s2pi_plan(base: u16, n: usize) -> Vec<BundleRequest> {
    let dims = DimSpec::two(n, n, n);
    let mut plan = s2pm_plan(base + s2pi::FIRST, Role::Alice, Role::Bob, dims);
    plan.extend(s2pm_plan(base + s2pi::SECOND, Role::Alice, Role::Bob, dims));
    plan.extend(s2pm_plan(base + s2pi::THIRD, Role::Bob, Role::Alice, dims));
    for req in &mut plan {
        req.class = DisguiseClass::Inversion;
    }
    plan
}

/// `(A1 + B1)(A2 + B2)` with `A1, B1: n x s` and `A2, B2: s x m`.
pub fn s2phm_plan(base: u16, n: usize, s: usize, m: usize) -> Vec<BundleRequest> {
    let dims = DimSpec::two(n, s, m);
    let mut plan = s2pm_plan(base + s2phm::ALICE_LEFT, Role::Alice, Role::Bob, dims);
    plan.extend(s2pm_plan(base + s2phm::BOB_LEFT, Role::Bob, Role::Alice, dims));
    plan
}

/// `(A1 + B1)(A2 + B2) C` with chain dimensions `(n, s, t, m)`.
pub fn s3phm_plan(base: u16, dims: DimSpec) -> Vec<BundleRequest> {
    let DimSpec { n, s, t, m } = dims;
    let pair = DimSpec::two(n, t, m);
    let chain = DimSpec::three(n, s, t, m);
    let mut plan = s2pm_plan(base + s3phm::ALICE_CAROL, Role::Alice, Role::Carol, pair);
    plan.extend(s2pm_plan(base + s3phm::BOB_CAROL, Role::Bob, Role::Carol, pair));
    plan.extend(s3pm_plan(
        base + s3phm::ALICE_BOB_CAROL,
        Role::Alice,
        Role::Bob,
        Role::Carol,
        chain,
    ));
    plan.extend(s3pm_plan(
        base + s3phm::BOB_ALICE_CAROL,
        Role::Bob,
        Role::Alice,
        Role::Carol,
        chain,
    ));
    plan
}

/// Training on `samples x features` design shares.
pub fn s3plrt_plan(samples: usize, features: usize) -> Vec<BundleRequest> {
    let mut plan = s2phm_plan(s3plrt::GRAM, features, samples, features);
    plan.extend(s2pi_plan(s3plrt::INVERSE, features));
    plan.extend(s3phm_plan(
        s3plrt::COEFFICIENTS,
        DimSpec::three(features, features, samples, 1),
    ));
    plan
}

/// Prediction on `samples x features` test shares.
pub fn s3plrp_plan(samples: usize, features: usize) -> Vec<BundleRequest> {
    let dims = DimSpec::two(samples, features, 1);
    let mut plan = s2phm_plan(s3plrp::SHARED, samples, features, 1);
    plan.extend(s2pm_plan(s3plrp::ALICE_CAROL, Role::Alice, Role::Carol, dims));
    plan.extend(s2pm_plan(s3plrp::BOB_CAROL, Role::Bob, Role::Carol, dims));
    plan
}
