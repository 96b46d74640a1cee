//! Hybrid multiplication of sums of privately held matrices, assembled from
//! two- and three-party products.

use crate::error::Result;
use crate::matrix::{mat_mul, Matrix};
use crate::transport::Role;

use super::s3pm::Chain;
use super::schedule::{s2phm, s3phm};
use super::{require, s2pm, s3pm, Party};

fn check_pair(first: &Matrix, second: &Matrix) -> Result<()> {
    require(first.cols() == second.rows(), || {
        format!("pair {:?} x {:?} is not multipliable", first.shape(), second.shape())
    })
}

/// Alice's share of `(A1 + B1)(A2 + B2)`.
pub fn s2phm_alice(p: &mut Party<'_>, base: u16, a1: &Matrix, a2: &Matrix) -> Result<Matrix> {
    check_pair(a1, a2)?;
    let local = mat_mul(a1, a2)?;
    let cross1 = s2pm::left(p, base + s2phm::ALICE_LEFT, Role::Bob, a1)?;
    let cross2 = s2pm::right(p, base + s2phm::BOB_LEFT, Role::Bob, a2)?;
    Ok(local.add(&cross1.v)?.add(&cross2.v)?)
}

pub fn s2phm_bob(p: &mut Party<'_>, base: u16, b1: &Matrix, b2: &Matrix) -> Result<Matrix> {
    check_pair(b1, b2)?;
    let local = mat_mul(b1, b2)?;
    let cross1 = s2pm::right(p, base + s2phm::ALICE_LEFT, Role::Alice, b2)?;
    let cross2 = s2pm::left(p, base + s2phm::BOB_LEFT, Role::Alice, b1)?;
    Ok(local.add(&cross1.v)?.add(&cross2.v)?)
}

const ABC: Chain = Chain {
    first: Role::Alice,
    middle: Role::Bob,
    last: Role::Carol,
};

const BAC: Chain = Chain {
    first: Role::Bob,
    middle: Role::Alice,
    last: Role::Carol,
};

/// Alice's share of `(A1 + B1)(A2 + B2) C`.
pub fn s3phm_alice(p: &mut Party<'_>, base: u16, a1: &Matrix, a2: &Matrix) -> Result<Matrix> {
    check_pair(a1, a2)?;
    let own = mat_mul(a1, a2)?;
    let v0 = s2pm::left(p, base + s3phm::ALICE_CAROL, Role::Carol, &own)?;
    let v1 = s3pm::first(p, base + s3phm::ALICE_BOB_CAROL, ABC, a1)?;
    let v2 = s3pm::middle(p, base + s3phm::BOB_ALICE_CAROL, BAC, a2)?;
    Ok(v0.v.add(&v1.v)?.add(&v2.v)?)
}

pub fn s3phm_bob(p: &mut Party<'_>, base: u16, b1: &Matrix, b2: &Matrix) -> Result<Matrix> {
    check_pair(b1, b2)?;
    let own = mat_mul(b1, b2)?;
    let v1 = s2pm::left(p, base + s3phm::BOB_CAROL, Role::Carol, &own)?;
    let v2 = s3pm::middle(p, base + s3phm::ALICE_BOB_CAROL, ABC, b2)?;
    let v3 = s3pm::first(p, base + s3phm::BOB_ALICE_CAROL, BAC, b1)?;
    Ok(v1.v.add(&v2.v)?.add(&v3.v)?)
}

pub fn s3phm_carol(p: &mut Party<'_>, base: u16, c: &Matrix) -> Result<Matrix> {
    let v0 = s2pm::right(p, base + s3phm::ALICE_CAROL, Role::Alice, c)?;
    let v1 = s2pm::right(p, base + s3phm::BOB_CAROL, Role::Bob, c)?;
    let v2 = s3pm::last(p, base + s3phm::ALICE_BOB_CAROL, ABC, c)?;
    let v3 = s3pm::last(p, base + s3phm::BOB_ALICE_CAROL, BAC, c)?;
    Ok(v0.v.add(&v1.v)?.add(&v2.v)?.add(&v3.v)?)
}
