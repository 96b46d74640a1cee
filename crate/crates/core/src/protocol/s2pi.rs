//! Two-party inversion of `A + B`.
//!
//! Alice masks with a random nonsingular `P`, Bob with `Q`; two products give
//! shares of `T = P (A + B) Q`, Alice reveals her part of `T` to Bob, who
//! inverts it and feeds `Q T^-1` into a final product with `P`.

use crate::error::{Error, Result};
use crate::matrix::{invert_above, mat_mul, Matrix};
use crate::random::gen_nonsingular;
use crate::transport::Role;

use super::schedule::s2pi::{FIRST, SECOND, SUM_SHARE, THIRD};
use super::{require, s2pm, Party};

const NOISE_FACTOR: f64 = 64.0;

fn check_square(m: &Matrix) -> Result<()> {
    require(m.is_square(), || {
        format!("inversion needs a square operand, got {:?}", m.shape())
    })
}

/// Alice's side; returns her share `U_a` of `(A + B)^-1`.
pub fn alice(p: &mut Party<'_>, base: u16, a: &Matrix) -> Result<Matrix> {
    check_square(a)?;
    let cond = p.config.nonsingular_cond;
    let left_mask = gen_nonsingular(a.rows(), &mut p.rng, cond)?;
    let masked = mat_mul(&left_mask, a)?;
    let first = s2pm::left(p, base + FIRST, Role::Bob, &masked)?;
    let second = s2pm::left(p, base + SECOND, Role::Bob, &left_mask)?;
    p.send(base + SUM_SHARE, Role::Bob, vec![first.v.add(&second.v)?])?;
    let third = s2pm::right(p, base + THIRD, Role::Bob, &left_mask)?;
    Ok(third.v)
}

/// Bob's side; returns his share `U_b`. A numerically singular `T` aborts
/// the protocol with [`Error::SingularInput`].
pub fn bob(p: &mut Party<'_>, base: u16, b: &Matrix) -> Result<Matrix> {
    check_square(b)?;
    let cond = p.config.nonsingular_cond;
    let right_mask = gen_nonsingular(b.rows(), &mut p.rng, cond)?;
    let masked = mat_mul(b, &right_mask)?;
    let first = s2pm::right(p, base + FIRST, Role::Alice, &right_mask)?;
    let second = s2pm::right(p, base + SECOND, Role::Alice, &masked)?;
    let alice_part = p.recv_one(base + SUM_SHARE, Role::Alice)?;
    let t = alice_part.add(&first.v)?.add(&second.v)?;
    // Rounding in the three summands bounds how small a genuine pivot of T
    // can be told apart from cancellation.
    let noise = [&alice_part, &first.v, &second.v]
        .iter()
        .fold(0.0f64, |acc, m| acc.max(m.max_abs()));
    let floor = NOISE_FACTOR * t.rows() as f64 * f64::EPSILON * noise;
    let t_inv = invert_above(&t, floor).map_err(|source| Error::SingularInput {
        session: p.session,
        source,
    })?;
    let unmask = mat_mul(&right_mask, &t_inv)?;
    let third = s2pm::left(p, base + THIRD, Role::Alice, &unmask)?;
    Ok(third.v)
}
