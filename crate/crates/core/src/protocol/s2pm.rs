//! Two-party disguised multiplication.
//!
//! | offset | from → to | payload |
//! |--------|-----------|---------|
//! | 0 | CS → left | `(R_a, r_a, St)` |
//! | 1 | CS → right | `(R_b, r_b, St)` |
//! | 2 | left → right | `Â = A + R_a` |
//! | 3 | right → left | `B̂ = B + R_b` |
//! | 4 | right → left | `(VF_b, T)` |
//! | 5 | left → right | `VF_a` |

use crate::error::Result;
use crate::matrix::{mat_mul, Matrix};
use crate::random::random_like;
use crate::transport::{ProtocolId, Role};

use super::{require, Party, Share, TamperTarget};

pub const STEPS: u16 = 6;

/// Left operand holder; computes `V_a` with `V_a + V_b = A * B`.
pub fn left(p: &mut Party<'_>, base: u16, right: Role, a: &Matrix) -> Result<Share> {
    let bundle = p.recv_bundle(base)?;
    require(bundle.disguise.shape() == a.shape(), || {
        format!(
            "left operand {:?} does not match disguise {:?}",
            a.shape(),
            bundle.disguise.shape()
        )
    })?;
    let a_hat = a.add(&bundle.disguise)?;
    p.send(base + 2, right, vec![a_hat])?;

    let b_hat = p.recv_one(base + 3, right)?;
    let mut msg = p.recv(base + 4, right, 2)?;
    let t = msg.pop().unwrap();
    let vf_b = msg.pop().unwrap();

    let masked = mat_mul(&bundle.disguise, &b_hat)?;
    let mut v = t.add(&bundle.blind)?.sub(&masked)?;
    p.tamper(base, TamperTarget::Share, &mut v);
    let mut vf = v.add(&masked)?;
    p.tamper(base, TamperTarget::Verification, &mut vf);
    p.send(base + 5, right, vec![vf.clone()])?;

    let share = Share {
        v,
        vf,
        st: bundle.standard,
    };
    p.verify(base, ProtocolId::S2pm, &share, &[&vf_b])?;
    Ok(share)
}

/// Right operand holder; draws its share `V_b` at random.
pub fn right(p: &mut Party<'_>, base: u16, left: Role, b: &Matrix) -> Result<Share> {
    let bundle = p.recv_bundle(base + 1)?;
    require(bundle.disguise.shape() == b.shape(), || {
        format!(
            "right operand {:?} does not match disguise {:?}",
            b.shape(),
            bundle.disguise.shape()
        )
    })?;
    let b_hat = b.add(&bundle.disguise)?;
    p.send(base + 3, left, vec![b_hat])?;

    let a_hat = p.recv_one(base + 2, left)?;
    let masked_product = mat_mul(&a_hat, b)?;
    let range = p.config.disguise;
    let v = random_like(&masked_product, &range, &mut p.rng);
    let mut vf = v.sub(&masked_product)?;
    let mut t = bundle.blind.sub(&vf)?;
    p.tamper(base, TamperTarget::Share, &mut t);
    p.tamper(base, TamperTarget::Verification, &mut vf);
    p.send(base + 4, left, vec![vf.clone(), t])?;

    let vf_a = p.recv_one(base + 5, left)?;
    let share = Share {
        v,
        vf,
        st: bundle.standard,
    };
    p.verify(base, ProtocolId::S2pm, &share, &[&vf_a])?;
    Ok(share)
}
