//! Three-party disguised multiplication `A * B * C`, with the middle operand
//! holder doing the heavy products and splitting `B̂` by full-rank
//! decomposition.
//!
//! | offset | from → to | payload |
//! |--------|-----------|---------|
//! | 0, 1, 2 | CS → first, middle, last | `(R, r, St)` |
//! | 3 | first → middle | `Â` |
//! | 4 | last → middle | `Ĉ` |
//! | 5 | middle → last | `(ψ1, γ1) = (ÂB̂, ÂR_b)` |
//! | 6 | middle → first | `(ψ2, γ2) = (B̂Ĉ, R_bĈ)` |
//! | 7 | middle → first | `B1` |
//! | 8 | middle → last | `B2` |
//! | 9 | first → middle | `(T_a, VF_a)` |
//! | 10 | first → last | `(R_a B1, VF_a)` |
//! | 11 | middle → first | `VF_b` |
//! | 12 | middle → last | `(T_b, VF_b)` |
//! | 13 | last → first | `VF_c` |
//! | 14 | last → middle | `VF_c` |

use crate::error::Result;
use crate::matrix::{full_rank_decompose, mat_mul, Matrix, RANK_TOL};
use crate::random::random_like;
use crate::transport::{ProtocolId, Role};

use super::{require, Party, Share, TamperTarget};

pub const STEPS: u16 = 15;

/// Roles in chain order.
#[derive(Clone, Copy, Debug)]
pub struct Chain {
    pub first: Role,
    pub middle: Role,
    pub last: Role,
}

fn check_shape(op: &Matrix, disguise: &Matrix, who: &str) -> Result<()> {
    require(op.shape() == disguise.shape(), || {
        format!(
            "{who} operand {:?} does not match disguise {:?}",
            op.shape(),
            disguise.shape()
        )
    })
}

pub fn first(p: &mut Party<'_>, base: u16, chain: Chain, a: &Matrix) -> Result<Share> {
    let bundle = p.recv_bundle(base)?;
    check_shape(a, &bundle.disguise, "first")?;
    let a_hat = a.add(&bundle.disguise)?;
    p.send(base + 3, chain.middle, vec![a_hat])?;

    let mut msg = p.recv(base + 6, chain.middle, 2)?;
    let gamma2 = msg.pop().unwrap();
    let psi2 = msg.pop().unwrap();
    let b1 = p.recv_one(base + 7, chain.middle)?;

    let s_a = mat_mul(&bundle.disguise, &gamma2)?;
    let m_a = mat_mul(a, &psi2)?;
    let own = m_a.add(&s_a)?;
    let range = p.config.disguise;
    let v = random_like(&own, &range, &mut p.rng);
    let mut vf = own.sub(&v)?;
    let mut t_a = vf.sub(&bundle.blind)?;
    p.tamper(base, TamperTarget::Share, &mut t_a);
    p.tamper(base, TamperTarget::Verification, &mut vf);
    let t1 = mat_mul(&bundle.disguise, &b1)?;
    p.send(base + 9, chain.middle, vec![t_a, vf.clone()])?;
    p.send(base + 10, chain.last, vec![t1, vf.clone()])?;

    let vf_b = p.recv_one(base + 11, chain.middle)?;
    let vf_c = p.recv_one(base + 13, chain.last)?;
    let share = Share {
        v,
        vf,
        st: bundle.standard,
    };
    p.verify(base, ProtocolId::S3pm, &share, &[&vf_b, &vf_c])?;
    Ok(share)
}

pub fn middle(p: &mut Party<'_>, base: u16, chain: Chain, b: &Matrix) -> Result<Share> {
    let bundle = p.recv_bundle(base + 1)?;
    check_shape(b, &bundle.disguise, "middle")?;
    let a_hat = p.recv_one(base + 3, chain.first)?;
    let c_hat = p.recv_one(base + 4, chain.last)?;

    let b_hat = b.add(&bundle.disguise)?;
    let psi1 = mat_mul(&a_hat, &b_hat)?;
    let gamma1 = mat_mul(&a_hat, &bundle.disguise)?;
    let psi2 = mat_mul(&b_hat, &c_hat)?;
    let gamma2 = mat_mul(&bundle.disguise, &c_hat)?;
    let m_b = mat_mul(&gamma1, &c_hat)?;
    p.send(base + 5, chain.last, vec![psi1, gamma1])?;
    p.send(base + 6, chain.first, vec![psi2, gamma2])?;

    let (b1, b2) = full_rank_decompose(&b_hat, RANK_TOL)?;
    p.send(base + 7, chain.first, vec![b1])?;
    p.send(base + 8, chain.last, vec![b2])?;

    let mut msg = p.recv(base + 9, chain.first, 2)?;
    let vf_a = msg.pop().unwrap();
    let t_a = msg.pop().unwrap();

    let range = p.config.disguise;
    let v = random_like(&m_b, &range, &mut p.rng);
    let mut vf = m_b.neg().sub(&v)?;
    let mut t_b = t_a.add(&vf)?.sub(&bundle.blind)?;
    p.tamper(base, TamperTarget::Share, &mut t_b);
    p.tamper(base, TamperTarget::Verification, &mut vf);
    p.send(base + 11, chain.first, vec![vf.clone()])?;
    p.send(base + 12, chain.last, vec![t_b, vf.clone()])?;

    let vf_c = p.recv_one(base + 14, chain.last)?;
    let share = Share {
        v,
        vf,
        st: bundle.standard,
    };
    p.verify(base, ProtocolId::S3pm, &share, &[&vf_a, &vf_c])?;
    Ok(share)
}

pub fn last(p: &mut Party<'_>, base: u16, chain: Chain, c: &Matrix) -> Result<Share> {
    let bundle = p.recv_bundle(base + 2)?;
    check_shape(c, &bundle.disguise, "last")?;
    let c_hat = c.add(&bundle.disguise)?;
    p.send(base + 4, chain.middle, vec![c_hat])?;

    let mut msg = p.recv(base + 5, chain.middle, 2)?;
    let gamma1 = msg.pop().unwrap();
    let psi1 = msg.pop().unwrap();
    let b2 = p.recv_one(base + 8, chain.middle)?;
    let s_c = mat_mul(&gamma1, &bundle.disguise)?;
    let m_c = mat_mul(&psi1, &bundle.disguise)?;

    let mut msg = p.recv(base + 10, chain.first, 2)?;
    let vf_a = msg.pop().unwrap();
    let t1 = msg.pop().unwrap();
    let t2 = mat_mul(&b2, &bundle.disguise)?;
    let s_b = mat_mul(&t1, &t2)?;

    let mut msg = p.recv(base + 12, chain.middle, 2)?;
    let vf_b = msg.pop().unwrap();
    let t_b = msg.pop().unwrap();

    // Both shares use the same local sum S_b + S_c - M_c.
    let local = s_b.add(&s_c)?.sub(&m_c)?;
    let mut v = t_b.add(&local)?.sub(&bundle.blind)?;
    p.tamper(base, TamperTarget::Share, &mut v);
    let mut vf = local.sub(&v)?;
    p.tamper(base, TamperTarget::Verification, &mut vf);
    p.send(base + 13, chain.first, vec![vf.clone()])?;
    p.send(base + 14, chain.middle, vec![vf.clone()])?;

    let share = Share {
        v,
        vf,
        st: bundle.standard,
    };
    p.verify(base, ProtocolId::S3pm, &share, &[&vf_a, &vf_b])?;
    Ok(share)
}
