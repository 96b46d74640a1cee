//! Random protocol inputs and their plaintext results.

use eva_core::preprocess::DimSpec;
use eva_core::protocol::Inputs;
use eva_core::random::{gen_dynamic_uniform, gen_nonsingular};
use eva_core::transport::ProtocolId;
use eva_core::{invert, mat_mul, DynamicRange, Error, Matrix, Result, RngStream};

/// The five matrix protocols, in table order.
pub const MATRIX_PROTOCOLS: [ProtocolId; 5] = [
    ProtocolId::S2pm,
    ProtocolId::S3pm,
    ProtocolId::S2pi,
    ProtocolId::S2phm,
    ProtocolId::S3phm,
];

/// Protocols whose result is linear in each operand.
pub const PRODUCT_PROTOCOLS: [ProtocolId; 4] =
    [ProtocolId::S2pm, ProtocolId::S3pm, ProtocolId::S2phm, ProtocolId::S3phm];

/// Bound handed to the nonsingular generator for inversion workloads; its
/// spectrum spans the square root of the bound, so `cond(A + B) <= 1e4`.
pub const INVERSION_COND_BOUND: f64 = 1e8;

/// Rounds of one session of `protocol`.
pub fn expected_rounds(protocol: ProtocolId) -> Option<u64> {
    match protocol {
        ProtocolId::S2pm => Some(6),
        ProtocolId::S3pm => Some(15),
        ProtocolId::S2pi => Some(19),
        ProtocolId::S2phm => Some(12),
        ProtocolId::S3phm => Some(42),
        ProtocolId::S3plrt => Some(73),
        ProtocolId::S3plrp => Some(24),
        ProtocolId::CsBundle => None,
    }
}

/// Payload in 64-bit words per `n^2` for square `n x n` operands. Not
/// defined for the regression protocols, whose operands are not square.
pub fn payload_words(protocol: ProtocolId) -> Option<u64> {
    match protocol {
        ProtocolId::S2pm => Some(11),
        ProtocolId::S3pm => Some(26),
        ProtocolId::S2pi => Some(34),
        ProtocolId::S2phm => Some(22),
        ProtocolId::S3phm => Some(74),
        _ => None,
    }
}

/// Expected payload bytes of a square session of size `n`.
pub fn expected_payload_bytes(protocol: ProtocolId, n: usize) -> Option<u64> {
    payload_words(protocol).map(|w| w * (n * n * 8) as u64)
}

/// Inputs for `protocol` with entries drawn from `range`. Products use the
/// chain dimensions of `dims`; inversion uses `dims.n`.
pub fn generate(protocol: ProtocolId, dims: DimSpec, range: &DynamicRange, rng: &mut RngStream) -> Result<Inputs> {
    let DimSpec { n, s, t, m } = dims;
    let mut draw = |r, c| gen_dynamic_uniform(r, c, range, rng);
    Ok(match protocol {
        ProtocolId::S2pm => Inputs::S2pm {
            a: draw(n, s),
            b: draw(s, m),
        },
        ProtocolId::S3pm => Inputs::S3pm {
            a: draw(n, s),
            b: draw(s, t),
            c: draw(t, m),
        },
        ProtocolId::S2phm => Inputs::S2phm {
            a1: draw(n, s),
            a2: draw(s, m),
            b1: draw(n, s),
            b2: draw(s, m),
        },
        ProtocolId::S3phm => Inputs::S3phm {
            a1: draw(n, s),
            a2: draw(s, t),
            b1: draw(n, s),
            b2: draw(s, t),
            c: draw(t, m),
        },
        ProtocolId::S2pi => {
            let target = gen_nonsingular(n, rng, INVERSION_COND_BOUND)?;
            let target = target.scale(range.rms() / target.rms());
            let b = gen_dynamic_uniform(n, n, range, rng);
            let a = target.sub(&b)?;
            Inputs::S2pi { a, b }
        }
        other => return Err(Error::InvalidInput(format!("{other} has no matrix workload generator"))),
    })
}

/// Inversion inputs whose sum is exactly zero.
pub fn singular_inversion(n: usize, range: &DynamicRange, rng: &mut RngStream) -> Inputs {
    let a = gen_dynamic_uniform(n, n, range, rng);
    Inputs::S2pi { b: a.neg(), a }
}

/// The result the shares of `inputs` should add up to.
pub fn plaintext(inputs: &Inputs) -> Result<Matrix> {
    Ok(match inputs {
        Inputs::S2pm { a, b } => mat_mul(a, b)?,
        Inputs::S3pm { a, b, c } => mat_mul(&mat_mul(a, b)?, c)?,
        Inputs::S2pi { a, b } => invert(&a.add(b)?)?,
        Inputs::S2phm { a1, a2, b1, b2 } => mat_mul(&a1.add(b1)?, &a2.add(b2)?)?,
        Inputs::S3phm { a1, a2, b1, b2, c } => mat_mul(&mat_mul(&a1.add(b1)?, &a2.add(b2)?)?, c)?,
        Inputs::S3plrp {
            x1,
            beta1,
            x2,
            beta2,
            beta3,
        } => mat_mul(&x1.add(x2)?, &beta1.add(beta2)?.add(beta3)?)?,
        Inputs::S3plrt { x1, x2, y } => eva_core::regression::least_squares(&x1.add(x2)?, y)?,
    })
}
