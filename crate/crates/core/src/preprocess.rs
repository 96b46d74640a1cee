//! Commodity-server preprocessing: correlated disguising bundles generated
//! from dimensions alone, delivered once per party per sub-protocol before
//! any online traffic.

use serde::Serialize;

use crate::matrix::{mat_mul, Matrix, MatrixError, Result};
use crate::random::{gen_dynamic_uniform, gen_rank_deficient, gen_with_rank, random_like, DynamicRange, RngStream};
use crate::transport::{Endpoint, Envelope, ProtocolId, Role, TransportError};

/// Chained product dimensions: `(n x s) * (s x t) * (t x m)` for three
/// parties, `(n x s) * (s x m)` for two (where `t` is unused).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DimSpec {
    pub n: usize,
    pub s: usize,
    pub t: usize,
    pub m: usize,
}

impl DimSpec {
    pub fn two(n: usize, s: usize, m: usize) -> Self {
        Self { n, s, t: 1, m }
    }

    pub fn three(n: usize, s: usize, t: usize, m: usize) -> Self {
        Self { n, s, t, m }
    }

    pub fn square(n: usize) -> Self {
        Self { n, s: n, t: n, m: n }
    }
}

/// One party's disguising material: `r` blinds the party's result share and
/// all parties hold the same `st`.
#[derive(Clone, Debug, PartialEq)]
pub struct PreprocessBundle {
    pub disguise: Matrix,
    pub blind: Matrix,
    pub standard: Matrix,
}

impl PreprocessBundle {
    pub fn into_matrices(self) -> Vec<Matrix> {
        vec![self.disguise, self.blind, self.standard]
    }

    pub fn from_matrices(mut matrices: Vec<Matrix>) -> std::result::Result<Self, TransportError> {
        if matrices.len() != 3 {
            return Err(TransportError::Malformed(format!(
                "bundle carries {} matrices, expected 3",
                matrices.len()
            )));
        }
        let standard = matrices.pop().unwrap();
        let blind = matrices.pop().unwrap();
        let disguise = matrices.pop().unwrap();
        Ok(Self {
            disguise,
            blind,
            standard,
        })
    }
}

/// Disguise for one operand of a two-party product with inner dimension
/// `inner`. Matrices lose one rank; a vector operand cannot, so it gets a
/// full-rank (rank one) disguise, which still has rank below `inner`.
fn two_party_disguise(
    rows: usize,
    cols: usize,
    inner: usize,
    range: &DynamicRange,
    rng: &mut RngStream,
) -> Result<Matrix> {
    if rows.min(cols) >= 2 {
        gen_rank_deficient(rows, cols, range, rng)
    } else if inner >= 2 {
        gen_with_rank(rows, cols, 1, range, rng)
    } else {
        Err(MatrixError::Unsupported(format!(
            "two-party product with inner dimension {inner} cannot be disguised"
        )))
    }
}

/// Bundles `(a, b)` for a two-party product of an `n x s` and an `s x m`
/// operand. `R_a` and `R_b` are rank deficient, `r_b = St - r_a` exactly.
pub fn preprocess_s2pm(
    dims: &DimSpec,
    range: &DynamicRange,
    rng: &mut RngStream,
) -> Result<(PreprocessBundle, PreprocessBundle)> {
    let DimSpec { n, s, m, .. } = *dims;
    let left = two_party_disguise(n, s, s, range, rng)?;
    let right = two_party_disguise(s, m, s, range, rng)?;
    let standard = mat_mul(&left, &right)?;
    let blind_a = random_like(&standard, range, rng);
    let blind_b = standard.sub(&blind_a)?;
    Ok((
        PreprocessBundle {
            disguise: left,
            blind: blind_a,
            standard: standard.clone(),
        },
        PreprocessBundle {
            disguise: right,
            blind: blind_b,
            standard,
        },
    ))
}

/// Bundles `(a, b, c)` for a three-party chain; disguises are unconstrained.
pub fn preprocess_s3pm(
    dims: &DimSpec,
    range: &DynamicRange,
    rng: &mut RngStream,
) -> Result<(PreprocessBundle, PreprocessBundle, PreprocessBundle)> {
    let DimSpec { n, s, t, m } = *dims;
    if n.min(s).min(t).min(m) == 0 {
        return Err(MatrixError::EmptyDimension(n, m));
    }
    let ra = gen_dynamic_uniform(n, s, range, rng);
    let rb = gen_dynamic_uniform(s, t, range, rng);
    let rc = gen_dynamic_uniform(t, m, range, rng);
    let standard = mat_mul(&mat_mul(&ra, &rb)?, &rc)?;
    let blind_a = random_like(&standard, range, rng);
    let blind_b = random_like(&standard, range, rng);
    let blind_c = standard.sub(&blind_a)?.sub(&blind_b)?;
    Ok((
        PreprocessBundle {
            disguise: ra,
            blind: blind_a,
            standard: standard.clone(),
        },
        PreprocessBundle {
            disguise: rb,
            blind: blind_b,
            standard: standard.clone(),
        },
        PreprocessBundle {
            disguise: rc,
            blind: blind_c,
            standard,
        },
    ))
}

/// Which bundles a sub-protocol needs and where they go.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BundleKind {
    Two { left: Role, right: Role },
    Three { first: Role, middle: Role, last: Role },
}

/// Which configured range the disguising matrices are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DisguiseClass {
    Product,
    /// Products inside joint inversion, whose operands include an inverse
    /// and are orders of magnitude smaller than the workload.
    Inversion,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DisguiseRanges {
    pub product: DynamicRange,
    pub inversion: DynamicRange,
}

impl DisguiseRanges {
    pub fn get(&self, class: DisguiseClass) -> &DynamicRange {
        match class {
            DisguiseClass::Product => &self.product,
            DisguiseClass::Inversion => &self.inversion,
        }
    }
}

/// A bundle delivery: steps `base`, `base + 1` (and `base + 2`) carry the
/// bundles in role order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BundleRequest {
    pub base: u16,
    pub kind: BundleKind,
    pub dims: DimSpec,
    pub class: DisguiseClass,
}

/// Generates every bundle of `plan` and sends them out in plan order.
pub fn serve(
    endpoint: &dyn Endpoint,
    protocol: ProtocolId,
    session: u64,
    plan: &[BundleRequest],
    ranges: &DisguiseRanges,
    rng: &mut RngStream,
) -> std::result::Result<(), crate::Error> {
    let send = |step: u16, receiver: Role, bundle: PreprocessBundle| {
        endpoint.send(Envelope {
            protocol,
            session,
            step,
            sender: Role::CommodityServer,
            receiver,
            matrices: bundle.into_matrices(),
        })
    };
    for req in plan {
        let range = ranges.get(req.class);
        match req.kind {
            BundleKind::Two { left, right } => {
                let (a, b) = preprocess_s2pm(&req.dims, range, rng)?;
                send(req.base, left, a)?;
                send(req.base + 1, right, b)?;
            }
            BundleKind::Three { first, middle, last } => {
                let (a, b, c) = preprocess_s3pm(&req.dims, range, rng)?;
                send(req.base, first, a)?;
                send(req.base + 1, middle, b)?;
                send(req.base + 2, last, c)?;
            }
        }
    }
    Ok(())
}
