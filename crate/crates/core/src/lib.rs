//! Disguised multi-party matrix computation with randomized result
//! verification.
//!
//! Two or three data owners jointly compute products, inverses and hybrid
//! products of privately held matrices. A commodity server hands out
//! correlated random bundles before the online phase and then leaves; the
//! owners exchange only disguised matrices and end with additive shares of
//! the result plus verification shares that let each of them check the
//! result independently. The same machinery trains and evaluates linear
//! regression over vertically partitioned data.

pub mod error;
pub mod matrix;
pub mod preprocess;
pub mod protocol;
pub mod random;
pub mod regression;
pub mod transport;

pub use error::{Error, Result};
pub use matrix::{full_rank_decompose, invert, mat_mul, Matrix, MatrixError};
pub use random::{DynamicRange, RngStream};
