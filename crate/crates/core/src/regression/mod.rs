//! Linear regression over vertically partitioned data: two feature owners
//! and a label owner.

pub mod dataset;
pub mod metrics;
pub mod secure;

pub use dataset::{split_columns, with_intercept, Standardizer, VerticalDataset};
pub use metrics::{evaluate, least_squares, max_relative_error, r_squared, MetricsReport};
pub use secure::{s3plrp, s3plrt, ModelShares};
