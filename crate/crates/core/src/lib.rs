//! Divide-and-recombine fitting of generalized linear models.
//!
//! Rows of a large CSV file are split into subsets by a [`partition::PartitionPlan`],
//! each subset is fitted independently ([`glm`]), and the per-subset results
//! are recombined into one estimate with aggregated standard errors and Wald
//! inference ([`recombine`]). [`harness`] provides a full-data reference fit,
//! a synthetic data generator and a comparator.

pub mod data;
mod digest;
pub mod error;
pub mod glm;
pub mod harness;
pub mod linalg;
pub mod partition;
pub mod pipeline;
pub mod recombine;

pub use digest::{sha256_hex, sha256_hex_reader};
pub use error::{Error, Result};
