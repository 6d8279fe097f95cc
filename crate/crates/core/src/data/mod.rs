//! CSV input: schema discovery, categorical encoding and chunked delivery of
//! subsets.
//!
//! Files are comma separated with a header row. Empty cells and `NA` are
//! missing values and rejected. Factor levels are kept in byte order.

mod encode;
mod schema;
mod spec;
mod stream;

pub use encode::{design_width, Encoder, INTERCEPT_LABEL};
pub use schema::{
    default_cache_path, read_column, scan_schema, scan_schema_cached, Column, ColumnType,
    Declarations, Schema, MAX_INFERRED_LEVELS,
};
pub use spec::ModelSpec;
pub use stream::{stream_subsets, SubsetChunk, SubsetStream};
