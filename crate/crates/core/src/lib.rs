//! Schema label prediction for tables with missing headers.
//!
//! A column encoder first labels every column from its values alone, then
//! relabels the columns one at a time, most confident first, feeding the
//! other columns' predicted labels back in as context. A hand-crafted
//! feature stack and an evaluation harness are included for comparison.

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod inference;
pub mod parallel;
pub mod prepared;
pub mod seed;
pub mod training;

pub use error::{Error, Result};
