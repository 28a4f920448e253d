//! File formats and the command-line front end for `streamctc-core`.

pub mod cli;
pub mod ctcem;
pub mod error;
pub mod nglm;
pub mod pairs;
pub mod s2sm;
mod text;

pub use error::{Error, Result};

/// Versions of every file format this build reads and writes.
pub const FORMAT_VERSIONS: &str = "CTCEM v1, NGLM v1, S2SM v1";
