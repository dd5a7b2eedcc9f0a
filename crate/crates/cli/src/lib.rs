//! Batch front-end for the `colored-lsq` estimators: fit data files,
//! synthesize datasets, compare estimators by Monte Carlo and sweep PSD
//! mismatch.
//!
//! Exit codes: 0 on success, 2 for unreadable or malformed input, 3 for
//! numerical failures. The error name is printed on standard error.

// `!(x > 0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
pub mod config;
pub mod error;
pub mod io;

pub use commands::run;
pub use config::{Command, Format, MethodArg, RunConfig};
pub use error::{CliError, CliResult};
