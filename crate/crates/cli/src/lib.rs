//! Pipeline pieces shared by the `mapf` binary and its tests.

pub mod error;
pub mod expert;
pub mod provenance;
pub mod render;

pub use error::{CliError, Result};
