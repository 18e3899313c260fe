//! File formats, PNG IO and the `mitoforge` command line on top of
//! [`mitoforge_core`].

pub mod cli;
pub mod error;
pub mod formats;
pub mod png;
pub mod report;
pub mod targets;

pub use error::{CliError, Result};
