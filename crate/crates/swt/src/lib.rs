//! File formats, parallel batch training and the `swt` command line on top of
//! [`swt_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod output;
pub mod parallel;

pub use error::{Error, Result};
