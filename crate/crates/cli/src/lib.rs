//! Library backing the `hodgelab` command-line harness: study
//! configuration, the per-command runners, and table/verdict output.

pub mod config;
pub mod study;

pub use config::{OutputFormat, StudyConfig, SurfaceKind};
