//! Seeded verification suites and demos for `lifted-core`.
//!
//! Every case draws from its own ChaCha8 stream seeded by
//! `splitmix64(fnv1a(case id) ^ root seed)`, so reports are reproducible
//! byte for byte and adding a case never perturbs the others.

pub mod config;
pub mod demos;
pub mod error;
pub mod gen;
pub mod harness;
pub mod report;
pub mod seed;
pub mod suites;

pub use config::{Params, SuiteConfig};
pub use error::{HarnessError, Result};
pub use harness::{run_suite, SUITE_NAMES};
pub use report::{CaseReport, Report, Status};
