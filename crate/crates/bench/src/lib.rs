//! Benchmark and certification harness for the `balm` solvers: instance
//! files, per-iteration histories, the size × seed × algorithm benchmark
//! matrix with median tables, and the diagnostics suites.

pub mod bench;
pub mod certify;
pub mod commands;
pub mod config;
pub mod csv;
pub mod error;

pub use bench::{run_benchmark, write_benchmark, BenchPlan};
pub use certify::{run_certify, CertifyOutcome, CertifyPlan};
pub use commands::{run, Cli};
pub use error::{BenchError, Result};
