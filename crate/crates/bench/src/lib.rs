//! Benchmark driver and file formats for `scalemd-core`.

pub mod bench;
pub mod config;
pub mod error;
pub mod report;
pub mod snapshot;
pub mod trajectory;

pub use bench::{run_benchmark, BenchmarkOutcome, PhaseRecord, PhysicsRecord, TimingRecord};
pub use config::{parse_config, Benchmark, BenchmarkConfig};
pub use error::{BenchError, Result};
