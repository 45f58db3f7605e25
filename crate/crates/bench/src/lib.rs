//! Benchmark harness: generates synthetic systems, runs every kernel through
//! its scalar and vectorized paths, checks that they agree, and reports
//! timings and boost factors `t_scalar / t_vec`.

pub mod config;
pub mod error;
pub mod generate;
pub mod report;
pub mod run;
pub mod timing;

pub use config::{parse_kernel_list, BenchConfig, KernelKind, SystemKind};
pub use error::{BenchError, Result};
pub use generate::{generate_system, SystemDocument};
pub use report::{emit_report, Format};
pub use run::{run_bench, run_bench_with, BenchReport, KernelRow, RunOptions, Status};
pub use timing::{trimmed_mean, ScriptedTimer, Timer, WallClock};
