//! Timing, memory and pass-count benchmarks, and the suite that combines
//! them with the metric sweeps.

mod memory;
mod report;
mod suite;

pub use memory::{resident_bytes, PeakRssSampler, SAMPLE_PERIOD};
pub use report::{
    benchmark_method, benchmark_method_parallel, mean_std, median, BenchEntry, BenchRow, BenchmarkReport,
    BENCH_CSV_HEADER,
};
pub use suite::{random_saliency, run_suite, PreparedSlide, SuiteConfig, SuiteReport};
