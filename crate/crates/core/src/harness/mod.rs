//! Experiment plumbing: synthetic distributions, histogram files, sweeps and
//! IBU convergence traces.

mod convergence;
mod ingest;
mod sweep;
mod zipf;

pub use convergence::{
    run_ibu_convergence, sampled_histogram, ConvergencePoint, ConvergenceSeries, BURN_IN,
    MONOTONE_SLACK,
};
pub use ingest::{ingest_histogram, HistogramFormat};
pub use sweep::{
    run_sweep, run_sweep_with_threads, seed_means, threads_from_env, write_sweep_csv, CellMean,
    DistSpec, SweepConfig, SweepFailure, SweepRecord, SweepSummary, CSV_HEADER, THREADS_ENV,
};
pub use zipf::{zipf_distribution, ZipfSpec};
