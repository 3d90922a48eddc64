//! Benchmark problems, baselines, the multi-seed harness and result writers.

pub mod baselines;
pub mod harness;
pub mod objectives;
pub mod output;

pub use baselines::{grid_search_baseline, random_search_baseline};
pub use harness::{aggregate, run_benchmark, run_once, BenchmarkReport, GapStats, RunSummary};
pub use objectives::{ackley, branin, lj_cluster, rosenbrock, sin2, LjEnergy, Objective, ObjectiveSpec, PROBLEMS};
