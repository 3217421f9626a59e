//! Benchmark problems, experiment sweeps and flow-map checks.

pub mod catalog;
pub mod config;
pub mod experiment;
pub mod theorems;

pub use catalog::{catalog, entry, exact_linear_solution, reference_for_system, reference_trajectory, CatalogEntry};
pub use config::ProblemConfig;
pub use experiment::{run_experiment, train_problem, ExperimentConfig, Method, ResultRow, SweepVariable};
pub use theorems::{verify_flow_theorems, CheckResult, TheoremReport};
