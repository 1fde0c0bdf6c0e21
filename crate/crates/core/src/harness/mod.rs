//! Experiment orchestration: configuration parsing, seeded parallel
//! Monte Carlo SER sweeps, transfer-chart generation, fraction
//! optimization runs, and CSV/JSON reporting.

pub mod cli;
pub mod config;
pub mod sweep;

pub use config::{CodeSpec, OptimizerSettings, ProfileSource, SimConfig, TrialPolicy};
pub use sweep::{run_ser_sweep, SnrPointResult, SweepResult};
