//! Seeded experiment runner for the annealed belief-tree planner.
//!
//! An experiment is a TOML file naming a domain, a solver and the planner
//! settings. Episodes run closed-loop against a simulated environment, each
//! from its own seed derived from the master seed, and the results are
//! written as JSON lines plus a CSV summary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod episode;
pub mod error;
pub mod experiment;
pub mod plot;

pub use config::{BeliefUpdate, DomainConfig, ExperimentConfig, Solver};
pub use episode::{discounted_sum, episode_seed, run_episode, EpisodeResult, StepRecord};
pub use error::{HarnessError, Result};
pub use experiment::{
    run_ablation_sweep, run_experiment, run_target_sweep, sample_stats, summarize, ExperimentOutput, SummaryRow,
};
