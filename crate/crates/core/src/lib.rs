//! Online POMDP planning with annealed importance resampling.
//!
//! A bound-guided belief tree search whose leaf beliefs are moved from the
//! state-transition distribution toward the observation posterior through
//! tempered bridging distributions, weight updates and Metropolis-Hastings
//! mutation, before each leaf is expanded.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod air;
pub mod bounds;
pub mod error;
pub mod model;
pub mod particles;
pub mod sir;
pub mod tree;

pub use air::{annealed_importance_resampling, AirConfig, TemperingSchedule};
pub use bounds::{BoundInitializer, LeafBounds, LowerBound, UpperBound};
pub use error::{Error, Result};
pub use model::{PomdpModel, Proposal, Transition};
pub use particles::ParticleSet;
pub use sir::{plan_no_air, sir_update, SirConfig};
pub use tree::{plan, BeliefTree, PlanOutcome, Planner, PlannerConfig};
