//! Bootstrap (sequential importance resampling) belief updates and the
//! planner variant without annealing.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PomdpModel;
use crate::particles::{ess, systematic_resample, ParticleSet};
use crate::tree::{PlanOutcome, Planner, PlannerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirConfig {
    /// Resample when ESS drops below this fraction of the particle count.
    pub ess_threshold_fraction: f64,
}

impl Default for SirConfig {
    fn default() -> Self {
        SirConfig {
            ess_threshold_fraction: 0.5,
        }
    }
}

impl SirConfig {
    pub fn validate(&self) -> Result<()> {
        let f = self.ess_threshold_fraction;
        if !(f > 0.0 && f <= 1.0) {
            return Err(Error::InvalidConfig(format!("ESS threshold fraction must lie in (0, 1], got {f}")));
        }
        Ok(())
    }
}

/// Propagates every particle through the simulator, reweights by the
/// likelihood of the received observation, and resamples when the effective
/// sample size falls below the configured fraction.
pub fn sir_update<M: PomdpModel, R: Rng + ?Sized>(
    belief: &ParticleSet<M::State>,
    action: &M::Action,
    obs: &M::Observation,
    model: &M,
    cfg: &SirConfig,
    rng: &mut R,
) -> Result<ParticleSet<M::State>> {
    let n = belief.len();
    let mut particles = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (s, w) in belief.iter() {
        let next = model.step(s, action, rng).state;
        weights.push(w * model.obs_density(obs, &next, action));
        particles.push(next);
    }
    let updated = ParticleSet::new(particles, weights)?;
    let normalized = updated.normalized_weights()?;
    if ess(&normalized) < cfg.ess_threshold_fraction * n as f64 {
        systematic_resample(&updated, rng)
    } else {
        Ok(updated)
    }
}

/// The planner with annealing disabled; leaves keep the plain likelihood
/// weights assigned at expansion.
pub fn plan_no_air<M: PomdpModel, R: Rng + ?Sized>(
    root: &ParticleSet<M::State>,
    model: &M,
    config: &PlannerConfig,
    rng: &mut R,
) -> Result<PlanOutcome> {
    Planner::new(model, config, &config.bounds, false).plan(root, rng)
}
