//! One closed-loop episode: plan, act in the true environment, filter.

use std::time::Instant;

use airoas_core::air::annealed_importance_resampling;
use airoas_core::{plan, plan_no_air, sir_update, Error as CoreError, ParticleSet, PlannerConfig, PomdpModel};
use airoas_domains::{LaserTag, LightDark, RockSample, Tag};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{BeliefUpdate, DomainConfig, ExperimentConfig, Solver};
use crate::error::{HarnessError, Result};

const ENV_STREAM: u64 = 0;
const PLANNER_STREAM: u64 = 1;
const FILTER_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub action: String,
    pub observation: String,
    pub reward: f64,
    pub root_lower: f64,
    pub root_upper: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub index: usize,
    pub seed: u64,
    pub solver: Solver,
    pub particles: usize,
    pub target_inefficiency: f64,
    pub discount: f64,
    pub discounted_return: f64,
    pub steps: usize,
    /// Times the tracked belief was rebuilt after an impossible observation.
    pub belief_resets: usize,
    pub wall_time: f64,
    pub log: Vec<StepRecord>,
}

impl EpisodeResult {
    /// `Σ γ^t r_t` over the logged rewards.
    pub fn recomputed_return(&self) -> f64 {
        discounted_sum(self.log.iter().map(|s| s.reward), self.discount)
    }
}

pub fn discounted_sum(rewards: impl IntoIterator<Item = f64>, gamma: f64) -> f64 {
    let mut total = 0.0;
    let mut discount = 1.0;
    for r in rewards {
        total += discount * r;
        discount *= gamma;
    }
    total
}

/// Stable per-episode seed: adding episodes never changes earlier seeds.
pub fn episode_seed(master_seed: u64, index: usize) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index as u64)
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Runs episode `index` of `cfg` with the given seed.
pub fn run_episode(cfg: &ExperimentConfig, index: usize, seed: u64) -> Result<EpisodeResult> {
    let planner = cfg.planner_config()?;
    let run = |r: std::result::Result<EpisodeResult, CoreError>| r.map_err(|source| HarnessError::Episode { index, source });
    match &cfg.domain {
        DomainConfig::LightDark(p) => run(simulate(&LightDark::new(p.clone()), cfg, &planner, index, seed)),
        DomainConfig::Tag(p) => run(simulate(&Tag::new(p.clone()), cfg, &planner, index, seed)),
        DomainConfig::LaserTag(p) => run(simulate(&LaserTag::new(p.clone()), cfg, &planner, index, seed)),
        DomainConfig::RockSample(p) => run(simulate(&RockSample::new(p.clone()), cfg, &planner, index, seed)),
    }
}

fn initial_belief<M: PomdpModel>(model: &M, n: usize, rng: &mut ChaCha8Rng) -> ParticleSet<M::State> {
    ParticleSet::uniform((0..n).map(|_| model.initial_state(rng)).collect())
}

/// Runs one episode of `model` under `cfg`.
pub fn simulate<M: PomdpModel>(
    model: &M,
    cfg: &ExperimentConfig,
    planner: &PlannerConfig,
    index: usize,
    seed: u64,
) -> std::result::Result<EpisodeResult, CoreError> {
    let start = Instant::now();
    let mut env_rng = stream(seed, ENV_STREAM);
    let mut plan_rng = stream(seed, PLANNER_STREAM);
    let mut filter_rng = stream(seed, FILTER_STREAM);
    let sir = cfg.sir_config();

    let mut state = model.initial_state(&mut env_rng);
    let mut belief = initial_belief(model, planner.particles, &mut filter_rng);
    let mut log = Vec::new();
    let mut resets = 0;

    while log.len() < cfg.max_steps && !model.is_terminal(&state) {
        let outcome = match cfg.solver {
            Solver::Airoas => plan(&belief, model, planner, &mut plan_rng)?,
            Solver::NoAir => plan_no_air(&belief, model, planner, &mut plan_rng)?,
        };
        let action = &model.actions()[outcome.action];
        let tr = model.step(&state, action, &mut env_rng);
        log.push(StepRecord {
            action: format!("{action:?}"),
            observation: format!("{:?}", model.obs_key(&tr.observation)),
            reward: tr.reward,
            root_lower: outcome.root_lower,
            root_upper: outcome.root_upper,
            trials: outcome.trials,
        });
        state = tr.state;

        let updated = match cfg.belief.update {
            BeliefUpdate::Sir => sir_update(&belief, action, &tr.observation, model, &sir, &mut filter_rng),
            BeliefUpdate::Air => {
                let propagated = propagate(&belief, action, model, &mut filter_rng);
                annealed_importance_resampling(&propagated, &tr.observation, action, &planner.air, model, &mut filter_rng)
            }
        };
        belief = match updated {
            Ok(b) => b,
            Err(CoreError::ZeroTotalWeight) => {
                resets += 1;
                initial_belief(model, planner.particles, &mut filter_rng)
            }
            Err(e) => return Err(e),
        };
    }

    let discount = model.discount();
    Ok(EpisodeResult {
        index,
        seed,
        solver: cfg.solver,
        particles: planner.particles,
        target_inefficiency: planner.air.target_inefficiency,
        discount,
        discounted_return: discounted_sum(log.iter().map(|s| s.reward), discount),
        steps: log.len(),
        belief_resets: resets,
        wall_time: start.elapsed().as_secs_f64(),
        log,
    })
}

fn propagate<M: PomdpModel>(
    belief: &ParticleSet<M::State>,
    action: &M::Action,
    model: &M,
    rng: &mut ChaCha8Rng,
) -> ParticleSet<M::State> {
    let (particles, weights) = belief.clone().into_parts();
    let next = particles.iter().map(|s| model.step(s, action, rng).state).collect();
    ParticleSet::new(next, weights).expect("propagation keeps a valid weight vector")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn discounted_sum_examples() {
        assert_eq!(discounted_sum([], 0.9), 0.0);
        assert!((discounted_sum([1.0, 1.0, 1.0], 0.5) - 1.75).abs() < 1e-15);
        assert!((discounted_sum([0.0, 0.0, 10.0], 0.9) - 8.1).abs() < 1e-12);
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        let a: Vec<u64> = (0..100).map(|i| episode_seed(7, i)).collect();
        let b: Vec<u64> = (0..50).map(|i| episode_seed(7, i)).collect();
        assert_eq!(&a[..50], &b[..]);
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), a.len());
        assert_ne!(episode_seed(7, 0), episode_seed(8, 0));
    }
}
