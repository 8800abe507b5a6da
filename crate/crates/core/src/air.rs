//! Annealed importance resampling.
//!
//! A particle set drawn from the state-transition distribution is moved toward
//! the observation posterior through a sequence of tempered bridging
//! distributions `π_k ∝ p(o | s, a)^{β_k} p(s | s_prev, a)`. Each step
//! reweights by the incremental likelihood `p(o | s, a)^{β_k - β_{k-1}}`,
//! checks the weight inefficiency against a target ratio, and if the weights
//! are still too uneven resamples and applies one Metropolis-Hastings sweep
//! that leaves `π_k` invariant.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PomdpModel;
use crate::particles::{systematic_resample, ParticleSet};

/// Monotone tempering exponents from exactly 0 to exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TemperingSchedule {
    betas: Vec<f64>,
}

impl TemperingSchedule {
    /// Sigmoid schedule with `k` tempered steps (`k + 1` exponents).
    ///
    /// `x_1..x_k` are spaced linearly on `[1e-3, 1]` and mapped through
    /// `1 / (1 + exp(-10 (x - 0.5)))`. The raw sigmoid never reaches the
    /// endpoints, so `β_0 = 0` is prepended and `β_k` is pinned to 1.
    pub fn sigmoid(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidK(k));
        }
        let mut betas = Vec::with_capacity(k + 1);
        betas.push(0.0);
        betas.extend(sigmoid_points(k));
        betas[k] = 1.0;
        Ok(TemperingSchedule { betas })
    }

    /// Validates an explicit schedule.
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if betas.len() < 2 {
            return Err(Error::InvalidK(betas.len().saturating_sub(1)));
        }
        if betas[0] != 0.0 || *betas.last().unwrap() != 1.0 {
            return Err(Error::InvalidConfig("tempering schedule must start at 0 and end at 1".into()));
        }
        if betas.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidConfig("tempering schedule must be nondecreasing".into()));
        }
        Ok(TemperingSchedule { betas })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    /// Number of tempered steps.
    pub fn steps(&self) -> usize {
        self.betas.len() - 1
    }
}

impl TryFrom<Vec<f64>> for TemperingSchedule {
    type Error = Error;

    fn try_from(betas: Vec<f64>) -> Result<Self> {
        TemperingSchedule::from_betas(betas)
    }
}

impl From<TemperingSchedule> for Vec<f64> {
    fn from(s: TemperingSchedule) -> Self {
        s.betas
    }
}

/// The map from grid position to exponent, `1 / (1 + exp(-10 (x - 0.5)))`.
pub fn tempering_sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-10.0 * (x - 0.5)).exp())
}

/// The raw sigmoid values over `k` points linearly spaced on `[1e-3, 1]`.
pub fn sigmoid_points(k: usize) -> Vec<f64> {
    let lo = 1e-3;
    let hi = 1.0;
    (0..k)
        .map(|i| {
            let x = if k == 1 { lo } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 };
            tempering_sigmoid(x)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirConfig {
    pub schedule: TemperingSchedule,
    /// Target inefficiency ratio `r*`; annealing stops once the weight
    /// inefficiency falls to this value.
    pub target_inefficiency: f64,
    /// Proposal width per unit of state-observation distance.
    pub mutation_sigma_scale: f64,
    /// Metropolis-Hastings sweeps per tempering step.
    pub mutation_sweeps: usize,
}

impl AirConfig {
    pub fn new(steps: usize, target_inefficiency: f64) -> Result<Self> {
        let cfg = AirConfig {
            schedule: TemperingSchedule::sigmoid(steps)?,
            target_inefficiency,
            mutation_sigma_scale: 0.5,
            mutation_sweeps: 1,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target_inefficiency >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "target inefficiency must be >= 1, got {}",
                self.target_inefficiency
            )));
        }
        if !(self.mutation_sigma_scale > 0.0) {
            return Err(Error::InvalidConfig("mutation sigma scale must be positive".into()));
        }
        if self.mutation_sweeps == 0 {
            return Err(Error::InvalidConfig("mutation sweeps must be at least 1".into()));
        }
        Ok(())
    }
}

impl Default for AirConfig {
    fn default() -> Self {
        AirConfig::new(100, 2.0).expect("default AIR config is valid")
    }
}

/// Multiplies each weight by `p(o | s, a)^{β_k - β_prev}`.
pub fn update_weights<M: PomdpModel>(
    belief: &ParticleSet<M::State>,
    obs: &M::Observation,
    action: &M::Action,
    beta: f64,
    beta_prev: f64,
    model: &M,
) -> Result<ParticleSet<M::State>> {
    let mut out = belief.clone();
    reweight_in_place(&mut out, obs, action, beta, beta_prev, model)?;
    Ok(out)
}

fn reweight_in_place<M: PomdpModel>(
    belief: &mut ParticleSet<M::State>,
    obs: &M::Observation,
    action: &M::Action,
    beta: f64,
    beta_prev: f64,
    model: &M,
) -> Result<()> {
    let delta = beta - beta_prev;
    if delta == 0.0 {
        return Ok(());
    }
    let densities: Vec<f64> = belief
        .particles()
        .iter()
        .map(|s| model.obs_density(obs, s, action))
        .collect();
    for (w, p) in belief.weights_mut().iter_mut().zip(densities) {
        *w *= p.powf(delta);
    }
    if !(belief.total_weight() > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    Ok(())
}

/// Normalized second moment of the weights: `(1/M) Σ (w_j / mean(w))²`.
///
/// Scale invariant, at least 1, and exactly 1 for uniform weights.
pub fn inefficiency(weights: &[f64]) -> Result<f64> {
    let m = weights.len() as f64;
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let mean = total / m;
    Ok(weights.iter().map(|w| (w / mean).powi(2)).sum::<f64>() / m)
}

/// Metropolis-Hastings acceptance probability for the tempered target
/// `p(o | s, a)^β` given the likelihoods of the current and candidate states.
///
/// `forward` is the kernel density of the proposed move and `reverse` that
/// of the move back; the ratio is `reverse · L_new^β / (forward · L_old^β)`,
/// clipped to 1, with `0/0` treated as a rejection.
pub fn acceptance_ratio(lik_old: f64, lik_new: f64, forward: f64, reverse: f64, beta: f64) -> f64 {
    let num = reverse * lik_new.powf(beta);
    let den = forward * lik_old.powf(beta);
    if num == 0.0 {
        return 0.0;
    }
    if den == 0.0 {
        return 1.0;
    }
    (num / den).min(1.0)
}

/// Acceptance probability of moving `old` to `new` under the tempered target
/// defined by `obs` and `action`.
#[allow(clippy::too_many_arguments)]
pub fn acceptance_probability<M: PomdpModel>(
    old: &M::State,
    new: &M::State,
    forward: f64,
    reverse: f64,
    obs: &M::Observation,
    action: &M::Action,
    beta: f64,
    model: &M,
) -> f64 {
    let lik_old = model.obs_density(obs, old, action);
    let lik_new = model.obs_density(obs, new, action);
    acceptance_ratio(lik_old, lik_new, forward, reverse, beta)
}

/// One Metropolis-Hastings proposal per particle per sweep; weights are left
/// untouched.
pub fn mutate<M: PomdpModel, R: Rng + ?Sized>(
    belief: &ParticleSet<M::State>,
    obs: &M::Observation,
    action: &M::Action,
    beta: f64,
    cfg: &AirConfig,
    model: &M,
    rng: &mut R,
) -> ParticleSet<M::State> {
    let mut out = belief.clone();
    mutate_in_place(&mut out, obs, action, beta, cfg.mutation_sigma_scale, cfg.mutation_sweeps, model, rng);
    out
}

#[allow(clippy::too_many_arguments)]
fn mutate_in_place<M: PomdpModel, R: Rng + ?Sized>(
    belief: &mut ParticleSet<M::State>,
    obs: &M::Observation,
    action: &M::Action,
    beta: f64,
    sigma_scale: f64,
    sweeps: usize,
    model: &M,
    rng: &mut R,
) {
    for _ in 0..sweeps {
        for s in belief.particles_mut().iter_mut() {
            let proposal = model.propose_mutation(s, obs, action, sigma_scale, rng);
            let p = acceptance_probability(s, &proposal.candidate, proposal.forward, proposal.reverse, obs, action, beta, model);
            let u: f64 = rng.random();
            if u < p {
                *s = proposal.candidate;
            }
        }
    }
}

/// Runs the annealing loop on `belief`, a set drawn from the state-transition
/// distribution (weights before the observation) whose incoming edge is
/// `(action, obs)`.
///
/// Every step reweights to the next exponent. Steps whose inefficiency stays
/// within the target end there; otherwise the target is raised to the current
/// inefficiency, for this call only, and the set is resampled and mutated.
/// The returned set targets the full posterior.
///
/// Relative to the last resampled set, the inefficiency never decreases as
/// the exponent grows, so the next step that exceeds the target is located by
/// bisection instead of visiting every step.
pub fn annealed_importance_resampling<M: PomdpModel, R: Rng + ?Sized>(
    belief: &ParticleSet<M::State>,
    obs: &M::Observation,
    action: &M::Action,
    cfg: &AirConfig,
    model: &M,
    rng: &mut R,
) -> Result<ParticleSet<M::State>> {
    let betas = cfg.schedule.betas();
    // weights are kept as `base_weight · p^{β - base_beta}` so that the
    // exponents telescope exactly
    let mut base = Tempered::new(belief.clone(), betas[0], obs, action, model);
    let mut target = cfg.target_inefficiency;
    let mut next = 1;
    while next < betas.len() {
        let Some(k) = base.first_exceeding(&betas[next..], target).map(|i| next + i) else {
            break;
        };
        let current = base.at(betas[k]);
        if !(current.total_weight() > 0.0) {
            return Err(Error::ZeroTotalWeight);
        }
        target = inefficiency(current.weights())?;
        let mut moved = systematic_resample(&current, rng)?;
        mutate_in_place(&mut moved, obs, action, betas[k], cfg.mutation_sigma_scale, cfg.mutation_sweeps, model, rng);
        base = Tempered::new(moved, betas[k], obs, action, model);
        next = k + 1;
    }
    let out = base.at(betas[betas.len() - 1]);
    if !(out.total_weight() > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    Ok(out)
}

/// A particle set with its likelihoods, reweightable to any later exponent.
struct Tempered<S> {
    set: ParticleSet<S>,
    beta: f64,
    likelihood: Vec<f64>,
}

impl<S: Clone> Tempered<S> {
    fn new<M: PomdpModel<State = S>>(set: ParticleSet<S>, beta: f64, obs: &M::Observation, action: &M::Action, model: &M) -> Self {
        let likelihood = densities(&set, obs, action, model);
        Tempered { set, beta, likelihood }
    }

    fn weights_at(&self, beta: f64) -> Vec<f64> {
        let delta = beta - self.beta;
        self.set.weights().iter().zip(&self.likelihood).map(|(w, p)| w * p.powf(delta)).collect()
    }

    fn at(&self, beta: f64) -> ParticleSet<S> {
        self.set.with_weights_unchecked(self.weights_at(beta))
    }

    /// Whether the step to `beta` must resample: its inefficiency exceeds
    /// `target`, or no weight survives.
    fn exceeds(&self, beta: f64, target: f64) -> bool {
        let w = self.weights_at(beta);
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return true;
        }
        inefficiency(&w).map_or(true, |v| v > target)
    }

    /// Index of the first exponent in `betas` that exceeds `target`.
    fn first_exceeding(&self, betas: &[f64], target: f64) -> Option<usize> {
        // steps that leave the exponent unchanged are checked one by one
        let flat = betas.iter().take_while(|&&b| b == self.beta).count();
        if let Some(i) = (0..flat).find(|&i| self.exceeds(betas[i], target)) {
            return Some(i);
        }
        let rest = &betas[flat..];
        if rest.is_empty() || !self.exceeds(rest[rest.len() - 1], target) {
            return None;
        }
        let (mut lo, mut hi) = (0, rest.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.exceeds(rest[mid], target) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Some(flat + lo)
    }
}

fn densities<M: PomdpModel>(set: &ParticleSet<M::State>, obs: &M::Observation, action: &M::Action, model: &M) -> Vec<f64> {
    set.particles().iter().map(|s| model.obs_density(obs, s, action)).collect()
}
