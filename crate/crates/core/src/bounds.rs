//! Value bound initializers for freshly created belief nodes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PomdpModel;
use crate::particles::ParticleSet;

/// Produces `(lower, upper)` value estimates for a leaf belief.
pub trait LeafBounds<M: PomdpModel> {
    fn bounds<R: Rng + ?Sized>(&self, belief: &ParticleSet<M::State>, model: &M, rng: &mut R) -> Result<(f64, f64)>;

    /// Whether the bounds depend on the belief at all. When they do not, the
    /// planner reweights a new leaf only once a trial reaches it.
    fn reads_belief(&self) -> bool {
        true
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LowerBound {
    Fixed { value: f64 },
    /// Best single action repeated for `horizon` steps, ignoring observations.
    FixedActionRollout { horizon: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UpperBound {
    Fixed { value: f64 },
    /// Weighted average of the fully observable value of each particle.
    MdpApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInitializer {
    pub lower: LowerBound,
    pub upper: UpperBound,
}

pub const DEFAULT_ROLLOUT_HORIZON: usize = 40;

impl BoundInitializer {
    pub fn fixed(lower: f64, upper: f64) -> Result<Self> {
        let (lower, upper) = fixed_bounds(lower, upper)?;
        Ok(BoundInitializer {
            lower: LowerBound::Fixed { value: lower },
            upper: UpperBound::Fixed { value: upper },
        })
    }

    /// Fixed-action rollout below, MDP approximation above.
    pub fn rollout_mdp(horizon: usize) -> Self {
        BoundInitializer {
            lower: LowerBound::FixedActionRollout { horizon },
            upper: UpperBound::MdpApprox,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let (LowerBound::Fixed { value: lo }, UpperBound::Fixed { value: hi }) = (&self.lower, &self.upper) {
            fixed_bounds(*lo, *hi)?;
        }
        Ok(())
    }
}

impl<M: PomdpModel> LeafBounds<M> for BoundInitializer {
    fn bounds<R: Rng + ?Sized>(&self, belief: &ParticleSet<M::State>, model: &M, rng: &mut R) -> Result<(f64, f64)> {
        let lower = match self.lower {
            LowerBound::Fixed { value } => value,
            LowerBound::FixedActionRollout { horizon } => fixed_action_rollout_lower(belief, model, horizon, rng)?,
        };
        let upper = match self.upper {
            UpperBound::Fixed { value } => value,
            UpperBound::MdpApprox => mdp_upper(belief, model)?,
        };
        // sampled rollouts can overshoot a heuristic upper bound
        Ok((lower, upper.max(lower)))
    }

    fn reads_belief(&self) -> bool {
        !matches!((&self.lower, &self.upper), (LowerBound::Fixed { .. }, UpperBound::Fixed { .. }))
    }
}

pub fn fixed_bounds(lower: f64, upper: f64) -> Result<(f64, f64)> {
    if !(lower <= upper) {
        return Err(Error::InvalidBounds { lower, upper });
    }
    Ok((lower, upper))
}

/// Value of the best fixed-action policy, averaged over the belief.
pub fn fixed_action_rollout_lower<M: PomdpModel, R: Rng + ?Sized>(
    belief: &ParticleSet<M::State>,
    model: &M,
    horizon: usize,
    rng: &mut R,
) -> Result<f64> {
    let total = belief.total_weight();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let gamma = model.discount();
    let mut best = f64::NEG_INFINITY;
    for action in model.actions() {
        let mut value = 0.0;
        for (state, w) in belief.iter() {
            if w == 0.0 {
                continue;
            }
            let mut s = state.clone();
            let mut ret = 0.0;
            let mut discount = 1.0;
            for _ in 0..horizon {
                if model.is_terminal(&s) {
                    break;
                }
                let tr = model.step(&s, action, rng);
                ret += discount * tr.reward;
                discount *= gamma;
                s = tr.state;
            }
            value += w * ret;
        }
        best = best.max(value / total);
    }
    Ok(best)
}

/// Weighted average of the model's fully observable value over the belief.
pub fn mdp_upper<M: PomdpModel>(belief: &ParticleSet<M::State>, model: &M) -> Result<f64> {
    let total = belief.total_weight();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let mut acc = 0.0;
    for (s, w) in belief.iter() {
        if w == 0.0 {
            continue;
        }
        let v = model.mdp_value(s).ok_or(Error::Unsupported("MDP value"))?;
        acc += w * v;
    }
    Ok(acc / total)
}
