//! The generative model interface every planner component works against.

use std::fmt::Debug;
use std::hash::Hash;

use rand::Rng;

/// One draw from the simulator: successor state, emitted observation, reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition<S, O> {
    pub state: S,
    pub observation: O,
    pub reward: f64,
}

/// A Metropolis-Hastings candidate together with its kernel densities.
///
/// `forward` is the density of moving from the current state to `candidate`,
/// `reverse` the density of the reverse move under the kernel centred at
/// `candidate`. Symmetric kernels report equal values.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal<S> {
    pub candidate: S,
    pub forward: f64,
    pub reverse: f64,
}

impl<S> Proposal<S> {
    pub fn symmetric(candidate: S) -> Self {
        Proposal {
            candidate,
            forward: 1.0,
            reverse: 1.0,
        }
    }
}

/// An environment described through sampling and an observation density.
///
/// Terminal states must yield zero reward and transition to themselves under
/// every action. `step` must be deterministic for a fixed rng state and
/// `obs_density` must be finite and deterministic.
pub trait PomdpModel {
    type State: Clone + Debug;
    type Action: Clone + Debug + PartialEq;
    type Observation: Clone + Debug;
    /// Grouping key for observation branches in the search tree.
    type ObsKey: Clone + Debug + Eq + Hash;

    /// Samples a state from the initial belief.
    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;

    fn step<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        action: &Self::Action,
        rng: &mut R,
    ) -> Transition<Self::State, Self::Observation>;

    /// Density (or mass) of observing `obs` after `action` led to `next`.
    fn obs_density(&self, obs: &Self::Observation, next: &Self::State, action: &Self::Action)
        -> f64;

    fn obs_key(&self, obs: &Self::Observation) -> Self::ObsKey;

    fn actions(&self) -> &[Self::Action];

    fn discount(&self) -> f64;

    fn is_terminal(&self, state: &Self::State) -> bool;

    /// Proposes a mutation of `state` for the annealing kernel. The proposal
    /// width is `sigma_scale` times the distance between the state and `obs`.
    ///
    /// The default leaves the state untouched, which makes mutation a no-op.
    fn propose_mutation<R: Rng + ?Sized>(
        &self,
        state: &Self::State,
        _obs: &Self::Observation,
        _action: &Self::Action,
        _sigma_scale: f64,
        _rng: &mut R,
    ) -> Proposal<Self::State> {
        Proposal::symmetric(state.clone())
    }

    /// Optimal value of `state` when the state is fully observed, if the
    /// model can compute it (or an admissible overestimate of it).
    fn mdp_value(&self, _state: &Self::State) -> Option<f64> {
        None
    }
}
