//! Bound-guided belief tree search.
//!
//! The tree alternates belief nodes (weighted particle sets) and action
//! nodes. Each node carries lower and upper bounds on its optimal value.
//! Trials descend from the root by picking the action with the highest upper
//! bound and the observation branch with the largest probability-weighted
//! excess uncertainty. Leaves are annealed toward their observation
//! posterior, expanded through the simulator, and their bounds are backed up
//! to the root with the Bellman equation.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::air::{annealed_importance_resampling, AirConfig};
use crate::bounds::{BoundInitializer, LeafBounds};
use crate::error::{Error, Result};
use crate::model::PomdpModel;
use crate::particles::ParticleSet;

pub type BeliefId = usize;
pub type ActionId = usize;

/// Root gaps at or below this are treated as closed.
const GAP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub max_depth: usize,
    /// Wall-clock budget per decision, in seconds.
    pub time_budget: f64,
    /// Optional cap on trials per decision, for machine-independent runs.
    #[serde(default)]
    pub max_trials: Option<usize>,
    /// Target fraction of the root gap tolerated at depth `d`, scaled by `γ^{-d}`.
    pub xi: f64,
    pub particles: usize,
    pub air: AirConfig,
    pub bounds: BoundInitializer,
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if !(self.xi > 0.0 && self.xi < 1.0) {
            return Err(Error::InvalidConfig(format!("xi must lie in (0, 1), got {}", self.xi)));
        }
        if !(self.time_budget >= 0.0) {
            return Err(Error::InvalidConfig("time budget must be nonnegative".into()));
        }
        if self.particles == 0 {
            return Err(Error::InvalidConfig("particle count must be positive".into()));
        }
        self.air.validate()?;
        self.bounds.validate()
    }
}

pub struct BeliefNode<M: PomdpModel> {
    pub belief: ParticleSet<M::State>,
    pub depth: usize,
    pub lower: f64,
    pub upper: f64,
    /// Action index and representative observation that led here.
    pub edge: Option<(usize, M::Observation)>,
    pub parent: Option<ActionId>,
    pub children: Vec<ActionId>,
    pub air_applied: bool,
    /// False while the belief still carries the parent's weights; the
    /// observation reweighting is then applied when a trial first reaches it.
    pub reweighted: bool,
    /// No further expansion is useful: terminal, impossible, or depth-clamped.
    pub solved: bool,
}

impl<M: PomdpModel> BeliefNode<M> {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone)]
pub struct ObsBranch<K> {
    pub key: K,
    pub child: BeliefId,
    /// Estimated probability of this observation branch.
    pub prob: f64,
}

#[derive(Debug, Clone)]
pub struct ActionNode<K> {
    pub action: usize,
    pub parent: BeliefId,
    pub lower: f64,
    pub upper: f64,
    /// Weight-averaged immediate reward.
    pub reward: f64,
    pub children: Vec<ObsBranch<K>>,
}

/// Outcome of observation selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    Child(BeliefId),
    /// No branch has positive weighted excess uncertainty.
    Solved,
}

pub struct BeliefTree<M: PomdpModel> {
    beliefs: Vec<BeliefNode<M>>,
    actions: Vec<ActionNode<M::ObsKey>>,
}

impl<M: PomdpModel> BeliefTree<M> {
    pub const ROOT: BeliefId = 0;

    pub fn new(root: ParticleSet<M::State>, lower: f64, upper: f64) -> Self {
        BeliefTree {
            beliefs: vec![BeliefNode {
                belief: root,
                depth: 0,
                lower,
                upper,
                edge: None,
                parent: None,
                children: Vec::new(),
                air_applied: true,
                reweighted: true,
                solved: false,
            }],
            actions: Vec::new(),
        }
    }

    pub fn root(&self) -> &BeliefNode<M> {
        &self.beliefs[Self::ROOT]
    }

    pub fn belief(&self, id: BeliefId) -> &BeliefNode<M> {
        &self.beliefs[id]
    }

    pub fn belief_mut(&mut self, id: BeliefId) -> &mut BeliefNode<M> {
        &mut self.beliefs[id]
    }

    pub fn action(&self, id: ActionId) -> &ActionNode<M::ObsKey> {
        &self.actions[id]
    }

    pub fn action_mut(&mut self, id: ActionId) -> &mut ActionNode<M::ObsKey> {
        &mut self.actions[id]
    }

    pub fn belief_count(&self) -> usize {
        self.beliefs.len()
    }

    pub fn action_count(&self) -> usize {
        self.actions.len()
    }

    pub fn beliefs(&self) -> impl Iterator<Item = (BeliefId, &BeliefNode<M>)> {
        self.beliefs.iter().enumerate()
    }

    pub fn action_nodes(&self) -> impl Iterator<Item = (ActionId, &ActionNode<M::ObsKey>)> {
        self.actions.iter().enumerate()
    }

    /// Adds a belief node below an action node; used by expansion and tests.
    pub fn push_belief(&mut self, node: BeliefNode<M>) -> BeliefId {
        self.beliefs.push(node);
        self.beliefs.len() - 1
    }

    pub fn push_action(&mut self, node: ActionNode<M::ObsKey>) -> ActionId {
        let parent = node.parent;
        self.actions.push(node);
        let id = self.actions.len() - 1;
        self.beliefs[parent].children.push(id);
        id
    }

    /// Index of the root action with the largest lower bound.
    pub fn best_root_action(&self) -> Result<usize> {
        let root = self.root();
        if root.is_leaf() {
            return Err(Error::NotExpanded);
        }
        let best = argmax_first(root.children.iter().map(|&a| self.actions[a].lower)).expect("nonempty");
        Ok(self.actions[root.children[best]].action)
    }
}

/// Index of the first maximal element.
fn argmax_first(values: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// The child action node with the largest upper bound, lowest index on ties.
pub fn select_action<M: PomdpModel>(tree: &BeliefTree<M>, node: BeliefId) -> Result<ActionId> {
    let children = &tree.belief(node).children;
    let i = argmax_first(children.iter().map(|&a| tree.action(a).upper)).ok_or(Error::NotExpanded)?;
    Ok(children[i])
}

/// Gap at the node minus its depth-discounted share of the root gap.
pub fn excess_uncertainty(node_gap: f64, depth: usize, root_gap: f64, xi: f64, gamma: f64) -> f64 {
    node_gap - xi * root_gap / gamma.powi(depth as i32)
}

/// Picks the observation branch maximizing `p̂(o) · EU(child)`.
pub fn select_observation<M: PomdpModel>(
    tree: &BeliefTree<M>,
    action: ActionId,
    xi: f64,
    gamma: f64,
) -> Result<Selection> {
    let anode = tree.action(action);
    if anode.children.is_empty() {
        return Err(Error::NotExpanded);
    }
    let root_gap = tree.root().gap();
    let scores = anode.children.iter().map(|br| {
        let child = tree.belief(br.child);
        br.prob * excess_uncertainty(child.gap(), child.depth, root_gap, xi, gamma)
    });
    let mut best: Option<(usize, f64)> = None;
    for (i, score) in scores.enumerate() {
        match best {
            Some((_, b)) if score <= b => {}
            _ => best = Some((i, score)),
        }
    }
    let (i, score) = best.expect("nonempty");
    if score <= 0.0 {
        return Ok(Selection::Solved);
    }
    Ok(Selection::Child(anode.children[i].child))
}

/// Expands a leaf: simulates every particle under every action, groups the
/// successors by observation key, and creates one reweighted deep copy of the
/// successor set per group.
pub fn expand<M, B, R>(tree: &mut BeliefTree<M>, node: BeliefId, model: &M, bounds: &B, rng: &mut R) -> Result<()>
where
    M: PomdpModel,
    B: LeafBounds<M>,
    R: Rng + ?Sized,
{
    expand_node(tree, node, model, bounds, false, rng)
}

/// Observation likelihood of every particle of `belief` times `weights`.
fn observation_weights<M: PomdpModel>(
    belief: &ParticleSet<M::State>,
    weights: &[f64],
    obs: &M::Observation,
    action: &M::Action,
    model: &M,
) -> Vec<f64> {
    belief
        .particles()
        .iter()
        .zip(weights)
        .map(|(s, w)| model.obs_density(obs, s, action) * w)
        .collect()
}

/// Expansion proper. With `defer`, children keep the parent weights until a
/// trial reaches them.
fn expand_node<M, B, R>(tree: &mut BeliefTree<M>, node: BeliefId, model: &M, bounds: &B, defer: bool, rng: &mut R) -> Result<()>
where
    M: PomdpModel,
    B: LeafBounds<M>,
    R: Rng + ?Sized,
{
    let total = tree.belief(node).belief.total_weight();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let depth = tree.belief(node).depth + 1;
    let fallback = tree.belief(node).lower;

    for (ai, action) in model.actions().iter().enumerate() {
        let parent = &tree.belief(node).belief;
        let n = parent.len();
        let mut successors = Vec::with_capacity(n);
        let mut observations = Vec::with_capacity(n);
        let mut reward = 0.0;
        for (s, w) in parent.iter() {
            let tr = model.step(s, action, rng);
            reward += w * tr.reward;
            successors.push(tr.state);
            observations.push(tr.observation);
        }
        reward /= total;

        // Groups in order of first appearance: (key, representative obs index, parent mass).
        let mut index: HashMap<M::ObsKey, usize> = HashMap::new();
        let mut groups: Vec<(M::ObsKey, usize, f64)> = Vec::new();
        for (j, (o, w)) in observations.iter().zip(parent.weights()).enumerate() {
            let key = model.obs_key(o);
            match index.get(&key) {
                Some(&g) => groups[g].2 += w,
                None => {
                    index.insert(key.clone(), groups.len());
                    groups.push((key, j, *w));
                }
            }
        }
        let parent_weights = parent.weights().to_vec();
        let shared = ParticleSet::uniform(successors);
        let unobserved = defer.then(|| shared.with_weights_unchecked(parent_weights.clone()));

        let mut branches = Vec::with_capacity(groups.len());
        for (key, rep, mass) in groups {
            let obs = observations[rep].clone();
            let belief = if let Some(prior) = &unobserved {
                prior.clone()
            } else {
                shared.with_weights(observation_weights(&shared, &parent_weights, &obs, action, model))?
            };
            let mut child = BeliefNode {
                belief,
                depth,
                lower: 0.0,
                upper: 0.0,
                edge: Some((ai, obs)),
                parent: None,
                children: Vec::new(),
                air_applied: false,
                reweighted: !defer,
                solved: false,
            };
            init_leaf_bounds(&mut child, fallback, model, bounds, rng)?;
            let id = tree.push_belief(child);
            branches.push(ObsBranch {
                key,
                child: id,
                prob: mass / total,
            });
        }

        let aid = tree.push_action(ActionNode {
            action: ai,
            parent: node,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            reward,
            children: branches,
        });
        for br in tree.action(aid).children.clone() {
            tree.belief_mut(br.child).parent = Some(aid);
        }
        let (l, u) = action_bellman(tree, aid, model.discount());
        let an = tree.action_mut(aid);
        an.lower = l;
        an.upper = u;
    }
    Ok(())
}

/// Sets the bounds of a freshly created belief node. Impossible beliefs take
/// `fallback` for both bounds, terminal beliefs are worth zero.
fn init_leaf_bounds<M, B, R>(node: &mut BeliefNode<M>, fallback: f64, model: &M, bounds: &B, rng: &mut R) -> Result<()>
where
    M: PomdpModel,
    B: LeafBounds<M>,
    R: Rng + ?Sized,
{
    if !(node.belief.total_weight() > 0.0) {
        node.lower = fallback;
        node.upper = fallback;
        node.solved = true;
        return Ok(());
    }
    let all_terminal = node
        .belief
        .iter()
        .filter(|(_, w)| *w > 0.0)
        .all(|(s, _)| model.is_terminal(s));
    if all_terminal {
        node.lower = 0.0;
        node.upper = 0.0;
        node.solved = true;
        return Ok(());
    }
    let (l, u) = bounds.bounds(&node.belief, model, rng)?;
    node.lower = l;
    node.upper = u;
    Ok(())
}

/// Applies the deferred observation reweighting to a leaf. Returns false
/// when the reweighted belief is impossible or terminal; a terminal leaf is
/// closed at value zero.
fn reweight_leaf<M: PomdpModel>(tree: &mut BeliefTree<M>, node: BeliefId, model: &M) -> Result<bool> {
    let n = tree.belief(node);
    let (ai, obs) = n.edge.as_ref().expect("non-root nodes have an incoming edge");
    let weights = observation_weights(&n.belief, n.belief.weights(), obs, &model.actions()[*ai], model);
    let belief = n.belief.with_weights(weights)?;
    let n = tree.belief_mut(node);
    n.belief = belief;
    n.reweighted = true;
    if !(n.belief.total_weight() > 0.0) {
        return Ok(false);
    }
    if n.belief.iter().filter(|(_, w)| *w > 0.0).all(|(s, _)| model.is_terminal(s)) {
        n.lower = 0.0;
        n.upper = 0.0;
        n.solved = true;
        return Ok(false);
    }
    Ok(true)
}

fn action_bellman<M: PomdpModel>(tree: &BeliefTree<M>, action: ActionId, gamma: f64) -> (f64, f64) {
    let an = tree.action(action);
    let (mut l, mut u) = (0.0, 0.0);
    for br in &an.children {
        let c = tree.belief(br.child);
        l += br.prob * c.lower;
        u += br.prob * c.upper;
    }
    (an.reward + gamma * l, an.reward + gamma * u)
}

/// Bellman backup of every belief on `path`, deepest first. `path` lists
/// belief ids from the root downward.
///
/// Bounds only tighten: a node keeps its previous bound when that is tighter
/// than the backed-up one, unless that would cross the bounds.
pub fn backup<M: PomdpModel>(tree: &mut BeliefTree<M>, path: &[BeliefId], gamma: f64) {
    for &b in path.iter().rev() {
        if tree.belief(b).is_leaf() {
            continue;
        }
        let children = tree.belief(b).children.clone();
        let mut best_l = f64::NEG_INFINITY;
        let mut best_u = f64::NEG_INFINITY;
        for a in children {
            let (bl, bu) = action_bellman(tree, a, gamma);
            let an = tree.action_mut(a);
            (an.lower, an.upper) = tighten(an.lower, an.upper, bl, bu);
            best_l = best_l.max(an.lower);
            best_u = best_u.max(an.upper);
        }
        let node = tree.belief_mut(b);
        (node.lower, node.upper) = tighten(node.lower, node.upper, best_l, best_u);
    }
}

fn tighten(old_l: f64, old_u: f64, new_l: f64, new_u: f64) -> (f64, f64) {
    let l = old_l.max(new_l);
    let u = old_u.min(new_u);
    if l <= u {
        (l, u)
    } else {
        (new_l, new_u)
    }
}

/// Result of one planning call.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanOutcome {
    pub action: usize,
    pub root_lower: f64,
    pub root_upper: f64,
    pub trials: usize,
    pub belief_nodes: usize,
}

/// Runs trials from `root` until the time or trial budget runs out or the
/// root gap closes. Annealing is applied to each non-root leaf before its
/// expansion when `anneal` is set.
pub struct Planner<'a, M: PomdpModel, B> {
    pub model: &'a M,
    pub config: &'a PlannerConfig,
    pub bounds: &'a B,
    pub anneal: bool,
}

impl<'a, M: PomdpModel, B: LeafBounds<M>> Planner<'a, M, B> {
    pub fn new(model: &'a M, config: &'a PlannerConfig, bounds: &'a B, anneal: bool) -> Self {
        Planner {
            model,
            config,
            bounds,
            anneal,
        }
    }

    /// Builds the search tree for `root` and returns it with the trial count.
    pub fn search<R: Rng + ?Sized>(&self, root: &ParticleSet<M::State>, rng: &mut R) -> Result<(BeliefTree<M>, usize)> {
        if root.is_empty() {
            return Err(Error::EmptyRootBelief);
        }
        if !(root.total_weight() > 0.0) {
            return Err(Error::ZeroTotalWeight);
        }
        let mut tree = BeliefTree::new(root.clone(), 0.0, 0.0);
        {
            let r = tree.belief_mut(BeliefTree::<M>::ROOT);
            init_leaf_bounds(r, 0.0, self.model, self.bounds, rng)?;
            // The root must be expanded for an action to exist.
            r.solved = false;
        }

        let start = Instant::now();
        let budget = Duration::from_secs_f64(self.config.time_budget);
        let mut trials = 0usize;
        loop {
            if trials > 0 {
                if tree.root().gap() <= GAP_TOLERANCE || start.elapsed() >= budget {
                    break;
                }
                if self.config.max_trials.is_some_and(|cap| trials >= cap) {
                    break;
                }
            }
            self.trial(&mut tree, rng)?;
            trials += 1;
        }
        Ok((tree, trials))
    }

    pub fn plan<R: Rng + ?Sized>(&self, root: &ParticleSet<M::State>, rng: &mut R) -> Result<PlanOutcome> {
        let (tree, trials) = self.search(root, rng)?;
        Ok(PlanOutcome {
            action: tree.best_root_action()?,
            root_lower: tree.root().lower,
            root_upper: tree.root().upper,
            trials,
            belief_nodes: tree.belief_count(),
        })
    }

    fn trial<R: Rng + ?Sized>(&self, tree: &mut BeliefTree<M>, rng: &mut R) -> Result<()> {
        let gamma = self.model.discount();
        let mut path = vec![BeliefTree::<M>::ROOT];
        let mut node = BeliefTree::<M>::ROOT;
        loop {
            if tree.belief(node).depth >= self.config.max_depth {
                let b = tree.belief_mut(node);
                b.upper = b.lower;
                b.solved = true;
                break;
            }
            if tree.belief(node).is_leaf() {
                if tree.belief(node).solved {
                    break;
                }
                if !self.prepare_leaf(tree, node, rng)? {
                    break;
                }
                backup(tree, &path, gamma);
            }
            let a = select_action(tree, node)?;
            match select_observation(tree, a, self.config.xi, gamma)? {
                Selection::Child(c) => {
                    node = c;
                    path.push(c);
                }
                Selection::Solved => break,
            }
        }
        backup(tree, &path, gamma);
        Ok(())
    }

    /// Anneals and expands a leaf. Returns false when the leaf turned out to
    /// be degenerate and was closed instead.
    fn prepare_leaf<R: Rng + ?Sized>(&self, tree: &mut BeliefTree<M>, node: BeliefId, rng: &mut R) -> Result<bool> {
        if self.anneal && !tree.belief(node).air_applied {
            let n = tree.belief(node);
            let (ai, obs) = n.edge.clone().expect("non-root nodes have an incoming edge");
            let action = &self.model.actions()[ai];
            let parent = tree.action(n.parent.expect("non-root nodes have a parent")).parent;
            // anneal from the successors as drawn, before the observation reweighting
            let prior = n.belief.with_weights_unchecked(tree.belief(parent).belief.weights().to_vec());
            let result = annealed_importance_resampling(&prior, &obs, action, &self.config.air, self.model, rng);
            match result {
                Ok(b) => {
                    let n = tree.belief_mut(node);
                    n.belief = b;
                    n.air_applied = true;
                    n.reweighted = true;
                }
                Err(Error::ZeroTotalWeight) => {
                    self.close_degenerate(tree, node);
                    return Ok(false);
                }
                Err(e) => return Err(e),
            }
        }
        if !tree.belief(node).reweighted && !reweight_leaf(tree, node, self.model)? {
            if !tree.belief(node).solved {
                self.close_degenerate(tree, node);
            }
            return Ok(false);
        }
        match expand_node(tree, node, self.model, self.bounds, !self.bounds.reads_belief(), rng) {
            Ok(()) => Ok(true),
            Err(Error::ZeroTotalWeight) => {
                self.close_degenerate(tree, node);
                Ok(false)
            }
            Err(e) => Err(e),
        }
    }

    fn close_degenerate(&self, tree: &mut BeliefTree<M>, node: BeliefId) {
        let fallback = tree
            .belief(node)
            .parent
            .map(|a| tree.belief(tree.action(a).parent).lower)
            .unwrap_or(tree.belief(node).lower);
        let n = tree.belief_mut(node);
        n.lower = fallback;
        n.upper = fallback;
        n.solved = true;
    }
}

/// Plans with annealed importance resampling at every expanded leaf.
pub fn plan<M: PomdpModel, R: Rng + ?Sized>(
    root: &ParticleSet<M::State>,
    model: &M,
    config: &PlannerConfig,
    rng: &mut R,
) -> Result<PlanOutcome> {
    Planner::new(model, config, &config.bounds, true).plan(root, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn excess_uncertainty_examples() {
        // at the root the target share equals xi times the root gap itself
        assert_eq!(excess_uncertainty(10.0, 0, 10.0, 1.0, 0.3), 0.0);
        assert_relative_eq!(excess_uncertainty(10.0, 1, 10.0, 0.95, 0.95), 0.0, epsilon = 1e-12);
        assert_relative_eq!(
            excess_uncertainty(2.0, 3, 10.0, 0.95, 0.95),
            2.0 - 9.5 / 0.857375,
            epsilon = 1e-12
        );
        assert_relative_eq!(excess_uncertainty(2.0, 3, 10.0, 0.95, 0.95), -9.080_332_409_972_3, epsilon = 1e-9);
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax_first([3.0, 5.0].into_iter()), Some(1));
        assert_eq!(argmax_first([4.0, 4.0].into_iter()), Some(0));
        assert_eq!(argmax_first([-1.0, -2.0].into_iter()), Some(0));
        assert_eq!(argmax_first(std::iter::empty()), None);
    }

    #[test]
    fn tighten_keeps_order() {
        assert_eq!(tighten(0.0, 10.0, 1.0, 12.0), (1.0, 10.0));
        assert_eq!(tighten(5.0, 10.0, 0.0, 4.0), (0.0, 4.0));
    }
}
