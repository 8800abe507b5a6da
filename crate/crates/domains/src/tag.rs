//! Tag on the 29-cell map: catch an opponent that flees, seeing it only when
//! sharing its cell.

use airoas_core::{PomdpModel, Proposal, Transition};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{Direction, GridMap};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TagParams {
    /// Probability that the opponent moves away instead of staying put.
    pub flee_probability: f64,
    pub tag_reward: f64,
    pub tag_penalty: f64,
    pub step_cost: f64,
    pub discount: f64,
}

impl Default for TagParams {
    fn default() -> Self {
        TagParams {
            flee_probability: 0.8,
            tag_reward: 10.0,
            tag_penalty: -10.0,
            step_cost: -1.0,
            discount: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TagState {
    pub agent: usize,
    pub opponent: usize,
    pub tagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TagAction {
    Move(Direction),
    Tag,
}

pub const TAG_ACTIONS: [TagAction; 5] = [
    TagAction::Move(Direction::North),
    TagAction::Move(Direction::East),
    TagAction::Move(Direction::South),
    TagAction::Move(Direction::West),
    TagAction::Tag,
];

/// The agent's own cell, and whether the opponent shares it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TagObs {
    pub agent: usize,
    pub opponent_seen: bool,
}

/// The standard Tag map: a 10×2 corridor with a 3×3 room above columns 5-7.
pub fn tag_map() -> GridMap {
    GridMap::new(10, 5, |x, y| y >= 2 && !(5..=7).contains(&x))
}

/// Opponent response shared by Tag and LaserTag: with probability `flee` move
/// to a uniformly chosen neighbour that increases the Manhattan distance to
/// `agent`, otherwise stay.
pub(crate) fn flee<R: Rng + ?Sized>(map: &GridMap, opponent: usize, agent: usize, flee: f64, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    if u >= flee {
        return opponent;
    }
    let here = map.manhattan(opponent, agent);
    let mut away = [0usize; 4];
    let mut n = 0;
    for d in Direction::ALL {
        let c = map.moved(opponent, d);
        if c != opponent && map.manhattan(c, agent) > here {
            away[n] = c;
            n += 1;
        }
    }
    if n == 0 {
        opponent
    } else {
        away[rng.random_range(0..n)]
    }
}

#[derive(Debug, Clone)]
pub struct Tag {
    params: TagParams,
    map: GridMap,
}

impl Tag {
    pub fn new(params: TagParams) -> Self {
        Tag { params, map: tag_map() }
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    /// Every state: untagged pairs of cells plus one tagged state per cell.
    pub fn enumerate_states(&self) -> Vec<TagState> {
        let n = self.map.free_cells();
        let mut out = Vec::with_capacity(n * n + n);
        for agent in 0..n {
            for opponent in 0..n {
                out.push(TagState {
                    agent,
                    opponent,
                    tagged: false,
                });
            }
        }
        for c in 0..n {
            out.push(TagState {
                agent: c,
                opponent: c,
                tagged: true,
            });
        }
        out
    }

    pub fn observe(&self, s: &TagState) -> TagObs {
        TagObs {
            agent: s.agent,
            opponent_seen: s.agent == s.opponent,
        }
    }

    fn mutation_sigma(&self, opponent: usize, obs: &TagObs, scale: f64) -> f64 {
        (scale * self.map.manhattan(opponent, obs.agent) as f64).max(crate::GRID_SIGMA_FLOOR)
    }
}

impl PomdpModel for Tag {
    type State = TagState;
    type Action = TagAction;
    type Observation = TagObs;
    type ObsKey = TagObs;

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> TagState {
        let n = self.map.free_cells();
        TagState {
            agent: rng.random_range(0..n),
            opponent: rng.random_range(0..n),
            tagged: false,
        }
    }

    fn step<R: Rng + ?Sized>(&self, s: &TagState, a: &TagAction, rng: &mut R) -> Transition<TagState, TagObs> {
        if s.tagged {
            return Transition {
                state: *s,
                observation: self.observe(s),
                reward: 0.0,
            };
        }
        let (next, reward) = match a {
            TagAction::Tag if s.agent == s.opponent => (
                TagState {
                    tagged: true,
                    ..*s
                },
                self.params.tag_reward,
            ),
            TagAction::Tag => (
                TagState {
                    opponent: flee(&self.map, s.opponent, s.agent, self.params.flee_probability, rng),
                    ..*s
                },
                self.params.tag_penalty,
            ),
            TagAction::Move(d) => (
                TagState {
                    agent: self.map.moved(s.agent, *d),
                    opponent: flee(&self.map, s.opponent, s.agent, self.params.flee_probability, rng),
                    tagged: false,
                },
                self.params.step_cost,
            ),
        };
        Transition {
            state: next,
            observation: self.observe(&next),
            reward,
        }
    }

    fn obs_density(&self, o: &TagObs, s: &TagState, _a: &TagAction) -> f64 {
        if *o == self.observe(s) {
            1.0
        } else {
            0.0
        }
    }

    fn obs_key(&self, o: &TagObs) -> TagObs {
        *o
    }

    fn actions(&self) -> &[TagAction] {
        &TAG_ACTIONS
    }

    fn discount(&self) -> f64 {
        self.params.discount
    }

    fn is_terminal(&self, s: &TagState) -> bool {
        s.tagged
    }

    /// Discretized Gaussian move of the opponent only; the agent's cell is
    /// observed. The width scales with the opponent's distance to the agent.
    fn propose_mutation<R: Rng + ?Sized>(&self, s: &TagState, o: &TagObs, _a: &TagAction, scale: f64, rng: &mut R) -> Proposal<TagState> {
        if s.tagged {
            return Proposal::symmetric(*s);
        }
        let sd = self.mutation_sigma(s.opponent, o, scale);
        let opponent = self.map.sample_gaussian(s.opponent, sd, rng);
        let back = self.mutation_sigma(opponent, o, scale);
        Proposal {
            candidate: TagState { opponent, ..*s },
            forward: self.map.gaussian_mass(s.opponent, sd, opponent),
            reverse: self.map.gaussian_mass(opponent, back, s.opponent),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn state_count_matches_standard_tag() {
        let t = Tag::new(TagParams::default());
        assert_eq!(t.map().free_cells(), 29);
        assert_eq!(t.enumerate_states().len(), 870);
    }

    #[test]
    fn tag_rules() {
        let t = Tag::new(TagParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = TagState {
            agent: 3,
            opponent: 3,
            tagged: false,
        };
        let tr = t.step(&s, &TagAction::Tag, &mut rng);
        assert_eq!(tr.reward, 10.0);
        assert!(t.is_terminal(&tr.state));
        let s = TagState {
            agent: 3,
            opponent: 8,
            tagged: false,
        };
        let tr = t.step(&s, &TagAction::Tag, &mut rng);
        assert_eq!(tr.reward, -10.0);
        assert!(!t.is_terminal(&tr.state));
        let tr = t.step(&s, &TagAction::Move(Direction::East), &mut rng);
        assert_eq!(tr.reward, -1.0);
    }

    #[test]
    fn opponent_seen_only_when_colocated() {
        let t = Tag::new(TagParams::default());
        let seen = TagObs {
            agent: 4,
            opponent_seen: true,
        };
        let apart = TagState {
            agent: 4,
            opponent: 5,
            tagged: false,
        };
        let together = TagState {
            agent: 4,
            opponent: 4,
            tagged: false,
        };
        assert_eq!(t.obs_density(&seen, &apart, &TagAction::Tag), 0.0);
        assert_eq!(t.obs_density(&seen, &together, &TagAction::Tag), 1.0);
    }

    #[test]
    fn opponent_never_approaches() {
        let t = Tag::new(TagParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let s = t.initial_state(&mut rng);
            let o = flee(t.map(), s.opponent, s.agent, 0.8, &mut rng);
            assert!(o == s.opponent || t.map().manhattan(o, s.agent) > t.map().manhattan(s.opponent, s.agent));
        }
    }
}
