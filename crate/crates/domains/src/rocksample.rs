//! RockSample(n, m): a rover on an n×n grid samples rocks of unknown quality,
//! sensing them from afar with a sensor that degrades with distance, and
//! leaves through the east edge.

use std::collections::HashMap;

use airoas_core::{PomdpModel, Proposal, Transition};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::Direction;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RockSampleParams {
    pub size: i32,
    pub rocks: usize,
    /// Explicit rock cells; drawn from `map_seed` when absent.
    pub rock_positions: Option<Vec<(i32, i32)>>,
    pub map_seed: u64,
    /// Distance at which sensing is correct with probability 0.75.
    pub half_efficiency_distance: f64,
    pub good_reward: f64,
    pub bad_penalty: f64,
    pub exit_reward: f64,
    pub move_cost: f64,
    pub sense_cost: f64,
    /// Prior probability that each rock is good.
    pub good_probability: f64,
    pub discount: f64,
}

impl Default for RockSampleParams {
    fn default() -> Self {
        RockSampleParams {
            size: 11,
            rocks: 11,
            rock_positions: None,
            map_seed: 0,
            half_efficiency_distance: 20.0,
            good_reward: 10.0,
            bad_penalty: -10.0,
            exit_reward: 10.0,
            move_cost: 0.0,
            sense_cost: 0.0,
            good_probability: 0.5,
            discount: 0.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RockState {
    pub x: i32,
    pub y: i32,
    /// Bit `i` is set when rock `i` is good.
    pub rocks: u64,
    pub exited: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RockAction {
    Move(Direction),
    Sample,
    Sense(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RockObs {
    Good,
    Bad,
    None,
}

/// Good rock counts up to this size get an exact MDP value.
const EXACT_MDP_ROCKS: u32 = 8;

#[derive(Debug, Clone)]
pub struct RockSample {
    params: RockSampleParams,
    positions: Vec<(i32, i32)>,
    actions: Vec<RockAction>,
}

impl RockSample {
    pub fn new(params: RockSampleParams) -> Self {
        let n = params.size;
        assert!(n > 0, "map size must be positive");
        assert!(params.rocks <= 64, "at most 64 rocks");
        let positions = match &params.rock_positions {
            Some(p) => {
                assert_eq!(p.len(), params.rocks, "rock position count");
                assert!(
                    p.iter().all(|&(x, y)| (0..n).contains(&x) && (0..n).contains(&y)),
                    "rock outside the map"
                );
                p.clone()
            }
            None => {
                let mut rng = ChaCha8Rng::seed_from_u64(params.map_seed);
                sample(&mut rng, (n * n) as usize, params.rocks)
                    .into_iter()
                    .map(|c| (c as i32 % n, c as i32 / n))
                    .collect()
            }
        };
        let mut actions: Vec<RockAction> = Direction::ALL.iter().map(|&d| RockAction::Move(d)).collect();
        actions.push(RockAction::Sample);
        actions.extend((0..params.rocks).map(RockAction::Sense));
        RockSample {
            params,
            positions,
            actions,
        }
    }

    pub fn params(&self) -> &RockSampleParams {
        &self.params
    }

    pub fn rock_positions(&self) -> &[(i32, i32)] {
        &self.positions
    }

    pub fn state_count(&self) -> u64 {
        (self.params.size as u64).pow(2) << self.params.rocks
    }

    pub fn start(&self, rocks: u64) -> RockState {
        RockState {
            x: 0,
            y: self.params.size / 2,
            rocks,
            exited: false,
        }
    }

    /// Probability that sensing a rock at distance `d` reports its true quality.
    pub fn sensor_accuracy(&self, d: f64) -> f64 {
        0.5 + 0.5 * (-d / self.params.half_efficiency_distance).exp2()
    }

    pub fn is_legal(&self, s: &RockState) -> bool {
        let n = self.params.size;
        (0..n).contains(&s.x) && (0..n).contains(&s.y) && (self.params.rocks == 64 || s.rocks >> self.params.rocks == 0)
    }

    fn rock_at(&self, x: i32, y: i32) -> Option<usize> {
        self.positions.iter().position(|&p| p == (x, y))
    }

    fn sense_distance(&self, s: &RockState, rock: usize) -> f64 {
        let (rx, ry) = self.positions[rock];
        (((s.x - rx).pow(2) + (s.y - ry).pow(2)) as f64).sqrt()
    }

    /// Optimal value with every rock quality known. Exact over visit orders
    /// for few good rocks, otherwise an admissible relaxation that credits
    /// every good rock and the exit as if each were reached directly.
    fn known_quality_value(&self, s: &RockState) -> f64 {
        let g = self.params.discount;
        let n = self.params.size;
        let good: Vec<(i32, i32)> = (0..self.params.rocks)
            .filter(|i| s.rocks >> i & 1 == 1)
            .map(|i| self.positions[i])
            .collect();
        let dist = |a: (i32, i32), b: (i32, i32)| (a.0 - b.0).abs() + (a.1 - b.1).abs();
        let exit = |p: (i32, i32)| self.params.exit_reward * g.powi(n - 1 - p.0);
        let here = (s.x, s.y);
        if good.len() as u32 > EXACT_MDP_ROCKS {
            return good
                .iter()
                .map(|&p| self.params.good_reward * g.powi(dist(here, p)))
                .sum::<f64>()
                + exit(here);
        }
        let mut memo = HashMap::new();
        self.best_tour(good.len(), (1u32 << good.len()) - 1, here, &good, &mut memo)
    }

    /// Best value from rock `at` (or the robot's cell when `at == good.len()`)
    /// with the good rocks in `remaining` still to collect.
    fn best_tour(
        &self,
        at: usize,
        remaining: u32,
        here: (i32, i32),
        good: &[(i32, i32)],
        memo: &mut HashMap<(usize, u32), f64>,
    ) -> f64 {
        if let Some(&v) = memo.get(&(at, remaining)) {
            return v;
        }
        let g = self.params.discount;
        let pos = if at == good.len() { here } else { good[at] };
        let mut best = self.params.exit_reward * g.powi(self.params.size - 1 - pos.0);
        for (j, &rock) in good.iter().enumerate() {
            if remaining >> j & 1 == 1 {
                let d = (pos.0 - rock.0).abs() + (pos.1 - rock.1).abs();
                let rest = self.best_tour(j, remaining & !(1 << j), here, good, memo);
                best = best.max(g.powi(d) * (self.params.good_reward + g * rest));
            }
        }
        memo.insert((at, remaining), best);
        best
    }
}

impl PomdpModel for RockSample {
    type State = RockState;
    type Action = RockAction;
    type Observation = RockObs;
    type ObsKey = RockObs;

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> RockState {
        let mut rocks = 0u64;
        for i in 0..self.params.rocks {
            if rng.random::<f64>() < self.params.good_probability {
                rocks |= 1 << i;
            }
        }
        self.start(rocks)
    }

    fn step<R: Rng + ?Sized>(&self, s: &RockState, a: &RockAction, rng: &mut R) -> Transition<RockState, RockObs> {
        if s.exited {
            return Transition {
                state: *s,
                observation: RockObs::None,
                reward: 0.0,
            };
        }
        let n = self.params.size;
        let mut next = *s;
        let mut observation = RockObs::None;
        let reward = match a {
            RockAction::Move(Direction::East) if s.x == n - 1 => {
                next.exited = true;
                self.params.exit_reward
            }
            RockAction::Move(d) => {
                let (dx, dy) = d.delta();
                next.x = (s.x + dx).clamp(0, n - 1);
                next.y = (s.y + dy).clamp(0, n - 1);
                self.params.move_cost
            }
            RockAction::Sample => match self.rock_at(s.x, s.y) {
                Some(i) if s.rocks >> i & 1 == 1 => {
                    next.rocks &= !(1 << i);
                    self.params.good_reward
                }
                Some(_) => self.params.bad_penalty,
                None => 0.0,
            },
            RockAction::Sense(i) => {
                let good = s.rocks >> i & 1 == 1;
                let correct = rng.random::<f64>() < self.sensor_accuracy(self.sense_distance(s, *i));
                observation = if good == correct { RockObs::Good } else { RockObs::Bad };
                self.params.sense_cost
            }
        };
        Transition {
            state: next,
            observation,
            reward,
        }
    }

    fn obs_density(&self, o: &RockObs, s: &RockState, a: &RockAction) -> f64 {
        match (a, o) {
            (RockAction::Sense(_), RockObs::None) => 0.0,
            (RockAction::Sense(i), _) => {
                let acc = self.sensor_accuracy(self.sense_distance(s, *i));
                let good = s.rocks >> i & 1 == 1;
                if good == (*o == RockObs::Good) {
                    acc
                } else {
                    1.0 - acc
                }
            }
            (_, RockObs::None) => 1.0,
            _ => 0.0,
        }
    }

    fn obs_key(&self, o: &RockObs) -> RockObs {
        *o
    }

    fn actions(&self) -> &[RockAction] {
        &self.actions
    }

    fn discount(&self) -> f64 {
        self.params.discount
    }

    fn is_terminal(&self, s: &RockState) -> bool {
        s.exited
    }

    /// Flips the quality of the sensed rock; other actions carry no
    /// information about the rocks and leave the state alone.
    fn propose_mutation<R: Rng + ?Sized>(&self, s: &RockState, _o: &RockObs, a: &RockAction, _scale: f64, _rng: &mut R) -> Proposal<RockState> {
        match a {
            RockAction::Sense(i) if !s.exited => Proposal::symmetric(RockState {
                rocks: s.rocks ^ (1 << i),
                ..*s
            }),
            _ => Proposal::symmetric(*s),
        }
    }

    fn mdp_value(&self, s: &RockState) -> Option<f64> {
        Some(if s.exited { 0.0 } else { self.known_quality_value(s) })
    }
}
