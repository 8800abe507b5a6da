//! LaserTag: Tag on a 7×11 grid with obstacles, where neither position is
//! observed and the agent only gets eight noisy laser range readings.

use airoas_core::{PomdpModel, Proposal, Transition};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::grid::GridMap;
use crate::normal_cdf;
use crate::tag::{flee, TagAction, TagState, TAG_ACTIONS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LaserTagParams {
    pub width: i32,
    pub height: i32,
    pub obstacles: usize,
    /// Seed for the obstacle layout.
    pub map_seed: u64,
    pub flee_probability: f64,
    /// Per-beam noise before rounding, in cells. Readings outside
    /// `0..=max_reading` are redrawn.
    pub laser_sd: f64,
    /// Largest reading a beam can report.
    pub max_reading: u8,
    pub tag_reward: f64,
    pub tag_penalty: f64,
    pub step_cost: f64,
    pub discount: f64,
}

impl Default for LaserTagParams {
    fn default() -> Self {
        LaserTagParams {
            width: 11,
            height: 7,
            obstacles: 8,
            map_seed: 0,
            flee_probability: 0.8,
            laser_sd: 2.5,
            max_reading: 15,
            tag_reward: 10.0,
            tag_penalty: -10.0,
            step_cost: -1.0,
            discount: 0.95,
        }
    }
}

/// Range readings in the order N, NE, E, SE, S, SW, W, NW.
pub type Readings = [u8; 8];

const BEAMS: [(i32, i32); 8] = [(0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1)];

#[derive(Debug, Clone)]
pub struct LaserTag {
    params: LaserTagParams,
    map: GridMap,
    /// Noiseless readings per free cell.
    ranges: Vec<Readings>,
    /// `reading_probs[d][r]`: probability of reading `r` at true range `d`.
    reading_probs: Vec<Vec<f64>>,
}

impl LaserTag {
    pub fn new(params: LaserTagParams) -> Self {
        let map = random_map(&params);
        let ranges = (0..map.free_cells()).map(|c| true_ranges(&map, c)).collect();
        let max_range = params.width.max(params.height) as usize;
        let reading_probs = (0..=max_range)
            .map(|d| truncated_masses(d as f64, params.laser_sd, params.max_reading))
            .collect();
        LaserTag {
            params,
            map,
            ranges,
            reading_probs,
        }
    }

    pub fn map(&self) -> &GridMap {
        &self.map
    }

    pub fn true_readings(&self, cell: usize) -> Readings {
        self.ranges[cell]
    }

    /// Probability of one beam reporting `reading` when the true range is `range`.
    pub fn beam_density(&self, range: u8, reading: u8) -> f64 {
        self.reading_probs[range as usize]
            .get(reading as usize)
            .copied()
            .unwrap_or(0.0)
    }

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

    fn read<R: Rng + ?Sized>(&self, cell: usize, rng: &mut R) -> Readings {
        let mut out = [0u8; 8];
        let top = self.params.max_reading as f64;
        for (o, &d) in out.iter_mut().zip(&self.ranges[cell]) {
            *o = loop {
                let z: f64 = rng.sample(StandardNormal);
                let r = (d as f64 + self.params.laser_sd * z).round();
                if (0.0..=top).contains(&r) {
                    break r as u8;
                }
            };
        }
        out
    }

    fn mutation_sigma(&self, agent: usize, obs: &Readings, scale: f64) -> f64 {
        let l1: i32 = self.ranges[agent]
            .iter()
            .zip(obs)
            .map(|(&d, &o)| (d as i32 - o as i32).abs())
            .sum();
        let cap = self.params.width.max(self.params.height) as f64;
        (scale * l1 as f64).clamp(crate::GRID_SIGMA_FLOOR, cap)
    }
}

/// Places obstacles uniformly at random until the free cells are connected.
fn random_map(p: &LaserTagParams) -> GridMap {
    let cells = (p.width * p.height) as usize;
    assert!(p.obstacles < cells, "too many obstacles");
    let mut rng = ChaCha8Rng::seed_from_u64(p.map_seed);
    loop {
        let picks = sample(&mut rng, cells, p.obstacles).into_vec();
        let w = p.width;
        let map = GridMap::new(p.width, p.height, |x, y| picks.contains(&((y * w + x) as usize)));
        if map.is_connected() {
            return map;
        }
    }
}

/// Mass of `N(center, sigma²)` rounded to each reading in `0..=max`,
/// conditioned on landing in that range.
fn truncated_masses(center: f64, sigma: f64, max: u8) -> Vec<f64> {
    let cdf = |x: f64| normal_cdf((x - center) / sigma);
    let total = cdf(max as f64 + 0.5) - cdf(-0.5);
    (0..=max)
        .map(|r| (cdf(r as f64 + 0.5) - cdf(r as f64 - 0.5)) / total)
        .collect()
}

fn true_ranges(map: &GridMap, cell: usize) -> Readings {
    let (x, y) = map.coords(cell);
    let mut out = [0u8; 8];
    for (o, &(dx, dy)) in out.iter_mut().zip(&BEAMS) {
        let mut k = 1;
        while map.is_free(x + k * dx, y + k * dy) {
            k += 1;
        }
        *o = k as u8;
    }
    out
}

impl PomdpModel for LaserTag {
    type State = TagState;
    type Action = TagAction;
    type Observation = Readings;
    type ObsKey = Readings;

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> TagState {
        let n = self.map.free_cells();
        TagState {
            agent: rng.random_range(0..n),
            opponent: rng.random_range(0..n),
            tagged: false,
        }
    }

    fn step<R: Rng + ?Sized>(&self, s: &TagState, a: &TagAction, rng: &mut R) -> Transition<TagState, Readings> {
        let (next, reward) = if s.tagged {
            (*s, 0.0)
        } else {
            match a {
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
            }
        };
        Transition {
            state: next,
            observation: self.read(next.agent, rng),
            reward,
        }
    }

    fn obs_density(&self, o: &Readings, s: &TagState, _a: &TagAction) -> f64 {
        self.ranges[s.agent]
            .iter()
            .zip(o)
            .map(|(&d, &r)| self.beam_density(d, r))
            .product()
    }

    fn obs_key(&self, o: &Readings) -> Readings {
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

    /// Independent discretized Gaussian moves of both positions, with width
    /// proportional to the L1 distance between the state's noiseless readings
    /// and the observed readings.
    fn propose_mutation<R: Rng + ?Sized>(&self, s: &TagState, o: &Readings, _a: &TagAction, scale: f64, rng: &mut R) -> Proposal<TagState> {
        if s.tagged {
            return Proposal::symmetric(*s);
        }
        let sd = self.mutation_sigma(s.agent, o, scale);
        let agent = self.map.sample_gaussian(s.agent, sd, rng);
        let opponent = self.map.sample_gaussian(s.opponent, sd, rng);
        let back = self.mutation_sigma(agent, o, scale);
        Proposal {
            candidate: TagState {
                agent,
                opponent,
                tagged: false,
            },
            forward: self.map.gaussian_mass(s.agent, sd, agent) * self.map.gaussian_mass(s.opponent, sd, opponent),
            reverse: self.map.gaussian_mass(agent, back, s.agent) * self.map.gaussian_mass(opponent, back, s.opponent),
        }
    }
}
