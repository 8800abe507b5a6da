//! One-dimensional LightDark: localize using position readings whose noise
//! grows with the distance from a light, then declare inside the goal.

use airoas_core::{PomdpModel, Proposal, Transition};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::gaussian_pdf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LightDarkParams {
    /// Distance covered by one move (`α`).
    pub step_size: f64,
    pub light_position: f64,
    pub goal_center: f64,
    pub goal_radius: f64,
    /// Minimum observation standard deviation, reached at the light.
    pub noise_floor: f64,
    pub init_mean: f64,
    pub init_sd: f64,
    pub correct_reward: f64,
    pub incorrect_reward: f64,
    /// Cost charged for each move.
    pub movement_cost: f64,
    pub discount: f64,
    /// Width of the observation bins used to branch the search tree.
    pub obs_bin_width: f64,
}

impl Default for LightDarkParams {
    fn default() -> Self {
        LightDarkParams {
            step_size: 1.0,
            light_position: 5.0,
            goal_center: 0.0,
            goal_radius: 1.0,
            noise_floor: 1e-2,
            init_mean: 2.0,
            init_sd: 3.0,
            correct_reward: 10.0,
            incorrect_reward: -10.0,
            movement_cost: 0.0,
            discount: 0.9,
            obs_bin_width: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightDarkState {
    pub x: f64,
    pub done: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LightDarkAction {
    Left,
    Right,
    Declare,
}

#[derive(Debug, Clone)]
pub struct LightDark {
    params: LightDarkParams,
}

const ACTIONS: [LightDarkAction; 3] = [LightDarkAction::Left, LightDarkAction::Right, LightDarkAction::Declare];

/// Lower limit on the mutation proposal width.
pub const MUTATION_SIGMA_FLOOR: f64 = 1e-3;

impl LightDark {
    pub fn new(params: LightDarkParams) -> Self {
        assert!(params.step_size > 0.0, "step size must be positive");
        assert!(params.noise_floor > 0.0, "noise floor must be positive");
        LightDark { params }
    }

    pub fn params(&self) -> &LightDarkParams {
        &self.params
    }

    /// Observation noise at position `x`.
    pub fn sigma(&self, x: f64) -> f64 {
        (x - self.params.light_position).abs() / std::f64::consts::SQRT_2 + self.params.noise_floor
    }

    pub fn in_goal(&self, x: f64) -> bool {
        (x - self.params.goal_center).abs() < self.params.goal_radius
    }

    fn mutation_sigma(&self, x: f64, obs: f64, scale: f64) -> f64 {
        (scale * (x - obs).abs()).max(MUTATION_SIGMA_FLOOR)
    }
}

impl PomdpModel for LightDark {
    type State = LightDarkState;
    type Action = LightDarkAction;
    type Observation = f64;
    type ObsKey = i64;

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> LightDarkState {
        let z: f64 = rng.sample(StandardNormal);
        LightDarkState {
            x: self.params.init_mean + self.params.init_sd * z,
            done: false,
        }
    }

    fn step<R: Rng + ?Sized>(&self, s: &LightDarkState, a: &LightDarkAction, rng: &mut R) -> Transition<LightDarkState, f64> {
        let (next, reward) = if s.done {
            (*s, 0.0)
        } else {
            match a {
                LightDarkAction::Left => (
                    LightDarkState {
                        x: s.x - self.params.step_size,
                        done: false,
                    },
                    -self.params.movement_cost,
                ),
                LightDarkAction::Right => (
                    LightDarkState {
                        x: s.x + self.params.step_size,
                        done: false,
                    },
                    -self.params.movement_cost,
                ),
                LightDarkAction::Declare => {
                    let r = if self.in_goal(s.x) {
                        self.params.correct_reward
                    } else {
                        self.params.incorrect_reward
                    };
                    (LightDarkState { x: s.x, done: true }, r)
                }
            }
        };
        let z: f64 = rng.sample(StandardNormal);
        Transition {
            state: next,
            observation: next.x + self.sigma(next.x) * z,
            reward,
        }
    }

    fn obs_density(&self, o: &f64, s: &LightDarkState, _a: &LightDarkAction) -> f64 {
        gaussian_pdf(*o, s.x, self.sigma(s.x))
    }

    fn obs_key(&self, o: &f64) -> i64 {
        (o / self.params.obs_bin_width).floor() as i64
    }

    fn actions(&self) -> &[LightDarkAction] {
        &ACTIONS
    }

    fn discount(&self) -> f64 {
        self.params.discount
    }

    fn is_terminal(&self, s: &LightDarkState) -> bool {
        s.done
    }

    /// Gaussian random walk on the position with width proportional to the
    /// distance between the position and the observation.
    fn propose_mutation<R: Rng + ?Sized>(
        &self,
        s: &LightDarkState,
        o: &f64,
        _a: &LightDarkAction,
        scale: f64,
        rng: &mut R,
    ) -> Proposal<LightDarkState> {
        if s.done {
            return Proposal::symmetric(*s);
        }
        let sd = self.mutation_sigma(s.x, *o, scale);
        let z: f64 = rng.sample(StandardNormal);
        let x = s.x + sd * z;
        let back = self.mutation_sigma(x, *o, scale);
        Proposal {
            candidate: LightDarkState { x, done: false },
            forward: gaussian_pdf(x, s.x, sd),
            reverse: gaussian_pdf(s.x, x, back),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> LightDark {
        LightDark::new(LightDarkParams::default())
    }

    #[test]
    fn density_peaks_at_the_light() {
        let m = model();
        let light = m.params().light_position;
        let at_light = m.obs_density(&light, &LightDarkState { x: light, done: false }, &LightDarkAction::Left);
        for i in 0..100 {
            let x = -10.0 + 0.25 * i as f64;
            if (x - light).abs() < 1e-12 {
                continue;
            }
            let d = m.obs_density(&x, &LightDarkState { x, done: false }, &LightDarkAction::Left);
            assert!(d < at_light);
        }
    }

    #[test]
    fn sigma_grows_away_from_light() {
        let m = model();
        let light = m.params().light_position;
        let mut xs: Vec<f64> = (0..100).map(|i| -15.0 + 0.3 * i as f64).collect();
        xs.sort_by(|a, b| (a - light).abs().partial_cmp(&(b - light).abs()).unwrap());
        for w in xs.windows(2) {
            assert!(m.sigma(w[0]) <= m.sigma(w[1]));
        }
    }

    #[test]
    fn declare_rewards() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = m.step(&LightDarkState { x: 0.0, done: false }, &LightDarkAction::Declare, &mut rng);
        assert_eq!(t.reward, 10.0);
        assert!(m.is_terminal(&t.state));
        let t = m.step(&LightDarkState { x: 3.0, done: false }, &LightDarkAction::Declare, &mut rng);
        assert_eq!(t.reward, -10.0);
        let again = m.step(&t.state, &LightDarkAction::Right, &mut rng);
        assert_eq!(again.state, t.state);
        assert_eq!(again.reward, 0.0);
    }

    #[test]
    fn moves_by_step_size() {
        let m = LightDark::new(LightDarkParams {
            step_size: 0.5,
            ..Default::default()
        });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = m.step(&LightDarkState { x: 1.0, done: false }, &LightDarkAction::Left, &mut rng);
        assert_eq!(t.state.x, 0.5);
        let t = m.step(&t.state, &LightDarkAction::Right, &mut rng);
        assert_eq!(t.state.x, 1.0);
    }

    #[test]
    fn observation_density_integrates_to_one() {
        let m = model();
        for &x in &[-4.0, 0.0, 2.5, 5.0, 9.0] {
            let s = LightDarkState { x, done: false };
            let sd = m.sigma(x);
            let n = 20_000;
            let (lo, hi) = (x - 12.0 * sd, x + 12.0 * sd);
            let h = (hi - lo) / n as f64;
            let mut acc = 0.5 * (m.obs_density(&lo, &s, &LightDarkAction::Left) + m.obs_density(&hi, &s, &LightDarkAction::Left));
            for i in 1..n {
                let o = lo + h * i as f64;
                acc += m.obs_density(&o, &s, &LightDarkAction::Left);
            }
            assert_relative_eq!(acc * h, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn proposal_densities_are_consistent() {
        let m = model();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let s = m.initial_state(&mut rng);
            let o = 1.3;
            let p = m.propose_mutation(&s, &o, &LightDarkAction::Left, 0.5, &mut rng);
            let sd = (0.5 * (s.x - o).abs()).max(MUTATION_SIGMA_FLOOR);
            assert_relative_eq!(p.forward, gaussian_pdf(p.candidate.x, s.x, sd), max_relative = 1e-12);
            let back = (0.5 * (p.candidate.x - o).abs()).max(MUTATION_SIGMA_FLOOR);
            assert_relative_eq!(p.reverse, gaussian_pdf(s.x, p.candidate.x, back), max_relative = 1e-12);
        }
    }
}
