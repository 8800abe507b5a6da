//! Small analytic models with closed-form or enumerable answers, used to
//! check the planner, the annealing kernel and the filters against oracles.

use airoas_core::{PomdpModel, Proposal, Transition};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::gaussian_pdf;

/// Scalar linear-Gaussian system `x' = a x + w`, `o = x' + v`.
#[derive(Debug, Clone)]
pub struct LinearGaussian {
    pub a: f64,
    pub process_sd: f64,
    pub obs_sd: f64,
    pub init_mean: f64,
    pub init_sd: f64,
}

impl PomdpModel for LinearGaussian {
    type State = f64;
    type Action = ();
    type Observation = f64;
    type ObsKey = i64;

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Normal::new(self.init_mean, self.init_sd).unwrap().sample(rng)
    }

    fn step<R: Rng + ?Sized>(&self, s: &f64, _a: &(), rng: &mut R) -> Transition<f64, f64> {
        let next = self.a * s + Normal::new(0.0, self.process_sd).unwrap().sample(rng);
        let obs = next + Normal::new(0.0, self.obs_sd).unwrap().sample(rng);
        Transition {
            state: next,
            observation: obs,
            reward: 0.0,
        }
    }

    fn obs_density(&self, o: &f64, s: &f64, _a: &()) -> f64 {
        gaussian_pdf(*o, *s, self.obs_sd)
    }

    fn obs_key(&self, o: &f64) -> i64 {
        o.floor() as i64
    }

    fn actions(&self) -> &[()] {
        &[()]
    }

    fn discount(&self) -> f64 {
        0.95
    }

    fn is_terminal(&self, _s: &f64) -> bool {
        false
    }
}

/// How [`GaussianLikelihood`] proposes mutations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussianKernel {
    /// Random walk with a fixed standard deviation.
    Fixed(f64),
    /// Random walk whose standard deviation is `scale · |x - o|`, floored.
    DistanceScaled,
}

/// One-dimensional state observed through Gaussian noise, with a Gaussian
/// transition prior `x' ~ N(prior_mean, prior_sd²)` that ignores the
/// previous state. The posterior after one observation is Gaussian.
#[derive(Debug, Clone)]
pub struct GaussianLikelihood {
    pub prior_mean: f64,
    pub prior_sd: f64,
    pub obs_sd: f64,
    pub kernel: GaussianKernel,
}

pub const SIGMA_FLOOR: f64 = 1e-3;

impl GaussianLikelihood {
    /// Mean and variance of the posterior after observing `o` once.
    pub fn posterior(&self, o: f64) -> (f64, f64) {
        let p0 = 1.0 / self.prior_sd.powi(2);
        let p1 = 1.0 / self.obs_sd.powi(2);
        let var = 1.0 / (p0 + p1);
        (var * (p0 * self.prior_mean + p1 * o), var)
    }
}

impl PomdpModel for GaussianLikelihood {
    type State = f64;
    type Action = ();
    type Observation = f64;
    type ObsKey = i64;

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Normal::new(self.prior_mean, self.prior_sd).unwrap().sample(rng)
    }

    fn step<R: Rng + ?Sized>(&self, _s: &f64, _a: &(), rng: &mut R) -> Transition<f64, f64> {
        let next = self.initial_state(rng);
        let obs = next + Normal::new(0.0, self.obs_sd).unwrap().sample(rng);
        Transition {
            state: next,
            observation: obs,
            reward: 0.0,
        }
    }

    fn obs_density(&self, o: &f64, s: &f64, _a: &()) -> f64 {
        gaussian_pdf(*o, *s, self.obs_sd)
    }

    fn obs_key(&self, o: &f64) -> i64 {
        (o / 0.5).floor() as i64
    }

    fn actions(&self) -> &[()] {
        &[()]
    }

    fn discount(&self) -> f64 {
        0.95
    }

    fn is_terminal(&self, _s: &f64) -> bool {
        false
    }

    fn propose_mutation<R: Rng + ?Sized>(&self, s: &f64, o: &f64, _a: &(), scale: f64, rng: &mut R) -> Proposal<f64> {
        let width = |x: f64| match self.kernel {
            GaussianKernel::Fixed(sd) => sd,
            GaussianKernel::DistanceScaled => (scale * (x - o).abs()).max(SIGMA_FLOOR),
        };
        let sd = width(*s);
        let candidate = s + sd * rng.sample::<f64, _>(rand_distr::StandardNormal);
        Proposal {
            candidate,
            forward: gaussian_pdf(candidate, *s, sd),
            reverse: gaussian_pdf(*s, candidate, width(candidate)),
        }
    }
}

/// Three states with fixed likelihoods and an arbitrary proposal matrix,
/// small enough to enumerate the Metropolis-Hastings kernel.
#[derive(Debug, Clone)]
pub struct ThreeState {
    pub likelihood: [f64; 3],
    /// `proposal[i][j]` is the probability of proposing `j` from `i`.
    pub proposal: [[f64; 3]; 3],
}

impl PomdpModel for ThreeState {
    type State = usize;
    type Action = ();
    type Observation = ();
    type ObsKey = ();

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..3)
    }

    fn step<R: Rng + ?Sized>(&self, s: &usize, _a: &(), _rng: &mut R) -> Transition<usize, ()> {
        Transition {
            state: *s,
            observation: (),
            reward: 0.0,
        }
    }

    fn obs_density(&self, _o: &(), s: &usize, _a: &()) -> f64 {
        self.likelihood[*s]
    }

    fn obs_key(&self, _o: &()) {}

    fn actions(&self) -> &[()] {
        &[()]
    }

    fn discount(&self) -> f64 {
        0.9
    }

    fn is_terminal(&self, _s: &usize) -> bool {
        false
    }

    fn propose_mutation<R: Rng + ?Sized>(&self, s: &usize, _o: &(), _a: &(), _scale: f64, rng: &mut R) -> Proposal<usize> {
        let row = &self.proposal[*s];
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut j = 2;
        for (k, p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                j = k;
                break;
            }
        }
        Proposal {
            candidate: j,
            forward: self.proposal[*s][j],
            reverse: self.proposal[j][*s],
        }
    }
}

/// Deterministic, fully observable MDP over a handful of states, embedded as
/// a POMDP whose observation is the successor state.
#[derive(Debug, Clone)]
pub struct ChainMdp {
    /// `next[s][a]`
    pub next: Vec<Vec<usize>>,
    /// `reward[s][a]`
    pub reward: Vec<Vec<f64>>,
    pub gamma: f64,
    pub start: usize,
    actions: Vec<usize>,
    values: Vec<f64>,
}

impl ChainMdp {
    pub fn new(next: Vec<Vec<usize>>, reward: Vec<Vec<f64>>, gamma: f64, start: usize) -> Self {
        let actions: Vec<usize> = (0..next[0].len()).collect();
        let mut mdp = ChainMdp {
            next,
            reward,
            gamma,
            start,
            actions,
            values: Vec::new(),
        };
        mdp.values = mdp.optimal_values();
        mdp
    }

    /// Optimal values by value iteration to machine precision.
    pub fn optimal_values(&self) -> Vec<f64> {
        let n = self.next.len();
        let mut v = vec![0.0; n];
        loop {
            let mut delta: f64 = 0.0;
            let mut nv = vec![0.0; n];
            for s in 0..n {
                nv[s] = (0..self.actions.len())
                    .map(|a| self.reward[s][a] + self.gamma * v[self.next[s][a]])
                    .fold(f64::NEG_INFINITY, f64::max);
                delta = delta.max((nv[s] - v[s]).abs());
            }
            v = nv;
            if delta < 1e-14 {
                return v;
            }
        }
    }
}

impl PomdpModel for ChainMdp {
    type State = usize;
    type Action = usize;
    type Observation = usize;
    type ObsKey = usize;

    fn initial_state<R: Rng + ?Sized>(&self, _rng: &mut R) -> usize {
        self.start
    }

    fn step<R: Rng + ?Sized>(&self, s: &usize, a: &usize, _rng: &mut R) -> Transition<usize, usize> {
        let next = self.next[*s][*a];
        Transition {
            state: next,
            observation: next,
            reward: self.reward[*s][*a],
        }
    }

    fn obs_density(&self, o: &usize, s: &usize, _a: &usize) -> f64 {
        if o == s {
            1.0
        } else {
            0.0
        }
    }

    fn obs_key(&self, o: &usize) -> usize {
        *o
    }

    fn actions(&self) -> &[usize] {
        &self.actions
    }

    fn discount(&self) -> f64 {
        self.gamma
    }

    fn is_terminal(&self, _s: &usize) -> bool {
        false
    }

    fn mdp_value(&self, s: &usize) -> Option<f64> {
        Some(self.values[*s])
    }
}

/// A random-walk state whose observations carry no information.
#[derive(Debug, Clone)]
pub struct Uninformative {
    pub rewards: Vec<f64>,
    pub gamma: f64,
    actions: Vec<usize>,
}

impl Uninformative {
    pub fn new(rewards: Vec<f64>, gamma: f64) -> Self {
        let actions = (0..rewards.len()).collect();
        Uninformative { rewards, gamma, actions }
    }
}

impl PomdpModel for Uninformative {
    type State = f64;
    type Action = usize;
    type Observation = u8;
    type ObsKey = u8;

    fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.random::<f64>()
    }

    fn step<R: Rng + ?Sized>(&self, s: &f64, a: &usize, rng: &mut R) -> Transition<f64, u8> {
        Transition {
            state: s + rng.random::<f64>() - 0.5,
            observation: rng.random_range(0..3),
            reward: self.rewards[*a],
        }
    }

    fn obs_density(&self, _o: &u8, _s: &f64, _a: &usize) -> f64 {
        1.0 / 3.0
    }

    fn obs_key(&self, o: &u8) -> u8 {
        *o
    }

    fn actions(&self) -> &[usize] {
        &self.actions
    }

    fn discount(&self) -> f64 {
        self.gamma
    }

    fn is_terminal(&self, _s: &f64) -> bool {
        false
    }

    fn propose_mutation<R: Rng + ?Sized>(&self, s: &f64, _o: &u8, _a: &usize, _scale: f64, rng: &mut R) -> Proposal<f64> {
        Proposal::symmetric(s + rng.random::<f64>() - 0.5)
    }
}
