//! Weighted particle beliefs with normalization, effective sample size and
//! systematic resampling.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};

/// A belief approximated by states and nonnegative, unnormalized weights.
///
/// States and weights are shared between clones, and states also between
/// sets derived with [`ParticleSet::with_weights`]; either is copied on first
/// mutation.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet<S> {
    particles: Arc<Vec<S>>,
    weights: Arc<Vec<f64>>,
}

impl<S> ParticleSet<S> {
    pub fn new(particles: Vec<S>, weights: Vec<f64>) -> Result<Self> {
        if particles.len() != weights.len() {
            return Err(Error::InvalidParticles(format!(
                "{} particles but {} weights",
                particles.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidParticles(format!("weight {w} is not a finite nonnegative number")));
        }
        Ok(ParticleSet::from_parts_unchecked(particles, weights))
    }

    /// All particles with weight one.
    pub fn uniform(particles: Vec<S>) -> Self {
        let weights = vec![1.0; particles.len()];
        ParticleSet::from_parts_unchecked(particles, weights)
    }

    pub(crate) fn from_parts_unchecked(particles: Vec<S>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(particles.len(), weights.len());
        ParticleSet {
            particles: Arc::new(particles),
            weights: Arc::new(weights),
        }
    }

    /// The same states with new weights, sharing the state storage.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.len() {
            return Err(Error::InvalidParticles(format!(
                "{} particles but {} weights",
                self.len(),
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvalidParticles(format!("weight {w} is not a finite nonnegative number")));
        }
        Ok(self.with_weights_unchecked(weights))
    }

    pub(crate) fn with_weights_unchecked(&self, weights: Vec<f64>) -> Self {
        debug_assert_eq!(self.len(), weights.len());
        ParticleSet {
            particles: Arc::clone(&self.particles),
            weights: Arc::new(weights),
        }
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[S] {
        &self.particles
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        Arc::make_mut(&mut self.weights).as_mut_slice()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&S, f64)> {
        self.particles.iter().zip(self.weights.iter().copied())
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn normalized_weights(&self) -> Result<Vec<f64>> {
        normalize_weights(&self.weights)
    }

    /// Weighted mean of `f` over the particles.
    pub fn expectation(&self, mut f: impl FnMut(&S) -> f64) -> Result<f64> {
        let total = self.total_weight();
        if total <= 0.0 {
            return Err(Error::ZeroTotalWeight);
        }
        let acc: f64 = self.iter().map(|(s, w)| w * f(s)).sum();
        Ok(acc / total)
    }

}

impl<S: Clone> ParticleSet<S> {
    pub(crate) fn particles_mut(&mut self) -> &mut [S] {
        Arc::make_mut(&mut self.particles).as_mut_slice()
    }

    pub fn into_parts(self) -> (Vec<S>, Vec<f64>) {
        let particles = Arc::try_unwrap(self.particles).unwrap_or_else(|shared| (*shared).clone());
        let weights = Arc::try_unwrap(self.weights).unwrap_or_else(|shared| (*shared).clone());
        (particles, weights)
    }
}

/// Scales weights to sum to one.
pub fn normalize_weights(weights: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Effective sample size `1 / Σ w²` of normalized weights.
pub fn ess(normalized: &[f64]) -> f64 {
    1.0 / normalized.iter().map(|w| w * w).sum::<f64>()
}

/// Low-variance resampling driven by a single uniform draw.
///
/// Output weights all equal the input mean weight, so the total mass is kept.
pub fn systematic_resample<S: Clone, R: Rng + ?Sized>(
    set: &ParticleSet<S>,
    rng: &mut R,
) -> Result<ParticleSet<S>> {
    let u: f64 = rng.random();
    systematic_resample_with_offset(set, u)
}

/// Systematic resampling with an explicit offset `u ∈ [0, 1)`; the strata are
/// `(u + i) / N`.
pub fn systematic_resample_with_offset<S: Clone>(set: &ParticleSet<S>, u: f64) -> Result<ParticleSet<S>> {
    let n = set.len();
    let total = set.total_weight();
    if !(total > 0.0) {
        return Err(Error::ZeroTotalWeight);
    }
    let mean = total / n as f64;
    let mut particles = Vec::with_capacity(n);
    let mut idx = 0;
    let mut cumulative = set.weights[0] / total;
    for i in 0..n {
        let target = (u + i as f64) / n as f64;
        while cumulative <= target && idx + 1 < n {
            idx += 1;
            cumulative += set.weights[idx] / total;
        }
        // Skip trailing zero-weight particles reached through rounding.
        let mut pick = idx;
        while set.weights[pick] == 0.0 && pick > 0 {
            pick -= 1;
        }
        particles.push(set.particles[pick].clone());
    }
    Ok(ParticleSet::from_parts_unchecked(particles, vec![mean; n]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_weights(&[2.0, 2.0]).unwrap(), vec![0.5, 0.5]);
        assert_eq!(normalize_weights(&[1.0, 3.0]).unwrap(), vec![0.25, 0.75]);
        assert_eq!(normalize_weights(&[0.0, 0.0]), Err(Error::ZeroTotalWeight));
    }

    #[test]
    fn normalize_is_idempotent() {
        let once = normalize_weights(&[0.3, 1.7, 4.0]).unwrap();
        let twice = normalize_weights(&once).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert_relative_eq!(a, b, max_relative = 1e-15);
        }
    }

    #[test]
    fn ess_examples() {
        assert_eq!(ess(&[0.5, 0.5]), 2.0);
        assert_eq!(ess(&[1.0, 0.0]), 1.0);
        assert_relative_eq!(ess(&[0.7, 0.2, 0.1]), 1.0 / 0.54, max_relative = 1e-12);
    }

    #[test]
    fn rejects_mismatched_or_negative_weights() {
        assert!(ParticleSet::new(vec![1, 2], vec![1.0]).is_err());
        assert!(ParticleSet::new(vec![1], vec![-1.0]).is_err());
        assert!(ParticleSet::new(vec![1], vec![f64::NAN]).is_err());
    }

    #[test]
    fn resample_uniform_keeps_every_particle_once() {
        let set = ParticleSet::uniform(vec![0, 1, 2, 3]);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let out = systematic_resample(&set, &mut rng).unwrap();
            assert_eq!(out.particles(), &[0, 1, 2, 3]);
        }
    }

    #[test]
    fn resample_point_mass() {
        let set = ParticleSet::new(vec![10, 11, 12, 13], vec![4.0, 0.0, 0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let out = systematic_resample(&set, &mut rng).unwrap();
        assert_eq!(out.particles(), &[10, 10, 10, 10]);
        assert_eq!(out.weights(), &[1.0; 4]);
    }

    #[test]
    fn resample_hand_trace_with_fixed_offset() {
        let set = ParticleSet::new(vec!['a', 'b'], vec![3.0, 1.0]).unwrap();
        let out = systematic_resample_with_offset(&set, 0.1).unwrap();
        assert_eq!(out.particles(), &['a', 'a']);
        assert_eq!(out.total_weight(), 4.0);
    }

    #[test]
    fn resample_never_picks_zero_weight_tail() {
        let set = ParticleSet::new(vec![0, 1, 2], vec![1.0, 1.0, 0.0]).unwrap();
        for k in 0..100 {
            let out = systematic_resample_with_offset(&set, k as f64 / 100.0 * 0.999_999).unwrap();
            assert!(out.particles().iter().all(|&p| p != 2));
        }
    }

    #[test]
    fn reweighted_sets_share_states_until_mutated() {
        let a = ParticleSet::uniform(vec![1, 2, 3]);
        let mut b = a.with_weights(vec![0.5, 0.0, 2.0]).unwrap();
        assert!(Arc::ptr_eq(&a.particles, &b.particles));
        b.particles_mut()[0] = 9;
        assert_eq!(a.particles(), &[1, 2, 3]);
        assert_eq!(b.particles(), &[9, 2, 3]);
        assert!(a.with_weights(vec![1.0]).is_err());
        assert!(a.with_weights(vec![1.0, -1.0, 0.0]).is_err());
    }

    #[test]
    fn resample_zero_total() {
        let set = ParticleSet::new(vec![0, 1], vec![0.0, 0.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(systematic_resample(&set, &mut rng), Err(Error::ZeroTotalWeight));
    }

    proptest::proptest! {
        #[test]
        fn ess_bounds(w in proptest::collection::vec(0.0f64..10.0, 1..40)) {
            proptest::prop_assume!(w.iter().sum::<f64>() > 1e-9);
            let n = w.len() as f64;
            let e = ess(&normalize_weights(&w).unwrap());
            proptest::prop_assert!(e >= 1.0 - 1e-9 && e <= n + 1e-9);
        }

        #[test]
        fn resample_preserves_total_weight(w in proptest::collection::vec(0.0f64..5.0, 1..30), seed in 0u64..1000) {
            proptest::prop_assume!(w.iter().sum::<f64>() > 1e-9);
            let set = ParticleSet::new((0..w.len()).collect(), w.clone()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = systematic_resample(&set, &mut rng).unwrap();
            proptest::prop_assert_eq!(out.len(), set.len());
            let total = set.total_weight();
            proptest::prop_assert!((out.total_weight() - total).abs() <= 1e-12 * total.max(1.0));
            for &p in out.particles() {
                proptest::prop_assert!(w[p] > 0.0);
            }
        }
    }
}
