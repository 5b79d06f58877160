//! Seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::feasibility::{ConstraintSet, PowerConstraint};
use crate::model::NetworkModel;
use crate::region::ZeroOutageInstance;

/// Smallest generated gain, keeping every entry strictly positive.
pub const GAIN_FLOOR: f64 = 1e-6;
pub const DEFAULT_NOISE: f64 = 0.1;

fn gain<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(GAIN_FLOOR..1.0)
}

/// Model with the given receiver counts, gains `U(1e-6, 1)` and noise 0.1.
pub fn random_model<R: Rng>(rng: &mut R, receivers_per_session: &[usize]) -> Result<NetworkModel> {
    let n = receivers_per_session.len();
    if n == 0 || receivers_per_session.contains(&0) {
        return Err(Error::InvalidModel(
            "need at least one session and one receiver per session".into(),
        ));
    }
    let k: usize = receivers_per_session.iter().sum();
    let gains = (0..k).map(|_| (0..n).map(|_| gain(rng)).collect()).collect();
    NetworkModel::new(receivers_per_session.to_vec(), gains, DEFAULT_NOISE)
}

/// `n` sessions with `k` receivers each.
pub fn uniform_model<R: Rng>(rng: &mut R, n: usize, k: usize) -> Result<NetworkModel> {
    random_model(rng, &vec![k; n])
}

/// [`uniform_model`] driven by a fresh ChaCha8 stream seeded with `seed`.
pub fn seeded_uniform_model(seed: u64, n: usize, k: usize) -> Result<NetworkModel> {
    uniform_model(&mut ChaCha8Rng::seed_from_u64(seed), n, k)
}

/// `n` drawn from `sessions`, each `K_i` drawn from `receivers`.
pub fn mixed_model<R: Rng>(
    rng: &mut R,
    sessions: std::ops::RangeInclusive<usize>,
    receivers: std::ops::RangeInclusive<usize>,
) -> Result<NetworkModel> {
    let n = rng.gen_range(sessions);
    let ks: Vec<usize> = (0..n).map(|_| rng.gen_range(receivers.clone())).collect();
    random_model(rng, &ks)
}

/// Positive direction with entries `U(0.05, 1)`, not normalized.
pub fn random_direction<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(0.05..1.0)).collect()
}

/// Between `min` and `max` caps on random nonempty session subsets, with
/// caps `U(0.5, 5)`.
pub fn random_constraints<R: Rng>(
    rng: &mut R,
    n: usize,
    min: usize,
    max: usize,
) -> Result<ConstraintSet> {
    let m = rng.gen_range(min..=max);
    let cons = (0..m)
        .map(|_| {
            let mut subset: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            if subset.is_empty() {
                subset.push(rng.gen_range(0..n));
            }
            PowerConstraint::new(subset, rng.gen_range(0.5..5.0))
        })
        .collect::<Result<Vec<_>>>()?;
    ConstraintSet::new(cons)
}

/// Time-varying unicast instance with `n` pairs and 1 to `max_states`
/// channel states per receiver.
pub fn random_zero_outage<R: Rng>(
    rng: &mut R,
    n: usize,
    max_states: usize,
) -> Result<ZeroOutageInstance> {
    let states = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=max_states);
            (0..k).map(|_| (0..n).map(|_| gain(rng)).collect()).collect()
        })
        .collect();
    ZeroOutageInstance::new(states, DEFAULT_NOISE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_in_range() {
        let a = uniform_model(&mut ChaCha8Rng::seed_from_u64(7), 4, 3).unwrap();
        let b = uniform_model(&mut ChaCha8Rng::seed_from_u64(7), 4, 3).unwrap();
        assert_eq!(a.gain_rows(), b.gain_rows());
        assert_eq!(a.num_receivers(), 12);
        assert!(a.gains().iter().all(|&g| (GAIN_FLOOR..1.0).contains(&g)));
        assert!(uniform_model(&mut ChaCha8Rng::seed_from_u64(7), 0, 3).is_err());
        assert!(uniform_model(&mut ChaCha8Rng::seed_from_u64(7), 2, 0).is_err());
    }

    #[test]
    fn constraints_and_instances_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let c = random_constraints(&mut rng, 3, 1, 3).unwrap();
            assert!((1..=3).contains(&c.len()));
            let z = random_zero_outage(&mut rng, 2, 3).unwrap();
            assert!(z.states_per_receiver().iter().all(|&k| (1..=3).contains(&k)));
        }
    }
}
