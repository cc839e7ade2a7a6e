//! Trajectory generation: running the autonomous system forward, injecting
//! sensor attacks, and drawing seeded random attacks for experiments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::{AttackSignal, CMatrix, CVector, SystemModel, Trajectory, C64};

/// Runs x(t+1) = A x(t) from `x0` and records y(t) = C x(t) for
/// t = 0..horizon.
///
/// # Panics
/// Panics when `x0` does not match the state dimension or `horizon` is 0.
pub fn simulate(sys: &SystemModel, x0: &CVector, horizon: usize) -> Trajectory {
    assert_eq!(
        x0.len(),
        sys.state_dim(),
        "initial state length must equal the state dimension"
    );
    assert!(horizon >= 1, "horizon must be at least one sample");
    let mut samples = CMatrix::zeros(sys.sensor_count(), horizon);
    let mut state = x0.clone();
    for t in 0..horizon {
        samples.set_column(t, &(sys.output_matrix() * &state));
        if t + 1 < horizon {
            state = sys.state_matrix() * state;
        }
    }
    Trajectory::new(samples).expect("simulated output of a validated system is well formed")
}

/// Adds an attack to a clean trajectory: r = y + eta. Shapes must match.
pub fn inject(clean: &Trajectory, attack: &AttackSignal) -> Result<Trajectory> {
    if clean.sensor_count() != attack.sensor_count() || clean.horizon() != attack.horizon() {
        return Err(Error::DimensionMismatch(format!(
            "trajectory is {}x{} but attack is {}x{}",
            clean.sensor_count(),
            clean.horizon(),
            attack.sensor_count(),
            attack.horizon()
        )));
    }
    Trajectory::new(clean.samples() + attack.samples())
}

/// Draws a random attack of exactly `weight` sensors over the whole horizon.
/// The attacked sensors are sampled uniformly without replacement and their
/// rows filled with independent real Gaussian entries scaled by `magnitude`.
/// The same seed always reproduces the same attack.
pub fn random_attack(
    sensor_count: usize,
    horizon: usize,
    weight: usize,
    seed: u64,
    magnitude: f64,
) -> Result<AttackSignal> {
    random_attack_impl(sensor_count, horizon, weight, seed, magnitude, horizon)
}

/// Like [`random_attack`], but corruptions are confined to the first
/// `active_prefix` samples; later samples of attacked sensors stay zero.
/// Useful for exercising detectors that only inspect leading windows.
pub fn random_attack_prefix(
    sensor_count: usize,
    horizon: usize,
    weight: usize,
    seed: u64,
    magnitude: f64,
    active_prefix: usize,
) -> Result<AttackSignal> {
    random_attack_impl(
        sensor_count,
        horizon,
        weight,
        seed,
        magnitude,
        active_prefix.min(horizon),
    )
}

fn random_attack_impl(
    sensor_count: usize,
    horizon: usize,
    weight: usize,
    seed: u64,
    magnitude: f64,
    active_prefix: usize,
) -> Result<AttackSignal> {
    if weight > sensor_count {
        return Err(Error::InvalidWeight {
            weight,
            sensor_count,
        });
    }
    if sensor_count == 0 || horizon == 0 {
        return Err(Error::DimensionMismatch(
            "attack needs at least one sensor and one sample".into(),
        ));
    }
    if weight > 0 && active_prefix == 0 {
        return Err(Error::DimensionMismatch(
            "a nonzero attack needs at least one active sample".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = rand::seq::index::sample(&mut rng, sensor_count, weight).into_vec();
    let mut samples = CMatrix::zeros(sensor_count, horizon);
    let mut sorted_rows = rows;
    sorted_rows.sort_unstable();
    for &row in &sorted_rows {
        for t in 0..active_prefix {
            let v: f64 = StandardNormal.sample(&mut rng);
            // Guard against the measure-zero draw of exactly 0.0, which would
            // shrink the support below the requested weight.
            let v = if v == 0.0 { 1.0 } else { v };
            samples[(row, t)] = C64::new(magnitude * v, 0.0);
        }
    }
    AttackSignal::new(samples)
}
