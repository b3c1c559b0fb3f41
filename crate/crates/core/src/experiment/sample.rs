//! Seeded initial conditions.

use super::config::{ExperimentConfig, IcMode};
use super::rng::CounterRng;
use crate::lattice::LatticeState;

/// Momenta first (`N` standard normals), then `N - 1` gaps from the same
/// stream when they are random. Positions start at `q_1 = 0`.
pub fn sample_initial(config: &ExperimentConfig) -> LatticeState {
    let n = config.n;
    let mut rng = CounterRng::new(config.seed);
    let p = rng.normals(n);
    let mut q = vec![0.0; n];
    for i in 1..n {
        let gap = match config.ic_mode {
            IcMode::NormalGaps => rng.normal(),
            IcMode::UnitGaps => 1.0,
            IcMode::NegativeUnitGaps => -1.0,
        };
        q[i] = q[i - 1] + gap;
    }
    LatticeState { q, p }
}
