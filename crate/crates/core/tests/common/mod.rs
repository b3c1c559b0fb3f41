#![allow(dead_code)]

use toda_core::experiment::rng::CounterRng;
use toda_core::LatticeState;

/// Standard-normal momenta and gaps, `q_1 = 0`.
pub fn random_state(n: usize, seed: u64) -> LatticeState {
    let mut rng = CounterRng::new(seed);
    let p = rng.normals(n);
    let mut q = vec![0.0; n];
    for i in 1..n {
        q[i] = q[i - 1] + rng.normal();
    }
    LatticeState::new(q, p).unwrap()
}

pub fn uniform(rng: &mut CounterRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.uniform()
}
