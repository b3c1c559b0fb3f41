//! Störmer–Verlet time stepping for every chain variant, plus the exact
//! flows of the free and decoupled Hamiltonians.

use crate::error::{Result, TodaError};
use crate::lattice::{energy, forces_into, LatticeState, System};
use crate::spectral::exact_core_toda;

/// Largest step accepted by [`IntegrationPlan`].
pub const MAX_DT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrationPlan {
    pub dt: f64,
    pub t_end: f64,
    pub sample_stride: usize,
    pub system: System,
}

impl IntegrationPlan {
    pub fn new(system: System, dt: f64, t_end: f64, sample_stride: usize) -> Result<Self> {
        let plan = Self { dt, t_end, sample_stride, system };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(TodaError::InvalidInput(format!("dt = {} outside (0, {MAX_DT}]", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(TodaError::InvalidInput(format!("t_end = {}", self.t_end)));
        }
        if self.sample_stride == 0 {
            return Err(TodaError::InvalidInput("sample_stride must be positive".into()));
        }
        if self.t_end / self.dt >= u64::MAX as f64 {
            return Err(TodaError::InvalidInput("step count does not fit in 64 bits".into()));
        }
        Ok(())
    }

    /// Number of Verlet steps, `t_end / dt` rounded to the nearest integer.
    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }
}

/// States sampled every `sample_stride` steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<LatticeState>,
    /// Energy of the initial state under the plan's Hamiltonian.
    pub h0: f64,
    /// Set when an overflow stopped the run early.
    pub truncated: bool,
    pub system: System,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Spacing between consecutive samples.
    pub fn spacing(&self) -> Option<f64> {
        (self.times.len() >= 2).then(|| self.times[1] - self.times[0])
    }

    pub fn last(&self) -> &LatticeState {
        self.states.last().expect("trajectory always holds the initial state")
    }

    /// Time series of one position coordinate.
    pub fn q_series(&self, n: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.q[n]).collect()
    }

    pub fn p_series(&self, n: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.p[n]).collect()
    }
}

/// Kick–drift–kick stepper with reusable buffers.
///
/// Position and momentum updates are Kahan-compensated. Forced endpoints
/// drift to `|q| ~ ct²/2`, and plain summation of `dt·p` increments would
/// otherwise lose their low-order bits on every step of a long run.
#[derive(Debug, Default)]
pub struct Stepper {
    force: Vec<f64>,
    q_carry: Vec<f64>,
    p_carry: Vec<f64>,
}

fn kahan_add(x: &mut f64, carry: &mut f64, inc: f64) {
    let y = inc - *carry;
    let t = *x + y;
    *carry = (t - *x) - y;
    *x = t;
}

impl Stepper {
    /// One step in place. The compensation carries over between calls, so a
    /// stepper must stay with one trajectory.
    pub fn step(&mut self, state: &mut LatticeState, system: &System, dt: f64) -> Result<()> {
        let n = state.len();
        if self.q_carry.len() != n {
            self.force = vec![0.0; n];
            self.q_carry = vec![0.0; n];
            self.p_carry = vec![0.0; n];
        }
        let half = 0.5 * dt;
        forces_into(state, system, &mut self.force)?;
        for i in 0..n {
            kahan_add(&mut state.p[i], &mut self.p_carry[i], half * self.force[i]);
        }
        for i in 0..n {
            kahan_add(&mut state.q[i], &mut self.q_carry[i], dt * state.p[i]);
        }
        forces_into(state, system, &mut self.force)?;
        for i in 0..n {
            kahan_add(&mut state.p[i], &mut self.p_carry[i], half * self.force[i]);
        }
        Ok(())
    }
}

/// One Störmer–Verlet step (kick–drift–kick). Negative `dt` steps backwards.
pub fn verlet_step(state: &LatticeState, system: &System, dt: f64) -> Result<LatticeState> {
    let mut next = state.clone();
    Stepper::default().step(&mut next, system, dt)?;
    Ok(next)
}

/// Advance `state` by `steps` Verlet steps without sampling.
pub fn advance(state: &LatticeState, system: &System, dt: f64, steps: u64) -> Result<LatticeState> {
    let mut s = state.clone();
    let mut stepper = Stepper::default();
    for _ in 0..steps {
        stepper.step(&mut s, system, dt)?;
    }
    Ok(s)
}

/// Sampled Verlet trajectory. An overflow mid-run yields the samples taken so
/// far with `truncated` set.
pub fn integrate(state: &LatticeState, plan: &IntegrationPlan) -> Result<Trajectory> {
    plan.validate()?;
    let h0 = energy(state, &plan.system)?;
    let steps = plan.steps();
    let stride = plan.sample_stride as u64;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![state.clone()],
        h0,
        truncated: false,
        system: plan.system,
    };
    let mut s = state.clone();
    let mut stepper = Stepper::default();
    for k in 1..=steps {
        if stepper.step(&mut s, &plan.system, plan.dt).is_err() {
            traj.truncated = true;
            break;
        }
        if k % stride == 0 {
            traj.times.push(k as f64 * plan.dt);
            traj.states.push(s.clone());
        }
    }
    Ok(traj)
}

/// Exact flow of `H_c^#`: endpoints in constant fields `∓c`, interior ballistic.
pub fn free_flow(state: &LatticeState, c: f64, t: f64) -> LatticeState {
    let n = state.len();
    let mut out = state.clone();
    for i in 0..n {
        out.q[i] = state.q[i] + state.p[i] * t;
    }
    if n >= 2 {
        let half = 0.5 * c * t * t;
        out.p[0] = state.p[0] - c * t;
        out.q[0] -= half;
        out.p[n - 1] = state.p[n - 1] + c * t;
        out.q[n - 1] += half;
    }
    out
}

/// Exact flow of `H_c^d`: closed-form endpoints, core evolved through its
/// spectral coordinates.
pub fn decoupled_flow(state: &LatticeState, c: f64, t: f64) -> Result<LatticeState> {
    let n = state.len();
    if n < 3 {
        return Err(TodaError::Dimension(format!("decoupled flow needs N >= 3, got {n}")));
    }
    let mut out = free_flow(state, c, t);
    let core = exact_core_toda(&state.slice(1, n - 1), t)?;
    out.q[1..n - 1].copy_from_slice(&core.q);
    out.p[1..n - 1].copy_from_slice(&core.p);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::energy_open;

    fn st(q: &[f64], p: &[f64]) -> LatticeState {
        LatticeState::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn free_particles_move_exactly() {
        let s = st(&[0.0, 1.0], &[0.5, -0.25]);
        let next = verlet_step(&s, &System::Free { c: 0.0 }, 0.3).unwrap();
        assert_eq!(next.q, vec![0.15, 1.0 - 0.075]);
        assert_eq!(next.p, s.p);
    }

    #[test]
    fn step_is_reversible() {
        let s = st(&[0.1, -0.4, 0.3, 0.9], &[0.2, 0.5, -0.3, 0.1]);
        for sys in [System::Open, System::Forced { c: 1.0 }, System::Periodic { stretch: 1.0 }] {
            let fwd = verlet_step(&s, &sys, 0.01).unwrap();
            let back = verlet_step(&fwd, &sys, -0.01).unwrap();
            assert!(back.max_abs_diff(&s) < 1e-14, "{sys:?}");
        }
    }

    #[test]
    fn zero_horizon_gives_single_sample() {
        let s = st(&[0.0, 1.0], &[0.1, 0.2]);
        let plan = IntegrationPlan::new(System::Open, 1e-3, 0.0, 1).unwrap();
        let traj = integrate(&s, &plan).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.states[0], s);
        assert_eq!(traj.h0, energy_open(&s).unwrap());
    }

    #[test]
    fn plan_validation() {
        assert!(IntegrationPlan::new(System::Open, 0.2, 1.0, 1).is_err());
        assert!(IntegrationPlan::new(System::Open, -1e-3, 1.0, 1).is_err());
        assert!(IntegrationPlan::new(System::Open, 1e-3, 1.0, 0).is_err());
    }

    #[test]
    fn sample_times_are_uniform() {
        let s = st(&[0.0, 1.0], &[0.1, 0.2]);
        let plan = IntegrationPlan::new(System::Open, 1e-3, 1.0, 10).unwrap();
        let traj = integrate(&s, &plan).unwrap();
        assert_eq!(traj.len(), 101);
        for (k, t) in traj.times.iter().enumerate() {
            assert_eq!(*t, k as f64 * 10.0 * 1e-3);
        }
    }

    #[test]
    fn overflow_truncates() {
        // Particles pushed through each other: the bond exponent blows up.
        let s = st(&[0.0, 0.0], &[5000.0, -5000.0]);
        let plan = IntegrationPlan::new(System::Open, 0.1, 10.0, 1).unwrap();
        let traj = integrate(&s, &plan).unwrap();
        assert!(traj.truncated);
        assert!(traj.len() < 101);
    }

    #[test]
    fn free_flow_examples() {
        let out = free_flow(&LatticeState::zeros(2), 1.0, 1.0);
        assert_eq!(out.q, vec![-0.5, 0.5]);
        assert_eq!(out.p, vec![-1.0, 1.0]);
        let s = st(&[0.3, 0.1, -0.2], &[1.0, 2.0, 3.0]);
        assert_eq!(free_flow(&s, 1.3, 0.0), s);
    }

    #[test]
    fn free_flow_group_law() {
        let s = st(&[0.3, 0.1, -0.2, 1.1], &[1.0, -2.0, 0.4, 0.7]);
        let a = free_flow(&free_flow(&s, 1.3, 0.7), 1.3, 1.3);
        let b = free_flow(&s, 1.3, 2.0);
        assert!(a.max_abs_diff(&b) < 1e-13);
    }

    #[test]
    fn decoupled_flow_small_core() {
        let s = st(&[0.3, 0.1, -0.2], &[1.0, 2.0, 3.0]);
        assert!(decoupled_flow(&s, 1.0, 0.0).unwrap().max_abs_diff(&s) < 1e-15);
        let out = decoupled_flow(&s, 1.0, 2.5).unwrap();
        assert_eq!(out.q[1], 0.1 + 2.5 * 2.0);
        assert_eq!(out.p[1], 2.0);
    }
}
