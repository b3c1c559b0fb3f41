//! Phase-space types, Hamiltonians, force fields and the Flaschka change of
//! variables for every chain variant.

use crate::error::{Result, TodaError};

/// Largest bond exponent accepted before `exp` would overflow.
pub const MAX_EXPONENT: f64 = 709.0;

/// Positions and momenta of a finite chain of unit-mass particles.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl LatticeState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(TodaError::Dimension(format!(
                "{} positions but {} momenta",
                q.len(),
                p.len()
            )));
        }
        if q.is_empty() {
            return Err(TodaError::InvalidInput("empty lattice".into()));
        }
        if q.iter().chain(&p).any(|x| !x.is_finite()) {
            return Err(TodaError::InvalidInput("non-finite coordinate".into()));
        }
        Ok(Self { q, p })
    }

    pub fn zeros(n: usize) -> Self {
        Self { q: vec![0.0; n], p: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Flattened phase point `(q_1..q_N, p_1..p_N)`.
    pub fn to_phase_vec(&self) -> Vec<f64> {
        self.q.iter().chain(&self.p).copied().collect()
    }

    pub fn from_phase_vec(x: &[f64]) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(TodaError::Dimension(format!("odd phase vector length {}", x.len())));
        }
        let n = x.len() / 2;
        Self::new(x[..n].to_vec(), x[n..].to_vec())
    }

    /// Max-abs distance between two phase points of equal size.
    pub fn max_abs_diff(&self, other: &LatticeState) -> f64 {
        self.q
            .iter()
            .zip(&other.q)
            .chain(self.p.iter().zip(&other.p))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Particles `lo..hi` (0-based, half open) as a standalone state.
    pub fn slice(&self, lo: usize, hi: usize) -> LatticeState {
        LatticeState { q: self.q[lo..hi].to_vec(), p: self.p[lo..hi].to_vec() }
    }

    pub fn q_sum(&self) -> f64 {
        self.q.iter().sum()
    }

    pub fn p_sum(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Which Hamiltonian drives the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum System {
    /// Fixed-end chain, `H_F`.
    Open,
    /// Open chain plus the endpoint potential `c (q_1 - q_N)`.
    Forced { c: f64 },
    /// Forced chain with the two endpoint bonds removed.
    Decoupled { c: f64 },
    /// Kinetic energy plus the endpoint potential only.
    Free { c: f64 },
    /// Periodic chain with `q_{N+1} = q_1 + stretch`.
    Periodic { stretch: f64 },
}

impl System {
    pub fn min_particles(&self) -> usize {
        match self {
            System::Decoupled { .. } => 3,
            System::Periodic { .. } => 2,
            _ => 1,
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        let min = self.min_particles();
        if n < min {
            return Err(TodaError::Dimension(format!(
                "{self:?} needs at least {min} particles, got {n}"
            )));
        }
        Ok(())
    }

    /// Range of 0-based bond indices `i` (bond between `i` and `i+1`) that interact.
    fn bonds(&self, n: usize) -> std::ops::Range<usize> {
        match self {
            System::Open | System::Forced { .. } => 0..n.saturating_sub(1),
            System::Decoupled { .. } => 1..n.saturating_sub(2),
            System::Free { .. } => 0..0,
            System::Periodic { .. } => 0..n,
        }
    }

    fn endpoint_force(&self) -> f64 {
        match self {
            System::Forced { c } | System::Decoupled { c } | System::Free { c } => *c,
            _ => 0.0,
        }
    }
}

/// Exponent `q_i - q_{i+1}` of bond `i`, with the periodic wrap for `i = N-1`.
fn bond_exponent(q: &[f64], i: usize, stretch: f64) -> f64 {
    let n = q.len();
    if i + 1 < n {
        q[i] - q[i + 1]
    } else {
        q[n - 1] - q[0] - stretch
    }
}

/// `exp` of a bond exponent; large negative exponents underflow to zero,
/// positive ones beyond [`MAX_EXPONENT`] are rejected.
pub fn bond_exp(exponent: f64, bond: usize) -> Result<f64> {
    if exponent <= MAX_EXPONENT {
        Ok(exponent.exp())
    } else {
        Err(TodaError::Overflow { bond, exponent })
    }
}

fn bond_terms(state: &LatticeState, system: &System) -> Result<Vec<(usize, f64)>> {
    let stretch = match system {
        System::Periodic { stretch } => *stretch,
        _ => 0.0,
    };
    system
        .bonds(state.len())
        .map(|i| bond_exp(bond_exponent(&state.q, i, stretch), i).map(|v| (i, v)))
        .collect()
}

fn kinetic(state: &LatticeState) -> f64 {
    0.5 * state.p.iter().map(|p| p * p).sum::<f64>()
}

fn require_len(state: &LatticeState, min: usize, what: &str) -> Result<()> {
    if state.len() < min {
        return Err(TodaError::Dimension(format!(
            "{what} needs at least {min} particles, got {}",
            state.len()
        )));
    }
    Ok(())
}

/// Hamiltonian of `system` at `state`.
pub fn energy(state: &LatticeState, system: &System) -> Result<f64> {
    system.check(state.len())?;
    let n = state.len();
    let potential: f64 = bond_terms(state, system)?.iter().map(|(_, v)| v).sum();
    let linear = system.endpoint_force() * (state.q[0] - state.q[n - 1]);
    Ok(kinetic(state) + potential + linear)
}

/// `H_F = ½Σp² + Σ_{n<N} e^{q_n - q_{n+1}}`.
pub fn energy_open(state: &LatticeState) -> Result<f64> {
    require_len(state, 2, "open energy")?;
    energy(state, &System::Open)
}

/// `H_c = H_F + c (q_1 - q_N)`.
pub fn energy_forced(state: &LatticeState, c: f64) -> Result<f64> {
    require_len(state, 2, "forced energy")?;
    energy(state, &System::Forced { c })
}

/// `H_c^d`: the forced Hamiltonian without the two endpoint bonds.
pub fn energy_decoupled(state: &LatticeState, c: f64) -> Result<f64> {
    require_len(state, 3, "decoupled energy")?;
    energy(state, &System::Decoupled { c })
}

/// `H_c^# = ½Σp² + c (q_1 - q_N)`.
pub fn energy_free(state: &LatticeState, c: f64) -> Result<f64> {
    require_len(state, 2, "free energy")?;
    energy(state, &System::Free { c })
}

pub fn energy_periodic(state: &LatticeState, stretch: f64) -> Result<f64> {
    require_len(state, 2, "periodic energy")?;
    energy(state, &System::Periodic { stretch })
}

/// Momentum derivative `ṗ = -∂H/∂q` for `system`.
pub fn forces(state: &LatticeState, system: &System) -> Result<Vec<f64>> {
    let mut out = vec![0.0; state.len()];
    forces_into(state, system, &mut out)?;
    Ok(out)
}

/// Allocation-free variant of [`forces`] used by the integrator.
pub fn forces_into(state: &LatticeState, system: &System, out: &mut [f64]) -> Result<()> {
    system.check(state.len())?;
    let n = state.len();
    let stretch = match system {
        System::Periodic { stretch } => *stretch,
        _ => 0.0,
    };
    out.iter_mut().for_each(|f| *f = 0.0);
    for i in system.bonds(n) {
        let e = bond_exp(bond_exponent(&state.q, i, stretch), i)?;
        let j = (i + 1) % n;
        out[i] -= e;
        out[j] += e;
    }
    let c = system.endpoint_force();
    if c != 0.0 {
        out[0] -= c;
        out[n - 1] += c;
    }
    Ok(())
}

/// Boundary condition of a set of Flaschka variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Open,
    Periodic { stretch: f64 },
}

/// Flaschka variables `a_i = -p_i/2`, `b_i = ½ e^{(q_i - q_{i+1})/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlaschkaVars {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub boundary: Boundary,
}

impl FlaschkaVars {
    pub fn new(a: Vec<f64>, b: Vec<f64>, boundary: Boundary) -> Result<Self> {
        let expected = match boundary {
            Boundary::Open => a.len().saturating_sub(1),
            Boundary::Periodic { .. } => a.len(),
        };
        if a.is_empty() || b.len() != expected {
            return Err(TodaError::Dimension(format!(
                "{} diagonal and {} bond variables for {boundary:?}",
                a.len(),
                b.len()
            )));
        }
        if let Some(bad) = b.iter().find(|&&x| !(x > 0.0 && x.is_finite())) {
            return Err(TodaError::Domain(format!("bond variable {bad} is not positive")));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(TodaError::InvalidInput("non-finite diagonal variable".into()));
        }
        Ok(Self { a, b, boundary })
    }
}

pub fn to_flaschka(state: &LatticeState, boundary: Boundary) -> Result<FlaschkaVars> {
    let n = state.len();
    let a = state.p.iter().map(|p| -0.5 * p).collect();
    let (bonds, stretch) = match boundary {
        Boundary::Open => (n - 1, 0.0),
        Boundary::Periodic { stretch } => (n, stretch),
    };
    let b = (0..bonds)
        .map(|i| bond_exp(0.5 * bond_exponent(&state.q, i, stretch), i).map(|e| 0.5 * e))
        .collect::<Result<Vec<_>>>()?;
    FlaschkaVars::new(a, b, boundary)
}

/// Inverse of [`to_flaschka`]; `q_sum` restores the centre of mass that the
/// Flaschka variables forget. The periodic wrap bond is not needed.
pub fn from_flaschka(vars: &FlaschkaVars, q_sum: f64) -> Result<LatticeState> {
    let vars = FlaschkaVars::new(vars.a.clone(), vars.b.clone(), vars.boundary)?;
    let n = vars.a.len();
    let p = vars.a.iter().map(|a| -2.0 * a).collect();
    // offsets[i] = q_i - q_1
    let mut offsets = vec![0.0; n];
    for i in 1..n {
        offsets[i] = offsets[i - 1] - 2.0 * (2.0 * vars.b[i - 1]).ln();
    }
    let q1 = (q_sum - offsets.iter().sum::<f64>()) / n as f64;
    let q = offsets.iter().map(|o| q1 + o).collect();
    LatticeState::new(q, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(q: &[f64], p: &[f64]) -> LatticeState {
        LatticeState::new(q.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn open_energy_examples() {
        assert_eq!(energy_open(&st(&[0.0, 0.0], &[0.0, 0.0])).unwrap(), 1.0);
        let e = energy_open(&st(&[0.0, 2f64.ln()], &[1.0, 1.0])).unwrap();
        assert!((e - 1.5).abs() < 1e-15);
    }

    #[test]
    fn forced_energy_examples() {
        assert_eq!(energy_forced(&st(&[0.0, 0.0], &[0.0, 0.0]), 1.0).unwrap(), 1.0);
        let e = energy_forced(&st(&[2.0, 0.0], &[0.0, 0.0]), 1.0).unwrap();
        assert!((e - (2f64.exp() + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn decoupled_energy_examples() {
        assert_eq!(energy_decoupled(&LatticeState::zeros(3), 1.0).unwrap(), 0.0);
        assert_eq!(energy_decoupled(&LatticeState::zeros(4), 2.0).unwrap(), 1.0);
        assert!(matches!(
            energy_decoupled(&LatticeState::zeros(2), 1.0),
            Err(TodaError::Dimension(_))
        ));
    }

    #[test]
    fn force_examples() {
        let f = forces(&LatticeState::zeros(2), &System::Forced { c: 1.0 }).unwrap();
        assert_eq!(f, vec![-2.0, 2.0]);
        let f = forces(&LatticeState::zeros(3), &System::Open).unwrap();
        assert_eq!(f, vec![-1.0, 0.0, 1.0]);
        let s = st(&[0.0, 0.7, 1.4], &[0.3, -0.1, 0.2]);
        let f = forces(&s, &System::Periodic { stretch: 2.1 }).unwrap();
        assert!(f.iter().all(|x| x.abs() < 1e-15), "{f:?}");
    }

    #[test]
    fn decoupled_forces_skip_endpoint_bonds() {
        let s = st(&[0.0, 0.0, 0.0, 0.0], &[0.0; 4]);
        let f = forces(&s, &System::Decoupled { c: 0.5 }).unwrap();
        assert_eq!(f, vec![-0.5, -1.0, 1.0, 0.5]);
    }

    #[test]
    fn overflow_is_reported() {
        let s = st(&[800.0, 0.0], &[0.0, 0.0]);
        assert!(matches!(energy_open(&s), Err(TodaError::Overflow { bond: 0, .. })));
        assert!(matches!(forces(&s, &System::Open), Err(TodaError::Overflow { .. })));
    }

    #[test]
    fn separated_endpoints_underflow_to_zero() {
        let s = st(&[-900.0, 0.0, 900.0], &[0.0; 3]);
        let f = forces(&s, &System::Forced { c: 1.0 }).unwrap();
        assert_eq!(f, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn flaschka_examples() {
        let v = to_flaschka(&st(&[0.0, 0.0], &[2.0, -2.0]), Boundary::Open).unwrap();
        assert_eq!(v.a, vec![-1.0, 1.0]);
        assert_eq!(v.b, vec![0.5]);
        let back = from_flaschka(
            &FlaschkaVars::new(vec![0.0, 0.0], vec![0.5], Boundary::Open).unwrap(),
            0.0,
        )
        .unwrap();
        assert_eq!(back, LatticeState::zeros(2));
    }

    #[test]
    fn flaschka_rejects_nonpositive_bonds() {
        assert!(FlaschkaVars::new(vec![0.0, 0.0], vec![0.0], Boundary::Open).is_err());
        assert!(FlaschkaVars::new(vec![0.0, 0.0], vec![-1.0], Boundary::Open).is_err());
        assert!(FlaschkaVars::new(vec![0.0, 0.0], vec![1.0, 1.0], Boundary::Open).is_err());
    }

    #[test]
    fn periodic_flaschka_has_wrap_bond() {
        let s = st(&[0.0, 1.0, 2.0], &[0.0; 3]);
        let v = to_flaschka(&s, Boundary::Periodic { stretch: 3.0 }).unwrap();
        assert_eq!(v.b.len(), 3);
        assert!((v.b[2] - v.b[0]).abs() < 1e-16);
    }
}
