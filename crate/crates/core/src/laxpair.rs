//! Lax pairs for the periodic, open, endpoint and combined systems, and
//! numerical checks of the Lax equations along sampled trajectories.

use nalgebra::DMatrix;

use crate::error::{Result, TodaError};
use crate::integrator::Trajectory;
use crate::lattice::{to_flaschka, Boundary, FlaschkaVars, LatticeState};
use crate::spectral::{eigenvalues, JacobiMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairKind {
    Periodic,
    Open,
    TwoByTwo,
    Combined,
    CombinedSharp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixPair {
    pub l: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub kind: PairKind,
}

impl MatrixPair {
    pub fn commutator(&self) -> DMatrix<f64> {
        commutator(&self.l, &self.b)
    }
}

/// `[A, B] = AB - BA`.
pub fn commutator(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Fill the tridiagonal part of `(L, B)` for a chain of Flaschka variables
/// starting at row `offset`.
fn fill_chain(l: &mut DMatrix<f64>, bm: &mut DMatrix<f64>, offset: usize, a: &[f64], b: &[f64]) {
    for (i, ai) in a.iter().enumerate() {
        l[(offset + i, offset + i)] = *ai;
    }
    for (i, bi) in b.iter().enumerate() {
        let (r, s) = (offset + i, offset + i + 1);
        l[(r, s)] = *bi;
        l[(s, r)] = *bi;
        bm[(r, s)] = -bi;
        bm[(s, r)] = *bi;
    }
}

/// Periodic pair: tridiagonal plus the wrap bond `b_N` in the corners.
pub fn build_periodic(vars: &FlaschkaVars) -> Result<MatrixPair> {
    let n = vars.a.len();
    if !matches!(vars.boundary, Boundary::Periodic { .. }) || vars.b.len() != n {
        return Err(TodaError::Dimension("periodic pair needs periodic variables".into()));
    }
    if n < 3 {
        return Err(TodaError::Dimension(format!("periodic pair needs N >= 3, got {n}")));
    }
    let mut l = DMatrix::zeros(n, n);
    let mut bm = DMatrix::zeros(n, n);
    fill_chain(&mut l, &mut bm, 0, &vars.a, &vars.b[..n - 1]);
    let wrap = vars.b[n - 1];
    l[(0, n - 1)] = wrap;
    l[(n - 1, 0)] = wrap;
    bm[(0, n - 1)] = wrap;
    bm[(n - 1, 0)] = -wrap;
    Ok(MatrixPair { l, b: bm, kind: PairKind::Periodic })
}

/// Open-chain pair `(L_F, B_F)`.
pub fn build_open(vars: &FlaschkaVars) -> Result<MatrixPair> {
    let n = vars.a.len();
    if vars.boundary != Boundary::Open || vars.b.len() + 1 != n {
        return Err(TodaError::Dimension("open pair needs open variables".into()));
    }
    let mut l = DMatrix::zeros(n, n);
    let mut bm = DMatrix::zeros(n, n);
    fill_chain(&mut l, &mut bm, 0, &vars.a, &vars.b);
    Ok(MatrixPair { l, b: bm, kind: PairKind::Open })
}

/// One-degree-of-freedom potential `V(q) = slope * q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPotential {
    pub slope: f64,
}

impl LinearPotential {
    pub fn value(&self, q: f64) -> f64 {
        self.slope * q
    }
}

/// `L̂ = [[p, 2V(q)], [1, -p]]`, `B̂ = [[0, V'(q)], [0, 0]]`.
pub fn build_two_by_two(q: f64, p: f64, potential: LinearPotential) -> MatrixPair {
    let l = DMatrix::from_row_slice(2, 2, &[p, 2.0 * potential.value(q), 1.0, -p]);
    let b = DMatrix::from_row_slice(2, 2, &[0.0, potential.slope, 0.0, 0.0]);
    MatrixPair { l, b, kind: PairKind::TwoByTwo }
}

fn place_block(target: &mut DMatrix<f64>, at: usize, block: &DMatrix<f64>) {
    target.view_mut((at, at), (block.nrows(), block.ncols())).copy_from(block);
}

fn check_combined_input(q: &[f64], p: &[f64]) -> Result<usize> {
    let n = q.len();
    if p.len() != n {
        return Err(TodaError::Dimension(format!("{} positions but {} momenta", n, p.len())));
    }
    if n < 3 {
        return Err(TodaError::Dimension(format!("combined pair needs N >= 3, got {n}")));
    }
    Ok(n)
}

fn endpoint_blocks(
    l: &mut DMatrix<f64>,
    bm: &mut DMatrix<f64>,
    at: usize,
    q: &[f64],
    p: &[f64],
    c: f64,
) {
    let n = q.len();
    let left = build_two_by_two(q[0], p[0], LinearPotential { slope: c });
    let right = build_two_by_two(q[n - 1], p[n - 1], LinearPotential { slope: -c });
    place_block(l, at, &left.l);
    place_block(bm, at, &left.b);
    place_block(l, at + 2, &right.l);
    place_block(bm, at + 2, &right.b);
}

/// Block pair `(ℒ, ℬ)`: the Toda core `2..N-1` followed by the two endpoint
/// 2×2 blocks. Size `(N-2) + 4`.
pub fn build_combined(q: &[f64], p: &[f64], c: f64) -> Result<MatrixPair> {
    let n = check_combined_input(q, p)?;
    let core = n - 2;
    let dim = core + 4;
    let mut l = DMatrix::zeros(dim, dim);
    let mut bm = DMatrix::zeros(dim, dim);
    let a: Vec<f64> = p[1..n - 1].iter().map(|x| -0.5 * x).collect();
    let b: Vec<f64> = (1..n - 2).map(|k| 0.5 * (0.5 * (q[k] - q[k + 1])).exp()).collect();
    fill_chain(&mut l, &mut bm, 0, &a, &b);
    endpoint_blocks(&mut l, &mut bm, core, q, p, c);
    Ok(MatrixPair { l, b: bm, kind: PairKind::Combined })
}

/// Block pair `(ℒ#, ℬ#)`: `diag(P_1..P_{N-1})` followed by the endpoint blocks.
/// Size `(N-1) + 4`.
pub fn build_combined_sharp(q: &[f64], p: &[f64], c: f64) -> Result<MatrixPair> {
    let n = check_combined_input(q, p)?;
    let head = n - 1;
    let dim = head + 4;
    let mut l = DMatrix::zeros(dim, dim);
    let mut bm = DMatrix::zeros(dim, dim);
    for k in 0..head {
        l[(k, k)] = p[k];
    }
    endpoint_blocks(&mut l, &mut bm, head, q, p, c);
    Ok(MatrixPair { l, b: bm, kind: PairKind::CombinedSharp })
}

/// Which Lax equation a trajectory is checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaxKind {
    /// `L̇_F = [L_F, B_F]` for the whole open chain.
    Open,
    Periodic {
        stretch: f64,
    },
    /// Core matrix of a forced chain with the diagonal source
    /// `diag(-2b_1², 0, …, 0, 2b_{N-1}²)`.
    Driven,
    /// Same core matrix as `Driven` but without the source term.
    DrivenWithoutSource,
    /// `(ℒ, ℬ)` along the decoupled flow.
    Combined {
        c: f64,
    },
}

fn lax_matrices(state: &LatticeState, kind: &LaxKind) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = state.len();
    let pair = match kind {
        LaxKind::Open => build_open(&to_flaschka(state, Boundary::Open)?)?,
        LaxKind::Periodic { stretch } => {
            build_periodic(&to_flaschka(state, Boundary::Periodic { stretch: *stretch })?)?
        }
        LaxKind::Driven | LaxKind::DrivenWithoutSource => {
            if n < 3 {
                return Err(TodaError::Dimension("driven pair needs N >= 3".into()));
            }
            build_open(&to_flaschka(&state.slice(1, n - 1), Boundary::Open)?)?
        }
        LaxKind::Combined { c } => build_combined(&state.q, &state.p, *c)?,
    };
    Ok((pair.l, pair.b))
}

fn source_term(state: &LatticeState, dim: usize) -> DMatrix<f64> {
    let n = state.len();
    let mut d = DMatrix::zeros(dim, dim);
    // b_1² = e^{q_1 - q_2}/4, b_{N-1}² = e^{q_{N-1} - q_N}/4
    d[(0, 0)] -= 0.5 * (state.q[0] - state.q[1]).exp();
    d[(dim - 1, dim - 1)] += 0.5 * (state.q[n - 2] - state.q[n - 1]).exp();
    d
}

/// Residual `‖(L(t+h) - L(t-h))/2h - [L,B](t) - D(t)‖_max` at every interior
/// sample, with `h` the sample spacing. Returns `(t, residual)` pairs.
pub fn lax_residual(traj: &Trajectory, kind: &LaxKind) -> Result<Vec<(f64, f64)>> {
    if traj.len() < 3 {
        return Err(TodaError::InvalidInput(format!(
            "residual needs at least 3 samples, got {}",
            traj.len()
        )));
    }
    let h = traj.spacing().expect("at least 3 samples");
    let mats = traj.states.iter().map(|s| lax_matrices(s, kind)).collect::<Result<Vec<_>>>()?;
    let out = (1..traj.len() - 1)
        .map(|k| {
            let derivative = (&mats[k + 1].0 - &mats[k - 1].0) / (2.0 * h);
            let (l, b) = &mats[k];
            let mut res = derivative - commutator(l, b);
            if *kind == LaxKind::Driven {
                res -= source_term(&traj.states[k], l.nrows());
            }
            (traj.times[k], res.amax())
        })
        .collect();
    Ok(out)
}

fn spectrum(state: &LatticeState, kind: &LaxKind) -> Result<Vec<f64>> {
    match kind {
        LaxKind::Open => eigenvalues(&JacobiMatrix::from_state(state)?),
        LaxKind::Periodic { stretch } => {
            let pair =
                build_periodic(&to_flaschka(state, Boundary::Periodic { stretch: *stretch })?)?;
            let mut ev: Vec<f64> = pair.l.symmetric_eigenvalues().iter().copied().collect();
            ev.sort_by(|a, b| b.total_cmp(a));
            Ok(ev)
        }
        other => Err(TodaError::InvalidInput(format!("{other:?} flow is not isospectral"))),
    }
}

/// Largest deviation of any eigenvalue of `L` from its initial value.
pub fn isospectrality_drift(traj: &Trajectory, kind: &LaxKind) -> Result<f64> {
    let reference = spectrum(&traj.states[0], kind)?;
    let mut drift: f64 = 0.0;
    for s in &traj.states[1..] {
        for (a, b) in spectrum(s, kind)?.iter().zip(&reference) {
            drift = drift.max((a - b).abs());
        }
    }
    Ok(drift)
}

/// Variant of [`isospectrality_drift`] against an explicit reference spectrum.
pub fn spectral_deviation(traj: &Trajectory, kind: &LaxKind, reference: &[f64]) -> Result<f64> {
    let mut drift: f64 = 0.0;
    for s in &traj.states {
        for (a, b) in spectrum(s, kind)?.iter().zip(reference) {
            drift = drift.max((a - b).abs());
        }
    }
    Ok(drift)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate, IntegrationPlan};
    use crate::lattice::System;

    fn periodic_vars() -> FlaschkaVars {
        FlaschkaVars::new(vec![0.0; 3], vec![0.5; 3], Boundary::Periodic { stretch: 0.0 }).unwrap()
    }

    #[test]
    fn periodic_structure() {
        let pair = build_periodic(&periodic_vars()).unwrap();
        assert_eq!(pair.l[(0, 2)], 0.5);
        assert_eq!(pair.l[(2, 0)], 0.5);
        assert_eq!((&pair.l - pair.l.transpose()).amax(), 0.0);
        assert_eq!((&pair.b + pair.b.transpose()).amax(), 0.0);
        let vars = FlaschkaVars::new(
            vec![0.3, -0.2, 0.7, 0.1],
            vec![0.4, 0.2, 0.9, 0.3],
            Boundary::Periodic { stretch: 1.0 },
        )
        .unwrap();
        let pair = build_periodic(&vars).unwrap();
        assert_eq!(pair.l.trace(), vars.a.iter().sum::<f64>());
    }

    #[test]
    fn open_structure() {
        let vars = FlaschkaVars::new(vec![0.3, -0.2, 0.7], vec![0.4, 0.2], Boundary::Open).unwrap();
        let pair = build_open(&vars).unwrap();
        assert_eq!((&pair.l - pair.l.transpose()).amax(), 0.0);
        assert_eq!((&pair.b + pair.b.transpose()).amax(), 0.0);
        assert_eq!(pair.l.trace(), vars.a.iter().sum::<f64>());
        assert_eq!(pair.l[(0, 2)], 0.0);
    }

    #[test]
    fn size_mismatch_rejected() {
        assert!(build_open(&periodic_vars()).is_err());
        let open = FlaschkaVars::new(vec![0.0; 3], vec![0.5; 2], Boundary::Open).unwrap();
        assert!(build_periodic(&open).is_err());
        assert!(build_combined(&[0.0; 3], &[0.0; 4], 1.0).is_err());
    }

    #[test]
    fn two_by_two_examples() {
        let pair = build_two_by_two(0.0, 0.0, LinearPotential { slope: 0.0 });
        assert_eq!(
            pair.l.as_slice(),
            DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]).as_slice()
        );
        let pair = build_two_by_two(1.0, 1.0, LinearPotential { slope: 1.0 });
        let ev = pair.l.complex_eigenvalues();
        let mut re: Vec<f64> = ev.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] + 3f64.sqrt()).abs() < 1e-14 && (re[1] - 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn combined_zero_state() {
        let pair = build_combined(&[0.0; 3], &[0.0; 3], 1.0).unwrap();
        assert_eq!(pair.l.nrows(), 5);
        assert_eq!(pair.l[(0, 0)], 0.0);
        assert_eq!(pair.l[(2, 1)], 1.0);
        assert_eq!(pair.l[(4, 3)], 1.0);
        assert_eq!(pair.l.iter().filter(|x| **x != 0.0).count(), 2);
        assert_eq!(pair.b[(1, 2)], 1.0);
        assert_eq!(pair.b[(3, 4)], -1.0);
    }

    #[test]
    fn combined_sharp_diagonal() {
        let p = [0.1, 0.2, 0.3, 0.4];
        let pair = build_combined_sharp(&[0.0; 4], &p, 1.0).unwrap();
        assert_eq!(pair.l.nrows(), 7);
        for k in 0..3 {
            assert_eq!(pair.l[(k, k)], p[k]);
        }
    }

    #[test]
    fn single_particle_residual_is_zero() {
        let single = LatticeState::new(vec![0.0], vec![0.3]).unwrap();
        let traj = Trajectory {
            times: vec![0.0, 0.1, 0.2],
            states: vec![single; 3],
            h0: 0.0,
            truncated: false,
            system: System::Open,
        };
        let res = lax_residual(&traj, &LaxKind::Open).unwrap();
        assert!(res.iter().all(|(_, r)| *r == 0.0));
    }

    #[test]
    fn short_trajectory_rejected() {
        let s = LatticeState::new(vec![0.0, 1.0], vec![0.0; 2]).unwrap();
        let plan = IntegrationPlan::new(System::Open, 1e-2, 0.01, 1).unwrap();
        let traj = integrate(&s, &plan).unwrap();
        assert!(lax_residual(&traj, &LaxKind::Open).is_err());
        assert!(isospectrality_drift(&traj, &LaxKind::Open).unwrap() < 1e-8);
    }
}
