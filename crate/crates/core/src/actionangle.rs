//! Action-angle coordinates of the decoupled chain, their pull-back to the
//! forced chain through the intertwiner, and finite-difference Poisson
//! brackets.

use nalgebra::DMatrix;

use crate::error::{Result, TodaError};
use crate::lattice::LatticeState;
use crate::scattering::{intertwiner, WaveOptions};
use crate::spectral::{char_poly_derivative, eig_tridiag, JacobiMatrix};

/// Angles `θ_1..θ_N` and actions `λ̃_1..λ̃_N`, stored 0-based.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionAngleCoords {
    pub theta: Vec<f64>,
    pub lam: Vec<f64>,
}

impl ActionAngleCoords {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// `(θ, λ̃)` concatenated.
    pub fn to_vec(&self) -> Vec<f64> {
        self.theta.iter().chain(&self.lam).copied().collect()
    }
}

fn check_c(c: f64) -> Result<()> {
    if c == 0.0 || !c.is_finite() {
        return Err(TodaError::Domain(format!("action-angle map needs c ≠ 0, got {c}")));
    }
    Ok(())
}

/// Action-angle coordinates for `H_c^d`.
///
/// Core angles are `4 ln(u_k/u_M |Z'(λ_k)/Z'(λ_M)|^{1/2})` with the last core
/// eigenvalue as reference. The factor 4 makes them conjugate to
/// `λ̃_k = λ_k - mean λ` under the canonical bracket, since the Flaschka
/// variables carry `{a_k, b_k} = b_k/4`.
pub fn action_angle_decoupled(state: &LatticeState, c: f64) -> Result<ActionAngleCoords> {
    check_c(c)?;
    let n = state.len();
    if n < 3 {
        return Err(TodaError::Dimension(format!("need N >= 3, got {n}")));
    }
    let m = n - 2;
    let core = state.slice(1, n - 1);
    let mut theta = vec![0.0; n];
    let mut lam = vec![0.0; n];
    theta[0] = -state.p[0] / c;
    lam[0] = 0.5 * state.p[0].powi(2) + c * state.q[0];
    theta[n - 1] = state.p[n - 1] / c;
    lam[n - 1] = 0.5 * state.p[n - 1].powi(2) - c * state.q[n - 1];
    theta[n - 2] = core.q_sum() / m as f64;
    lam[n - 2] = core.p_sum();
    if m > 1 {
        let s = eig_tridiag(&JacobiMatrix::from_state(&core)?)?;
        let mean = s.lambdas.iter().sum::<f64>() / m as f64;
        let reference = m - 1;
        let z_ref = char_poly_derivative(&s, reference).abs();
        for k in 0..reference {
            let ratio = s.first_components[k] / s.first_components[reference];
            let z = char_poly_derivative(&s, k).abs() / z_ref;
            theta[1 + k] = 4.0 * (ratio.ln() + 0.5 * z.ln());
            lam[1 + k] = s.lambdas[k] - mean;
        }
    }
    Ok(ActionAngleCoords { theta, lam })
}

/// `Θ = θ ∘ W`, `Λ = λ̃ ∘ W`.
pub fn action_angle_forced(
    state0: &LatticeState,
    c: f64,
    opts: &WaveOptions,
) -> Result<ActionAngleCoords> {
    if !(c > 0.0) {
        return Err(TodaError::Domain(format!("forced action-angle map needs c > 0, got {c}")));
    }
    action_angle_decoupled(&intertwiner(state0, c, opts)?, c)
}

fn core_actions(lam: &[f64]) -> &[f64] {
    &lam[1..lam.len() - 2]
}

/// `H_c^d` written in the actions:
/// `λ̃_1 + λ̃_N + 2Σλ̃_k² + 2(Σλ̃_k)² + λ̃_{N-1}²/(2(N-2))`.
pub fn hamiltonian_in_actions(coords: &ActionAngleCoords) -> f64 {
    let n = coords.lam.len();
    let lam = &coords.lam;
    let m = (n - 2) as f64;
    let core = core_actions(lam);
    let sq: f64 = core.iter().map(|x| x * x).sum();
    let total: f64 = core.iter().sum();
    lam[0] + lam[n - 1] + 2.0 * sq + 2.0 * total * total + lam[n - 2].powi(2) / (2.0 * m)
}

/// `∂H/∂λ̃_i`: `(1, 4(λ̃_i + Σλ̃_j), …, λ̃_{N-1}/(N-2), 1)`.
pub fn angle_rates(coords: &ActionAngleCoords) -> Vec<f64> {
    let n = coords.lam.len();
    let lam = &coords.lam;
    let total: f64 = core_actions(lam).iter().sum();
    let mut rates = vec![1.0; n];
    for i in 1..n - 2 {
        rates[i] = 4.0 * (lam[i] + total);
    }
    rates[n - 2] = lam[n - 2] / (n - 2) as f64;
    rates
}

fn check_step(h: f64) -> Result<()> {
    if !(1e-7..=1e-3).contains(&h) {
        return Err(TodaError::InvalidInput(format!("FD step {h} outside [1e-7, 1e-3]")));
    }
    Ok(())
}

/// Central-difference Jacobian of a vector observable with respect to
/// `(q_1..q_N, p_1..p_N)`; rows are observables.
pub fn fd_jacobian<F>(f: F, point: &LatticeState, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&LatticeState) -> Result<Vec<f64>>,
{
    check_step(h)?;
    let x = point.to_phase_vec();
    let dim = x.len();
    let mut columns = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut plus = x.clone();
        let mut minus = x.clone();
        plus[j] += h;
        minus[j] -= h;
        let fp = f(&LatticeState::from_phase_vec(&plus)?)?;
        let fm = f(&LatticeState::from_phase_vec(&minus)?)?;
        columns.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<_>>());
    }
    let rows = columns.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(rows, dim, |i, j| columns[j][i]))
}

/// Bracket matrix `{f_i, f_j} = J Ω Jᵀ` from a Jacobian in `(q, p)` order.
pub fn bracket_matrix(jac: &DMatrix<f64>) -> DMatrix<f64> {
    let n = jac.ncols() / 2;
    let jq = jac.columns(0, n);
    let jp = jac.columns(n, n);
    jq * jp.transpose() - jp * jq.transpose()
}

/// Canonical bracket `Σ(∂f/∂q ∂g/∂p - ∂f/∂p ∂g/∂q)` by central differences.
pub fn poisson_bracket<F, G>(f: F, g: G, point: &LatticeState, h: f64) -> Result<f64>
where
    F: Fn(&LatticeState) -> Result<f64>,
    G: Fn(&LatticeState) -> Result<f64>,
{
    let jac = fd_jacobian(|s| Ok(vec![f(s)?, g(s)?]), point, h)?;
    Ok(bracket_matrix(&jac)[(0, 1)])
}

/// Largest deviation of the `(θ, λ̃)` bracket matrix from the canonical
/// pattern `[[0, I], [-I, 0]]`.
pub fn canonical_defect(brackets: &DMatrix<f64>) -> f64 {
    let n = brackets.nrows() / 2;
    let mut worst: f64 = 0.0;
    for i in 0..2 * n {
        for j in 0..2 * n {
            let expected = if j == i + n {
                1.0
            } else if i == j + n {
                -1.0
            } else {
                0.0
            };
            worst = worst.max((brackets[(i, j)] - expected).abs());
        }
    }
    worst
}

/// Singular values of a Jacobian, largest first.
pub fn singular_values(jac: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = jac.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Numerical rank: singular values above `tol`.
pub fn numerical_rank(jac: &DMatrix<f64>, tol: f64) -> usize {
    singular_values(jac).iter().filter(|s| **s > tol).count()
}
