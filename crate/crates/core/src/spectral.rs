//! Jacobi matrices and their spectral coordinates.
//!
//! A Jacobi matrix (symmetric, tridiagonal, positive off-diagonal) is in
//! one-to-one correspondence with its eigenvalues together with the positive
//! first components of its normalized eigenvectors. [`eig_tridiag`] goes one
//! way, [`jacobi_from_spectral`] the other. Under the open Toda flow the
//! eigenvalues are constant and the first components evolve explicitly
//! ([`moser_flow`]), which gives an exact evolver for the open chain.

use nalgebra::DMatrix;

use crate::error::{Result, TodaError};
use crate::lattice::{from_flaschka, to_flaschka, Boundary, FlaschkaVars, LatticeState};

/// Relative spectral gap below which two eigenvalues count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Accepted deviation of `Σu²` from one on input to [`jacobi_from_spectral`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

const MAX_QL_SWEEPS: usize = 60;

#[derive(Debug, Clone, PartialEq)]
pub struct JacobiMatrix {
    pub diag: Vec<f64>,
    pub offdiag: Vec<f64>,
}

impl JacobiMatrix {
    pub fn new(diag: Vec<f64>, offdiag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(TodaError::Dimension(format!(
                "{} diagonal and {} off-diagonal entries",
                diag.len(),
                offdiag.len()
            )));
        }
        if diag.iter().any(|x| !x.is_finite()) {
            return Err(TodaError::InvalidInput("non-finite diagonal entry".into()));
        }
        if let Some(bad) = offdiag.iter().find(|&&b| !(b > 0.0 && b.is_finite())) {
            return Err(TodaError::Domain(format!("off-diagonal entry {bad} is not positive")));
        }
        Ok(Self { diag, offdiag })
    }

    /// The core Lax matrix `L_F` of an open chain.
    pub fn from_flaschka(vars: &FlaschkaVars) -> Result<Self> {
        if vars.boundary != Boundary::Open {
            return Err(TodaError::InvalidInput(
                "periodic variables are not a Jacobi matrix".into(),
            ));
        }
        Self::new(vars.a.clone(), vars.b.clone())
    }

    pub fn from_state(state: &LatticeState) -> Result<Self> {
        Self::from_flaschka(&to_flaschka(state, Boundary::Open)?)
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let m = self.dim();
        let mut out = DMatrix::zeros(m, m);
        for i in 0..m {
            out[(i, i)] = self.diag[i];
        }
        for (i, b) in self.offdiag.iter().enumerate() {
            out[(i, i + 1)] = *b;
            out[(i + 1, i)] = *b;
        }
        out
    }

    /// Max-abs entry, used as the matrix scale in residual checks.
    pub fn max_norm(&self) -> f64 {
        self.diag.iter().chain(&self.offdiag).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &JacobiMatrix) -> f64 {
        self.diag
            .iter()
            .zip(&other.diag)
            .chain(self.offdiag.iter().zip(&other.offdiag))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Eigenvalues (strictly decreasing) and positive eigenvector first components.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub lambdas: Vec<f64>,
    pub first_components: Vec<f64>,
}

impl SpectralData {
    /// Validates ordering, the degeneracy guard, positivity and normalization.
    pub fn new(lambdas: Vec<f64>, first_components: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.len() != first_components.len() {
            return Err(TodaError::Dimension(format!(
                "{} eigenvalues and {} weights",
                lambdas.len(),
                first_components.len()
            )));
        }
        check_simple_spectrum(&lambdas)?;
        if let Some(bad) = first_components.iter().find(|&&u| !(u > 0.0 && u.is_finite())) {
            return Err(TodaError::Domain(format!("first component {bad} is not positive")));
        }
        let norm2: f64 = first_components.iter().map(|u| u * u).sum();
        if (norm2 - 1.0).abs() > NORMALIZATION_TOL {
            return Err(TodaError::Domain(format!("first components have squared norm {norm2}")));
        }
        Ok(Self { lambdas, first_components })
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }
}

fn check_simple_spectrum(lambdas: &[f64]) -> Result<()> {
    if lambdas.iter().any(|x| !x.is_finite()) {
        return Err(TodaError::InvalidInput("non-finite eigenvalue".into()));
    }
    let radius = lambdas.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for w in lambdas.windows(2) {
        if !(w[0] - w[1] >= DEGENERACY_TOL * radius && w[0] > w[1]) {
            return Err(TodaError::Domain(format!(
                "eigenvalues {} and {} are not strictly decreasing",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

/// Implicit-shift QL on a symmetric tridiagonal matrix. Returns unsorted
/// eigenvalues and the eigenvector matrix (eigenvectors in columns).
///
/// Off-diagonals are deflated only once they fall below `eps²` relative to
/// their neighbours, so that eigenvector components far below `eps` keep
/// their relative accuracy; after the sweep budget the usual `eps` criterion
/// is accepted.
fn tql(diag: &[f64], offdiag: &[f64]) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = offdiag.to_vec();
    e.push(0.0);
    let mut z = DMatrix::<f64>::identity(n, n);
    let eps = f64::EPSILON;
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let strict = sweeps < MAX_QL_SWEEPS / 2;
            let tol = if strict { eps * eps } else { eps };
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= tol * dd || e[m] == 0.0 {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(TodaError::NoConvergence(format!(
                    "QL iteration for eigenvalue {l} exceeded {MAX_QL_SWEEPS} sweeps"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut early = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    let zf = z[(k, i + 1)];
                    z[(k, i + 1)] = s * z[(k, i)] + c * zf;
                    z[(k, i)] = c * z[(k, i)] - s * zf;
                }
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

/// Eigenvalues in decreasing order, with no conditions on the eigenvectors.
pub fn eigenvalues(j: &JacobiMatrix) -> Result<Vec<f64>> {
    let (mut d, _) = tql(&j.diag, &j.offdiag)?;
    d.sort_by(|a, b| b.total_cmp(a));
    Ok(d)
}

/// Full eigendecomposition: eigenvalues decreasing, eigenvectors in matching
/// columns with positive first component.
pub fn eig_tridiag_full(j: &JacobiMatrix) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = j.dim();
    let (d, z) = tql(&j.diag, &j.offdiag)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    let lambdas: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let sign = if z[(0, k)] < 0.0 { -1.0 } else { 1.0 };
        for row in 0..n {
            vecs[(row, col)] = sign * z[(row, k)];
        }
    }
    Ok((lambdas, vecs))
}

/// Spectral coordinates of a Jacobi matrix.
pub fn eig_tridiag(j: &JacobiMatrix) -> Result<SpectralData> {
    let (lambdas, vecs) = eig_tridiag_full(j)?;
    let dense = j.to_dense();
    let scale = j.max_norm().max(f64::MIN_POSITIVE);
    for (k, lambda) in lambdas.iter().enumerate() {
        let v = vecs.column(k);
        let res = (&dense * v - v * *lambda).amax();
        if res > 1e-12 * scale {
            return Err(TodaError::NoConvergence(format!(
                "eigenpair {k} residual {res:e} exceeds tolerance"
            )));
        }
    }
    let first = lambdas
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let twist = vecs.column(k).iamax();
            twisted_first_component(j, lambda, twist)
        })
        .collect();
    SpectralData::new(lambdas, first).map_err(|err| match err {
        TodaError::Domain(msg) => TodaError::Domain(format!("spectral data: {msg}")),
        other => other,
    })
}

/// First component of the unit eigenvector for `lambda`, from the three-term
/// recurrence run forward from row 0 and backward from the last row, joined at
/// `twist` (where the eigenvector peaks). Both halves grow towards the twist,
/// so tiny first components keep their relative accuracy.
fn twisted_first_component(j: &JacobiMatrix, lambda: f64, twist: usize) -> f64 {
    const RESCALE: f64 = 1e150;
    let m = j.dim();
    if m == 1 {
        return 1.0;
    }
    let (a, b) = (&j.diag, &j.offdiag);
    let mut v = vec![0.0; m];
    v[0] = 1.0;
    for i in 0..twist {
        let prev = if i > 0 { b[i - 1] * v[i - 1] } else { 0.0 };
        v[i + 1] = ((lambda - a[i]) * v[i] - prev) / b[i];
        if v[i + 1].abs() > RESCALE {
            v[..=i + 1].iter_mut().for_each(|x| *x /= RESCALE);
        }
    }
    let mut w = vec![0.0; m];
    w[m - 1] = 1.0;
    for i in (twist + 1..m).rev() {
        let next = if i + 1 < m { b[i] * w[i + 1] } else { 0.0 };
        w[i - 1] = ((lambda - a[i]) * w[i] - next) / b[i - 1];
        if w[i - 1].abs() > RESCALE {
            w[i - 1..].iter_mut().for_each(|x| *x /= RESCALE);
        }
    }
    let scale = v[twist] / w[twist];
    for i in twist + 1..m {
        v[i] = w[i] * scale;
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (v[0] / norm).abs()
}

/// Inverse of [`eig_tridiag`]: Lanczos on `diag(λ)` started from the weight
/// vector, with full reorthogonalization.
pub fn jacobi_from_spectral(s: &SpectralData) -> Result<JacobiMatrix> {
    let s = SpectralData::new(s.lambdas.clone(), s.first_components.clone())?;
    let m = s.dim();
    let center = s.lambdas.iter().sum::<f64>() / m as f64;
    let lam: Vec<f64> = s.lambdas.iter().map(|l| l - center).collect();
    let norm = s.first_components.iter().map(|u| u * u).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut v: Vec<f64> = s.first_components.iter().map(|u| u / norm).collect();
    let mut diag = Vec::with_capacity(m);
    let mut offdiag = Vec::with_capacity(m.saturating_sub(1));
    for step in 0..m {
        let weights: Vec<f64> = v.iter().map(|x| x * x).collect();
        let total: f64 = weights.iter().sum();
        let alpha = lam.iter().zip(&weights).map(|(l, w)| l * w).sum::<f64>() / total;
        diag.push(alpha + center);
        if step + 1 == m {
            break;
        }
        // (λ_i - α) written as a weighted sum of eigenvalue differences so
        // that it keeps relative accuracy when the weights are lopsided.
        let mut r: Vec<f64> = (0..m)
            .map(|i| {
                let shift =
                    lam.iter().zip(&weights).map(|(l, w)| (lam[i] - l) * w).sum::<f64>() / total;
                shift * v[i]
            })
            .collect();
        if let (Some(prev), Some(beta)) = (basis.last(), offdiag.last()) {
            for (ri, pi) in r.iter_mut().zip(prev) {
                *ri -= beta * pi;
            }
        }
        basis.push(v.clone());
        for _ in 0..2 {
            for qk in &basis {
                let proj: f64 = r.iter().zip(qk).map(|(a, b)| a * b).sum();
                for (ri, qi) in r.iter_mut().zip(qk) {
                    *ri -= proj * qi;
                }
            }
        }
        let beta = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(beta > 0.0) {
            return Err(TodaError::Resolution(format!("Lanczos breakdown at step {step}")));
        }
        offdiag.push(beta);
        v = r.iter().map(|x| x / beta).collect();
    }
    JacobiMatrix::new(diag, offdiag)
}

/// Exact open-Toda evolution of the spectral coordinates over time `t`:
/// eigenvalues fixed, first components reweighted by `e^{λ t}`.
pub fn moser_flow(s: &SpectralData, t: f64) -> SpectralData {
    if t == 0.0 {
        return s.clone();
    }
    let logs: Vec<f64> =
        s.lambdas.iter().zip(&s.first_components).map(|(l, u)| u.ln() + l * t).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|x| (x - top).exp()).collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    SpectralData {
        lambdas: s.lambdas.clone(),
        first_components: raw.iter().map(|x| x / norm).collect(),
    }
}

/// Exact solution of the open chain after time `t`.
pub fn exact_core_toda(core: &LatticeState, t: f64) -> Result<LatticeState> {
    let m = core.len();
    if m == 1 {
        return LatticeState::new(vec![core.q[0] + t * core.p[0]], core.p.clone());
    }
    let vars = to_flaschka(core, Boundary::Open)?;
    let spectral = eig_tridiag(&JacobiMatrix::from_flaschka(&vars)?)?;
    let evolved = jacobi_from_spectral(&moser_flow(&spectral, t))?;
    let q_sum = core.q_sum() + t * core.p_sum();
    from_flaschka(&FlaschkaVars::new(evolved.diag, evolved.offdiag, Boundary::Open)?, q_sum)
}

/// `Z'(λ_k)` for `Z(λ) = det(L - λ) = Π_j (λ_j - λ)`; `k` is 0-based.
pub fn char_poly_derivative(s: &SpectralData, k: usize) -> f64 {
    let lk = s.lambdas[k];
    -s.lambdas.iter().enumerate().filter(|(j, _)| *j != k).map(|(_, lj)| lj - lk).product::<f64>()
}
