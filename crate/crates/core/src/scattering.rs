//! Scattering data of the open chain and the wave operators of the forced
//! chain.
//!
//! Three maps are involved. `W#` sends a forced-chain phase point to the
//! asymptotic free data (numerical limit). `Ŵ#` does the same for the
//! decoupled chain in closed form, and its inverse is explicit. Their
//! composition `W = (Ŵ#)⁻¹ ∘ W#` intertwines the forced and decoupled flows.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, TodaError};
use crate::integrator::{free_flow, Stepper, Trajectory};
use crate::lattice::{from_flaschka, to_flaschka, Boundary, FlaschkaVars, LatticeState, System};
use crate::spectral::{eig_tridiag, jacobi_from_spectral, JacobiMatrix, SpectralData};

/// `α_n = -2 λ_n`; increasing because the eigenvalues are listed in
/// decreasing order.
pub fn alpha_from_spectrum(s: &SpectralData) -> Vec<f64> {
    s.lambdas.iter().map(|l| -2.0 * l).collect()
}

/// Asymptotic intercepts `β⁺` of an open chain with spectral data `s` and
/// initial centre-of-mass sum `qsum0`.
pub fn beta_closed_form(s: &SpectralData, qsum0: f64) -> Vec<f64> {
    let m = s.dim();
    let g: Vec<f64> = (0..m)
        .map(|n| {
            let lam = &s.lambdas;
            s.first_components[n].ln() + (0..n).map(|l| (2.0 * (lam[l] - lam[n])).ln()).sum::<f64>()
        })
        .collect();
    let g_mean = g.iter().sum::<f64>() / m as f64;
    g.iter().map(|gn| qsum0 / m as f64 - 2.0 * (gn - g_mean)).collect()
}

/// `Σ_{j≠k} ln(α⁻_j - α⁺_k)²` over all ordered pairs.
///
/// For physical data `α⁻` is `α⁺` reversed, so some cross differences are
/// exactly zero and this errors; see [`two_body_shift`] for the two-particle
/// shift that does hold.
pub fn scattering_shift(alpha_minus: &[f64], alpha_plus: &[f64]) -> Result<f64> {
    if alpha_minus.len() != alpha_plus.len() {
        return Err(TodaError::Dimension(format!(
            "{} incoming and {} outgoing velocities",
            alpha_minus.len(),
            alpha_plus.len()
        )));
    }
    let m = alpha_plus.len();
    let mut sum = 0.0;
    for j in 0..m {
        for k in 0..m {
            if j == k {
                continue;
            }
            let d = alpha_minus[j] - alpha_plus[k];
            if d == 0.0 {
                return Err(TodaError::Domain(format!(
                    "zero difference α⁻_{} - α⁺_{}",
                    j + 1,
                    k + 1
                )));
            }
            sum += (d * d).ln();
        }
    }
    Ok(sum)
}

/// `β⁺_2 - β⁻_1 = -ln(α⁺_2 - α⁺_1)²` for two particles, from the explicit
/// `sech²` solution of the relative motion.
pub fn two_body_shift(alpha_plus: [f64; 2]) -> f64 {
    -((alpha_plus[1] - alpha_plus[0]).powi(2)).ln()
}

/// Asymptotic data of an open chain in both time directions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringData {
    pub alpha_plus: Vec<f64>,
    pub beta_plus: Vec<f64>,
    pub alpha_minus: Vec<f64>,
    pub beta_minus: Vec<f64>,
}

fn spectral_of(state: &LatticeState) -> Result<SpectralData> {
    eig_tridiag(&JacobiMatrix::from_state(state)?)
}

/// Closed-form `t → ±∞` data; the `t → -∞` side is the `t → +∞` side of the
/// time-reversed state.
pub fn scattering_data(state: &LatticeState) -> Result<ScatteringData> {
    let fwd = spectral_of(state)?;
    let reversed = LatticeState::new(state.q.clone(), state.p.iter().map(|p| -p).collect())?;
    let bwd = spectral_of(&reversed)?;
    Ok(ScatteringData {
        alpha_plus: alpha_from_spectrum(&fwd),
        beta_plus: beta_closed_form(&fwd, state.q_sum()),
        alpha_minus: alpha_from_spectrum(&bwd).iter().map(|a| -a).collect(),
        beta_minus: beta_closed_form(&bwd, state.q_sum()),
    })
}

/// Late-time regression of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFit {
    /// Fit window `[t_start, t_end]`.
    pub window: (f64, f64),
    pub slopes: Vec<f64>,
    pub intercepts: Vec<f64>,
    /// Decay rate of `|p_n - slope_n|` per particle, where measurable.
    pub mu: Vec<Option<f64>>,
    /// Leading coefficient of a quadratic fit of `q_2 - q_1 = -ln e^{q_1 - q_2}`.
    pub gamma: Option<f64>,
}

/// Least-squares line `y ≈ slope·t + intercept`.
pub fn linear_fit(t: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if t.len() != y.len() || t.len() < 2 {
        return Err(TodaError::InvalidInput("linear fit needs two or more points".into()));
    }
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sty, mut stt) = (0.0, 0.0);
    for (ti, yi) in t.iter().zip(y) {
        sty += (ti - tm) * (yi - ym);
        stt += (ti - tm) * (ti - tm);
    }
    if stt == 0.0 {
        return Err(TodaError::InvalidInput("degenerate fit abscissae".into()));
    }
    let slope = sty / stt;
    Ok((slope, ym - slope * tm))
}

/// Least-squares `y ≈ c0 + c1 t + c2 t²`, returned as `[c0, c1, c2]`.
pub fn quadratic_fit(t: &[f64], y: &[f64]) -> Result<[f64; 3]> {
    if t.len() != y.len() || t.len() < 3 {
        return Err(TodaError::InvalidInput("quadratic fit needs three or more points".into()));
    }
    // Centre and scale the abscissa for conditioning, then map back.
    let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    if half == 0.0 {
        return Err(TodaError::InvalidInput("degenerate fit abscissae".into()));
    }
    let a = DMatrix::from_fn(t.len(), 3, |i, j| ((t[i] - mid) / half).powi(j as i32));
    let b = DVector::from_column_slice(y);
    let c =
        a.svd(true, true).solve(&b, 1e-14).map_err(|e| TodaError::InvalidInput(e.to_string()))?;
    let (s0, s1, s2) = (c[0], c[1] / half, c[2] / (half * half));
    Ok([s0 - s1 * mid + s2 * mid * mid, s1 - 2.0 * s2 * mid, s2])
}

/// Quadratic fit of `q_2 - q_1` over samples with `t_lo ≤ t ≤ t_hi`.
pub fn fit_endpoint_separation(traj: &Trajectory, t_lo: f64, t_hi: f64) -> Result<[f64; 3]> {
    if traj.states.first().map_or(0, |s| s.len()) < 2 {
        return Err(TodaError::Dimension("need at least two particles".into()));
    }
    let (ts, ys): (Vec<f64>, Vec<f64>) = traj
        .times
        .iter()
        .zip(&traj.states)
        .filter(|(t, _)| **t >= t_lo && **t <= t_hi)
        .map(|(t, s)| (*t, s.q[1] - s.q[0]))
        .unzip();
    quadratic_fit(&ts, &ys)
}

/// Regression over the final `window_fraction` of the samples.
pub fn fit_asymptotics(traj: &Trajectory, window_fraction: f64) -> Result<AsymptoticFit> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(TodaError::InvalidInput(format!("window fraction {window_fraction}")));
    }
    let len = traj.len();
    let count = ((len as f64) * window_fraction).ceil() as usize;
    if count < 10 {
        return Err(TodaError::InvalidInput(format!(
            "fit window holds {count} samples, need at least 10"
        )));
    }
    let start = len - count;
    let ts = &traj.times[start..];
    let states = &traj.states[start..];
    let n = states[0].len();
    let mut slopes = Vec::with_capacity(n);
    let mut intercepts = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    for i in 0..n {
        let q: Vec<f64> = states.iter().map(|s| s.q[i]).collect();
        let (slope, intercept) = linear_fit(ts, &q)?;
        slopes.push(slope);
        intercepts.push(intercept);
        let scale = 1e-13 * (1.0 + slope.abs());
        let (lt, ly): (Vec<f64>, Vec<f64>) = ts
            .iter()
            .zip(states)
            .filter_map(|(t, s)| {
                let d = (s.p[i] - slope).abs();
                (d > scale).then(|| (*t, d.ln()))
            })
            .unzip();
        mu.push(if lt.len() >= 3 { linear_fit(&lt, &ly).ok().map(|(s, _)| -s) } else { None });
    }
    let gamma = if n >= 2 {
        let y: Vec<f64> = states.iter().map(|s| s.q[1] - s.q[0]).collect();
        Some(quadratic_fit(ts, &y)?[2])
    } else {
        None
    };
    Ok(AsymptoticFit { window: (ts[0], *ts.last().unwrap()), slopes, intercepts, mu, gamma })
}

/// Controls for the numerical limit `W# = lim U#_{-t} ∘ U_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveOptions {
    /// Stop when two successive horizons agree to this max-abs distance.
    pub tolerance: f64,
    pub dt: f64,
    /// First horizon; doubled until converged.
    pub t_initial: f64,
    pub t_max: f64,
    /// Evaluate at exactly this horizon, skipping the doubling. Makes `W#` a
    /// smooth function of the initial point, as finite differences require.
    pub horizon: Option<f64>,
}

impl Default for WaveOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, dt: 1e-4, t_initial: 10.0, t_max: 200.0, horizon: None }
    }
}

impl WaveOptions {
    pub fn with_horizon(horizon: f64) -> Self {
        Self { horizon: Some(horizon), ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= crate::integrator::MAX_DT) {
            return Err(TodaError::InvalidInput(format!("wave-operator dt = {}", self.dt)));
        }
        if !(self.tolerance > 0.0 && self.t_initial > 0.0 && self.t_max >= self.t_initial) {
            return Err(TodaError::InvalidInput("invalid wave-operator options".into()));
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return Err(TodaError::InvalidInput(format!("horizon {h}")));
            }
        }
        Ok(())
    }
}

/// Converged value of `W#` with the horizon it was taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveLimit {
    pub point: LatticeState,
    pub horizon: f64,
    /// Distance to the value at the previous horizon (0 for a fixed horizon).
    pub last_change: f64,
}

fn check_forced(state: &LatticeState, c: f64) -> Result<()> {
    if !(c > 0.0) {
        return Err(TodaError::Domain(format!("wave operators need c > 0, got {c}")));
    }
    if state.len() < 3 {
        return Err(TodaError::Dimension(format!("need N >= 3, got {}", state.len())));
    }
    Ok(())
}

/// Runs the forced chain from time `from` to `to` in place.
fn run_forced(
    state: &mut LatticeState,
    stepper: &mut Stepper,
    c: f64,
    dt: f64,
    from: f64,
    to: f64,
) -> Result<()> {
    let steps = ((to - from) / dt).round() as u64;
    let h = (to - from) / steps.max(1) as f64;
    for _ in 0..steps {
        stepper.step(state, &System::Forced { c }, h)?;
    }
    Ok(())
}

/// `W#` with convergence details.
pub fn wave_op_free_limit(state0: &LatticeState, c: f64, opts: &WaveOptions) -> Result<WaveLimit> {
    check_forced(state0, c)?;
    opts.validate()?;
    let mut s = state0.clone();
    let mut stepper = Stepper::default();
    if let Some(horizon) = opts.horizon {
        run_forced(&mut s, &mut stepper, c, opts.dt, 0.0, horizon)?;
        return Ok(WaveLimit { point: free_flow(&s, c, -horizon), horizon, last_change: 0.0 });
    }
    let mut t = opts.t_initial;
    run_forced(&mut s, &mut stepper, c, opts.dt, 0.0, t)?;
    let mut prev = free_flow(&s, c, -t);
    while 2.0 * t <= opts.t_max {
        run_forced(&mut s, &mut stepper, c, opts.dt, t, 2.0 * t)?;
        t *= 2.0;
        let cur = free_flow(&s, c, -t);
        let change = cur.max_abs_diff(&prev);
        if change < opts.tolerance {
            return Ok(WaveLimit { point: cur, horizon: t, last_change: change });
        }
        prev = cur;
    }
    Err(TodaError::NoConvergence(format!(
        "W# did not settle to {} by t = {}",
        opts.tolerance, opts.t_max
    )))
}

/// `W#(q_0, p_0) = lim U#_{-t} ∘ U_t (q_0, p_0)`.
pub fn wave_op_free(state0: &LatticeState, c: f64, opts: &WaveOptions) -> Result<LatticeState> {
    Ok(wave_op_free_limit(state0, c, opts)?.point)
}

fn core(state: &LatticeState) -> LatticeState {
    state.slice(1, state.len() - 1)
}

/// `Ŵ#`: endpoints unchanged, core replaced by its scattering data `(β⁺, α⁺)`.
pub fn wave_op_decoupled_closed(state0: &LatticeState, _c: f64) -> Result<LatticeState> {
    if state0.len() < 3 {
        return Err(TodaError::Dimension(format!("need N >= 3, got {}", state0.len())));
    }
    let n = state0.len();
    let inner = core(state0);
    let mut out = state0.clone();
    if inner.len() == 1 {
        return Ok(out);
    }
    let s = spectral_of(&inner)?;
    out.q[1..n - 1].copy_from_slice(&beta_closed_form(&s, inner.q_sum()));
    out.p[1..n - 1].copy_from_slice(&alpha_from_spectrum(&s));
    Ok(out)
}

/// `r_n(x, y)`: `Σ_j ln(u_n/u_j)` recovered from intercepts `x` and strictly
/// increasing velocities `y`. The values sum to zero.
pub fn r_values(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let m = x.len();
    if y.len() != m || m == 0 {
        return Err(TodaError::Dimension("x and y must be non-empty and equal length".into()));
    }
    if let Some(i) = (1..m).find(|&i| !(y[i] > y[i - 1])) {
        return Err(TodaError::Domain(format!(
            "velocities not strictly increasing at {} and {}",
            i,
            i + 1
        )));
    }
    let g: Vec<f64> = (0..m).map(|n| (0..n).map(|l| (y[n] - y[l]).ln()).sum()).collect();
    let g_mean = g.iter().sum::<f64>() / m as f64;
    let x_mean = x.iter().sum::<f64>() / m as f64;
    let half_m = 0.5 * m as f64;
    Ok((0..m).map(|n| half_m * (x_mean - x[n] - 2.0 * (g[n] - g_mean))).collect())
}

/// `(Ŵ#)⁻¹`: rebuilds the core from `(x, y) = (β⁺, α⁺)` through its
/// spectral data; endpoints pass through.
pub fn wave_op_decoupled_inverse(point: &LatticeState, _c: f64) -> Result<LatticeState> {
    let n = point.len();
    if n < 3 {
        return Err(TodaError::Dimension(format!("need N >= 3, got {n}")));
    }
    let inner = core(point);
    let m = inner.len();
    let r = r_values(&inner.q, &inner.p)?;
    let mut out = point.clone();
    if m == 1 {
        return Ok(out);
    }
    let logs: Vec<f64> = r.iter().map(|r| r / m as f64).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let norm = raw.iter().map(|w| w * w).sum::<f64>().sqrt();
    let lambdas = inner.p.iter().map(|y| -0.5 * y).collect();
    let spectral = SpectralData::new(lambdas, raw.iter().map(|w| w / norm).collect())?;
    let j = jacobi_from_spectral(&spectral)?;
    let vars = FlaschkaVars::new(j.diag, j.offdiag, Boundary::Open)?;
    let rebuilt = from_flaschka(&vars, inner.q_sum())?;
    out.q[1..n - 1].copy_from_slice(&rebuilt.q);
    out.p[1..n - 1].copy_from_slice(&rebuilt.p);
    Ok(out)
}

/// Smallest gap between consecutive core velocities of a `W#` image.
pub fn core_velocity_gap(point: &LatticeState) -> f64 {
    let n = point.len();
    point.p[1..n - 1].windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
}

/// `W = (Ŵ#)⁻¹ ∘ W#`, mapping forced-chain states to decoupled-chain states.
pub fn intertwiner(state0: &LatticeState, c: f64, opts: &WaveOptions) -> Result<LatticeState> {
    let sharp = wave_op_free(state0, c, opts)?;
    wave_op_decoupled_inverse(&sharp, c).map_err(|e| match e {
        TodaError::Domain(msg) => TodaError::Resolution(format!("W# image left the domain: {msg}")),
        other => other,
    })
}

/// `I_1 = ½p_1² + c q_1`, `I_n = p_n`, `I_N = ½p_N² - c q_N`.
pub fn free_integrals(point: &LatticeState, c: f64) -> Vec<f64> {
    let n = point.len();
    let mut out = point.p.clone();
    out[0] = 0.5 * point.p[0].powi(2) + c * point.q[0];
    out[n - 1] = 0.5 * point.p[n - 1].powi(2) - c * point.q[n - 1];
    out
}

/// `J_n = I_n ∘ W#`, conserved along the forced flow.
pub fn conserved_integrals(state: &LatticeState, c: f64, opts: &WaveOptions) -> Result<Vec<f64>> {
    Ok(free_integrals(&wave_op_free(state, c, opts)?, c))
}

/// `S(t) = Σ(a_n - A_n)² + 2Σ b_n²` along a trajectory. With `A` of length
/// `N - 2` the core `2..N-1` is used, with length `N` the whole chain.
pub fn lyapunov_s(traj: &Trajectory, limits: &[f64]) -> Result<Vec<f64>> {
    let n = traj.states.first().map_or(0, |s| s.len());
    let (lo, hi) = if limits.len() == n {
        (0, n)
    } else if n >= 3 && limits.len() == n - 2 {
        (1, n - 1)
    } else {
        return Err(TodaError::Dimension(format!(
            "{} limit values for a chain of {n}",
            limits.len()
        )));
    };
    traj.states
        .iter()
        .map(|s| {
            let vars = to_flaschka(&s.slice(lo, hi), Boundary::Open)?;
            let kinetic: f64 = vars.a.iter().zip(limits).map(|(a, l)| (a - l).powi(2)).sum();
            Ok(kinetic + 2.0 * vars.b.iter().map(|b| b * b).sum::<f64>())
        })
        .collect()
}

/// Limits of the Flaschka diagonal, `A_n = λ_n`.
pub fn flaschka_limits(core_state: &LatticeState) -> Result<Vec<f64>> {
    if core_state.len() == 1 {
        return Ok(vec![-0.5 * core_state.p[0]]);
    }
    Ok(spectral_of(core_state)?.lambdas)
}

/// Exponential decay rate `-d ln y / dt` over the final `window_fraction` of
/// the samples; non-positive values are skipped.
pub fn decay_rate(times: &[f64], values: &[f64], window_fraction: f64) -> Result<f64> {
    let count = ((times.len() as f64) * window_fraction).ceil() as usize;
    let start = times.len().saturating_sub(count);
    let (t, y): (Vec<f64>, Vec<f64>) = times[start..]
        .iter()
        .zip(&values[start..])
        .filter(|(_, v)| **v > 0.0)
        .map(|(t, v)| (*t, v.ln()))
        .unzip();
    Ok(-linear_fit(&t, &y)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_examples() {
        let s = SpectralData::new(vec![1.0, -1.0], vec![0.5f64.sqrt(); 2]).unwrap();
        assert_eq!(alpha_from_spectrum(&s), vec![-2.0, 2.0]);
        let s = SpectralData::new(vec![0.0], vec![1.0]).unwrap();
        assert_eq!(alpha_from_spectrum(&s), vec![0.0]);
    }

    #[test]
    fn beta_single_particle() {
        let s = SpectralData::new(vec![0.3], vec![1.0]).unwrap();
        assert_eq!(beta_closed_form(&s, 2.5), vec![2.5]);
    }

    #[test]
    fn shift_examples() {
        assert_eq!(scattering_shift(&[1.0], &[3.0]).unwrap(), 0.0);
        let v = scattering_shift(&[-2.0, 2.0], &[-2.0, 2.0]).unwrap();
        assert!((v - 2.0 * 16f64.ln()).abs() < 1e-14);
        assert!(scattering_shift(&[2.0, -2.0], &[-2.0, 2.0]).is_err());
        assert!(scattering_shift(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn ballistic_fit_is_exact() {
        let q0 = [0.5, -1.0];
        let p0 = [0.25, 2.0];
        let times: Vec<f64> = (0..40).map(|k| k as f64 * 0.5).collect();
        let states = times
            .iter()
            .map(|t| {
                LatticeState::new(vec![q0[0] + t * p0[0], q0[1] + t * p0[1]], p0.to_vec()).unwrap()
            })
            .collect();
        let traj = Trajectory {
            times,
            states,
            h0: 0.0,
            truncated: false,
            system: System::Free { c: 0.0 },
        };
        let fit = fit_asymptotics(&traj, 0.5).unwrap();
        for i in 0..2 {
            assert!((fit.slopes[i] - p0[i]).abs() < 1e-12);
            assert!((fit.intercepts[i] - q0[i]).abs() < 1e-12);
            assert_eq!(fit.mu[i], None);
        }
        assert!(fit.gamma.unwrap().abs() < 1e-12);
        assert!(fit_asymptotics(&traj, 0.1).is_err());
    }

    #[test]
    fn quadratic_fit_recovers_coefficients() {
        let t: Vec<f64> = (0..30).map(|k| 5.0 + k as f64 / 3.0).collect();
        let y: Vec<f64> = t.iter().map(|t| 1.5 - 0.25 * t + 0.5 * t * t).collect();
        let c = quadratic_fit(&t, &y).unwrap();
        assert!(
            (c[0] - 1.5).abs() < 1e-9 && (c[1] + 0.25).abs() < 1e-10 && (c[2] - 0.5).abs() < 1e-12
        );
    }

    #[test]
    fn decoupled_maps_small_core() {
        let s = LatticeState::new(vec![0.3, 0.1, -0.2], vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(wave_op_decoupled_closed(&s, 1.0).unwrap(), s);
        assert_eq!(wave_op_decoupled_inverse(&s, 1.0).unwrap(), s);
    }

    #[test]
    fn inverse_rejects_unordered_core() {
        let s = LatticeState::new(vec![0.0; 4], vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(wave_op_decoupled_inverse(&s, 1.0), Err(TodaError::Domain(_))));
    }

    #[test]
    fn free_integrals_at_origin() {
        assert_eq!(free_integrals(&LatticeState::zeros(4), 1.0), vec![0.0; 4]);
    }

    #[test]
    fn wave_options_checked() {
        let s = LatticeState::zeros(3);
        assert!(wave_op_free(&s, 0.0, &WaveOptions::default()).is_err());
        let bad = WaveOptions { dt: 0.0, ..WaveOptions::default() };
        assert!(wave_op_free(&s, 1.0, &bad).is_err());
        assert!(wave_op_free(&LatticeState::zeros(2), 1.0, &WaveOptions::default()).is_err());
    }
}
