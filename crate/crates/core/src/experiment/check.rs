//! Self-check suite: runs the invariants of every module at the configured
//! size and records each outcome. Failures and precondition errors become
//! report entries; the suite itself never aborts.

use std::time::Instant;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::sample::sample_initial;
use crate::actionangle::{
    action_angle_decoupled, bracket_matrix, canonical_defect, fd_jacobian, hamiltonian_in_actions,
};
use crate::elliptic::{cnoidal_residual, CnoidalParams, WaveDirection};
use crate::error::Result;
use crate::integrator::{decoupled_flow, integrate, IntegrationPlan};
use crate::lattice::{
    energy_decoupled, from_flaschka, to_flaschka, Boundary, LatticeState, System,
};
use crate::laxpair::{lax_residual, spectral_deviation, LaxKind};
use crate::scattering::{
    fit_endpoint_separation, intertwiner, wave_op_decoupled_closed, wave_op_decoupled_inverse,
    WaveOptions,
};
use crate::spectral::{eig_tridiag, eigenvalues, jacobi_from_spectral, JacobiMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// A precondition was violated; `detail` carries the error.
    Error,
    /// Not applicable to the configured coupling.
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckEntry {
    pub name: &'static str,
    pub status: Status,
    pub value: Option<f64>,
    pub threshold: Option<f64>,
    pub detail: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub n: usize,
    pub c: f64,
    pub dt: f64,
    pub seed: u64,
    pub all_passed: bool,
    pub entries: Vec<CheckEntry>,
}

impl CheckReport {
    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

/// Deliberate faults for testing the suite itself.
#[derive(Debug, Clone, Copy, Default)]
pub struct Faults {
    /// Added to the reference spectrum of the isospectrality check.
    pub eigenvalue_perturbation: f64,
}

/// The configuration `check` uses when none is given: `N = 6`, `c = 1`,
/// `dt = 1e-3`.
pub fn default_check_config() -> ExperimentConfig {
    ExperimentConfig { n: 6, c: 1.0, dt: 1e-3, t_end: 20.0, ..ExperimentConfig::default() }
}

enum Outcome {
    Measured { value: f64, threshold: f64, detail: String },
    Skip(String),
}

fn measured(value: f64, threshold: f64, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome::Measured { value, threshold, detail: detail.into() })
}

fn record(entries: &mut Vec<CheckEntry>, name: &'static str, f: impl FnOnce() -> Result<Outcome>) {
    let start = Instant::now();
    let outcome = f();
    let seconds = start.elapsed().as_secs_f64();
    let entry = match outcome {
        Ok(Outcome::Measured { value, threshold, detail }) => CheckEntry {
            name,
            status: if value <= threshold { Status::Pass } else { Status::Fail },
            value: Some(value),
            threshold: Some(threshold),
            detail,
            seconds,
        },
        Ok(Outcome::Skip(why)) => CheckEntry {
            name,
            status: Status::Skipped,
            value: None,
            threshold: None,
            detail: why,
            seconds,
        },
        Err(e) => CheckEntry {
            name,
            status: Status::Error,
            value: None,
            threshold: None,
            detail: e.to_string(),
            seconds,
        },
    };
    entries.push(entry);
}

pub fn check_suite(config: &ExperimentConfig) -> CheckReport {
    check_suite_with(config, Faults::default())
}

pub fn check_suite_with(config: &ExperimentConfig, faults: Faults) -> CheckReport {
    let mut entries = Vec::new();
    let (n, c, dt) = (config.n, config.c, config.dt);
    let state = sample_initial(config);
    let horizon = config.t_end.min(20.0);

    record(&mut entries, "config", || {
        config.validate()?;
        measured(0.0, 0.0, format!("N = {n}, c = {c}, dt = {dt}"))
    });

    record(&mut entries, "energy_conservation", || {
        let plan = IntegrationPlan::new(System::Open, dt, horizon, 10)?;
        let traj = integrate(&state, &plan)?;
        let worst = traj
            .states
            .iter()
            .map(|s| crate::lattice::energy_open(s).map(|e| (e - traj.h0).abs()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        measured(
            worst,
            100.0 * dt * dt * (1.0 + traj.h0.abs()),
            format!("open chain to t = {horizon}"),
        )
    });

    record(&mut entries, "flaschka_round_trip", || {
        let back = from_flaschka(&to_flaschka(&state, Boundary::Open)?, state.q_sum())?;
        measured(back.max_abs_diff(&state), 1e-12, "")
    });

    record(&mut entries, "spectral_round_trip", || {
        let j = JacobiMatrix::from_state(&state)?;
        let back = jacobi_from_spectral(&eig_tridiag(&j)?)?;
        let err = j
            .diag
            .iter()
            .zip(&back.diag)
            .chain(j.offdiag.iter().zip(&back.offdiag))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        measured(err, 1e-10, "")
    });

    record(&mut entries, "isospectrality", || {
        let plan = IntegrationPlan::new(System::Open, dt, horizon, 100)?;
        let traj = integrate(&state, &plan)?;
        let mut reference = eigenvalues(&JacobiMatrix::from_state(&state)?)?;
        reference[0] += faults.eigenvalue_perturbation;
        let drift = spectral_deviation(&traj, &LaxKind::Open, &reference)?;
        measured(drift, 1e-5 * (dt / 1e-3).powi(2).max(1.0), format!("open chain to t = {horizon}"))
    });

    record(&mut entries, "lax_equation", || {
        let stride = ((2e-3 / dt).round() as usize).max(1);
        let plan = IntegrationPlan::new(System::Open, dt, 2.0, stride)?;
        let res = lax_residual(&integrate(&state, &plan)?, &LaxKind::Open)?;
        let worst = res.iter().map(|(_, r)| *r).fold(0.0, f64::max);
        measured(worst, 1e-3, "open pair, central differences at spacing max(dt, 2e-3)")
    });

    record(&mut entries, "wave_operator_round_trip", || {
        if n < 3 {
            return Ok(Outcome::Skip("needs N >= 3".into()));
        }
        let there = wave_op_decoupled_closed(&state, c)?;
        let back = wave_op_decoupled_inverse(&there, c)?;
        measured(back.max_abs_diff(&state), 1e-8, "")
    });

    record(&mut entries, "forced_splitting", || {
        if !(c > 0.0) || n < 2 {
            return Ok(Outcome::Skip("needs c > 0".into()));
        }
        let plan = IntegrationPlan::new(System::Forced { c }, dt, 15.0, 10)?;
        let coeffs = fit_endpoint_separation(&integrate(&state, &plan)?, 5.0, 15.0)?;
        measured((coeffs[2] - 0.5 * c).abs(), 0.1 * c, format!("leading coefficient {}", coeffs[2]))
    });

    record(&mut entries, "intertwining", || {
        if !(c > 0.0) || n < 3 {
            return Ok(Outcome::Skip("needs c > 0 and N >= 3".into()));
        }
        let opts = WaveOptions::default();
        let x = sample_initial(&ExperimentConfig { n: 4, ..config.clone() });
        let w = intertwiner(&x, c, &opts)?;
        let plan = IntegrationPlan::new(System::Forced { c }, 1e-4, 1.0, 10_000)?;
        let ut = integrate(&x, &plan)?.last().clone();
        let defect = decoupled_flow(&w, c, 1.0)?.max_abs_diff(&intertwiner(&ut, c, &opts)?);
        measured(defect, 1e-5, "N = 4, t = 1")
    });

    let m = n.clamp(3, 6);
    let small = sample_initial(&ExperimentConfig { n: m, ..config.clone() });
    record(&mut entries, "action_angle_energy", || {
        let coords = action_angle_decoupled(&small, c)?;
        let gap = (hamiltonian_in_actions(&coords) - energy_decoupled(&small, c)?).abs();
        measured(gap, 1e-10, format!("N = {m}"))
    });

    record(&mut entries, "action_angle_brackets", || {
        let obs = |s: &LatticeState| Ok(action_angle_decoupled(s, c)?.to_vec());
        let defect = canonical_defect(&bracket_matrix(&fd_jacobian(obs, &small, 1e-5)?));
        measured(defect, 5e-4, format!("N = {m}, FD step 1e-5"))
    });

    record(&mut entries, "cnoidal_wave", || {
        let params = CnoidalParams::new(1.0, 1.0, 0.3, 6.0, WaveDirection::Plus)?;
        let grid: Vec<f64> = (0..20).map(|k| 0.37 * k as f64).collect();
        measured(
            cnoidal_residual(&params, -6..6, &grid, 1e-3)?,
            1e-7,
            "a = b = 1, k = 0.3, wavelength 6",
        )
    });

    let all_passed = entries.iter().all(|e| matches!(e.status, Status::Pass | Status::Skipped));
    CheckReport { n, c, dt, seed: config.seed, all_passed, entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_passes() {
        let rep = check_suite(&default_check_config());
        assert!(rep.all_passed, "{}", rep.to_json());
    }

    #[test]
    fn perturbed_spectrum_fails_isospectrality() {
        let faults = Faults { eigenvalue_perturbation: 1e-3 };
        let rep = check_suite_with(&default_check_config(), faults);
        assert_eq!(rep.entry("isospectrality").unwrap().status, Status::Fail);
        assert!(!rep.all_passed);
    }

    #[test]
    fn zero_coupling_records_error() {
        let cfg = ExperimentConfig { c: 0.0, ..default_check_config() };
        let rep = check_suite(&cfg);
        let e = rep.entry("action_angle_brackets").unwrap();
        assert_eq!(e.status, Status::Error);
        assert!(e.detail.contains("c ≠ 0"));
        assert!(rep.to_json().contains("\"error\""));
    }
}
