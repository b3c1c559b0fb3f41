//! The five standard figure runs.

use std::path::PathBuf;

use super::config::{ExperimentConfig, IcMode};
use super::io::{svg_figure, write_atomic, write_series_csv, write_trajectory_csv, Panel};
use super::recurrence::{recurrence_metric, RecurrenceReport};
use super::sample::sample_initial;
use crate::error::{Result, TodaError};
use crate::integrator::{integrate, IntegrationPlan, Trajectory};
use crate::lattice::System;

/// Samples kept per run (plus the initial state).
pub const SAMPLES_PER_RUN: u64 = 2000;

/// Default configuration of figure `which`: `N = 20`, `dt = 1e-4`.
///
/// | fig | c  | gaps            | t_end |
/// |-----|----|-----------------|-------|
/// | 1   | 0  | normal          | 20    |
/// | 2   | 1  | normal          | 20    |
/// | 3   | -1 | +1              | 300   |
/// | 4   | -1 | -1              | 300   |
/// | 5   | -1 | normal          | 300   |
pub fn figure_config(which: u8) -> Result<ExperimentConfig> {
    let (c, ic_mode, t_end) = match which {
        1 => (0.0, IcMode::NormalGaps, 20.0),
        2 => (1.0, IcMode::NormalGaps, 20.0),
        3 => (-1.0, IcMode::UnitGaps, 300.0),
        4 => (-1.0, IcMode::NegativeUnitGaps, 300.0),
        5 => (-1.0, IcMode::NormalGaps, 300.0),
        _ => return Err(TodaError::Config(format!("no figure {which}; expected 1..5"))),
    };
    Ok(ExperimentConfig { c, ic_mode, t_end, ..ExperimentConfig::default() })
}

/// `H_F` for `c = 0`, otherwise `H_c`.
pub fn system_for(c: f64) -> System {
    if c == 0.0 {
        System::Open
    } else {
        System::Forced { c }
    }
}

/// Simulate `config` from its seeded initial state.
pub fn simulate(config: &ExperimentConfig) -> Result<Trajectory> {
    config.validate()?;
    let stride = (config.steps() / SAMPLES_PER_RUN).max(1) as usize;
    let plan = IntegrationPlan::new(system_for(config.c), config.dt, config.t_end, stride)?;
    integrate(&sample_initial(config), &plan)
}

#[derive(Debug, Clone)]
pub struct FigureOutput {
    pub trajectory: Trajectory,
    pub recurrence: Option<RecurrenceReport>,
    pub files: Vec<PathBuf>,
}

/// Endpoint momenta with the linear force removed: `p_1 + ct`, `p_N - ct`.
pub fn endpoint_drifts(traj: &Trajectory, c: f64) -> (Vec<f64>, Vec<f64>) {
    let n = traj.states[0].len();
    let left = traj.times.iter().zip(&traj.states).map(|(t, s)| s.p[0] + c * t).collect();
    let right = traj.times.iter().zip(&traj.states).map(|(t, s)| s.p[n - 1] - c * t).collect();
    (left, right)
}

/// Run figure `which` and write its files into `config.outputs`:
/// `figK_seedS.csv` and `.svg`, plus `_endpoints.csv` for figure 2 and
/// `_recurrence.csv` for figures 3 to 5.
pub fn run_figure(which: u8, config: &ExperimentConfig) -> Result<FigureOutput> {
    figure_config(which)?;
    let traj = simulate(config)?;
    let n = config.n;
    let stem = format!("fig{which}_seed{}", config.seed);
    let dir = &config.outputs;
    let mut files = Vec::new();

    let csv = dir.join(format!("{stem}.csv"));
    write_trajectory_csv(&csv, &traj.times, &traj.states)?;
    files.push(csv);

    let title = format!(
        "Figure {which}: N = {n}, c = {}, dt = {}, seed = {}{}",
        config.c,
        config.dt,
        config.seed,
        if traj.truncated { " (truncated)" } else { "" }
    );
    let q_panel = Panel {
        title: "q_n(t)".into(),
        times: &traj.times,
        series: (0..n).map(|i| traj.q_series(i)).collect(),
    };
    let p_panel = Panel {
        title: "p_n(t)".into(),
        times: &traj.times,
        series: (0..n).map(|i| traj.p_series(i)).collect(),
    };
    let mut panels = vec![q_panel, p_panel];

    if which == 2 {
        let (left, right) = endpoint_drifts(&traj, config.c);
        let path = dir.join(format!("{stem}_endpoints.csv"));
        write_series_csv(
            &path,
            &traj.times,
            &[("p1_plus_ct", left.clone()), (&format!("p{n}_minus_ct"), right.clone())],
        )?;
        files.push(path);
        panels.push(Panel {
            title: "p_1 + ct, p_N - ct".into(),
            times: &traj.times,
            series: vec![left, right],
        });
    }

    let recurrence = if which >= 3 {
        let rep = recurrence_metric(&traj)?;
        let path = dir.join(format!("{stem}_recurrence.csv"));
        write_series_csv(&path, &rep.times, &[("distance", rep.distances.clone())])?;
        files.push(path);
        panels.push(Panel {
            title: "recurrence distance".into(),
            times: &traj.times,
            series: vec![rep.distances.clone()],
        });
        Some(rep)
    } else {
        None
    };

    let svg = dir.join(format!("{stem}.svg"));
    write_atomic(&svg, svg_figure(&title, &panels).as_bytes())?;
    files.push(svg);

    Ok(FigureOutput { trajectory: traj, recurrence, files })
}
