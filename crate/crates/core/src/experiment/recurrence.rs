//! Recurrence diagnostics: how close the gap and momentum profiles come back
//! to their initial values.

use crate::error::{Result, TodaError};
use crate::integrator::Trajectory;

/// Fraction of the run length without a new closest return after which the
/// motion counts as unravelled.
pub const PATIENCE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceReport {
    pub times: Vec<f64>,
    /// Detrended RMS distance to the initial profile, in units of the RMS of
    /// that profile.
    pub distances: Vec<f64>,
    /// Time of the last closest return before a full patience window passed
    /// without a closer one.
    pub unravel_time: Option<f64>,
    pub patience: f64,
}

/// Profile deviations `(gap_n(t) - gap_n(0), p_n(t) - p_n(0))` per sample.
fn deviations(traj: &Trajectory) -> Vec<Vec<f64>> {
    let profile = |k: usize| -> Vec<f64> {
        let s = &traj.states[k];
        s.q.windows(2).map(|w| w[1] - w[0]).chain(s.p.iter().copied()).collect()
    };
    let first = profile(0);
    (0..traj.len()).map(|k| profile(k).iter().zip(&first).map(|(a, b)| a - b).collect()).collect()
}

pub fn recurrence_metric(traj: &Trajectory) -> Result<RecurrenceReport> {
    recurrence_metric_with(traj, PATIENCE_FRACTION)
}

/// As [`recurrence_metric`] with an explicit patience fraction of the run.
pub fn recurrence_metric_with(
    traj: &Trajectory,
    patience_fraction: f64,
) -> Result<RecurrenceReport> {
    if traj.len() < 3 {
        return Err(TodaError::InvalidInput(format!(
            "recurrence needs at least 3 samples, got {}",
            traj.len()
        )));
    }
    let n = traj.states[0].len();
    if n < 2 {
        return Err(TodaError::Dimension("recurrence needs N >= 2".into()));
    }
    let mut dev = deviations(traj);
    let dim = dev[0].len();

    // Remove a per-component linear drift through the origin, so a uniform
    // ballistic spreading registers as zero.
    let tt: f64 = traj.times.iter().map(|t| t * t).sum();
    if tt > 0.0 {
        for j in 0..dim {
            let slope = traj.times.iter().zip(&dev).map(|(t, d)| t * d[j]).sum::<f64>() / tt;
            for (t, d) in traj.times.iter().zip(dev.iter_mut()) {
                d[j] -= slope * t;
            }
        }
    }

    let s0 = &traj.states[0];
    let scale_sq = s0.q.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>()
        + s0.p.iter().map(|p| p * p).sum::<f64>();
    let scale = (scale_sq / dim as f64).sqrt();
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let distances: Vec<f64> = dev
        .iter()
        .map(|d| (d.iter().map(|x| x * x).sum::<f64>() / dim as f64).sqrt() / scale)
        .collect();

    let t_end = *traj.times.last().unwrap();
    let patience = patience_fraction * t_end;
    let unravel_time = unravel(&traj.times, &distances, patience);
    Ok(RecurrenceReport { times: traj.times.clone(), distances, unravel_time, patience })
}

/// The running minimum starts at the peak of the initial excursion (the
/// largest distance in the first patience window). Each new minimum is a closer return; the first one followed by
/// a full patience window without a closer return is the unravel time.
fn unravel(times: &[f64], distances: &[f64], patience: f64) -> Option<f64> {
    let t0 = times[0];
    let early_max = times
        .iter()
        .zip(distances)
        .take_while(|(t, _)| **t - t0 <= patience)
        .map(|(_, d)| *d)
        .fold(0.0, f64::max);
    if early_max == 0.0 {
        return None;
    }
    let start = distances.iter().position(|d| *d == early_max)?;
    let mut best = distances[start];
    let mut best_t = times[start];
    for (t, d) in times.iter().zip(distances).skip(start + 1) {
        if *t - best_t > patience {
            return Some(best_t);
        }
        if *d < best {
            best = *d;
            best_t = *t;
        }
    }
    None
}
