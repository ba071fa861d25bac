//! CSV and JSON writers.

use std::path::Path;

use serde::Serialize;

use platoon_core::sim::Trajectory;
use platoon_core::{Gains, StabilityVerdict};

use crate::error::CliError;
use crate::schema::ScenarioFile;

/// Twelve significant digits; plain decimals for ordinary magnitudes and
/// scientific notation outside them. Negative zero prints as `0`.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    if (-4..12).contains(&magnitude) {
        let decimals = (11 - magnitude).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

fn write_error(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Write {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// `t`, leader `p0 v0 a0`, each follower's `p v a`, then each follower's
/// `p_hat v_hat a_hat u`, then torque and sliding columns when present.
pub fn trajectory_header(trajectory: &Trajectory) -> Vec<String> {
    let n = trajectory.followers();
    let mut h = vec!["t".to_string(), "p0".into(), "v0".into(), "a0".into()];
    for i in 1..=n {
        h.extend([format!("p{i}"), format!("v{i}"), format!("a{i}")]);
    }
    for i in 1..=n {
        h.extend([format!("p_hat{i}"), format!("v_hat{i}"), format!("a_hat{i}"), format!("u{i}")]);
    }
    if trajectory.torque.is_some() {
        h.extend((1..=n).map(|i| format!("torque{i}")));
    }
    if trajectory.sliding.is_some() {
        h.extend((1..=n).map(|i| format!("s{i}")));
    }
    h
}

pub fn write_trajectory(path: &Path, trajectory: &Trajectory) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(write_error(path))?;
    w.write_record(trajectory_header(trajectory)).map_err(write_error(path))?;
    for k in 0..trajectory.len() {
        let l = &trajectory.leader[k];
        let mut row = vec![fmt12(trajectory.times[k]), fmt12(l.position), fmt12(l.velocity), fmt12(l.acceleration)];
        row.extend(trajectory.states[k].iter().flatten().map(|&x| fmt12(x)));
        for (e, u) in trajectory.errors[k].iter().zip(&trajectory.inputs[k]) {
            row.extend([fmt12(e[0]), fmt12(e[1]), fmt12(e[2]), fmt12(*u)]);
        }
        if let Some(torque) = &trajectory.torque {
            row.extend(torque[k].iter().map(|&x| fmt12(x)));
        }
        if let Some(sliding) = &trajectory.sliding {
            row.extend(sliding[k].iter().map(|&x| fmt12(x)));
        }
        w.write_record(&row).map_err(write_error(path))?;
    }
    w.flush().map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}

/// Long format: one `(t, follower, p_hat)` row per sample and follower.
pub fn write_spacing_errors(path: &Path, trajectory: &Trajectory) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(write_error(path))?;
    w.write_record(["t", "follower", "p_hat"]).map_err(write_error(path))?;
    for (t, row) in trajectory.times.iter().zip(&trajectory.errors) {
        for (i, e) in row.iter().enumerate() {
            w.write_record([fmt12(*t), (i + 1).to_string(), fmt12(e[0])])
                .map_err(write_error(path))?;
        }
    }
    w.flush().map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}

#[derive(Debug, Serialize)]
pub struct Timings {
    pub setup_ms: f64,
    pub simulate_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub scenario: ScenarioFile,
    /// `None` when the topology has a cycle.
    pub stability: Option<StabilityVerdict>,
    pub gains: Vec<Gains>,
    pub synthesized: bool,
    pub delta: f64,
    /// `None` when the run has not converged within the horizon.
    pub convergence_time: Option<f64>,
    pub max_spacing_error: Vec<f64>,
    /// `[re, im]` of the closed-loop matrix built from the design lags.
    pub eigenvalues: Vec<[f64; 2]>,
    pub timings: Timings,
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: e.into(),
    })?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Write {
        path: path.to_path_buf(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::fmt12;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt12(0.0), "0");
        assert_eq!(fmt12(-0.0), "0");
        assert_eq!(fmt12(1.0), "1");
        assert_eq!(fmt12(20.5), "20.5");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(-2.0 / 3.0 * 100.0), "-66.6666666667");
        assert_eq!(fmt12(123456789012345.0), "1.23456789012e14");
        assert_eq!(fmt12(1.5e-7), "1.50000000000e-7");
        assert_eq!(fmt12(0.00123456789012345), "0.00123456789012");
        assert_eq!(fmt12(f64::NAN), "NaN");
    }
}
