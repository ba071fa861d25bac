use super::simulate::Trajectory;
use crate::{Error, Result};

/// Smallest grid time after which every follower keeps `|p̂_i| < delta`.
///
/// The scan runs backwards from the final sample. A trajectory whose last
/// sample still violates the bound has not converged.
pub fn convergence_time(trajectory: &Trajectory, delta: f64) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    let last = trajectory.len().checked_sub(1).ok_or(Error::NotConverged { delta })?;
    let violating = |row: &Vec<[f64; 3]>| row.iter().any(|e| !(e[0].abs() < delta));
    match trajectory.errors.iter().rposition(violating) {
        None => Ok(0.0),
        Some(k) if k == last => Err(Error::NotConverged { delta }),
        Some(k) => Ok(trajectory.times[k]),
    }
}

/// `max_t |p̂_i(t)|` of follower `i` (0-based).
pub fn max_spacing_error(trajectory: &Trajectory, i: usize) -> Result<f64> {
    let n = trajectory.followers();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    Ok(trajectory.position_errors(i).fold(0.0, |m, e| m.max(e.abs())))
}

/// `max_i |p̂_i|` at each sample.
pub fn worst_position_error(trajectory: &Trajectory) -> Vec<f64> {
    trajectory
        .errors
        .iter()
        .map(|row| row.iter().fold(0.0, |m: f64, e| m.max(e[0].abs())))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::leader::LeaderProfile;

    fn synthetic(pe: &[&[f64]]) -> Trajectory {
        let n = pe[0].len();
        let len = pe.len();
        let leader = LeaderProfile::constant(1.0);
        Trajectory {
            dt: 0.5,
            spacing: 20.0,
            times: (0..len).map(|k| k as f64 * 0.5).collect(),
            leader: (0..len).map(|k| leader.state(k as f64 * 0.5).unwrap()).collect(),
            states: vec![vec![[0.0; 3]; n]; len],
            errors: pe.iter().map(|row| row.iter().map(|&p| [p, 0.0, 0.0]).collect()).collect(),
            inputs: vec![vec![0.0; n]; len],
            torque: None,
            sliding: None,
        }
    }

    #[test]
    fn zero_trajectory() {
        let t = synthetic(&[&[0.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(convergence_time(&t, 0.1).unwrap(), 0.0);
        assert_eq!(max_spacing_error(&t, 1).unwrap(), 0.0);
        assert!(max_spacing_error(&t, 2).is_err());
    }

    #[test]
    fn last_violation_sets_the_time() {
        let t = synthetic(&[&[0.5, 0.0], &[0.05, -0.2], &[0.0, 0.05], &[0.1, 0.0], &[0.0, 0.0]]);
        // The bound is strict, so |p̂| = delta still violates.
        assert_eq!(convergence_time(&t, 0.1).unwrap(), 1.5);
        assert_eq!(convergence_time(&t, 0.3).unwrap(), 0.0);
        assert_eq!(max_spacing_error(&t, 0).unwrap(), 0.5);
        assert_eq!(max_spacing_error(&t, 1).unwrap(), 0.2);
        assert_eq!(worst_position_error(&t), vec![0.5, 0.2, 0.05, 0.1, 0.0]);
    }

    #[test]
    fn violation_at_the_end_is_not_converged() {
        let t = synthetic(&[&[0.0], &[0.0], &[0.2]]);
        assert_eq!(convergence_time(&t, 0.1), Err(Error::NotConverged { delta: 0.1 }));
        let t = synthetic(&[&[f64::NAN], &[0.0]]);
        assert_eq!(convergence_time(&t, 0.1).unwrap(), 0.0);
        assert!(convergence_time(&t, 0.0).is_err());
    }
}
