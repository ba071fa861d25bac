use serde::Serialize;

use crate::{Error, Result};

/// One piece of the leader's speed schedule: `v(t) = v_base + slope (t - start)`
/// from `start` until the next segment begins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub start: f64,
    pub v_base: f64,
    pub slope: f64,
}

impl Segment {
    pub fn constant(start: f64, velocity: f64) -> Self {
        Self {
            start,
            v_base: velocity,
            slope: 0.0,
        }
    }

    pub fn ramp(start: f64, v_base: f64, slope: f64) -> Self {
        Self { start, v_base, slope }
    }

    fn velocity(&self, t: f64) -> f64 {
        self.v_base + self.slope * (t - self.start)
    }

    fn distance(&self, t: f64) -> f64 {
        let d = t - self.start;
        self.v_base * d + 0.5 * self.slope * d * d
    }
}

/// Position, velocity and acceleration of the leader.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeaderState {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
}

/// Piecewise constant-or-ramp speed schedule with a continuous velocity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeaderProfile {
    initial_position: f64,
    segments: Vec<Segment>,
    /// Position at the start of each segment.
    #[serde(skip)]
    offsets: Vec<f64>,
}

impl LeaderProfile {
    pub fn new(initial_position: f64, segments: Vec<Segment>) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::InvalidParameter("leader profile has no segments".into()))?;
        if first.start != 0.0 {
            return Err(Error::InvalidParameter(format!(
                "first leader segment must start at 0, got {}",
                first.start
            )));
        }
        if !initial_position.is_finite() {
            return Err(Error::InvalidParameter("leader position is not finite".into()));
        }
        for s in &segments {
            if !(s.start.is_finite() && s.v_base.is_finite() && s.slope.is_finite()) {
                return Err(Error::InvalidParameter("leader segment is not finite".into()));
            }
        }
        let mut offsets = vec![initial_position];
        for pair in segments.windows(2) {
            let (prev, next) = (pair[0], pair[1]);
            if next.start <= prev.start {
                return Err(Error::InvalidParameter(format!(
                    "leader segment starts must increase: {} after {}",
                    next.start, prev.start
                )));
            }
            let end = prev.velocity(next.start);
            if (end - next.v_base).abs() > 1e-9 * (1.0 + end.abs()) {
                return Err(Error::InvalidParameter(format!(
                    "leader velocity jumps from {end} to {} at t = {}",
                    next.v_base, next.start
                )));
            }
            let last = *offsets.last().expect("seeded with the initial position");
            offsets.push(last + prev.distance(next.start));
        }
        Ok(Self {
            initial_position,
            segments,
            offsets,
        })
    }

    /// 10 m/s for 3 s, then +1 m/s² until 22 m/s at 15 s, then constant.
    pub fn eq39() -> Self {
        Self::new(
            0.0,
            vec![
                Segment::constant(0.0, 10.0),
                Segment::ramp(3.0, 10.0, 1.0),
                Segment::constant(15.0, 22.0),
            ],
        )
        .expect("built-in profile is valid")
    }

    /// 10 m/s for 3 s, then +1 m/s² forever.
    pub fn eq40() -> Self {
        Self::new(0.0, vec![Segment::constant(0.0, 10.0), Segment::ramp(3.0, 10.0, 1.0)])
            .expect("built-in profile is valid")
    }

    pub fn constant(velocity: f64) -> Self {
        Self::new(0.0, vec![Segment::constant(0.0, velocity)]).expect("finite velocity")
    }

    pub fn initial_position(&self) -> f64 {
        self.initial_position
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn state(&self, t: f64) -> Result<LeaderState> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "leader time must be non-negative, got {t}"
            )));
        }
        Ok(self.state_unchecked(t))
    }

    pub(crate) fn state_unchecked(&self, t: f64) -> LeaderState {
        let k = self.segments.partition_point(|s| s.start <= t).saturating_sub(1);
        let seg = &self.segments[k];
        LeaderState {
            position: self.offsets[k] + seg.distance(t),
            velocity: seg.velocity(t),
            acceleration: seg.slope,
        }
    }
}

/// Free-function form of [`LeaderProfile::state`].
pub fn leader_state(profile: &LeaderProfile, t: f64) -> Result<LeaderState> {
    profile.state(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eq39_samples() {
        let p = LeaderProfile::eq39();
        let s = p.state(2.0).unwrap();
        assert_eq!((s.position, s.velocity, s.acceleration), (20.0, 10.0, 0.0));

        let s = p.state(10.0).unwrap();
        assert_eq!((s.velocity, s.acceleration), (17.0, 1.0));
        assert_abs_diff_eq!(s.position, 30.0 + 70.0 + 24.5, epsilon = 1e-12);

        let s = p.state(15.0).unwrap();
        assert_eq!((s.velocity, s.acceleration), (22.0, 0.0));
        assert_abs_diff_eq!(s.position, 30.0 + 120.0 + 72.0, epsilon = 1e-12);

        let s = p.state(20.0).unwrap();
        assert_abs_diff_eq!(s.position, 222.0 + 110.0, epsilon = 1e-12);
        assert_eq!(p.state(0.0).unwrap().velocity, 10.0);
        assert!(p.state(-0.1).is_err());
        assert!(p.state(f64::NAN).is_err());
    }

    #[test]
    fn eq40_keeps_ramping() {
        let s = leader_state(&LeaderProfile::eq40(), 100.0).unwrap();
        assert_eq!((s.velocity, s.acceleration), (107.0, 1.0));
        assert_abs_diff_eq!(s.position, 30.0 + 970.0 + 0.5 * 97.0 * 97.0, epsilon = 1e-9);
    }

    #[test]
    fn position_is_the_integral_of_velocity() {
        let p = LeaderProfile::eq39();
        let h = 1e-4;
        let mut x = p.initial_position();
        for k in 0..300_000 {
            // Midpoint rule, exact on each linear piece.
            x += h * p.state((k as f64 + 0.5) * h).unwrap().velocity;
        }
        assert_abs_diff_eq!(x, p.state(30.0).unwrap().position, epsilon = 1e-6);
    }

    #[test]
    fn validation() {
        assert!(LeaderProfile::new(0.0, vec![]).is_err());
        assert!(LeaderProfile::new(0.0, vec![Segment::constant(1.0, 10.0)]).is_err());
        assert!(LeaderProfile::new(
            0.0,
            vec![Segment::constant(0.0, 10.0), Segment::constant(0.0, 10.0)]
        )
        .is_err());
        // A velocity jump is rejected.
        assert!(LeaderProfile::new(
            0.0,
            vec![Segment::constant(0.0, 10.0), Segment::ramp(3.0, 13.0, 1.0)]
        )
        .is_err());
        let p = LeaderProfile::new(5.0, vec![Segment::constant(0.0, 2.0)]).unwrap();
        assert_eq!(p.state(1.5).unwrap().position, 8.0);
    }
}
