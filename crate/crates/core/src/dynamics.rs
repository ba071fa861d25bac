//! Vehicle models.
//!
//! The linear model is the usual third-order longitudinal model with a
//! first-order powertrain lag: `p' = v`, `v' = a`, `tau a' + a = u`. The
//! nonlinear model replaces acceleration with the actual driving torque.

use nalgebra::{DMatrix, Matrix3, Vector3};
use serde::Serialize;

use crate::control::GainSet;
use crate::graph::Topology;
use crate::{Error, Result};

/// Gravitational acceleration, m/s².
pub const GRAVITY: f64 = 9.81;

/// Which of position, velocity and acceleration each vehicle can measure
/// (the diagonal of the output matrix `C`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct OutputMask {
    pub position: bool,
    pub velocity: bool,
    pub acceleration: bool,
}

impl OutputMask {
    pub const FULL: OutputMask = OutputMask {
        position: true,
        velocity: true,
        acceleration: true,
    };

    pub fn new(position: bool, velocity: bool, acceleration: bool) -> Self {
        Self {
            position,
            velocity,
            acceleration,
        }
    }

    /// `(c_p, c_v, c_a)` as reals.
    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(
            f64::from(u8::from(self.position)),
            f64::from(u8::from(self.velocity)),
            f64::from(u8::from(self.acceleration)),
        )
    }

    pub fn is_full(&self) -> bool {
        self.position && self.velocity && self.acceleration
    }
}

impl Default for OutputMask {
    fn default() -> Self {
        Self::FULL
    }
}

/// Physical parameters of the nonlinear longitudinal model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chassis {
    /// kg
    pub mass: f64,
    /// Powertrain time lag, s.
    pub tau: f64,
    /// Driveline efficiency, in (0, 1].
    pub efficiency: f64,
    /// Aerodynamic drag coefficient, kg/m.
    pub drag: f64,
    /// m
    pub wheel_radius: f64,
    /// Rolling resistance coefficient.
    pub rolling: f64,
}

impl Chassis {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass", self.mass),
            ("tau", self.tau),
            ("efficiency", self.efficiency),
            ("drag", self.drag),
            ("wheel_radius", self.wheel_radius),
            ("rolling", self.rolling),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.efficiency > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "efficiency must be at most 1, got {}",
                self.efficiency
            )));
        }
        Ok(())
    }

    /// `v'` from the force balance: traction minus drag minus rolling resistance.
    pub fn acceleration(&self, velocity: f64, torque: f64) -> f64 {
        (self.efficiency / self.wheel_radius * torque
            - self.drag * velocity * velocity
            - self.mass * GRAVITY * self.rolling)
            / self.mass
    }

    /// `a'` obtained by differentiating the force balance along a trajectory.
    pub fn jerk(&self, velocity: f64, acceleration: f64, torque_rate: f64) -> f64 {
        (self.efficiency / self.wheel_radius * torque_rate
            - 2.0 * self.drag * velocity * acceleration)
            / self.mass
    }

    /// Torque that holds acceleration `a` at speed `v`.
    pub fn torque_for(&self, velocity: f64, acceleration: f64) -> f64 {
        self.wheel_radius / self.efficiency
            * (self.mass * acceleration
                + self.drag * velocity * velocity
                + self.mass * GRAVITY * self.rolling)
    }

    /// `(p', v', T')` for the state `(p, v, T)` under torque command `torque_cmd`.
    pub fn derivative(&self, state: &NonlinearState, torque_cmd: f64) -> NonlinearState {
        NonlinearState {
            position: state.velocity,
            velocity: self.acceleration(state.velocity, state.torque),
            torque: (torque_cmd - state.torque) / self.tau,
        }
    }
}

/// True plant parameters together with the estimates the controller uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlinearModel {
    pub actual: Chassis,
    pub estimated: Chassis,
}

/// `(p, v, T)` of one vehicle on the nonlinear plant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NonlinearState {
    pub position: f64,
    pub velocity: f64,
    pub torque: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VehicleParams {
    /// Inertial time lag of the powertrain, s.
    pub tau: f64,
    pub nonlinear: Option<NonlinearModel>,
}

impl VehicleParams {
    pub fn linear(tau: f64) -> Self {
        Self {
            tau,
            nonlinear: None,
        }
    }

    pub fn nonlinear(actual: Chassis, estimated: Chassis) -> Self {
        Self {
            tau: actual.tau,
            nonlinear: Some(NonlinearModel { actual, estimated }),
        }
    }

    /// Follower `index` (1-based) of the reference nonlinear platoon, whose
    /// true parameters grow linearly with the index and whose estimates are
    /// shared by every vehicle.
    pub fn reference_nonlinear(index: usize) -> Self {
        let i = index as f64;
        let actual = Chassis {
            mass: 1500.0 + 100.0 * i,
            tau: 0.30 + 0.02 * i,
            efficiency: 0.80 + 0.01 * i,
            drag: 0.40 + 0.01 * i,
            wheel_radius: 0.250 + 0.005 * i,
            rolling: 0.015 + 0.001 * i,
        };
        Self::nonlinear(actual, Self::reference_estimate())
    }

    pub fn reference_estimate() -> Chassis {
        Chassis {
            mass: 1700.0,
            tau: 0.34,
            efficiency: 0.82,
            drag: 0.42,
            wheel_radius: 0.26,
            rolling: 0.017,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if let Some(model) = &self.nonlinear {
            model.actual.validate()?;
            model.estimated.validate()?;
            if model.actual.tau != self.tau {
                return Err(Error::InvalidParameter(format!(
                    "tau {} disagrees with the chassis lag {}",
                    self.tau, model.actual.tau
                )));
            }
        }
        Ok(())
    }

    /// The lag the controller designer works with: the estimate on the
    /// nonlinear plant, the true lag otherwise.
    pub fn design_tau(&self) -> f64 {
        self.nonlinear.map_or(self.tau, |m| m.estimated.tau)
    }

    pub fn linear_matrices(&self) -> Result<(Matrix3<f64>, Vector3<f64>)> {
        linear_matrices(self.tau)
    }
}

/// `(A, B)` of the linear vehicle model with lag `tau`.
pub fn linear_matrices(tau: f64) -> Result<(Matrix3<f64>, Vector3<f64>)> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    #[rustfmt::skip]
    let a = Matrix3::new(
        0.0, 1.0, 0.0,
        0.0, 0.0, 1.0,
        0.0, 0.0, -1.0 / tau,
    );
    Ok((a, Vector3::new(0.0, 0.0, 1.0 / tau)))
}

/// The closed-loop tracking-error dynamics of the whole platoon.
///
/// The state is ordered as three stacked blocks `(p̂_1..p̂_N, v̂_1..v̂_N,
/// â_1..â_N)`, not per vehicle. With `t_i = k_i ∘ c / tau_i` the matrix is
///
/// ```text
/// [    0       I        0       ]
/// [    0       0        I       ]
/// [ -T_p G  -T_v G  -Δ - T_a G  ]
/// ```
pub fn closed_loop_matrix(taus: &[f64], gains: &GainSet, topology: &Topology) -> Result<DMatrix<f64>> {
    let n = topology.len();
    if taus.len() != n || gains.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} lags and {} gain vectors for {n} followers",
            taus.len(),
            gains.len()
        )));
    }
    for &tau in taus {
        linear_matrices(tau)?;
    }
    let g = topology.grounded_matrix();
    let mask = gains.mask.as_vector();
    let mut m = DMatrix::zeros(3 * n, 3 * n);
    for i in 0..n {
        m[(i, n + i)] = 1.0;
        m[(n + i, 2 * n + i)] = 1.0;
        let t = gains.gains[i].as_vector().component_mul(&mask) / taus[i];
        for j in 0..n {
            let gij = g[(i, j)];
            m[(2 * n + i, j)] = -t[0] * gij;
            m[(2 * n + i, n + j)] = -t[1] * gij;
            m[(2 * n + i, 2 * n + j)] = -t[2] * gij;
        }
        m[(2 * n + i, 2 * n + i)] -= 1.0 / taus[i];
    }
    Ok(m)
}

/// `(p', v', T')` for one vehicle on the nonlinear plant.
pub fn nonlinear_derivative(
    state: &NonlinearState,
    torque_cmd: f64,
    params: &VehicleParams,
) -> Result<NonlinearState> {
    let model = params
        .nonlinear
        .ok_or_else(|| Error::InvalidParameter("vehicle has no nonlinear parameters".into()))?;
    Ok(model.actual.derivative(state, torque_cmd))
}

/// Desired torque that makes the nonlinear plant behave like the linear lag
/// model `tau a' + a = u` when the estimates are exact.
pub fn feedback_linearization(u: f64, velocity: f64, acceleration: f64, est: &Chassis) -> f64 {
    est.wheel_radius / est.efficiency
        * (est.mass * u
            + est.mass * est.rolling * GRAVITY
            + 2.0 * est.drag * est.tau * velocity * acceleration
            + est.drag * velocity * velocity)
}

/// Integral sliding-mode correction `u - k_s sign(s)`, with `sign(0) = 0`.
pub fn sliding_mode_augment(u: f64, sliding: f64, k_s: f64) -> f64 {
    u - k_s * signum0(sliding)
}

pub(crate) fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::Gains;
    use crate::graph::TopologyKind;
    use approx::assert_abs_diff_eq;

    #[test]
    fn linear_matrices_follow_the_lag() {
        let (a, b) = linear_matrices(0.40).unwrap();
        assert_abs_diff_eq!(a[(2, 2)], -2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b[2], 2.5, epsilon = 1e-15);
        assert_eq!(a[(0, 1)], 1.0);
        assert_eq!(a[(1, 2)], 1.0);

        let (a, b) = linear_matrices(1.0).unwrap();
        assert_eq!((a[(2, 2)], b[2]), (-1.0, 1.0));

        let (a, _) = linear_matrices(0.29).unwrap();
        assert_abs_diff_eq!(a[(2, 2)], -3.4483, epsilon = 1e-4);

        assert!(linear_matrices(0.0).is_err());
        assert!(linear_matrices(-0.3).is_err());
        assert!(VehicleParams::linear(-1.0).linear_matrices().is_err());
    }

    #[test]
    fn closed_loop_single_vehicle() {
        let gains = GainSet::new(vec![Gains::new(1.0, 1.0, 1.0)], OutputMask::FULL);
        let t = Topology::standard(TopologyKind::Pf, 1).unwrap();
        let m = closed_loop_matrix(&[1.0], &gains, &t).unwrap();
        assert_eq!(m.row(2).iter().copied().collect::<Vec<_>>(), vec![-1.0, -1.0, -2.0]);
        assert_eq!(m.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn closed_loop_top_blocks_are_integrators() {
        let t = Topology::standard(TopologyKind::Tplf, 4).unwrap();
        let gains = GainSet::new(vec![Gains::new(2.0, 3.0, 1.0); 4], OutputMask::FULL);
        let m = closed_loop_matrix(&[0.3, 0.4, 0.5, 0.6], &gains, &t).unwrap();
        let mut top = DMatrix::zeros(8, 8);
        top.view_mut((0, 4), (4, 4)).fill_with_identity();
        assert_eq!(m.view((0, 0), (8, 8)), top);
        assert!(closed_loop_matrix(&[0.3, 0.4], &gains, &t).is_err());
        assert!(closed_loop_matrix(&[0.3, 0.4, -0.5, 0.6], &gains, &t).is_err());
    }

    #[test]
    fn nonlinear_model_balances() {
        let p = VehicleParams::reference_nonlinear(1);
        let chassis = p.nonlinear.unwrap().actual;
        assert_eq!(chassis.mass, 1600.0);
        assert_abs_diff_eq!(chassis.tau, 0.32, epsilon = 1e-15);
        assert_abs_diff_eq!(chassis.efficiency, 0.81, epsilon = 1e-15);
        assert_abs_diff_eq!(chassis.drag, 0.41, epsilon = 1e-15);
        assert_abs_diff_eq!(chassis.wheel_radius, 0.255, epsilon = 1e-15);
        assert_abs_diff_eq!(chassis.rolling, 0.016, epsilon = 1e-15);

        // Rolling resistance exactly cancelled at standstill.
        let hold = chassis.wheel_radius / chassis.efficiency * chassis.mass * GRAVITY * chassis.rolling;
        let s = NonlinearState { position: 0.0, velocity: 0.0, torque: hold };
        assert_abs_diff_eq!(nonlinear_derivative(&s, hold, &p).unwrap().velocity, 0.0, epsilon = 1e-12);

        let s = NonlinearState { position: 5.0, velocity: 20.0, torque: 0.0 };
        let d = nonlinear_derivative(&s, 0.0, &p).unwrap();
        let expected = (-0.41 * 400.0 - 1600.0 * 9.81 * 0.016) / 1600.0;
        assert_abs_diff_eq!(d.velocity, expected, epsilon = 1e-12);
        assert_eq!(d.position, 20.0);

        let s = NonlinearState { position: 0.0, velocity: 10.0, torque: 300.0 };
        assert_eq!(nonlinear_derivative(&s, 300.0, &p).unwrap().torque, 0.0);

        assert!(nonlinear_derivative(&s, 0.0, &VehicleParams::linear(0.4)).is_err());
    }

    #[test]
    fn feedback_linearization_terms() {
        let est = VehicleParams::reference_estimate();
        let rolling_only = 0.26 / 0.82 * 1700.0 * 0.017 * GRAVITY;
        assert_abs_diff_eq!(feedback_linearization(0.0, 0.0, 0.0, &est), rolling_only, epsilon = 1e-9);

        let value = feedback_linearization(1.0, 10.0, 0.0, &est);
        let by_hand = 0.26 / 0.82 * (1700.0 * 1.0 + 1700.0 * 0.017 * 9.81 + 0.42 * 100.0);
        assert_abs_diff_eq!(value, by_hand, epsilon = 1e-9);

        let step = feedback_linearization(2.0, 10.0, 0.0, &est) - value;
        assert_abs_diff_eq!(step, 0.26 / 0.82 * 1700.0, epsilon = 1e-9);
    }

    #[test]
    fn sliding_mode_sign_convention() {
        assert_eq!(sliding_mode_augment(1.0, 0.0, 0.3), 1.0);
        assert_abs_diff_eq!(sliding_mode_augment(1.0, 0.5, 0.3), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(sliding_mode_augment(1.0, -0.5, 0.3), 1.3, epsilon = 1e-15);
    }

    #[test]
    fn exact_linearization_reduces_to_lag_model() {
        // With exact estimates the torque law yields tau a' + a = u at any state.
        let p = VehicleParams::reference_nonlinear(3);
        let chassis = p.nonlinear.unwrap().actual;
        for &(v, a, u) in &[(20.0, 0.0, 0.0), (15.0, 0.4, 1.0), (25.0, -0.7, -0.2)] {
            let torque = chassis.torque_for(v, a);
            assert_abs_diff_eq!(chassis.acceleration(v, torque), a, epsilon = 1e-12);
            let cmd = feedback_linearization(u, v, a, &chassis);
            let state = NonlinearState { position: 0.0, velocity: v, torque };
            let d = chassis.derivative(&state, cmd);
            let jerk = chassis.jerk(v, a, d.torque);
            assert_abs_diff_eq!(chassis.tau * jerk + a, u, epsilon = 1e-10);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(VehicleParams::reference_nonlinear(7).validate().is_ok());
        let mut bad = VehicleParams::reference_nonlinear(1);
        bad.nonlinear.as_mut().unwrap().estimated.efficiency = 1.2;
        assert!(bad.validate().is_err());
        let mut bad = VehicleParams::reference_nonlinear(1);
        bad.nonlinear.as_mut().unwrap().actual.mass = 0.0;
        assert!(bad.validate().is_err());
        assert!(VehicleParams::linear(0.0).validate().is_err());
        assert!(VehicleParams::linear(f64::NAN).validate().is_err());
    }
}
