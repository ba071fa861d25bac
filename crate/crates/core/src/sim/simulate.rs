use nalgebra::Vector3;

use super::integrate::Stepper;
use super::leader::LeaderState;
use super::scenario::{Plant, Scenario};
use crate::control::{local_input, GainSet};
use crate::dynamics::{feedback_linearization, signum0, NonlinearModel};
use crate::{Error, Result};

/// Sampled run of a scenario on the uniform grid `t_k = k dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dt: f64,
    pub spacing: f64,
    pub times: Vec<f64>,
    pub leader: Vec<LeaderState>,
    /// `[k][i] = (p, v, a)` of follower `i`.
    pub states: Vec<Vec<[f64; 3]>>,
    /// `[k][i] = (p̂, v̂, â)` of follower `i`.
    pub errors: Vec<Vec<[f64; 3]>>,
    /// `[k][i]`, the acceleration command actually applied.
    pub inputs: Vec<Vec<f64>>,
    /// Driving torque, nonlinear plant only.
    pub torque: Option<Vec<Vec<f64>>>,
    /// Sliding variable, robust layer only.
    pub sliding: Option<Vec<Vec<f64>>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn followers(&self) -> usize {
        self.states.first().map_or(0, Vec::len)
    }

    pub fn final_errors(&self) -> &[[f64; 3]] {
        self.errors.last().map_or(&[], Vec::as_slice)
    }

    /// `p̂_i(t_k)` for every sample.
    pub fn position_errors(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.errors.iter().map(move |row| row[i][0])
    }
}

/// Runs the scenario after validating it and resolving its gains.
pub fn simulate(scenario: &Scenario) -> Result<Trajectory> {
    scenario.validate()?;
    let gains = scenario.resolve_gains()?;
    simulate_with_gains(scenario, &gains)
}

/// Runs the scenario with gains already resolved.
pub fn simulate_with_gains(scenario: &Scenario, gains: &GainSet) -> Result<Trajectory> {
    scenario.validate()?;
    if gains.len() != scenario.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} gain vectors for {} followers",
            gains.len(),
            scenario.len()
        )));
    }
    gains.validate()?;
    Engine::new(scenario, gains).run()
}

struct Engine<'a> {
    scenario: &'a Scenario,
    gains: &'a GainSet,
    n: usize,
    models: Vec<Option<NonlinearModel>>,
    /// `sign(s_i)` held over the current step.
    signs: Vec<f64>,
    errors: Vec<Vector3<f64>>,
    nominal: Vec<f64>,
}

impl<'a> Engine<'a> {
    fn new(scenario: &'a Scenario, gains: &'a GainSet) -> Self {
        let n = scenario.len();
        let models = match scenario.plant {
            Plant::Linear => vec![None; n],
            Plant::Nonlinear => scenario.vehicles.iter().map(|v| v.nonlinear).collect(),
        };
        Self {
            scenario,
            gains,
            n,
            models,
            signs: vec![0.0; n],
            errors: vec![Vector3::zeros(); n],
            nominal: vec![0.0; n],
        }
    }

    fn dim(&self) -> usize {
        3 * self.n + if self.scenario.robust.is_some() { self.n } else { 0 }
    }

    /// Acceleration of follower `i`: a state on the linear plant, derived
    /// from the force balance on the nonlinear one.
    fn acceleration(&self, i: usize, x: &[f64]) -> f64 {
        match &self.models[i] {
            None => x[3 * i + 2],
            Some(m) => m.actual.acceleration(x[3 * i + 1], x[3 * i + 2]),
        }
    }

    fn leader(&self, t: f64) -> LeaderState {
        self.scenario.leader.state_unchecked(t)
    }

    /// Refreshes tracking errors and nominal inputs at `(t, x)`.
    fn update_inputs(&mut self, t: f64, x: &[f64]) -> LeaderState {
        let l = self.leader(t);
        let d0 = self.scenario.spacing;
        for i in 0..self.n {
            self.errors[i] = Vector3::new(
                x[3 * i] - l.position + (i + 1) as f64 * d0,
                x[3 * i + 1] - l.velocity,
                self.acceleration(i, x) - l.acceleration,
            );
        }
        for i in 0..self.n {
            self.nominal[i] = local_input(i, &self.errors, self.gains, &self.scenario.topology);
        }
        l
    }

    fn applied(&self, i: usize) -> f64 {
        match self.scenario.robust {
            Some(ks) => self.nominal[i] - ks * self.signs[i],
            None => self.nominal[i],
        }
    }

    fn derivative(&mut self, t: f64, x: &[f64], dx: &mut [f64]) {
        self.update_inputs(t, x);
        for i in 0..self.n {
            let v = x[3 * i + 1];
            let a = self.acceleration(i, x);
            let u = self.applied(i);
            dx[3 * i] = v;
            dx[3 * i + 1] = a;
            let (jerk, tau_hat) = match &self.models[i] {
                None => {
                    let tau = self.scenario.vehicles[i].tau;
                    let jerk = (u - a) / tau;
                    dx[3 * i + 2] = jerk;
                    (jerk, tau)
                }
                Some(m) => {
                    let torque = x[3 * i + 2];
                    let cmd = feedback_linearization(u, v, a, &m.estimated);
                    let torque_rate = (cmd - torque) / m.actual.tau;
                    dx[3 * i + 2] = torque_rate;
                    (m.actual.jerk(v, a, torque_rate), m.estimated.tau)
                }
            };
            if self.scenario.robust.is_some() {
                dx[3 * self.n + i] = tau_hat * jerk + a - self.nominal[i];
            }
        }
    }

    fn initial_state(&self) -> Vec<f64> {
        let l = self.leader(0.0);
        let d0 = self.scenario.spacing;
        let mut x = vec![0.0; self.dim()];
        for i in 0..self.n {
            let e = self.scenario.initial_errors.get(i).copied().unwrap_or([0.0; 3]);
            let p = l.position - (i + 1) as f64 * d0 + e[0];
            let v = l.velocity + e[1];
            let a = l.acceleration + e[2];
            x[3 * i] = p;
            x[3 * i + 1] = v;
            x[3 * i + 2] = match &self.models[i] {
                None => a,
                Some(m) => m.actual.torque_for(v, a),
            };
        }
        x
    }

    fn record(&mut self, trajectory: &mut Trajectory, t: f64, x: &[f64]) {
        let l = self.update_inputs(t, x);
        trajectory.times.push(t);
        trajectory.leader.push(l);
        trajectory.states.push(
            (0..self.n)
                .map(|i| [x[3 * i], x[3 * i + 1], self.acceleration(i, x)])
                .collect(),
        );
        trajectory
            .errors
            .push(self.errors.iter().map(|e| [e[0], e[1], e[2]]).collect());
        trajectory.inputs.push((0..self.n).map(|i| self.applied(i)).collect());
        if let Some(torque) = trajectory.torque.as_mut() {
            torque.push((0..self.n).map(|i| x[3 * i + 2]).collect());
        }
        if let Some(sliding) = trajectory.sliding.as_mut() {
            sliding.push(x[3 * self.n..].to_vec());
        }
    }

    fn freeze_signs(&mut self, x: &[f64]) {
        if self.scenario.robust.is_some() {
            for i in 0..self.n {
                self.signs[i] = signum0(x[3 * self.n + i]);
            }
        }
    }

    fn run(mut self) -> Result<Trajectory> {
        let integration = self.scenario.integration;
        let steps = integration.steps();
        let dt = integration.dt;
        let mut trajectory = Trajectory {
            dt,
            spacing: self.scenario.spacing,
            times: Vec::with_capacity(steps + 1),
            leader: Vec::with_capacity(steps + 1),
            states: Vec::with_capacity(steps + 1),
            errors: Vec::with_capacity(steps + 1),
            inputs: Vec::with_capacity(steps + 1),
            torque: (self.scenario.plant == Plant::Nonlinear).then(Vec::new),
            sliding: self.scenario.robust.map(|_| Vec::new()),
        };
        let mut x = self.initial_state();
        let mut stepper = Stepper::new(integration.method, x.len());

        self.freeze_signs(&x);
        self.record(&mut trajectory, 0.0, &x);
        for k in 0..steps {
            let t = k as f64 * dt;
            stepper.step(&mut |t, x: &[f64], dx: &mut [f64]| self.derivative(t, x, dx), t, &mut x, dt);
            let next = (k + 1) as f64 * dt;
            if x.iter().any(|v| !v.is_finite() || v.abs() > 1e150) {
                return Err(Error::NumericalBlowup { time: next });
            }
            self.freeze_signs(&x);
            self.record(&mut trajectory, next, &x);
        }
        Ok(trajectory)
    }
}

