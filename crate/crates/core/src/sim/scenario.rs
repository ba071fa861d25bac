use serde::Serialize;

use super::leader::LeaderProfile;
use crate::control::{synthesize_gains, GainSet, Gains, SynthesisRecipe};
use crate::dynamics::{OutputMask, VehicleParams};
use crate::graph::Topology;
use crate::{Error, Result};

/// Where the follower gains come from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Controller {
    Explicit(Vec<Gains>),
    Synthesis(SynthesisRecipe),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Plant {
    #[default]
    Linear,
    /// Torque-driven plant with the feedback-linearising torque law.
    Nonlinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Method {
    #[default]
    Rk4,
    ForwardEuler,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integration {
    pub method: Method,
    /// Step, s.
    pub dt: f64,
    /// Final time, s.
    pub horizon: f64,
}

impl Default for Integration {
    fn default() -> Self {
        Self {
            method: Method::Rk4,
            dt: 0.01,
            horizon: 60.0,
        }
    }
}

impl Integration {
    pub fn steps(&self) -> usize {
        (self.horizon / self.dt).round() as usize
    }
}

/// A complete simulation experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub vehicles: Vec<VehicleParams>,
    pub topology: Topology,
    pub controller: Controller,
    pub mask: OutputMask,
    /// Desired inter-vehicle spacing `d₀`, m.
    pub spacing: f64,
    pub leader: LeaderProfile,
    /// Per-follower `(p̂, v̂, â)` at `t = 0`. Empty means exact formation.
    pub initial_errors: Vec<[f64; 3]>,
    pub plant: Plant,
    /// Sliding-mode gain `k_s` when the robust layer is on.
    pub robust: Option<f64>,
    pub integration: Integration,
}

impl Scenario {
    /// Linear plant, full measurements, exact-formation start, default
    /// integration settings.
    pub fn linear(taus: &[f64], topology: Topology, controller: Controller, leader: LeaderProfile) -> Self {
        Self {
            vehicles: taus.iter().map(|&t| VehicleParams::linear(t)).collect(),
            topology,
            controller,
            mask: OutputMask::FULL,
            spacing: 20.0,
            leader,
            initial_errors: Vec::new(),
            plant: Plant::Linear,
            robust: None,
            integration: Integration::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.vehicles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vehicles.is_empty()
    }

    pub fn taus(&self) -> Vec<f64> {
        self.vehicles.iter().map(|v| v.tau).collect()
    }

    pub fn design_taus(&self) -> Vec<f64> {
        self.vehicles.iter().map(VehicleParams::design_tau).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.topology.len();
        if self.vehicles.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} vehicles for a {n}-follower topology",
                self.vehicles.len()
            )));
        }
        for v in &self.vehicles {
            v.validate()?;
        }
        match &self.controller {
            Controller::Explicit(g) => {
                if g.len() != n {
                    return Err(Error::DimensionMismatch(format!("{} gain vectors for {n} followers", g.len())));
                }
                GainSet::new(g.clone(), self.mask).validate()?;
            }
            Controller::Synthesis(r) => {
                if r.epsilon.len() != n || r.alpha.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "synthesis recipe sized {} / {} for {n} followers",
                        r.epsilon.len(),
                        r.alpha.len()
                    )));
                }
            }
        }
        if !(self.spacing.is_finite() && self.spacing > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spacing must be positive, got {}",
                self.spacing
            )));
        }
        if !self.initial_errors.is_empty() && self.initial_errors.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} initial errors for {n} followers",
                self.initial_errors.len()
            )));
        }
        if self.initial_errors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("initial errors must be finite".into()));
        }
        if self.plant == Plant::Nonlinear {
            if let Some(i) = self.vehicles.iter().position(|v| v.nonlinear.is_none()) {
                return Err(Error::InvalidParameter(format!(
                    "nonlinear plant but vehicle {} has no chassis parameters",
                    i + 1
                )));
            }
        }
        if let Some(ks) = self.robust {
            if !(ks.is_finite() && ks >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "sliding-mode gain must be non-negative, got {ks}"
                )));
            }
        }
        let Integration { dt, horizon, .. } = self.integration;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        if !(horizon.is_finite() && horizon > dt) {
            return Err(Error::InvalidParameter(format!(
                "horizon {horizon} must exceed dt {dt}"
            )));
        }
        Ok(())
    }

    /// Gains actually applied, running the synthesis if the scenario asks
    /// for it. Synthesis works from the lags the controller knows.
    pub fn resolve_gains(&self) -> Result<GainSet> {
        match &self.controller {
            Controller::Explicit(g) => Ok(GainSet::new(g.clone(), self.mask)),
            Controller::Synthesis(recipe) => {
                let synth = synthesize_gains(&self.design_taus(), &self.topology, recipe)?;
                Ok(GainSet::new(synth.gains, self.mask))
            }
        }
    }
}
