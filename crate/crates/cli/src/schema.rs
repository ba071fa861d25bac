//! TOML scenario files.
//!
//! A file mirrors [`Scenario`] section by section. Unknown keys are rejected
//! everywhere, and [`ScenarioFile::to_scenario`] validates the result before
//! anything is computed.

use serde::{Deserialize, Serialize};

use platoon_core::control::Alpha;
use platoon_core::sim::{Controller, Integration, LeaderProfile, Method, Plant, Segment};
use platoon_core::{Chassis, Gains, OutputMask, Scenario, SynthesisRecipe, Topology, TopologyKind, VehicleParams};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub platoon: PlatoonSection,
    pub vehicles: VehiclesSection,
    pub topology: TopologySection,
    pub controller: ControllerSection,
    #[serde(default)]
    pub mask: MaskSection,
    pub leader: LeaderSection,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialSection>,
    #[serde(default)]
    pub outputs: OutputsSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlatoonSection {
    /// Desired spacing `d₀`, m.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default)]
    pub plant: PlantName,
}

impl Default for PlatoonSection {
    fn default() -> Self {
        Self {
            spacing: default_spacing(),
            plant: PlantName::Linear,
        }
    }
}

fn default_spacing() -> f64 {
    20.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PlantName {
    #[default]
    Linear,
    Nonlinear,
}

/// Either a plain list of lags, or chassis parameters for `count` vehicles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehiclesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actual: Option<ChassisSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<ChassisSource>,
}

/// One table per vehicle, or one table evaluated at every vehicle index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChassisSource {
    List(Vec<ChassisFormula>),
    Shared(ChassisFormula),
}

impl ChassisSource {
    fn chassis(&self, index: usize, count: usize, what: &str) -> Result<Chassis, CliError> {
        match self {
            ChassisSource::Shared(f) => Ok(f.at(index)),
            ChassisSource::List(list) if list.len() == count => Ok(list[index - 1].at(index)),
            ChassisSource::List(list) => Err(CliError::Validation(format!(
                "vehicles.{what} lists {} chassis for {count} vehicles",
                list.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChassisFormula {
    pub mass: Param,
    pub tau: Param,
    pub efficiency: Param,
    pub drag: Param,
    pub wheel_radius: Param,
    pub rolling: Param,
}

impl ChassisFormula {
    fn at(&self, index: usize) -> Chassis {
        Chassis {
            mass: self.mass.at(index),
            tau: self.tau.at(index),
            efficiency: self.efficiency.at(index),
            drag: self.drag.at(index),
            wheel_radius: self.wheel_radius.at(index),
            rolling: self.rolling.at(index),
        }
    }

    fn constant(c: &Chassis) -> Self {
        Self {
            mass: Param::Value(c.mass),
            tau: Param::Value(c.tau),
            efficiency: Param::Value(c.efficiency),
            drag: Param::Value(c.drag),
            wheel_radius: Param::Value(c.wheel_radius),
            rolling: Param::Value(c.rolling),
        }
    }
}

/// A constant, or `base + step · i` for vehicle `i` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Value(f64),
    Affine(Affine),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Affine {
    pub base: f64,
    pub step: f64,
}

impl Param {
    fn at(self, index: usize) -> f64 {
        match self {
            Param::Value(v) => v,
            Param::Affine(a) => a.base + a.step * index as f64,
        }
    }
}

/// A standard kind (`n` defaults to the vehicle count), or explicit
/// adjacency rows and pinning flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<u8>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinning: Option<Vec<u8>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControllerSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gains: Option<GainsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthesis: Option<SynthesisSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robust: Option<RobustSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainsSection {
    pub kp: Vec<f64>,
    pub kv: Vec<f64>,
    pub ka: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSection {
    pub epsilon: OneOrMany<f64>,
    #[serde(default)]
    pub alpha: OneOrMany<AlphaItem>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustSection {
    /// Sliding-mode switching gain.
    pub k_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn expand(&self, n: usize, what: &str) -> Result<Vec<T>, CliError> {
        match self {
            OneOrMany::One(x) => Ok(vec![x.clone(); n]),
            OneOrMany::Many(v) if v.len() == n => Ok(v.clone()),
            OneOrMany::Many(v) => Err(CliError::Validation(format!(
                "{what} has {} entries for {n} vehicles",
                v.len()
            ))),
        }
    }
}

impl Default for OneOrMany<AlphaItem> {
    fn default() -> Self {
        OneOrMany::One(AlphaItem::Keyword(AlphaKeyword::Auto))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaItem {
    Value(f64),
    Keyword(AlphaKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaKeyword {
    Auto,
}

impl From<AlphaItem> for Alpha {
    fn from(a: AlphaItem) -> Self {
        match a {
            AlphaItem::Value(v) => Alpha::Value(v),
            AlphaItem::Keyword(AlphaKeyword::Auto) => Alpha::Auto,
        }
    }
}

impl From<Alpha> for AlphaItem {
    fn from(a: Alpha) -> Self {
        match a {
            Alpha::Value(v) => AlphaItem::Value(v),
            Alpha::Auto => AlphaItem::Keyword(AlphaKeyword::Auto),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaskSection {
    #[serde(default = "yes")]
    pub position: bool,
    #[serde(default = "yes")]
    pub velocity: bool,
    #[serde(default = "yes")]
    pub acceleration: bool,
}

fn yes() -> bool {
    true
}

impl Default for MaskSection {
    fn default() -> Self {
        Self {
            position: true,
            velocity: true,
            acceleration: true,
        }
    }
}

/// A built-in profile name, or explicit segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeaderSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_position: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<SegmentSpec>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileName {
    Eq39,
    Eq40,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub start: f64,
    pub velocity: f64,
    #[serde(default)]
    pub slope: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub method: MethodName,
}

fn default_dt() -> f64 {
    0.01
}

fn default_horizon() -> f64 {
    60.0
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            dt: default_dt(),
            horizon: default_horizon(),
            method: MethodName::Rk4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    #[default]
    Rk4,
    Euler,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Rk4 => Method::Rk4,
            MethodName::Euler => Method::ForwardEuler,
        }
    }
}

/// Initial tracking errors per follower; missing lists mean zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceleration: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputsSection {
    /// Threshold for the convergence time, m.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_trajectory")]
    pub trajectory: String,
    #[serde(default = "default_summary")]
    pub summary: String,
    #[serde(default = "default_spacing_errors")]
    pub spacing_errors: String,
}

fn default_delta() -> f64 {
    0.1
}

fn default_trajectory() -> String {
    "trajectory.csv".into()
}

fn default_summary() -> String {
    "summary.json".into()
}

fn default_spacing_errors() -> String {
    "spacing_errors.csv".into()
}

impl Default for OutputsSection {
    fn default() -> Self {
        Self {
            delta: default_delta(),
            trajectory: default_trajectory(),
            summary: default_summary(),
            spacing_errors: default_spacing_errors(),
        }
    }
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Validation(e.to_string()))
    }

    /// Builds and validates the scenario.
    pub fn to_scenario(&self) -> Result<Scenario, CliError> {
        let vehicles = self.vehicles()?;
        let n = vehicles.len();
        let topology = self.topology(n)?;
        let controller = self.controller(n)?;
        let scenario = Scenario {
            vehicles,
            topology,
            controller,
            mask: OutputMask::new(self.mask.position, self.mask.velocity, self.mask.acceleration),
            spacing: self.platoon.spacing,
            leader: self.leader()?,
            initial_errors: self.initial_errors(n)?,
            plant: match self.platoon.plant {
                PlantName::Linear => Plant::Linear,
                PlantName::Nonlinear => Plant::Nonlinear,
            },
            robust: self.controller.robust.as_ref().map(|r| r.k_s),
            integration: Integration {
                method: self.simulation.method.into(),
                dt: self.simulation.dt,
                horizon: self.simulation.horizon,
            },
        };
        scenario.validate()?;
        if !(self.outputs.delta.is_finite() && self.outputs.delta > 0.0) {
            return Err(CliError::Validation(format!(
                "outputs.delta must be positive, got {}",
                self.outputs.delta
            )));
        }
        Ok(scenario)
    }

    fn vehicles(&self) -> Result<Vec<VehicleParams>, CliError> {
        let v = &self.vehicles;
        match (&v.tau, &v.actual) {
            (Some(taus), None) => {
                if v.count.is_some() || v.estimate.is_some() {
                    return Err(CliError::Validation(
                        "vehicles.tau cannot be combined with count or estimate".into(),
                    ));
                }
                if taus.is_empty() {
                    return Err(CliError::Validation("vehicles.tau is empty".into()));
                }
                Ok(taus.iter().map(|&t| VehicleParams::linear(t)).collect())
            }
            (None, Some(actual)) => {
                let count = match (v.count, actual) {
                    (Some(c), _) => c,
                    (None, ChassisSource::List(list)) => list.len(),
                    (None, ChassisSource::Shared(_)) => {
                        return Err(CliError::Validation(
                            "vehicles.count is required with a chassis formula".into(),
                        ))
                    }
                };
                if count == 0 {
                    return Err(CliError::Validation("vehicles.count must be positive".into()));
                }
                let estimate = v
                    .estimate
                    .as_ref()
                    .ok_or_else(|| CliError::Validation("vehicles.estimate is required with chassis parameters".into()))?;
                (1..=count)
                    .map(|i| {
                        Ok(VehicleParams::nonlinear(
                            actual.chassis(i, count, "actual")?,
                            estimate.chassis(i, count, "estimate")?,
                        ))
                    })
                    .collect()
            }
            _ => Err(CliError::Validation(
                "vehicles needs exactly one of tau or actual".into(),
            )),
        }
    }

    fn topology(&self, n: usize) -> Result<Topology, CliError> {
        let t = &self.topology;
        let topology = match (&t.kind, &t.adjacency, &t.pinning) {
            (Some(kind), None, None) => {
                let kind: TopologyKind = kind.parse()?;
                Topology::standard(kind, t.n.unwrap_or(n))?
            }
            (None, Some(adj), Some(pin)) if t.n.is_none() => Topology::new(adj.clone(), pin.clone())?,
            _ => {
                return Err(CliError::Validation(
                    "topology needs either kind (and optional n) or adjacency and pinning".into(),
                ))
            }
        };
        if topology.len() != n {
            return Err(CliError::Validation(format!(
                "topology has {} followers but {n} vehicles are defined",
                topology.len()
            )));
        }
        Ok(topology)
    }

    fn controller(&self, n: usize) -> Result<Controller, CliError> {
        match (&self.controller.gains, &self.controller.synthesis) {
            (Some(g), None) => {
                if g.kp.len() != n || g.kv.len() != n || g.ka.len() != n {
                    return Err(CliError::Validation(format!(
                        "controller.gains needs {n} entries in kp, kv and ka"
                    )));
                }
                Ok(Controller::Explicit(
                    (0..n).map(|i| Gains::new(g.kp[i], g.kv[i], g.ka[i])).collect(),
                ))
            }
            (None, Some(s)) => {
                let epsilon = s.epsilon.expand(n, "controller.synthesis.epsilon")?;
                if let Some(e) = epsilon.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
                    return Err(CliError::Validation(format!("epsilon must be positive, got {e}")));
                }
                let alpha = s.alpha.expand(n, "controller.synthesis.alpha")?;
                Ok(Controller::Synthesis(SynthesisRecipe {
                    epsilon,
                    alpha: alpha.into_iter().map(Alpha::from).collect(),
                }))
            }
            _ => Err(CliError::Validation(
                "controller needs exactly one of gains or synthesis".into(),
            )),
        }
    }

    fn leader(&self) -> Result<LeaderProfile, CliError> {
        let l = &self.leader;
        match (&l.profile, &l.segments) {
            (Some(name), None) if l.initial_position.is_none() => Ok(match name {
                ProfileName::Eq39 => LeaderProfile::eq39(),
                ProfileName::Eq40 => LeaderProfile::eq40(),
            }),
            (None, Some(segs)) => Ok(LeaderProfile::new(
                l.initial_position.unwrap_or(0.0),
                segs.iter().map(|s| Segment::ramp(s.start, s.velocity, s.slope)).collect(),
            )?),
            _ => Err(CliError::Validation(
                "leader needs either profile or segments (with optional initial_position)".into(),
            )),
        }
    }

    fn initial_errors(&self, n: usize) -> Result<Vec<[f64; 3]>, CliError> {
        let Some(init) = &self.initial else {
            return Ok(Vec::new());
        };
        let column = |v: &Option<Vec<f64>>, what: &str| -> Result<Vec<f64>, CliError> {
            match v {
                None => Ok(vec![0.0; n]),
                Some(v) if v.len() == n => Ok(v.clone()),
                Some(v) => Err(CliError::Validation(format!(
                    "initial.{what} has {} entries for {n} vehicles",
                    v.len()
                ))),
            }
        };
        let p = column(&init.position, "position")?;
        let v = column(&init.velocity, "velocity")?;
        let a = column(&init.acceleration, "acceleration")?;
        Ok((0..n).map(|i| [p[i], v[i], a[i]]).collect())
    }

    /// Writes a scenario back out in explicit form: lag or chassis lists,
    /// adjacency rows, per-vehicle gains or synthesis weights, and leader
    /// segments.
    pub fn from_scenario(s: &Scenario, outputs: OutputsSection) -> Result<Self, CliError> {
        let models: Vec<_> = s.vehicles.iter().map(|v| v.nonlinear).collect();
        let vehicles = if models.iter().all(Option::is_none) {
            VehiclesSection {
                tau: Some(s.taus()),
                count: None,
                actual: None,
                estimate: None,
            }
        } else if let Some(models) = models.into_iter().collect::<Option<Vec<_>>>() {
            VehiclesSection {
                tau: None,
                count: Some(models.len()),
                actual: Some(ChassisSource::List(
                    models.iter().map(|m| ChassisFormula::constant(&m.actual)).collect(),
                )),
                estimate: Some(ChassisSource::List(
                    models.iter().map(|m| ChassisFormula::constant(&m.estimated)).collect(),
                )),
            }
        } else {
            return Err(CliError::Validation(
                "cannot write a platoon mixing lag-only and chassis vehicles".into(),
            ));
        };
        let (gains, synthesis) = match &s.controller {
            Controller::Explicit(g) => (
                Some(GainsSection {
                    kp: g.iter().map(|g| g.kp).collect(),
                    kv: g.iter().map(|g| g.kv).collect(),
                    ka: g.iter().map(|g| g.ka).collect(),
                }),
                None,
            ),
            Controller::Synthesis(r) => (
                None,
                Some(SynthesisSection {
                    epsilon: OneOrMany::Many(r.epsilon.clone()),
                    alpha: OneOrMany::Many(r.alpha.iter().map(|&a| a.into()).collect()),
                }),
            ),
        };
        let initial = (!s.initial_errors.is_empty()).then(|| InitialSection {
            position: Some(s.initial_errors.iter().map(|e| e[0]).collect()),
            velocity: Some(s.initial_errors.iter().map(|e| e[1]).collect()),
            acceleration: Some(s.initial_errors.iter().map(|e| e[2]).collect()),
        });
        Ok(Self {
            platoon: PlatoonSection {
                spacing: s.spacing,
                plant: match s.plant {
                    Plant::Linear => PlantName::Linear,
                    Plant::Nonlinear => PlantName::Nonlinear,
                },
            },
            vehicles,
            topology: TopologySection {
                kind: None,
                n: None,
                adjacency: Some(s.topology.adjacency_rows().to_vec()),
                pinning: Some(s.topology.pinning().to_vec()),
            },
            controller: ControllerSection {
                gains,
                synthesis,
                robust: s.robust.map(|k_s| RobustSection { k_s }),
            },
            mask: MaskSection {
                position: s.mask.position,
                velocity: s.mask.velocity,
                acceleration: s.mask.acceleration,
            },
            leader: LeaderSection {
                profile: None,
                initial_position: Some(s.leader.initial_position()),
                segments: Some(
                    s.leader
                        .segments()
                        .iter()
                        .map(|g| SegmentSpec {
                            start: g.start,
                            velocity: g.v_base,
                            slope: g.slope,
                        })
                        .collect(),
                ),
            },
            simulation: SimulationSection {
                dt: s.integration.dt,
                horizon: s.integration.horizon,
                method: match s.integration.method {
                    Method::Rk4 => MethodName::Rk4,
                    Method::ForwardEuler => MethodName::Euler,
                },
            },
            initial,
            outputs,
        })
    }
}
