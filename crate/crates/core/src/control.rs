//! The distributed linear controller and the tools built on it: the
//! closed-form stability region for DAG topologies, the tracking feasibility
//! test from the internal model principle, and Riccati-based gain synthesis.

use nalgebra::{Matrix2, Matrix3, Matrix3x2, SMatrix, Vector3};
use serde::Serialize;

use crate::dynamics::{linear_matrices, OutputMask};
use crate::graph::Topology;
use crate::riccati::solve_care;
use crate::{Error, Result};

/// Local feedback gains `(k_p, k_v, k_a)` of one follower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Gains {
    pub kp: f64,
    pub kv: f64,
    pub ka: f64,
}

impl Gains {
    pub fn new(kp: f64, kv: f64, ka: f64) -> Self {
        Self { kp, kv, ka }
    }

    pub fn from_vector(k: &Vector3<f64>) -> Self {
        Self::new(k[0], k[1], k[2])
    }

    pub fn as_vector(&self) -> Vector3<f64> {
        Vector3::new(self.kp, self.kv, self.ka)
    }
}

/// Per-follower gains sharing one output mask.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainSet {
    pub gains: Vec<Gains>,
    pub mask: OutputMask,
}

impl GainSet {
    pub fn new(gains: Vec<Gains>, mask: OutputMask) -> Self {
        Self { gains, mask }
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, g) in self.gains.iter().enumerate() {
            if !(g.kp.is_finite() && g.kv.is_finite() && g.ka.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "gains of follower {} are not finite",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// `k_i ∘ c`, the gain actually applied to follower `i`'s full error.
    pub fn effective(&self, i: usize) -> Vector3<f64> {
        self.gains[i].as_vector().component_mul(&self.mask.as_vector())
    }
}

/// Acceleration command of follower `i`:
/// `u_i = −k_iᵀ [Σ_j a_ij C(x̂_i − x̂_j) + p_ii C x̂_i]`.
///
/// `errors[j]` is follower `j`'s tracking error `(p̂, v̂, â)` relative to the
/// leader, with the formation offset already removed from `p̂`.
pub fn control_input(i: usize, errors: &[Vector3<f64>], gains: &GainSet, topology: &Topology) -> Result<f64> {
    let n = topology.len();
    if errors.len() != n || gains.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} error vectors and {} gain vectors for {n} followers",
            errors.len(),
            gains.len()
        )));
    }
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, len: n });
    }
    Ok(local_input(i, errors, gains, topology))
}

pub(crate) fn local_input(i: usize, errors: &[Vector3<f64>], gains: &GainSet, topology: &Topology) -> f64 {
    let mut lumped = Vector3::zeros();
    for (j, e) in errors.iter().enumerate() {
        if topology.receives(i, j) {
            lumped += errors[i] - e;
        }
    }
    if topology.is_pinned(i) {
        lumped += errors[i];
    }
    -gains.effective(i).dot(&lumped)
}

/// Outcome of the stability-region test for one follower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VehicleVerdict {
    /// `c_p = c_v = 1`.
    pub mask_ok: bool,
    /// `d_ii + p_ii > 0`.
    pub connected: bool,
    /// `k_p > 0`.
    pub kp_positive: bool,
    /// `k_a c_a > −1/(d_ii + p_ii)`.
    pub ka_bound_ok: bool,
    /// `k_v > τ k_p / (1 + k_a c_a (d_ii + p_ii))`.
    pub kv_bound_ok: bool,
    /// The right-hand side of the velocity-gain inequality.
    pub kv_bound: f64,
    /// `k_v` minus its bound.
    pub kv_margin: f64,
    pub stable: bool,
}

/// Evaluates the closed-form stability region for one follower. The strict
/// inequalities are tested exactly, with no tolerance.
pub fn stability_region_check(
    tau: f64,
    gains: &Gains,
    degree_plus_pin: f64,
    mask: &OutputMask,
) -> Result<VehicleVerdict> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParameter(format!("tau must be positive, got {tau}")));
    }
    let ca = if mask.acceleration { 1.0 } else { 0.0 };
    let dp = degree_plus_pin;
    let mask_ok = mask.position && mask.velocity;
    let connected = dp > 0.0;
    let kp_positive = gains.kp > 0.0;
    let ka_bound_ok = connected && gains.ka * ca > -1.0 / dp;
    let kv_bound = tau * gains.kp / (1.0 + gains.ka * ca * dp);
    let kv_bound_ok = gains.kv > kv_bound;
    Ok(VehicleVerdict {
        mask_ok,
        connected,
        kp_positive,
        ka_bound_ok,
        kv_bound_ok,
        kv_bound,
        kv_margin: gains.kv - kv_bound,
        stable: mask_ok && connected && kp_positive && ka_bound_ok && kv_bound_ok,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub vehicles: Vec<VehicleVerdict>,
    pub overall: bool,
}

/// Runs the per-follower test over a whole platoon. Only meaningful for
/// acyclic topologies, so a cyclic graph is an error.
pub fn stability_verdict(taus: &[f64], gains: &GainSet, topology: &Topology) -> Result<StabilityVerdict> {
    let n = topology.len();
    if taus.len() != n || gains.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} lags and {} gain vectors for {n} followers",
            taus.len(),
            gains.len()
        )));
    }
    topology.topological_order()?;
    let vehicles = topology
        .degree_plus_pin()
        .iter()
        .enumerate()
        .map(|(i, &dp)| stability_region_check(taus[i], &gains.gains[i], dp, &gains.mask))
        .collect::<Result<Vec<_>>>()?;
    let overall = vehicles.iter().all(|v| v.stable);
    Ok(StabilityVerdict { vehicles, overall })
}

/// Residuals of the regulator equations for one follower lag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegulatorResidual {
    pub tau: f64,
    /// `‖A Π − Π S‖`
    pub internal_model: f64,
    /// `‖C Π − R‖`
    pub output: f64,
}

/// Whether a leader moving at constant speed can be tracked with the given
/// measurements.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// Leader exosystem `S` (constant velocity).
    pub exosystem: [[f64; 2]; 2],
    /// Observability matrix of `(S, R)`, 6×2.
    pub observability: [[f64; 2]; 6],
    pub observability_rank: usize,
    pub feasible: bool,
    pub residuals: Vec<RegulatorResidual>,
    /// The degenerate exosystems (scalar or 2×2 zero, i.e. a standing leader)
    /// also solve the regulator equations; the verdict uses the constant
    /// velocity one.
    pub trivial_exosystems_acknowledged: bool,
}

pub fn tracking_feasibility(mask: &OutputMask, taus: &[f64]) -> Result<FeasibilityReport> {
    let s = Matrix2::new(0.0, 1.0, 0.0, 0.0);
    let pi = Matrix3x2::new(1.0, 0.0, 0.0, 1.0, 0.0, 0.0);
    let c = Matrix3::from_diagonal(&mask.as_vector());
    let r = c * pi;
    let mut qo = SMatrix::<f64, 6, 2>::zeros();
    qo.fixed_view_mut::<3, 2>(0, 0).copy_from(&r);
    qo.fixed_view_mut::<3, 2>(3, 0).copy_from(&(r * s));
    let rank = qo.rank(1e-12);

    let residuals = taus
        .iter()
        .map(|&tau| {
            let (a, _) = linear_matrices(tau)?;
            Ok(RegulatorResidual {
                tau,
                internal_model: (a * pi - pi * s).norm(),
                output: (c * pi - r).norm(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut observability = [[0.0; 2]; 6];
    for (i, row) in observability.iter_mut().enumerate() {
        *row = [qo[(i, 0)], qo[(i, 1)]];
    }
    Ok(FeasibilityReport {
        exosystem: [[s[(0, 0)], s[(0, 1)]], [s[(1, 0)], s[(1, 1)]]],
        observability,
        observability_rank: rank,
        feasible: rank == 2,
        residuals,
        trivial_exosystems_acknowledged: true,
    })
}

/// Coupling scale in `k_iᵀ = α_i B_iᵀ P_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Alpha {
    /// `1 / (2 (d_ii + p_ii)) + 1`
    Auto,
    Value(f64),
}

impl Alpha {
    pub fn resolve(self, degree_plus_pin: f64) -> f64 {
        match self {
            Alpha::Auto => alpha_bound(degree_plus_pin) + 1.0,
            Alpha::Value(v) => v,
        }
    }
}

/// Smallest admissible `α` for a follower with `d_ii + p_ii = dp`.
pub fn alpha_bound(degree_plus_pin: f64) -> f64 {
    1.0 / (2.0 * degree_plus_pin)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthesisRecipe {
    pub epsilon: Vec<f64>,
    pub alpha: Vec<Alpha>,
}

impl SynthesisRecipe {
    pub fn uniform(n: usize, epsilon: f64, alpha: Alpha) -> Self {
        Self {
            epsilon: vec![epsilon; n],
            alpha: vec![alpha; n],
        }
    }

    pub fn len(&self) -> usize {
        self.epsilon.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epsilon.is_empty()
    }
}

/// Per-follower gains from the single-vehicle Riccati equation, with every
/// state measured.
pub fn synthesize_gains(taus: &[f64], topology: &Topology, recipe: &SynthesisRecipe) -> Result<GainSet> {
    let n = topology.len();
    if taus.len() != n || recipe.epsilon.len() != n || recipe.alpha.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} lags, {} weights and {} coupling scales for {n} followers",
            taus.len(),
            recipe.epsilon.len(),
            recipe.alpha.len()
        )));
    }
    let dps = topology.degree_plus_pin();
    if let Some(i) = dps.iter().position(|&dp| dp <= 0.0) {
        return Err(Error::InvalidTopology(format!(
            "follower {} receives no information",
            i + 1
        )));
    }
    let gains = (0..n)
        .map(|i| {
            let alpha = recipe.alpha[i].resolve(dps[i]);
            if !(alpha >= alpha_bound(dps[i])) {
                return Err(Error::InvalidParameter(format!(
                    "alpha {alpha} of follower {} is below {}",
                    i + 1,
                    alpha_bound(dps[i])
                )));
            }
            let (a, b) = linear_matrices(taus[i])?;
            let p = solve_care(&a, &b, recipe.epsilon[i])?;
            Ok(Gains::from_vector(&((p * b) * alpha)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GainSet::new(gains, OutputMask::FULL))
}
