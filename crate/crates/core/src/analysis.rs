//! Spectral analysis of the closed loop.
//!
//! For an acyclic topology the grounded matrix permutes to lower-triangular
//! form, so the platoon's characteristic polynomial factors into one monic
//! cubic per follower. Everything here works on those cubics or checks the
//! factorisation against the full stacked matrix.

use nalgebra::{Complex, DMatrix, Matrix3, Vector3};
use serde::Serialize;

use crate::control::GainSet;
use crate::dynamics::{closed_loop_matrix, linear_matrices};
use crate::graph::Topology;
use crate::{Error, Result};

/// `λ³ + c2 λ² + c1 λ + c0` for one follower.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharacteristicCubic {
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl CharacteristicCubic {
    /// `[1, c2, c1, c0]`, highest degree first.
    pub fn coefficients(&self) -> [f64; 4] {
        [1.0, self.c2, self.c1, self.c0]
    }

    pub fn eval(&self, lambda: Complex<f64>) -> Complex<f64> {
        ((lambda + self.c2) * lambda + self.c1) * lambda + self.c0
    }

    /// Roots as eigenvalues of the companion matrix.
    pub fn roots(&self) -> Vec<Complex<f64>> {
        #[rustfmt::skip]
        let companion = Matrix3::new(
            -self.c2, -self.c1, -self.c0,
            1.0, 0.0, 0.0,
            0.0, 1.0, 0.0,
        );
        companion.complex_eigenvalues().iter().copied().collect()
    }
}

/// The cubic of one follower from its lag, its masked gain `k ∘ c` and
/// `d_ii + p_ii`.
pub fn characteristic_cubic(tau: f64, effective_gain: &Vector3<f64>, degree_plus_pin: f64) -> CharacteristicCubic {
    let t = effective_gain / tau;
    CharacteristicCubic {
        c2: 1.0 / tau + t[2] * degree_plus_pin,
        c1: t[1] * degree_plus_pin,
        c0: t[0] * degree_plus_pin,
    }
}

pub fn characteristic_cubics(taus: &[f64], gains: &GainSet, topology: &Topology) -> Result<Vec<CharacteristicCubic>> {
    let n = topology.len();
    if taus.len() != n || gains.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} lags and {} gain vectors for {n} followers",
            taus.len(),
            gains.len()
        )));
    }
    topology.topological_order()?;
    Ok(topology
        .degree_plus_pin()
        .iter()
        .enumerate()
        .map(|(i, &dp)| characteristic_cubic(taus[i], &gains.effective(i), dp))
        .collect())
}

/// Routh array of a monic cubic.
///
/// ```text
/// λ³ | 1    c1
/// λ² | c2   c0
/// λ¹ | c1 − c0/c2
/// λ⁰ | c0
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RouthTable {
    pub s3: f64,
    pub s2: f64,
    /// `None` when `c2 = 0` and the row is undefined.
    pub s1: Option<f64>,
    pub s0: f64,
    /// All first-column entries strictly positive.
    pub stable: bool,
}

impl RouthTable {
    /// First column with an undefined entry reported as NaN.
    pub fn first_column(&self) -> [f64; 4] {
        [self.s3, self.s2, self.s1.unwrap_or(f64::NAN), self.s0]
    }
}

/// A zero in the first column (including `c2 = 0`) counts as not
/// asymptotically stable.
pub fn routh_verdict(cubic: &CharacteristicCubic) -> RouthTable {
    let s1 = (cubic.c2 != 0.0).then(|| cubic.c1 - cubic.c0 / cubic.c2);
    let stable = cubic.c2 > 0.0 && s1.is_some_and(|x| x > 0.0) && cubic.c0 > 0.0;
    RouthTable {
        s3: 1.0,
        s2: cubic.c2,
        s1,
        s0: cubic.c0,
        stable,
    }
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    m.complex_eigenvalues().iter().copied().collect()
}

pub fn is_hurwitz(m: &DMatrix<f64>) -> bool {
    eigenvalues(m).iter().all(|l| l.re < 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationReport {
    /// Largest distance between a cubic root and the platoon eigenvalue it
    /// was paired with.
    pub max_distance: f64,
    pub platoon_eigenvalues: Vec<Complex<f64>>,
    pub cubic_roots: Vec<Complex<f64>>,
}

/// Compares the eigenvalues of the stacked closed-loop matrix with the
/// union of the per-follower cubic roots, pairing greedily by distance.
pub fn spectrum_factorization_check(
    taus: &[f64],
    gains: &GainSet,
    topology: &Topology,
    tol: f64,
) -> Result<FactorizationReport> {
    let cubics = characteristic_cubics(taus, gains, topology)?;
    let platoon = eigenvalues(&closed_loop_matrix(taus, gains, topology)?);
    let roots: Vec<_> = cubics.iter().flat_map(CharacteristicCubic::roots).collect();

    let mut unused = platoon.clone();
    let mut max_distance: f64 = 0.0;
    for root in &roots {
        let (k, d) = unused
            .iter()
            .enumerate()
            .map(|(k, l)| (k, (l - root).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("one eigenvalue per cubic root");
        unused.swap_remove(k);
        max_distance = max_distance.max(d);
    }
    if !(max_distance <= tol) {
        return Err(Error::PairingFailed {
            distance: max_distance,
            tol,
        });
    }
    Ok(FactorizationReport {
        max_distance,
        platoon_eigenvalues: platoon,
        cubic_roots: roots,
    })
}

/// Largest relative mismatch between `det(λI − Â)` and the product of the
/// follower cubics over the given sample points. Unlike eigenvalue pairing
/// this stays accurate when `Â` is defective (identical followers).
pub fn factorization_identity_residual(
    taus: &[f64],
    gains: &GainSet,
    topology: &Topology,
    points: &[Complex<f64>],
) -> Result<f64> {
    let cubics = characteristic_cubics(taus, gains, topology)?;
    let a_hat = closed_loop_matrix(taus, gains, topology)?.map(|x| Complex::new(x, 0.0));
    let dim = a_hat.nrows();
    let mut worst: f64 = 0.0;
    for &lambda in points {
        let det = (DMatrix::identity(dim, dim) * lambda - &a_hat).determinant();
        let product = cubics
            .iter()
            .fold(Complex::new(1.0, 0.0), |acc, c| acc * c.eval(lambda));
        worst = worst.max((det - product).norm() / product.norm().max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentSubsystem {
    pub matrix: Matrix3<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    pub hurwitz: bool,
}

/// `Ã = A − (d_ii + p_ii) B kᵀ`, the per-follower system whose stability
/// decides the platoon's on a DAG. Pass the masked gain `k ∘ c`.
pub fn equivalent_subsystem(tau: f64, gain: &Vector3<f64>, degree_plus_pin: f64) -> Result<EquivalentSubsystem> {
    let (a, b) = linear_matrices(tau)?;
    let matrix = a - b * gain.transpose() * degree_plus_pin;
    let eigenvalues: Vec<_> = matrix.complex_eigenvalues().iter().copied().collect();
    let hurwitz = eigenvalues.iter().all(|l| l.re < 0.0);
    Ok(EquivalentSubsystem {
        matrix,
        eigenvalues,
        hurwitz,
    })
}
