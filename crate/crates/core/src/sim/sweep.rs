use rayon::prelude::*;
use serde::Serialize;

use super::metrics::convergence_time;
use super::scenario::{Controller, Scenario};
use super::simulate::simulate;
use crate::control::SynthesisRecipe;
use crate::graph::{Topology, TopologyKind};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CellOutcome {
    Converged(f64),
    NotConverged,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub epsilon: f64,
    pub kind: TopologyKind,
    pub outcome: CellOutcome,
}

/// Convergence time over the grid `epsilons × kinds`, one independent run
/// per cell, in parallel. The base scenario must use synthesis; each cell
/// swaps in the standard topology of its kind and a uniform `ε`, keeping the
/// base coupling scales. Results come back in row-major grid order.
pub fn sweep(base: &Scenario, epsilons: &[f64], kinds: &[TopologyKind], delta: f64) -> Result<Vec<SweepCell>> {
    let Controller::Synthesis(recipe) = &base.controller else {
        return Err(Error::InvalidParameter("sweep needs a synthesis recipe".into()));
    };
    let n = base.len();
    let grid: Vec<(f64, TopologyKind)> = epsilons
        .iter()
        .flat_map(|&e| kinds.iter().map(move |&k| (e, k)))
        .collect();
    let cells = grid
        .par_iter()
        .map(|&(epsilon, kind)| {
            let mut scenario = base.clone();
            scenario.topology = Topology::standard(kind, n)?;
            scenario.controller = Controller::Synthesis(SynthesisRecipe {
                epsilon: vec![epsilon; n],
                alpha: recipe.alpha.clone(),
            });
            let outcome = match simulate(&scenario).and_then(|t| convergence_time(&t, delta)) {
                Ok(tc) => CellOutcome::Converged(tc),
                Err(Error::NotConverged { .. }) => CellOutcome::NotConverged,
                Err(e) => CellOutcome::Failed(e.to_string()),
            };
            Ok(SweepCell { epsilon, kind, outcome })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(cells)
}
