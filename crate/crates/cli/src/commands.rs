use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use platoon_core::analysis::eigenvalues;
use platoon_core::control::{stability_verdict, tracking_feasibility};
use platoon_core::dynamics::closed_loop_matrix;
use platoon_core::sim::{
    convergence_time, max_spacing_error, simulate_with_gains, sweep as run_sweep, CellOutcome, Controller,
};
use platoon_core::{Error, GainSet, Scenario, TopologyKind};

use crate::error::CliError;
use crate::output::{fmt12, write_spacing_errors, write_summary, write_trajectory, RunSummary, Timings};
use crate::schema::{MethodName, ScenarioFile};

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub method: Option<MethodName>,
    pub delta: Option<f64>,
}

/// Reads, applies overrides and validates. Nothing is written.
pub fn load(path: &Path, overrides: &Overrides) -> Result<(ScenarioFile, Scenario), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut file = ScenarioFile::from_toml(&text)?;
    if let Some(dt) = overrides.dt {
        file.simulation.dt = dt;
    }
    if let Some(h) = overrides.horizon {
        file.simulation.horizon = h;
    }
    if let Some(m) = overrides.method {
        file.simulation.method = m;
    }
    if let Some(d) = overrides.delta {
        file.outputs.delta = d;
    }
    let scenario = file.to_scenario()?;
    Ok((file, scenario))
}

#[derive(Debug)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub convergence_time: Option<f64>,
    pub delta: f64,
}

pub fn run(path: &Path, out: &Path, overrides: &Overrides) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let (file, scenario) = load(path, overrides)?;
    let gains = scenario.resolve_gains()?;
    let stability = match stability_verdict(&scenario.design_taus(), &gains, &scenario.topology) {
        Ok(v) => Some(v),
        Err(Error::CyclicGraph { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let a_hat = closed_loop_matrix(&scenario.design_taus(), &gains, &scenario.topology)?;
    let eigs = eigenvalues(&a_hat).iter().map(|l| [l.re, l.im]).collect();
    let setup = start.elapsed();

    let trajectory = simulate_with_gains(&scenario, &gains)?;
    let simulated = start.elapsed();

    let delta = file.outputs.delta;
    let tc = match convergence_time(&trajectory, delta) {
        Ok(t) => Some(t),
        Err(Error::NotConverged { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let max_errors = (0..scenario.len())
        .map(|i| max_spacing_error(&trajectory, i))
        .collect::<Result<Vec<_>, _>>()?;

    std::fs::create_dir_all(out).map_err(|source| CliError::Write {
        path: out.to_path_buf(),
        source,
    })?;
    let files = vec![
        out.join(&file.outputs.trajectory),
        out.join(&file.outputs.spacing_errors),
        out.join(&file.outputs.summary),
    ];
    write_trajectory(&files[0], &trajectory)?;
    write_spacing_errors(&files[1], &trajectory)?;
    let summary = RunSummary {
        synthesized: matches!(scenario.controller, Controller::Synthesis(_)),
        scenario: file,
        stability,
        gains: gains.gains,
        delta,
        convergence_time: tc,
        max_spacing_error: max_errors,
        eigenvalues: eigs,
        timings: Timings {
            setup_ms: setup.as_secs_f64() * 1e3,
            simulate_ms: (simulated - setup).as_secs_f64() * 1e3,
            total_ms: start.elapsed().as_secs_f64() * 1e3,
        },
    };
    write_summary(&files[2], &summary)?;
    Ok(RunReport {
        files,
        convergence_time: tc,
        delta,
    })
}

/// Stability-region margins per follower and the tracking feasibility test.
pub fn check(path: &Path) -> Result<String, CliError> {
    let (_, scenario) = load(path, &Overrides::default())?;
    let gains = scenario.resolve_gains()?;
    let taus = scenario.design_taus();
    let mut out = String::new();
    match stability_verdict(&taus, &gains, &scenario.topology) {
        Ok(verdict) => {
            let dps = scenario.topology.degree_plus_pin();
            for (i, v) in verdict.vehicles.iter().enumerate() {
                let g = &gains.gains[i];
                let mut violated = Vec::new();
                if !v.mask_ok {
                    violated.push("c_p = c_v = 1".to_string());
                }
                if !v.connected {
                    violated.push("d + p > 0".to_string());
                }
                if !v.kp_positive {
                    violated.push("k_p > 0".to_string());
                }
                if v.connected && !v.ka_bound_ok {
                    violated.push(format!("k_a c_a > {}", fmt12(-1.0 / dps[i])));
                }
                if !v.kv_bound_ok {
                    violated.push(format!("k_v > {}", fmt12(v.kv_bound)));
                }
                let status = if violated.is_empty() {
                    "ok".to_string()
                } else {
                    format!("FAIL ({})", violated.join(", "))
                };
                writeln!(
                    out,
                    "vehicle {}: tau={} d+p={} k=({}, {}, {}) k_v bound={} margin={} {status}",
                    i + 1,
                    fmt12(taus[i]),
                    fmt12(dps[i]),
                    fmt12(g.kp),
                    fmt12(g.kv),
                    fmt12(g.ka),
                    fmt12(v.kv_bound),
                    fmt12(v.kv_margin),
                )
                .expect("writing to a String");
            }
            let word = if verdict.overall { "asymptotically stable" } else { "NOT stable" };
            writeln!(out, "platoon: {word}").expect("writing to a String");
        }
        Err(Error::CyclicGraph { cycle }) => {
            let cycle: Vec<String> = cycle.iter().map(|i| (i + 1).to_string()).collect();
            writeln!(
                out,
                "stability region not applicable: communication graph has a cycle ({})",
                cycle.join(" -> ")
            )
            .expect("writing to a String");
        }
        Err(e) => return Err(e.into()),
    }
    let f = tracking_feasibility(&scenario.mask, &taus)?;
    if f.feasible {
        writeln!(out, "tracking: feasible, rank(Q_o) = {}", f.observability_rank)
    } else {
        writeln!(
            out,
            "tracking: INFEASIBLE, rank(Q_o) = {} < 2 (position not measured)",
            f.observability_rank
        )
    }
    .expect("writing to a String");
    Ok(out)
}

/// Convergence-time grid as CSV: one row per `ε`, one column per kind.
pub fn sweep(
    path: &Path,
    epsilons: &[f64],
    kinds: &[TopologyKind],
    overrides: &Overrides,
) -> Result<String, CliError> {
    let (file, scenario) = load(path, overrides)?;
    if !matches!(scenario.controller, Controller::Synthesis(_)) {
        return Err(CliError::Validation("sweep needs [controller.synthesis]".into()));
    }
    if epsilons.is_empty() || kinds.is_empty() {
        return Err(CliError::Validation("sweep grid is empty".into()));
    }
    if let Some(e) = epsilons.iter().find(|e| !(e.is_finite() && **e > 0.0)) {
        return Err(CliError::Validation(format!("epsilon must be positive, got {e}")));
    }
    let cells = run_sweep(&scenario, epsilons, kinds, file.outputs.delta)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> = std::iter::once("epsilon".to_string())
        .chain(kinds.iter().map(|k| k.to_string()))
        .collect();
    w.write_record(&header).map_err(csv_error)?;
    for row in cells.chunks(kinds.len()) {
        let mut record = vec![fmt12(row[0].epsilon)];
        record.extend(row.iter().map(|c| match &c.outcome {
            CellOutcome::Converged(t) => fmt12(*t),
            CellOutcome::NotConverged => "not_converged".to_string(),
            CellOutcome::Failed(_) => "failed".to_string(),
        }));
        w.write_record(&record).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| csv_error(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Write {
        path: PathBuf::from("<sweep>"),
        source: e.into(),
    }
}

/// The gains a run would use, one line per follower.
pub fn synth(path: &Path) -> Result<String, CliError> {
    let (_, scenario) = load(path, &Overrides::default())?;
    let gains: GainSet = scenario.resolve_gains()?;
    let mut out = String::from("vehicle,kp,kv,ka\n");
    for (i, g) in gains.gains.iter().enumerate() {
        writeln!(out, "{},{},{},{}", i + 1, fmt12(g.kp), fmt12(g.kv), fmt12(g.ka)).expect("writing to a String");
    }
    Ok(out)
}
