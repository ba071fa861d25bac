use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use platoon_cli::commands::{self, Overrides};
use platoon_cli::schema::MethodName;
use platoon_cli::CliError;
use platoon_core::TopologyKind;

/// Analyse, synthesise and simulate vehicle platoons from scenario files.
#[derive(Parser)]
#[command(name = "platoon", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write trajectory, spacing-error and summary files.
    Run {
        scenario: PathBuf,
        /// Output directory, created if missing.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Print the per-vehicle stability margins and the tracking feasibility verdict.
    Check { scenario: PathBuf },
    /// Convergence time over a grid of Riccati weights and standard topologies.
    Sweep {
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,3,5,7")]
        epsilon: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "PF,PLF,TPF,TPLF")]
        kinds: Vec<TopologyKind>,
        /// Directory for sweep.csv; the table goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Print the gains a run would use.
    Synth { scenario: PathBuf },
}

#[derive(Args)]
struct SimArgs {
    /// Integration step, s.
    #[arg(long)]
    dt: Option<f64>,
    /// Final time, s.
    #[arg(long)]
    horizon: Option<f64>,
    /// Spacing-error threshold for the convergence time, m. Overrides `outputs.delta`.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodName>,
}

impl From<SimArgs> for Overrides {
    fn from(a: SimArgs) -> Self {
        Overrides {
            dt: a.dt,
            horizon: a.horizon,
            method: a.method,
            delta: a.delta,
        }
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { scenario, out, sim } => {
            let report = commands::run(&scenario, &out, &sim.into())?;
            for f in &report.files {
                println!("wrote {}", f.display());
            }
            match report.convergence_time {
                Some(t) => println!("convergence time (delta = {}): {t:.2} s", report.delta),
                None => println!("not converged within the horizon (delta = {})", report.delta),
            }
        }
        Command::Check { scenario } => print!("{}", commands::check(&scenario)?),
        Command::Sweep {
            scenario,
            epsilon,
            kinds,
            out,
            sim,
        } => {
            let table = commands::sweep(&scenario, &epsilon, &kinds, &sim.into())?;
            match out {
                Some(dir) => {
                    let path = dir.join("sweep.csv");
                    std::fs::create_dir_all(&dir)
                        .and_then(|()| std::fs::write(&path, &table))
                        .map_err(|source| CliError::Write { path: path.clone(), source })?;
                    println!("wrote {}", path.display());
                }
                None => print!("{table}"),
            }
        }
        Command::Synth { scenario } => print!("{}", commands::synth(&scenario)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
