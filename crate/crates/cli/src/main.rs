//! `segflow`: relax scenario states, blow them down, sweep the circle problem.
//!
//! Exit codes: 0 when every verdict passes, 1 when any fails or a run
//! aborts, 2 for configuration errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use segflow_core::lab::{self, ExperimentSpec, Scenario};
use segflow_core::{Error, Scheme};

#[derive(Parser, Debug)]
#[command(name = "segflow", version, about = "Entire segregated solutions on periodic cylinders", args_conflicts_with_subcommands = true)]
struct Cli {
    /// Flat JSON experiment file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Relax every R of a schedule and audit the equilibria.
    Run(RunArgs),
    /// Fit the shift-and-normalize family of a saved state.
    Blowdown(BlowdownArgs),
    /// Minimal circle energies over a list of coupling strengths.
    Lmin(LminArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RunScenario {
    Cosh,
    Exp,
    Kcomp,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SchemeArg {
    Newton,
    Imex,
    Explicit,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, value_enum)]
    scenario: RunScenario,
    #[arg(long)]
    k: Option<usize>,
    /// Increasing radii, comma separated.
    #[arg(long = "R", value_delimiter = ',', num_args = 0..)]
    r: Vec<f64>,
    #[arg(long, default_value_t = 64.0)]
    density_x: f64,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    /// Stopping tolerance relative to the largest boundary trace.
    #[arg(long, default_value_t = 1e-11)]
    tol: f64,
    #[arg(long, default_value_t = 20_000)]
    max_steps: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, value_enum, default_value = "newton")]
    scheme: SchemeArg,
    #[arg(long, default_value_t = 0)]
    checkpoint_every: usize,
    #[arg(long)]
    out: PathBuf,
    /// Run directory of an earlier run whose checkpoints should be resumed.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BlowdownArgs {
    /// Directory holding `comp0.fld` and `comp1.fld`.
    #[arg(long)]
    state: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    shifts: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct LminArgs {
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    lambda: Vec<f64>,
    #[arg(long, default_value_t = 2400)]
    nodes: usize,
    #[arg(long)]
    out: PathBuf,
}

fn spec_from(cmd: Command) -> ExperimentSpec {
    match cmd {
        Command::Run(a) => {
            let scenario = match a.scenario {
                RunScenario::Cosh => Scenario::Cosh,
                RunScenario::Exp => Scenario::Exp,
                RunScenario::Kcomp => Scenario::Kcomp,
            };
            ExperimentSpec {
                k: a.k,
                r: a.r,
                density_x: a.density_x,
                ny: a.ny,
                dt: a.dt,
                tol: a.tol,
                max_steps: a.max_steps,
                beta: a.beta,
                scheme: match a.scheme {
                    SchemeArg::Newton => Scheme::Newton,
                    SchemeArg::Imex => Scheme::Imex,
                    SchemeArg::Explicit => Scheme::Explicit,
                },
                checkpoint_every: a.checkpoint_every,
                resume: a.resume,
                ..ExperimentSpec::new(scenario, a.out)
            }
        }
        Command::Blowdown(a) => ExperimentSpec {
            state: Some(a.state),
            shifts: a.shifts,
            beta: a.beta,
            ..ExperimentSpec::new(Scenario::Blowdown, a.out)
        },
        Command::Lmin(a) => ExperimentSpec {
            k: Some(a.k),
            lambda: a.lambda,
            nodes: a.nodes,
            ..ExperimentSpec::new(Scenario::Lmin, a.out)
        },
    }
}

fn load(cli: Cli) -> Result<ExperimentSpec, Error> {
    match (cli.config, cli.command) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
            ExperimentSpec::from_json(&text)
        }
        (None, Some(cmd)) => Ok(spec_from(cmd)),
        _ => Err(Error::Config("give a subcommand or --config <file>".into())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = load(cli).and_then(|spec| lab::run(&spec).map(|m| (spec, m)));
    match outcome {
        Ok((spec, manifest)) => {
            for v in &manifest.verdicts {
                println!("{}", v.line());
            }
            println!("manifest: {}", spec.out.join("manifest.json").display());
            if manifest.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e @ Error::Config(_)) => {
            eprintln!("segflow: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("segflow: {e}");
            ExitCode::from(1)
        }
    }
}
