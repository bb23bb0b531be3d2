use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use flrw_blowup::runner::{self, Command, Outcome, EXIT_ERROR, WORKERS_ENV};
use flrw_blowup::scenario::{load_scenario, load_sweep};
use flrw_blowup::Result;

#[derive(Parser)]
#[command(
    name = "flrw-blowup",
    version,
    about = "Blow-up certificates and simulations on FLRW backgrounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate the blow-up certificate.
    Analyze(Opts),
    /// Integrate the comparison ODE and check the growth properties.
    Ode(Opts),
    /// Solve the radial PDE and record observables.
    Pde(Opts),
    /// Solve the PDE and check support containment in the forward cone.
    ConeCheck(Opts),
    /// Certify every point of a parameter grid.
    Sweep(Opts),
}

#[derive(Args)]
struct Opts {
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory (default: the scenario's run.output, else the current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Sweep worker count.
    #[arg(long, env = WORKERS_ENV)]
    workers: Option<usize>,
    /// Override run.grid_h.
    #[arg(long)]
    grid_h: Option<f64>,
    /// Override run.t_end.
    #[arg(long)]
    t_end: Option<f64>,
}

fn out_dir(opts: &Opts, configured: Option<&String>) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| configured.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn execute(cli: Cli) -> Result<Outcome> {
    let (command, opts) = match cli.command {
        Cmd::Analyze(o) => (Some(Command::Analyze), o),
        Cmd::Ode(o) => (Some(Command::Ode), o),
        Cmd::Pde(o) => (Some(Command::Pde), o),
        Cmd::ConeCheck(o) => (Some(Command::ConeCheck), o),
        Cmd::Sweep(o) => (None, o),
    };
    match command {
        Some(command) => {
            let mut scenario = load_scenario(&opts.scenario)?;
            if let Some(h) = opts.grid_h {
                scenario.run.grid_h = h;
            }
            if let Some(t) = opts.t_end {
                scenario.run.t_end = t;
            }
            scenario.validate()?;
            let out = out_dir(&opts, scenario.run.output.as_ref());
            runner::run(command, &scenario, &out)
        }
        None => {
            let mut spec = load_sweep(&opts.scenario)?;
            if let Some(h) = opts.grid_h {
                spec.base.run.grid_h = h;
            }
            if let Some(t) = opts.t_end {
                spec.base.run.t_end = t;
            }
            let workers = runner::resolve_workers(opts.workers, &spec);
            let out = out_dir(&opts, spec.base.run.output.as_ref());
            runner::run_sweep(&spec, workers, &out)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(outcome) => {
            println!("{}", outcome.message);
            for a in &outcome.artifacts {
                println!("wrote {}", a.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
