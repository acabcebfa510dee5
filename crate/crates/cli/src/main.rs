use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kndirac::geometry::Branch;
use kndirac_cli::{run, Overrides, RunConfig, Task};

#[derive(Parser)]
#[command(name = "kndirac", version, about = "Dirac fields on Kerr-Newman: verification suites and mode solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Horizon radii and tortoise coordinate samples.
    Horizons(Flags),
    /// Null tetrad normalization and temporal-function minors at random points.
    TetradCheck(Flags),
    /// Clifford relation, spin-connection term, stencils and separation at random points.
    DiracVerify(Flags),
    /// Angular eigenvalues and eigenfunctions.
    Angular(Flags),
    /// Radial trajectories on one branch.
    Radial(Flags),
    /// Asymptotic fits at infinity and at the Cauchy horizon.
    Asymptotics(Flags),
}

#[derive(Args)]
struct Flags {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    k: Option<f64>,
    #[arg(long)]
    mass: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    xi: Option<f64>,
    #[arg(long = "M")]
    big_m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long = "Q", allow_hyphen_values = true)]
    q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rstar_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rstar_max: Option<f64>,
    #[arg(long, value_parser = parse_branch)]
    branch: Option<Branch>,
}

fn parse_branch(s: &str) -> Result<Branch, String> {
    s.parse().map_err(|e: kndirac::Error| e.to_string())
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            tol: self.tol,
            omega: self.omega,
            k: self.k,
            mass: self.mass,
            xi: self.xi,
            big_m: self.big_m,
            a: self.a,
            q: self.q,
            rstar_min: self.rstar_min,
            rstar_max: self.rstar_max,
            branch: self.branch,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (task, flags) = match &cli.command {
        Command::Horizons(f) => (Task::Horizons, f),
        Command::TetradCheck(f) => (Task::TetradCheck, f),
        Command::DiracVerify(f) => (Task::DiracVerify, f),
        Command::Angular(f) => (Task::Angular, f),
        Command::Radial(f) => (Task::Radial, f),
        Command::Asymptotics(f) => (Task::Asymptotics, f),
    };
    let mut cfg = match &flags.config {
        Some(path) => match RunConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(e.exit_code() as u8);
            }
        },
        None => RunConfig::default(),
    };
    cfg.apply(&flags.overrides());
    match run(task, &cfg) {
        Ok((files, report)) => {
            for f in &files {
                println!("{}", f.display());
            }
            for c in report.checks.iter().filter(|c| !c.pass) {
                eprintln!("FAIL {}: {:e}", c.name, c.value);
            }
            ExitCode::from(if report.passed() { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
