//! `ismtrack`: parameter synthesis, certification, path validation and
//! closed-loop simulation from the command line.
//!
//! Exit codes: 0 success, 1 usage/config, 2 validation or infeasibility,
//! 3 certification failure (including invariance violations in a run),
//! 4 runtime abort.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ismtrack::controller::ControlLaw;
use ismtrack::plant::Integrator;

use crate::config::{parse_pair, parse_triple, ModelFlags};

#[derive(Debug, Parser)]
#[command(name = "ismtrack", version, about = "Robust sliding-mode path tracking for Dubins vehicles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print feasibility, the admissible p and q, defaults and the minimum path radius.
    Params(ParamsArgs),
    /// Run closed-loop simulations and write CSV logs plus a summary.
    Simulate(SimulateArgs),
    /// Run the invariance and attractiveness certificates.
    Certify(CertifyArgs),
    /// Check a reference path against the minimum radius.
    ValidatePath(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LawArg {
    Sign,
    Saturated,
}

impl From<LawArg> for ControlLaw {
    fn from(l: LawArg) -> Self {
        match l {
            LawArg::Sign => ControlLaw::Sign,
            LawArg::Saturated => ControlLaw::Saturated,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IntegratorArg {
    Euler,
    Rk4,
}

impl From<IntegratorArg> for Integrator {
    fn from(i: IntegratorArg) -> Self {
        match i {
            IntegratorArg::Euler => Integrator::Euler,
            IntegratorArg::Rk4 => Integrator::Rk4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DisturbanceArg {
    Zero,
    Constant,
    Sinusoid,
    Random,
    Adversarial,
    AdversarialAttraction,
}

/// Model options shared by every command.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// TOML scenario file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bound on the speed disturbance, d̄₁.
    #[arg(long)]
    d1: Option<f64>,
    /// Bound on the turn-rate disturbance, d̄₂.
    #[arg(long)]
    d2: Option<f64>,
    /// Minimum turning radius R [default: 0.8].
    #[arg(long)]
    radius: Option<f64>,
    /// Forward speed v [default: 0.8].
    #[arg(long)]
    speed: Option<f64>,
    /// Invariance margin p [default: smallest admissible].
    #[arg(long)]
    p: Option<f64>,
    /// Attraction parameter q [default: centre of the admissible window].
    #[arg(long)]
    q: Option<f64>,
    /// Boundary-layer width for the saturated law [default: 0.05].
    #[arg(long)]
    phi: Option<f64>,
    /// Normalised lateral intercept (ỹ/R)_d [default: 1].
    #[arg(long)]
    y_intercept: Option<f64>,
    #[arg(long, value_enum)]
    law: Option<LawArg>,
}

impl ModelArgs {
    fn flags(&self) -> ModelFlags {
        ModelFlags {
            d1: self.d1,
            d2: self.d2,
            radius: self.radius,
            speed: self.speed,
            p: self.p,
            q: self.q,
            y_intercept: self.y_intercept,
            phi: self.phi,
            law: self.law.map(Into::into),
        }
    }
}

#[derive(Debug, Args)]
pub struct ParamsArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Print JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Use the built-in benchmark path.
    #[arg(long, conflicts_with = "path")]
    benchmark: bool,
    /// Built-in path name or path file.
    #[arg(long)]
    path: Option<String>,
    /// Run the four benchmark starts.
    #[arg(long, conflicts_with_all = ["start", "pose"])]
    all_starts: bool,
    /// Start as `y_err,theta_err_deg` at the path origin; repeatable.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    start: Vec<(f64, f64)>,
    /// Start as a world pose `x,y,theta_deg`; repeatable.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    pose: Vec<(f64, f64, f64)>,
    /// Disturbance signal [default: random].
    #[arg(long, value_enum)]
    disturbance: Option<DisturbanceArg>,
    /// Seed for the random disturbance.
    #[arg(long)]
    seed: Option<u64>,
    /// Value `d1,d2` for the constant disturbance.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    constant: Option<(f64, f64)>,
    #[arg(long)]
    dt: Option<f64>,
    /// Time limit per run [default: three nominal traversal times].
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long, value_enum)]
    integrator: Option<IntegratorArg>,
    /// Output directory.
    #[arg(long, env = "ISMTRACK_OUT_DIR")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Take the invariance curvature bound from this path.
    #[arg(long)]
    path: Option<String>,
    /// Curvature bound for the invariance check [default: 1/R̲, or the path's].
    #[arg(long)]
    kappa_max: Option<f64>,
    /// Curvature bound for the attractiveness check [default: 1/R].
    #[arg(long)]
    attraction_kappa_max: Option<f64>,
    #[arg(long, default_value_t = ismtrack::invariant::DEFAULT_BOUNDARY_SAMPLES)]
    boundary_samples: usize,
    #[arg(long, default_value_t = ismtrack::invariant::DEFAULT_REGION_GRID)]
    grid: usize,
    /// Output directory for certificate.json.
    #[arg(long, env = "ISMTRACK_OUT_DIR")]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Built-in path name or path file.
    spec: String,
    #[command(flatten)]
    model: ModelArgs,
    /// Minimum radius to check against [default: R̲ from the controller].
    #[arg(long)]
    r_lower: Option<f64>,
    /// Neighborhood for the uniqueness audit [default: R].
    #[arg(long)]
    neighborhood: Option<f64>,
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Params(a) => commands::params(&a),
        Command::Simulate(a) => commands::simulate(&a),
        Command::Certify(a) => commands::certify(&a),
        Command::ValidatePath(a) => commands::validate_path(&a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {:#}", e.error);
            ExitCode::from(e.code)
        }
    }
}
