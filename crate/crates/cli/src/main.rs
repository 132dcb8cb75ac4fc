use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod output;

#[derive(Debug, Parser)]
#[command(name = "eft", version, about = "Finite extinction time laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Output directory; results go to stdout (manifest to stderr) when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Variant {
    Eft,
    Log,
    F,
    Dini,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Statement {
    Half,
    Theta,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the extinction criterion for a potential.
    Criterion {
        #[arg(long)]
        potential: String,
        #[arg(long)]
        m: usize,
        /// Space dimension.
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Variant::Eft)]
        variant: Variant,
        /// `interval:lo=A,hi=B` or `ball:dim=N,radius=R`; defaults to the unit ball in dimension N.
        #[arg(long)]
        domain: Option<String>,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        /// Exponent of the log-Lp variant.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, value_enum, default_value_t = Statement::Theta)]
        statement: Statement,
        /// Weight of the `f` variant: `power:g` for `s^-g` or `log:g` for `(-ln s)^g`.
        #[arg(long)]
        weight: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Membership of a potential in the class S_phi.
    Sphi {
        #[arg(long)]
        potential: String,
        /// `power:beta=B` or `entropy`.
        #[arg(long)]
        phi: String,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long)]
        domain: Option<String>,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Luxemburg norm (and Hölder check) of tabulated functions.
    OrliczNorm {
        /// CSV with columns `weight,u[,v]`; rows with weight 0 are outside the set.
        #[arg(long)]
        file: PathBuf,
        /// `exp-remainder`, `complementary`, `exppoly:p=P`, `square:F` or `numeric:F`.
        #[arg(long, default_value = "exp-remainder")]
        nfunction: String,
        #[command(flatten)]
        common: Common,
    },
    /// Nonlinear ground-state curve over a grid of masses.
    Lambda1 {
        #[arg(long)]
        potential: String,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        /// `lo:hi:pts`, log-spaced.
        #[arg(long, default_value = "1e-8:1e-2:7")]
        h_grid: String,
        /// Apply the tilde transform with this exponent and report the test-function bound.
        #[arg(long)]
        tilde_alpha: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "interval:lo=-1,hi=1")]
        domain: String,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        /// Interior grid nodes of the discretization.
        #[arg(long, default_value_t = 512)]
        nodes: usize,
        #[arg(long, default_value_t = 4)]
        starts: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Linear Schrödinger level `λ_{1,2}(h)` over a grid of `h`.
    Lambda12 {
        #[arg(long)]
        potential: String,
        #[arg(long, default_value = "1e-8:1e-2:7")]
        h_grid: String,
        #[arg(long, default_value = "interval:lo=-1,hi=1")]
        domain: String,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long, default_value_t = 512)]
        nodes: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Extinction-time bound from a ground-state curve.
    Bound {
        /// `powerlaw:kappa=K,beta=B` or a CSV file with columns `h,lambda`.
        #[arg(long)]
        curve: String,
        #[arg(long)]
        y0: f64,
        /// Also integrate the comparison ODE with this step.
        #[arg(long)]
        dt: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Sum versus integral form of the semiclassical condition.
    Kv {
        /// `synthetic:power=P[,coeff=C]` (λ in depth) or `computed`.
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        #[arg(long, default_value_t = 30)]
        n_max: usize,
        /// Potential for `computed`.
        #[arg(long)]
        potential: Option<String>,
        #[arg(long, default_value = "interval:lo=-1,hi=1")]
        domain: String,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        #[arg(long, default_value_t = 1024)]
        nodes: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run the splitting scheme and write the energy trace and final state.
    Simulate {
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        q: f64,
        #[arg(long, default_value_t = 255)]
        nodes: usize,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 10.0)]
        t_max: f64,
        #[arg(long, default_value = "const:1")]
        potential: String,
        #[arg(long, default_value = "interval:lo=0,hi=1")]
        domain: String,
        #[arg(long, default_value_t = 64)]
        resolution: usize,
        /// `sine`, `zero` or a CSV file of nodal values.
        #[arg(long, default_value = "sine")]
        initial: String,
        #[arg(long, default_value_t = 0.0)]
        eps_rel: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Run the acceptance suite and print a pass/fail table.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let args = match config::expand(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    ExitCode::from(commands::run(cli.command))
}
