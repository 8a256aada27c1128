use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "wbvp",
    version,
    about = "Weighted discrete elliptic boundary value problems"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Assemble the system matrix.
    Assemble {
        #[command(flatten)]
        common: Common,
        /// Also write the dense matrix as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Extreme eigenvalues, full spectrum and positive-definiteness certificate.
    Spectrum {
        #[command(flatten)]
        common: Common,
    },
    /// Compute one critical point.
    Solve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Solve along an ascending list of lambda values.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated lambda values.
        #[arg(long, value_delimiter = ',', conflicts_with = "range")]
        lambdas: Option<Vec<f64>>,
        /// `start:stop:count`, evenly spaced and inclusive.
        #[arg(long)]
        range: Option<String>,
        /// Run independent cold solves on this many threads instead of a
        /// warm-started continuation.
        #[arg(long)]
        threads: Option<usize>,
        /// Also write a CSV table of the sweep.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Lambda thresholds bounding each existence regime.
    Thresholds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        hyp: HypothesisArgs,
    },
    /// Sample the growth hypotheses of the nonlinearity.
    CheckHypotheses {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        hyp: HypothesisArgs,
        /// Hypothesis to check (h1, h2, h2prime, h3, h4, h5, h6); repeatable, all by default.
        #[arg(long = "hypothesis")]
        hypotheses: Vec<String>,
        /// Probe range of |t| as `lo:hi`; per-hypothesis default when absent.
        #[arg(long)]
        range: Option<String>,
        #[arg(long, default_value_t = wbvp_core::regimes::DEFAULT_HYPOTHESIS_SAMPLES)]
        samples: usize,
    },
    /// Run the invariant suite against the loaded instance.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Problem file (JSON).
    #[arg(long)]
    pub problem: PathBuf,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the `lambda` member of the problem file.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Global,
    Sublevel,
    MountainPass,
    Newton,
}

#[derive(Debug, Args)]
pub struct SolverArgs {
    #[arg(long, value_enum, default_value = "global")]
    pub method: MethodArg,
    /// Sup-norm radius for the sublevel method; falls back to the file's `hypotheses.alpha`.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub armijo_c: Option<f64>,
    #[arg(long)]
    pub backtrack_ratio: Option<f64>,
    #[arg(long)]
    pub initial_step: Option<f64>,
    #[arg(long)]
    pub nontrivial_tol: Option<f64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Record the energy and gradient norm of every iterate.
    #[arg(long)]
    pub trace: bool,
    /// Relative shrink of the sublevel radius.
    #[arg(long)]
    pub shrink_eps: Option<f64>,
    /// Interior points of the mountain-pass path.
    #[arg(long)]
    pub path_points: Option<usize>,
    /// Path deformation steps of the mountain-pass method.
    #[arg(long)]
    pub deform_steps: Option<usize>,
}

/// Flag overrides for the file's `hypotheses` member.
#[derive(Debug, Args)]
pub struct HypothesisArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long = "cap-a", allow_negative_numbers = true)]
    pub cap_a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eta: Option<f64>,
}
