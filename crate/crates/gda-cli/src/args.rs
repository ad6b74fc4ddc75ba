//! Command-line surface. Global flags apply to every subcommand; values
//! resolve as flag > config file > default, except the solver, where the
//! `PEP_SDP_SOLVER` environment variable overrides even the flag.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "gda",
    version,
    about = "Gradient descent-ascent laboratory for bilinear matrix games",
    long_about = "Runs alternating/simultaneous projected gradient descent-ascent on zero-sum \
                  matrix games over probability simplices, audits the convergence diagnostics, \
                  assembles worst-case performance-estimation SDPs, and tunes stepsizes."
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args)]
pub struct GlobalArgs {
    /// Experiment config file (TOML or JSON); flags override file values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Base RNG seed; repeat r derives its stream from seed + r [default: 0]
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker pool size [default: available parallelism]
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Output directory root [default: out]
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// External SDP solver command; PEP_SDP_SOLVER overrides this flag
    #[arg(long, global = true, value_name = "CMD")]
    pub solver: Option<String>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run repeated trajectories and aggregate the averaged-iterate gap curves
    Run(RunArgs),
    /// Assemble one worst-case estimation program; solve and verify it when a solver is configured
    Pep(PepArgs),
    /// Optimize the stepsize for a horizon by reciprocal-spaced grid search over solver calls
    Tune(TuneArgs),
    /// Replay one trajectory with full diagnostics and check every tracked invariant
    Audit(AuditArgs),
    /// Materialize a payoff matrix to a plain-text file
    GenGame(GenGameArgs),
    /// Rebuild the data files behind the published figures and tables
    Reproduce(ReproduceArgs),
}

/// Payoff-matrix selection, shared by the trajectory commands. The three
/// sources are mutually exclusive on the command line; a flag-level source
/// overrides whatever source the config file names.
#[derive(Args)]
pub struct GameArgs {
    /// Built-in instance: rps | noninterior3x3
    #[arg(long, value_name = "NAME", conflicts_with_all = ["matrix", "m", "n", "dist"])]
    pub builtin: Option<String>,
    /// Plain-text payoff matrix file ("m n" header line, then rows)
    #[arg(long, value_name = "PATH", conflicts_with_all = ["m", "n", "dist"])]
    pub matrix: Option<PathBuf>,
    /// Ascent player dimension (matrix rows)
    #[arg(long)]
    pub m: Option<usize>,
    /// Descent player dimension (matrix columns)
    #[arg(long)]
    pub n: Option<usize>,
    /// Entry distribution: uniform01 | randint | binary | normal | lognormal | exponential
    #[arg(long, value_name = "NAME")]
    pub dist: Option<String>,
    /// Seed for matrix generation [default: the global seed]
    #[arg(long)]
    pub game_seed: Option<u64>,
}

#[derive(Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// alt | sim [default: alt]
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Constant stepsize [default: 0.01]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Iteration count [default: 1000000]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Independent repeats with derived seeds [default: 10]
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Initial points per repeat: uniform | vertex [default: uniform]
    #[arg(long)]
    pub init: Option<String>,
    /// Log-spaced checkpoint density cap [default: 100]
    #[arg(long, value_name = "N")]
    pub record_per_decade: Option<usize>,
}

#[derive(Args)]
pub struct PepArgs {
    /// alt | sim [default: alt]
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Time horizon T
    #[arg(long, value_name = "T")]
    pub horizon: Option<usize>,
    /// Stepsize the program is assembled for
    #[arg(long)]
    pub eta: Option<f64>,
    /// Only write problem.dat-s and its sidecar manifest; skip solving
    #[arg(long)]
    pub assemble_only: bool,
}

#[derive(Args)]
pub struct TuneArgs {
    /// alt | sim [default: alt]
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Time horizon T
    #[arg(long, value_name = "T")]
    pub horizon: Option<usize>,
    /// Search bracket lower edge [default: 0.5]
    #[arg(long)]
    pub eta_min: Option<f64>,
    /// Search bracket upper edge [default: 2.5]
    #[arg(long)]
    pub eta_max: Option<f64>,
    /// Grid points per round [default: 20]
    #[arg(long)]
    pub points: Option<usize>,
    /// Window half-width in grid spacings [default: 1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Stop once the bracket is at most this wide [default: 0.001]
    #[arg(long)]
    pub tol: Option<f64>,
    /// Round budget [default: 50]
    #[arg(long)]
    pub max_rounds: Option<usize>,
}

#[derive(Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// alt | sim [default: alt]
    #[arg(long)]
    pub algorithm: Option<String>,
    /// Constant stepsize [default: 0.1]
    #[arg(long)]
    pub eta: Option<f64>,
    /// Iteration count [default: 10000]
    #[arg(long)]
    pub steps: Option<usize>,
    /// Initial points: uniform | vertex [default: uniform]
    #[arg(long)]
    pub init: Option<String>,
    /// Probe pairs per step for the descent inequalities [default: 8]
    #[arg(long)]
    pub probes: Option<usize>,
}

#[derive(Args)]
pub struct GenGameArgs {
    #[command(flatten)]
    pub game: GameArgs,
    /// Destination file [default: <out>/gen-game/game.txt]
    #[arg(long, value_name = "PATH")]
    pub out_file: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReproduceArgs {
    /// fig2 | fig3 | fig4 | tables
    pub target: String,
    /// Override the iteration count of the target's protocol
    #[arg(long)]
    pub steps: Option<usize>,
    /// Override the repeat count (fig4)
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Horizons for the stepsize tables, comma-separated (tables)
    #[arg(long, value_delimiter = ',', value_name = "T,...")]
    pub horizons: Option<Vec<usize>>,
    /// Algorithms for the stepsize tables, comma-separated (tables)
    #[arg(long, value_delimiter = ',', value_name = "ALG,...")]
    pub algorithms: Option<Vec<String>>,
}
