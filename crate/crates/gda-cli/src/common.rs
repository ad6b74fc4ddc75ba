//! Shared plumbing: resolved global context, game selection, derived-seed
//! initial points, aggregate statistics, and manifest writing.

use std::path::{Path, PathBuf};

use gda_core::dynamics::Algorithm;
use gda_core::game::{generate_game, Distribution, GameSpec, MixedStrategy};
use gda_core::matrix::{noninterior_3x3, rock_paper_scissors};
use gda_core::pep::SolverCommand;
use gda_core::PayoffMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{GameArgs, GlobalArgs};
use crate::config::{FileConfig, GameSection};
use crate::error::{CliError, CliResult};

/// Globals resolved from flags, the config file, and defaults. Seeds derive
/// from `seed` (repeat `r` uses `seed + r`); `jobs` caps the worker pool.
pub struct Ctx {
    pub file: FileConfig,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    /// Solver preference from flag/file; the environment variable still
    /// overrides it inside [`Ctx::solver`].
    pub solver_pref: Option<String>,
}

impl Ctx {
    pub fn prepare(global: &GlobalArgs) -> CliResult<Self> {
        let file = match &global.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let seed = global.seed.or(file.seed).unwrap_or(0);
        let jobs = global
            .jobs
            .or(file.jobs)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()));
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        let out = global.out.clone().or(file.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
        let solver_pref = global.solver.clone().or(file.solver.clone());
        gda_core::parallel::configure_threads(Some(jobs));
        Ok(Ctx { file, seed, jobs, out, solver_pref })
    }

    /// Resolved solver command: `PEP_SDP_SOLVER` first, then `--solver`,
    /// then the config file. `None` when nothing is configured.
    pub fn solver(&self) -> CliResult<Option<SolverCommand>> {
        SolverCommand::resolve(self.solver_pref.as_deref()).map_err(CliError::from)
    }

    /// Like [`Ctx::solver`] but turns an unconfigured solver into an
    /// actionable configuration error for commands that cannot proceed
    /// without one.
    pub fn solver_required(&self, purpose: &str) -> CliResult<SolverCommand> {
        self.solver()?.ok_or_else(|| {
            CliError::Config(format!(
                "{purpose} needs an external SDP solver; pass --solver \"<command>\", set \
                 solver = \"<command>\" in the config file, or export \
                 PEP_SDP_SOLVER=\"<command>\" (e.g. \"csdp\" or \
                 \"python3 tools/sdpa_solver.py\")"
            ))
        })
    }

    /// Creates and returns the per-command experiment directory.
    pub fn command_dir(&self, name: &str) -> CliResult<PathBuf> {
        let dir = self.out.join(name);
        std::fs::create_dir_all(&dir).map_err(|e| {
            CliError::Config(format!("cannot create output directory {}: {e}", dir.display()))
        })?;
        Ok(dir)
    }
}

/// How the payoff matrix was chosen, echoed into manifests and reports.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GameChoice {
    Builtin { name: String },
    Matrix { path: PathBuf },
    Generated { spec: GameSpec },
}

/// Resolves the payoff matrix. A source named on the command line overrides
/// whatever source the config file names; the file is consulted only when no
/// game flag is present (clap already rejects two flag-level sources). Within
/// the file the precedence is builtin, then matrix, then the generated-game
/// fields. Generated-game parameters merge per field, flags over file.
pub fn resolve_game(
    args: &GameArgs,
    sec: &GameSection,
    default_seed: u64,
) -> CliResult<(PayoffMatrix, GameChoice)> {
    let flag_source = args.builtin.is_some()
        || args.matrix.is_some()
        || args.m.is_some()
        || args.n.is_some()
        || args.dist.is_some();
    let builtin = args.builtin.as_ref().or_else(|| {
        (!flag_source).then_some(sec.builtin.as_ref()).flatten()
    });
    if let Some(name) = builtin {
        let a = match name.as_str() {
            "rps" => rock_paper_scissors(),
            "noninterior3x3" => noninterior_3x3(),
            other => {
                return Err(CliError::Config(format!(
                    "unknown builtin game {other:?}, want rps|noninterior3x3"
                )))
            }
        };
        return Ok((a, GameChoice::Builtin { name: name.clone() }));
    }
    let matrix = args.matrix.as_ref().or_else(|| {
        (!flag_source).then_some(sec.matrix.as_ref()).flatten()
    });
    if let Some(path) = matrix {
        let a = PayoffMatrix::read_file(path)
            .map_err(|e| CliError::Config(format!("matrix file {}: {e}", path.display())))?;
        return Ok((a, GameChoice::Matrix { path: path.clone() }));
    }
    let m = crate::config::need(args.m, sec.m, "--m (ascent player dimension)")?;
    let n = crate::config::need(args.n, sec.n, "--n (descent player dimension)")?;
    let dist_name = crate::config::need(
        args.dist.clone(),
        sec.dist.clone(),
        "--dist (uniform01|randint|binary|normal|lognormal|exponential)",
    )?;
    let dist = Distribution::parse(&dist_name).map_err(CliError::from)?;
    if dist == Distribution::Explicit {
        return Err(CliError::Config(
            "explicit games come from --matrix files, not --dist explicit".into(),
        ));
    }
    let game_seed = crate::config::pick(args.game_seed, sec.game_seed, default_seed);
    let spec = GameSpec::random(m, n, dist, game_seed);
    let a = generate_game(&spec)?;
    Ok((a, GameChoice::Generated { spec }))
}

/// Initial-point scheme for benchmark repeats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// Uniform-random simplex points (exponential normalization).
    Uniform,
    /// Uniformly chosen simplex vertices.
    Vertex,
}

impl InitKind {
    pub fn parse(s: &str) -> CliResult<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "vertex" => Ok(Self::Vertex),
            other => Err(CliError::Config(format!("unknown init {other:?}, want uniform|vertex"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Uniform => "uniform",
            Self::Vertex => "vertex",
        }
    }

    /// Draws `(x0, y0)` for a repeat; the descent point (dimension `n`) is
    /// drawn first.
    pub fn draw(
        self,
        m: usize,
        n: usize,
        rng: &mut ChaCha8Rng,
    ) -> gda_core::Result<(MixedStrategy, MixedStrategy)> {
        match self {
            Self::Uniform => {
                let x0 = MixedStrategy::sample_uniform(n, rng)?;
                let y0 = MixedStrategy::sample_uniform(m, rng)?;
                Ok((x0, y0))
            }
            Self::Vertex => {
                let x0 = MixedStrategy::vertex(n, rng.random_range(0..n))?;
                let y0 = MixedStrategy::vertex(m, rng.random_range(0..m))?;
                Ok((x0, y0))
            }
        }
    }
}

pub fn parse_algorithm(s: &str) -> CliResult<Algorithm> {
    Algorithm::parse(s).map_err(CliError::from)
}

/// Per-checkpoint mean and sample standard deviation across repeats
/// (`ddof = 1`; a single repeat reports zero deviation).
pub fn mean_std(per_repeat: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let reps = per_repeat.len();
    let cols = per_repeat.first().map_or(0, Vec::len);
    let mut mean = vec![0.0; cols];
    let mut std = vec![0.0; cols];
    for c in 0..cols {
        let mut sum = 0.0;
        for row in per_repeat {
            sum += row[c];
        }
        let mu = sum / reps as f64;
        mean[c] = mu;
        if reps > 1 {
            let mut ss = 0.0;
            for row in per_repeat {
                let d = row[c] - mu;
                ss += d * d;
            }
            std[c] = (ss / (reps - 1) as f64).sqrt();
        }
    }
    (mean, std)
}

/// Writes a pretty-printed JSON document with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serialization error: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// The per-experiment manifest: the full resolved configuration for the
/// invocation, enough to rerun it byte-for-byte.
#[derive(Serialize)]
pub struct Manifest<P: Serialize> {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub jobs: usize,
    pub out: PathBuf,
    pub solver: Option<String>,
    pub params: P,
}

impl<P: Serialize> Manifest<P> {
    pub fn new(ctx: &Ctx, command: &str, params: P) -> CliResult<Self> {
        let solver = ctx.solver()?.map(|c| {
            let mut parts = vec![c.program];
            parts.extend(c.args);
            parts.join(" ")
        });
        Ok(Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: ctx.seed,
            jobs: ctx.jobs,
            out: ctx.out.clone(),
            solver,
            params,
        })
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        write_json(&dir.join("manifest.json"), self)
    }
}
