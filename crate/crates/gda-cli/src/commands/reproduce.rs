//! `gda reproduce`: rebuild the data files behind the published figures
//! and tables.
//!
//! * `fig2` — the interior showcase: alternating updates on rock-paper-
//!   scissors from the vertex pair (e1, e2) at eta = 0.01, emitting the
//!   ternary trajectories and the checkpointed gap/energy curves. The
//!   energy column is non-increasing throughout.
//! * `fig3` — the non-interior counterexample 3x3 instance from the
//!   uniform profile, recorded densely (default 20000 steps) so the
//!   strictly increasing energy steps are visible in the emitted curve.
//! * `fig4` — the six-distribution benchmark: 10x20 games, both update
//!   rules, repeated from derived seeds; one CSV per distribution with
//!   mean/std gap curves.
//! * `tables` — optimized stepsizes per horizon via grid search over
//!   verified solver calls (needs a configured SDP solver; budget-gated,
//!   defaulting to the alternating T = 6 row).

use std::io::Write as _;

use gda_core::dynamics::{
    log_checkpoints, run, run_at_checkpoints, write_trace_csv, Algorithm, RunConfig,
};
use gda_core::equilibrium::solve_equilibrium_max_support;
use gda_core::game::{generate_game, Distribution, GameSpec, MixedStrategy};
use gda_core::matrix::{noninterior_3x3, rock_paper_scissors};
use gda_core::parallel::par_map;
use gda_core::pep::{pep_value, PepSpec};
use gda_core::search::{optimize_stepsize, write_search_csv, SearchConfig, SearchRow};
use gda_core::PayoffMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::ReproduceArgs;
use crate::common::{mean_std, parse_algorithm, Ctx, Manifest};
use crate::config::pick;
use crate::error::{CliError, CliResult};

/// Stepsize of the published trajectory and benchmark protocols.
const PROTOCOL_ETA: f64 = 0.01;
/// Checkpoint density of the emitted curves.
const PER_DECADE: usize = 100;
/// Row cap for the ternary trajectory files.
const TRAJECTORY_ROWS: usize = 20_000;

pub fn execute(ctx: &Ctx, args: &ReproduceArgs) -> CliResult<()> {
    match args.target.as_str() {
        "fig2" => fig2(ctx, args),
        "fig3" => fig3(ctx, args),
        "fig4" => fig4(ctx, args),
        "tables" => tables(ctx, args),
        other => Err(CliError::Config(format!(
            "unknown reproduce target {other:?}, want fig2|fig3|fig4|tables"
        ))),
    }
}

#[derive(Serialize)]
struct TrajectoryParams {
    target: &'static str,
    game: &'static str,
    algorithm: &'static str,
    eta: f64,
    steps: usize,
    init: &'static str,
}

/// Writes one player's trajectory in barycentric coordinates, downsampled
/// to at most [`TRAJECTORY_ROWS`] rows (the initial point and the final
/// iterate are always included).
fn write_trajectory(
    path: &std::path::Path,
    iterates: &[(Vec<f64>, Vec<f64>)],
    pick_x: bool,
) -> CliResult<()> {
    let dim = if pick_x { iterates[0].0.len() } else { iterates[0].1.len() };
    let stride = (iterates.len() - 1).div_ceil(TRAJECTORY_ROWS).max(1);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "t")?;
    for i in 1..=dim {
        write!(f, ",c{i}")?;
    }
    writeln!(f)?;
    let last = iterates.len() - 1;
    for t in (0..=last).step_by(stride).chain((last % stride != 0).then_some(last)) {
        let point = if pick_x { &iterates[t].0 } else { &iterates[t].1 };
        write!(f, "{t}")?;
        for c in point {
            write!(f, ",{c:.16e}")?;
        }
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

fn fig2(ctx: &Ctx, args: &ReproduceArgs) -> CliResult<()> {
    let steps = pick(args.steps, ctx.file.reproduce.steps, 1_000_000);
    let dir = ctx.command_dir("reproduce/fig2")?;
    let a = rock_paper_scissors();
    let reference = Some(solve_equilibrium_max_support(&a)?);
    let cfg = RunConfig {
        reference,
        store_iterates: true,
        ..RunConfig::new(
            Algorithm::Alternating,
            PROTOCOL_ETA,
            steps,
            MixedStrategy::vertex(3, 0)?,
            MixedStrategy::vertex(3, 1)?,
        )
    };
    let trace = run_at_checkpoints(&a, &cfg, &log_checkpoints(steps, PER_DECADE))?;
    write_trace_csv(&dir.join("trace.csv"), &trace)?;
    let iterates = trace.iterates.as_ref().expect("trajectory requested");
    write_trajectory(&dir.join("trajectory_x.csv"), iterates, true)?;
    write_trajectory(&dir.join("trajectory_y.csv"), iterates, false)?;
    let params = TrajectoryParams {
        target: "fig2",
        game: "rock-paper-scissors",
        algorithm: "alt",
        eta: PROTOCOL_ETA,
        steps,
        init: "x0 = e1, y0 = e2",
    };
    Manifest::new(ctx, "reproduce", &params)?.write(&dir)?;
    println!(
        "reproduce fig2: T={steps} final averaged gap {:.4e} ({})",
        trace.final_gap(),
        dir.display()
    );
    Ok(())
}

fn fig3(ctx: &Ctx, args: &ReproduceArgs) -> CliResult<()> {
    let steps = pick(args.steps, ctx.file.reproduce.steps, 20_000);
    let dir = ctx.command_dir("reproduce/fig3")?;
    let a = noninterior_3x3();
    let reference = Some(solve_equilibrium_max_support(&a)?);
    // Dense recording: the energy rises on this instance are ~1e-6 sized
    // and cancel against the decay between sparse checkpoints.
    let cfg = RunConfig {
        reference,
        store_iterates: true,
        record_stride: steps.div_ceil(100_000).max(1),
        ..RunConfig::new(
            Algorithm::Alternating,
            PROTOCOL_ETA,
            steps,
            MixedStrategy::uniform(3)?,
            MixedStrategy::uniform(3)?,
        )
    };
    let trace = run(&a, &cfg)?;
    write_trace_csv(&dir.join("trace.csv"), &trace)?;
    let iterates = trace.iterates.as_ref().expect("trajectory requested");
    write_trajectory(&dir.join("trajectory_x.csv"), iterates, true)?;
    write_trajectory(&dir.join("trajectory_y.csv"), iterates, false)?;
    let params = TrajectoryParams {
        target: "fig3",
        game: "non-interior 3x3 instance",
        algorithm: "alt",
        eta: PROTOCOL_ETA,
        steps,
        init: "x0 = y0 = uniform",
    };
    Manifest::new(ctx, "reproduce", &params)?.write(&dir)?;
    println!(
        "reproduce fig3: T={steps} final averaged gap {:.4e} ({})",
        trace.final_gap(),
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct Fig4Params {
    target: &'static str,
    rows: usize,
    cols: usize,
    eta: f64,
    steps: usize,
    repeats: usize,
    games: Vec<GameSpec>,
    init: &'static str,
}

fn fig4(ctx: &Ctx, args: &ReproduceArgs) -> CliResult<()> {
    let steps = pick(args.steps, ctx.file.reproduce.steps, 1_000_000);
    let repeats = pick(args.repeats, ctx.file.reproduce.repeats, 10);
    if repeats == 0 {
        return Err(CliError::Config("--repeats must be at least 1".into()));
    }
    let (rows, cols) = (10usize, 20usize);
    let dir = ctx.command_dir("reproduce/fig4")?;
    let checkpoints = log_checkpoints(steps, PER_DECADE);

    let specs: Vec<GameSpec> = Distribution::NAMED
        .iter()
        .enumerate()
        .map(|(d, dist)| GameSpec::random(rows, cols, *dist, ctx.seed + 100 + d as u64))
        .collect();
    let games: Vec<PayoffMatrix> =
        specs.iter().map(generate_game).collect::<gda_core::Result<_>>()?;

    // One task per (distribution, rule, repeat); repeats share the same
    // derived initial points across rules so the comparison is paired.
    let mut tasks = Vec::new();
    for d in 0..games.len() {
        for alg in [Algorithm::Alternating, Algorithm::Simultaneous] {
            for r in 0..repeats as u64 {
                tasks.push((d, alg, r));
            }
        }
    }
    let outcomes = par_map(&tasks, |&(d, alg, r)| -> gda_core::Result<Vec<f64>> {
        let a = &games[d];
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed.wrapping_add(r));
        let x0 = MixedStrategy::sample_uniform(a.cols(), &mut rng)?;
        let y0 = MixedStrategy::sample_uniform(a.rows(), &mut rng)?;
        let cfg = RunConfig::new(alg, PROTOCOL_ETA, steps, x0, y0);
        let trace = run_at_checkpoints(a, &cfg, &checkpoints)?;
        Ok(trace.diagnostics.iter().map(|g| g.gap_avg).collect())
    });
    let mut curves = Vec::with_capacity(outcomes.len());
    for c in outcomes {
        curves.push(c?);
    }

    for (d, spec) in specs.iter().enumerate() {
        let mut per_alg: [Vec<Vec<f64>>; 2] = [Vec::new(), Vec::new()];
        for (i, &(td, alg, _)) in tasks.iter().enumerate() {
            if td == d {
                let idx = usize::from(alg == Algorithm::Simultaneous);
                per_alg[idx].push(curves[i].clone());
            }
        }
        let (alt_mean, alt_std) = mean_std(&per_alg[0]);
        let (sim_mean, sim_std) = mean_std(&per_alg[1]);
        let path = dir.join(format!("{}.csv", spec.distribution.name()));
        let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
        writeln!(f, "t,alt_gap_mean,alt_gap_std,sim_gap_mean,sim_gap_std")?;
        for (i, &t) in checkpoints.iter().enumerate() {
            writeln!(
                f,
                "{t},{:.16e},{:.16e},{:.16e},{:.16e}",
                alt_mean[i], alt_std[i], sim_mean[i], sim_std[i]
            )?;
        }
        f.flush()?;
    }

    let params = Fig4Params {
        target: "fig4",
        rows,
        cols,
        eta: PROTOCOL_ETA,
        steps,
        repeats,
        games: specs,
        init: "uniform simplex, repeat r seeded seed + r (shared across rules)",
    };
    Manifest::new(ctx, "reproduce", &params)?.write(&dir)?;
    println!(
        "reproduce fig4: {} distributions x 2 rules x {repeats} repeats, T={steps} ({})",
        games.len(),
        dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct TablesParams {
    target: &'static str,
    horizons: Vec<usize>,
    algorithms: Vec<String>,
    eta_min: f64,
    eta_max: f64,
    points: usize,
    alpha: f64,
    tol: f64,
    max_rounds: usize,
}

fn tables(ctx: &Ctx, args: &ReproduceArgs) -> CliResult<()> {
    let solver = ctx.solver_required("reproducing the stepsize tables")?;
    let horizons = args
        .horizons
        .clone()
        .or(ctx.file.reproduce.horizons.clone())
        .unwrap_or_else(|| vec![6]);
    let alg_names = args
        .algorithms
        .clone()
        .or(ctx.file.reproduce.algorithms.clone())
        .unwrap_or_else(|| vec!["alt".into()]);
    let algorithms: Vec<Algorithm> =
        alg_names.iter().map(|s| parse_algorithm(s)).collect::<CliResult<_>>()?;
    if horizons.is_empty() || algorithms.is_empty() {
        return Err(CliError::Config("tables needs at least one horizon and algorithm".into()));
    }
    let sec = &ctx.file.search;
    let cfg = SearchConfig {
        points: sec.points.unwrap_or(20),
        alpha: sec.alpha.unwrap_or(1.0),
        eps_eta: sec.tol.unwrap_or(1e-3),
        max_rounds: sec.max_rounds.unwrap_or(50),
        ..SearchConfig::new(sec.eta_min.unwrap_or(0.5), sec.eta_max.unwrap_or(2.5))
    };

    let dir = ctx.command_dir("reproduce/tables")?;
    let params = TablesParams {
        target: "tables",
        horizons: horizons.clone(),
        algorithms: alg_names.clone(),
        eta_min: cfg.eta_min,
        eta_max: cfg.eta_max,
        points: cfg.points,
        alpha: cfg.alpha,
        tol: cfg.eps_eta,
        max_rounds: cfg.max_rounds,
    };
    Manifest::new(ctx, "reproduce", &params)?.write(&dir)?;

    let mut rows = Vec::new();
    for &alg in &algorithms {
        for &t in &horizons {
            let outcome = optimize_stepsize(&cfg, |eta| {
                let spec = PepSpec::new(alg, t, eta)?;
                pep_value(&spec, &solver)
            })?;
            println!(
                "reproduce tables: {} T={t} -> eta*={:.4} value={:.4} ({} solver calls)",
                alg.name(),
                outcome.eta_star,
                outcome.value,
                outcome.solver_calls
            );
            rows.push(SearchRow {
                t,
                algorithm: alg.name().into(),
                eta_star: outcome.eta_star,
                value: outcome.value,
                solver_calls: outcome.solver_calls,
                rounds: outcome.rounds,
            });
        }
    }
    write_search_csv(&dir.join("search.csv"), &rows)?;
    println!("reproduce tables: {} rows ({})", rows.len(), dir.display());
    Ok(())
}
