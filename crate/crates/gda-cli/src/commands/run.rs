//! `gda run`: repeated trajectories from derived seeds, per-repeat trace
//! CSVs, and an aggregate report whose mean/std columns are exactly
//! recomputable from the stored per-repeat curves.

use std::io::Write;
use std::time::Instant;

use gda_core::dynamics::{log_checkpoints, run_at_checkpoints, write_trace_csv, RunConfig};
use gda_core::equilibrium::{solve_equilibrium_max_support, MAX_ENUM_ACTIONS};
use gda_core::parallel::par_map;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::RunArgs;
use crate::common::{mean_std, parse_algorithm, resolve_game, write_json, Ctx, GameChoice, InitKind, Manifest};
use crate::config::pick;
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct RunParams {
    game: GameChoice,
    algorithm: String,
    eta: f64,
    steps: usize,
    repeats: usize,
    init: String,
    record_per_decade: usize,
}

/// Aggregate benchmark output: checkpointed per-repeat gap curves plus
/// their mean and sample standard deviation (recomputable to the digit
/// from `per_repeat_gap`), with run metadata.
#[derive(Serialize)]
struct BenchmarkReport<'a> {
    #[serde(flatten)]
    params: &'a RunParams,
    base_seed: u64,
    checkpoints: &'a [usize],
    per_repeat_gap: &'a [Vec<f64>],
    gap_mean: Vec<f64>,
    gap_std: Vec<f64>,
    version: &'static str,
    wall_time_s: f64,
}

pub fn execute(ctx: &Ctx, args: &RunArgs) -> CliResult<()> {
    let started = Instant::now();
    let sec = &ctx.file.run;
    let (a, choice) = resolve_game(&args.game, &ctx.file.game, ctx.seed)?;
    let algorithm = parse_algorithm(&pick(
        args.algorithm.clone(),
        sec.algorithm.clone(),
        "alt".into(),
    ))?;
    let eta = pick(args.eta, sec.eta, 0.01);
    let steps = pick(args.steps, sec.steps, 1_000_000);
    let repeats = pick(args.repeats, sec.repeats, 10);
    if repeats == 0 {
        return Err(CliError::Config("--repeats must be at least 1".into()));
    }
    let init = InitKind::parse(&pick(args.init.clone(), sec.init.clone(), "uniform".into()))?;
    let per_decade = pick(args.record_per_decade, sec.record_per_decade, 100);
    if per_decade == 0 {
        return Err(CliError::Config("--record-per-decade must be at least 1".into()));
    }

    let dir = ctx.command_dir("run")?;
    let params = RunParams {
        game: choice,
        algorithm: algorithm.name().into(),
        eta,
        steps,
        repeats,
        init: init.name().into(),
        record_per_decade: per_decade,
    };
    Manifest::new(ctx, "run", &params)?.write(&dir)?;

    // Energies and regions need a verified reference equilibrium; it only
    // exists for games small enough for support enumeration, so it is
    // attached opportunistically.
    let reference = if a.rows().max(a.cols()) <= MAX_ENUM_ACTIONS {
        solve_equilibrium_max_support(&a).ok()
    } else {
        None
    };
    let checkpoints = log_checkpoints(steps, per_decade);

    let reps: Vec<u64> = (0..repeats as u64).collect();
    let traces = par_map(&reps, |&r| -> gda_core::Result<_> {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed.wrapping_add(r));
        let (x0, y0) = init.draw(a.rows(), a.cols(), &mut rng)?;
        let cfg = RunConfig {
            reference: reference.clone(),
            ..RunConfig::new(algorithm, eta, steps, x0, y0)
        };
        run_at_checkpoints(&a, &cfg, &checkpoints)
    });

    let mut per_repeat_gap: Vec<Vec<f64>> = Vec::with_capacity(repeats);
    for (r, traced) in traces.into_iter().enumerate() {
        let trace = traced?;
        write_trace_csv(&dir.join(format!("repeat_{r:02}.csv")), &trace)?;
        per_repeat_gap.push(trace.diagnostics.iter().map(|d| d.gap_avg).collect());
    }
    let (gap_mean, gap_std) = mean_std(&per_repeat_gap);

    let summary = dir.join("summary.csv");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&summary)?);
    writeln!(f, "t,gap_mean,gap_std")?;
    for (i, &t) in checkpoints.iter().enumerate() {
        writeln!(f, "{t},{:.16e},{:.16e}", gap_mean[i], gap_std[i])?;
    }
    f.flush()?;

    let final_mean = *gap_mean.last().unwrap_or(&f64::NAN);
    let report = BenchmarkReport {
        params: &params,
        base_seed: ctx.seed,
        checkpoints: &checkpoints,
        per_repeat_gap: &per_repeat_gap,
        gap_mean,
        gap_std,
        version: env!("CARGO_PKG_VERSION"),
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("report.json"), &report)?;

    println!(
        "run: {} eta={eta} T={steps} repeats={repeats} -> mean final gap {final_mean:.6e} ({})",
        report.params.algorithm,
        dir.display()
    );
    Ok(())
}
