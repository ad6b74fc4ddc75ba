//! `gda tune`: reciprocal-grid stepsize search over verified solver calls
//! for one horizon, exporting the result row and the full round trace.

use std::time::Instant;

use gda_core::pep::{pep_value, PepSpec};
use gda_core::search::{optimize_stepsize, write_search_csv, SearchConfig, SearchRow};
use serde::Serialize;

use crate::args::TuneArgs;
use crate::common::{parse_algorithm, write_json, Ctx, Manifest};
use crate::config::{need, pick};
use crate::error::CliResult;

#[derive(Serialize)]
struct TuneParams {
    algorithm: String,
    horizon: usize,
    eta_min: f64,
    eta_max: f64,
    points: usize,
    alpha: f64,
    tol: f64,
    max_rounds: usize,
}

pub fn execute(ctx: &Ctx, args: &TuneArgs) -> CliResult<()> {
    let started = Instant::now();
    let sec = &ctx.file.search;
    let algorithm =
        parse_algorithm(&pick(args.algorithm.clone(), ctx.file.pep.algorithm.clone(), "alt".into()))?;
    let horizon = need(args.horizon, ctx.file.pep.horizon, "--horizon (time horizon T)")?;
    let cfg = SearchConfig {
        points: pick(args.points, sec.points, 20),
        alpha: pick(args.alpha, sec.alpha, 1.0),
        eps_eta: pick(args.tol, sec.tol, 1e-3),
        max_rounds: pick(args.max_rounds, sec.max_rounds, 50),
        ..SearchConfig::new(pick(args.eta_min, sec.eta_min, 0.5), pick(args.eta_max, sec.eta_max, 2.5))
    };

    let solver = ctx.solver_required("stepsize tuning")?;
    let dir = ctx.command_dir("tune")?;
    let params = TuneParams {
        algorithm: algorithm.name().into(),
        horizon,
        eta_min: cfg.eta_min,
        eta_max: cfg.eta_max,
        points: cfg.points,
        alpha: cfg.alpha,
        tol: cfg.eps_eta,
        max_rounds: cfg.max_rounds,
    };
    Manifest::new(ctx, "tune", &params)?.write(&dir)?;

    let outcome = optimize_stepsize(&cfg, |eta| {
        let spec = PepSpec::new(algorithm, horizon, eta)?;
        pep_value(&spec, &solver)
    })?;

    let row = SearchRow {
        t: horizon,
        algorithm: algorithm.name().into(),
        eta_star: outcome.eta_star,
        value: outcome.value,
        solver_calls: outcome.solver_calls,
        rounds: outcome.rounds,
    };
    write_search_csv(&dir.join("search.csv"), std::slice::from_ref(&row))?;
    write_json(&dir.join("rounds.json"), &outcome)?;
    if !outcome.converged {
        eprintln!(
            "warning: bracket still {:.3e} wide after {} rounds (tol {:.1e})",
            outcome.trace.last().map_or(f64::NAN, |r| r.eta_max - r.eta_min),
            outcome.rounds,
            cfg.eps_eta
        );
    }
    println!(
        "tune: {} T={horizon} -> eta*={:.4} value={:.4} ({} solver calls, {} rounds, {:.1}s, {})",
        params.algorithm,
        outcome.eta_star,
        outcome.value,
        outcome.solver_calls,
        outcome.rounds,
        started.elapsed().as_secs_f64(),
        dir.display()
    );
    Ok(())
}
