//! `gda audit`: replay one trajectory with every iterate kept and evaluate
//! each tracked invariant, reporting the worst slack per invariant. Rows
//! outside their validity regime (wrong update rule, stepsize above the
//! interior threshold, inits outside the local region) are reported as
//! skipped, not failed; the exit code is nonzero exactly when an asserted
//! row fails.

use std::time::Instant;

use gda_core::dynamics::{
    descent_slack_phi, descent_slack_psi, energy, energy_variant, gap_bound_interior,
    gap_bound_local, interior_stepsize_bound, residual, run, Algorithm, IterateTrace, RunConfig,
};
use gda_core::equilibrium::{solve_equilibrium_max_support, EquilibriumProfile, MAX_ENUM_ACTIONS};
use gda_core::game::{duality_gap, MixedStrategy};
use gda_core::projection::{decompose_update, project_affine_hull, project_simplex};
use gda_core::regions::{local_regions, membership};
use gda_core::PayoffMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::AuditArgs;
use crate::common::{parse_algorithm, resolve_game, write_json, Ctx, GameChoice, InitKind, Manifest};
use crate::config::pick;
use crate::error::{CliError, CliResult};

/// Matrix entries kept in memory by the full-iterate replay.
const MAX_STORED_ENTRIES: usize = 25_000_000;

#[derive(Serialize)]
struct AuditParams {
    game: GameChoice,
    algorithm: String,
    eta: f64,
    steps: usize,
    init: String,
    probes: usize,
}

/// One invariant line: `worst` is the largest measured violation, so the
/// row passes exactly when `worst <= tolerance`.
#[derive(Serialize)]
struct InvariantRow {
    invariant: &'static str,
    asserted: bool,
    status: &'static str,
    worst: Option<f64>,
    tolerance: f64,
    note: String,
}

impl InvariantRow {
    fn asserted(invariant: &'static str, worst: f64, tolerance: f64, note: &str) -> Self {
        let pass = worst <= tolerance;
        InvariantRow {
            invariant,
            asserted: true,
            status: if pass { "pass" } else { "fail" },
            worst: Some(worst),
            tolerance,
            note: note.to_string(),
        }
    }

    fn skipped(invariant: &'static str, tolerance: f64, reason: String) -> Self {
        InvariantRow {
            invariant,
            asserted: false,
            status: "skipped",
            worst: None,
            tolerance,
            note: reason,
        }
    }
}

#[derive(Serialize)]
struct AuditReport<'a> {
    #[serde(flatten)]
    params: &'a AuditParams,
    seed: u64,
    sigma: f64,
    equilibrium_value: Option<f64>,
    interior_regime: bool,
    local_regime: bool,
    rows: Vec<InvariantRow>,
    failures: usize,
    wall_time_s: f64,
}

pub fn execute(ctx: &Ctx, args: &AuditArgs) -> CliResult<()> {
    let started = Instant::now();
    let sec = &ctx.file.audit;
    let (a, choice) = resolve_game(&args.game, &ctx.file.game, ctx.seed)?;
    let algorithm =
        parse_algorithm(&pick(args.algorithm.clone(), sec.algorithm.clone(), "alt".into()))?;
    let eta = pick(args.eta, sec.eta, 0.1);
    let steps = pick(args.steps, sec.steps, 10_000);
    let init = InitKind::parse(&pick(args.init.clone(), sec.init.clone(), "uniform".into()))?;
    let probes = pick(args.probes, sec.probes, 8);
    if steps == 0 {
        return Err(CliError::Config("--steps must be at least 1".into()));
    }
    if (steps + 1).saturating_mul(a.rows() + a.cols()) > MAX_STORED_ENTRIES {
        return Err(CliError::Config(format!(
            "full-iterate audit of {steps} steps on a {}x{} game exceeds the storage guard; \
             lower --steps",
            a.rows(),
            a.cols()
        )));
    }

    let dir = ctx.command_dir("audit")?;
    let params = AuditParams {
        game: choice,
        algorithm: algorithm.name().into(),
        eta,
        steps,
        init: init.name().into(),
        probes,
    };
    Manifest::new(ctx, "audit", &params)?.write(&dir)?;

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let (x0, y0) = init.draw(a.rows(), a.cols(), &mut rng)?;

    let reference = if a.rows().max(a.cols()) <= MAX_ENUM_ACTIONS {
        solve_equilibrium_max_support(&a).ok()
    } else {
        None
    };
    let sigma = a.spectral_norm();

    let cfg = RunConfig {
        record_stride: (steps / 1000).max(1),
        reference: reference.clone(),
        store_iterates: true,
        ..RunConfig::new(algorithm, eta, steps, x0.clone(), y0.clone())
    };
    let trace = run(&a, &cfg)?;
    gda_core::dynamics::write_trace_csv(&dir.join("trace.csv"), &trace)?;

    let audit = evaluate(&a, algorithm, eta, steps, probes, ctx.seed, reference.as_ref(), sigma, &trace)?;
    let failures = audit.rows.iter().filter(|r| r.status == "fail").count();

    let report = AuditReport {
        params: &params,
        seed: ctx.seed,
        sigma,
        equilibrium_value: reference.as_ref().map(|eq| eq.value),
        interior_regime: audit.interior_regime,
        local_regime: audit.local_regime,
        rows: audit.rows,
        failures,
        wall_time_s: started.elapsed().as_secs_f64(),
    };
    write_json(&dir.join("report.json"), &report)?;

    println!(
        "audit: {} eta={eta} T={steps} sigma={sigma:.6} regime={} ({})",
        params.algorithm,
        if report.interior_regime {
            "interior"
        } else if report.local_regime {
            "local"
        } else {
            "unrestricted"
        },
        dir.display()
    );
    for row in &report.rows {
        match row.worst {
            Some(w) => println!(
                "  {:<5} {:<28} worst {:>12.3e}  tol {:>8.1e}  {}",
                row.status.to_uppercase(),
                row.invariant,
                w,
                row.tolerance,
                row.note
            ),
            None => println!(
                "  {:<5} {:<28} ({})",
                row.status.to_uppercase(),
                row.invariant,
                row.note
            ),
        }
    }
    if failures > 0 {
        return Err(CliError::AuditFailed(failures));
    }
    println!("audit: all asserted invariants hold");
    Ok(())
}

struct AuditOutcome {
    rows: Vec<InvariantRow>,
    interior_regime: bool,
    local_regime: bool,
}

/// Tolerances for the audit rows, matching the library's contract suite.
mod tol {
    pub const FEASIBILITY: f64 = 1e-9;
    pub const CONSISTENCY: f64 = 1e-9;
    pub const RESIDUAL_FLOOR: f64 = 1e-10;
    pub const THRESHOLD: f64 = 1e-10;
    pub const DESCENT: f64 = 1e-9;
    pub const ENERGY: f64 = 1e-9;
    pub const INCREASE_BUDGET: f64 = 1e-6;
    pub const GAP_BOUND: f64 = 1e-9;
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    a: &PayoffMatrix,
    algorithm: Algorithm,
    eta: f64,
    steps: usize,
    probes: usize,
    seed: u64,
    reference: Option<&EquilibriumProfile>,
    sigma: f64,
    trace: &IterateTrace,
) -> CliResult<AuditOutcome> {
    let m = a.rows();
    let n = a.cols();
    let alternating = algorithm == Algorithm::Alternating;
    let iterates = trace.iterates.as_ref().expect("full-iterate run keeps its trajectory");
    let mut rows = Vec::new();

    // Simplex feasibility of every stored iterate.
    let mut feas: f64 = 0.0;
    for (x, y) in iterates {
        for v in [x.as_slice(), y.as_slice()] {
            let sum: f64 = v.iter().sum();
            feas = feas.max((sum - 1.0).abs());
            for &p in v {
                feas = feas.max(-p);
            }
        }
    }
    rows.push(InvariantRow::asserted(
        "iterate-feasibility",
        feas,
        tol::FEASIBILITY,
        "max deviation from the probability simplex",
    ));

    // Running averages over iterates 1..=T, recomputed independently of the
    // incremental bookkeeping inside the run loop.
    let mut sum_x = vec![0.0; n];
    let mut sum_y = vec![0.0; m];
    let mut avg_x = vec![0.0; n];
    let mut avg_y = vec![0.0; m];
    let mut running_gap = Vec::with_capacity(steps);
    for t in 1..=steps {
        for (s, v) in sum_x.iter_mut().zip(&iterates[t].0) {
            *s += v;
        }
        for (s, v) in sum_y.iter_mut().zip(&iterates[t].1) {
            *s += v;
        }
        for (dst, s) in avg_x.iter_mut().zip(&sum_x) {
            *dst = s / t as f64;
        }
        for (dst, s) in avg_y.iter_mut().zip(&sum_y) {
            *dst = s / t as f64;
        }
        running_gap.push(duality_gap(a, &avg_x, &avg_y)?);
    }
    let reported_from_avgs = duality_gap(a, &trace.avg_x, &trace.avg_y)?;
    let consistency = (running_gap[steps - 1] - reported_from_avgs)
        .abs()
        .max((running_gap[steps - 1] - trace.final_gap()).abs());
    rows.push(InvariantRow::asserted(
        "averaged-gap-consistency",
        consistency,
        tol::CONSISTENCY,
        "final averaged-iterate gap recomputed from stored iterates",
    ));

    let interior_bound = reference
        .filter(|eq| eq.is_interior)
        .map(|eq| interior_stepsize_bound(a, eq))
        .transpose()?;
    let interior_regime = interior_bound.is_some_and(|b| eta <= b);
    let region_setup = match reference {
        Some(eq) if !eq.is_interior && sigma > 0.0 && eta <= 0.5 / sigma => {
            local_regions(a, eq, eta).ok().map(|p| (eq, p))
        }
        _ => None,
    };
    let local_regime = region_setup
        .as_ref()
        .is_some_and(|(eq, p)| membership(p, eq, &iterates[0].0, &iterates[0].1).in_s0);

    if !alternating {
        let note = "alternating-only diagnostic".to_string();
        for name in [
            "residual-nonnegative",
            "threshold-multiplier-identity",
            "descent-inequality-phi",
            "descent-inequality-psi",
            "energy-monotone",
            "energy-decay-identity",
            "residual-energy-sandwich",
            "gap-bound-interior",
            "region-persistence",
            "variant-increase-budget",
            "gap-bound-local",
        ] {
            rows.push(InvariantRow::skipped(name, 0.0, note.clone()));
        }
        return Ok(AuditOutcome { rows, interior_regime, local_regime });
    }

    let mut probe_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x70726f6265);
    let mut worst_residual: f64 = f64::NEG_INFINITY;
    let mut worst_threshold: f64 = f64::NEG_INFINITY;
    let mut worst_phi: f64 = f64::NEG_INFINITY;
    let mut worst_psi: f64 = f64::NEG_INFINITY;
    let mut worst_monotone: f64 = f64::NEG_INFINITY;
    let mut worst_identity: f64 = f64::NEG_INFINITY;
    let mut worst_sandwich: f64 = f64::NEG_INFINITY;
    let mut worst_gap_interior: f64 = f64::NEG_INFINITY;
    let mut worst_gap_local: f64 = f64::NEG_INFINITY;
    let mut outside_s = 0usize;
    let mut variant_increase_sum = 0.0;

    for t in 0..steps {
        let (x_t, y_t) = (&iterates[t].0, &iterates[t].1);
        let (x_n, y_n) = (&iterates[t + 1].0, &iterates[t + 1].1);

        let r = residual(a, eta, x_t, y_t, x_n, y_n)?;
        worst_residual = worst_residual.max(-r);

        let dec = decompose_update(a, eta, x_t, y_t, x_n, y_n)?;
        let pre_x: Vec<f64> =
            a.tmul_y(y_t).iter().zip(x_t).map(|(g, x)| x - eta * g).collect();
        let tau_x = project_simplex(&project_affine_hull(&pre_x)?)?.tau;
        let pre_y: Vec<f64> = a.mul_x(x_n).iter().zip(y_t).map(|(g, y)| y + eta * g).collect();
        let tau_y = project_simplex(&project_affine_hull(&pre_y)?)?.tau;
        worst_threshold = worst_threshold
            .max((tau_x - eta * dec.gamma_bar).abs())
            .max((tau_y - eta * dec.lambda_bar).abs());

        for _ in 0..probes {
            let px = MixedStrategy::sample_uniform(n, &mut probe_rng)?;
            let py = MixedStrategy::sample_uniform(m, &mut probe_rng)?;
            worst_phi =
                worst_phi.max(-descent_slack_phi(a, eta, x_t, y_t, x_n, y_n, &px, &py));
            if t >= 1 {
                let y_prev = &iterates[t - 1].1;
                worst_psi = worst_psi
                    .max(-descent_slack_psi(a, eta, x_t, y_prev, y_t, x_n, y_n, &px, &py));
            }
        }

        if let Some(eq) = reference {
            let e_t = energy(a, eta, eq, x_t, y_t);
            let e_n = energy(a, eta, eq, x_n, y_n);
            worst_monotone = worst_monotone.max(e_n - e_t);
            worst_sandwich = worst_sandwich.max(r - (e_t - e_n));
            if eq.is_interior {
                let mut rhs = 0.0;
                for i in 0..n {
                    rhs += eta * dec.gamma[i] * (x_n[i] + x_t[i] - 2.0 * eq.x[i]);
                }
                for j in 0..m {
                    rhs += eta * dec.lambda[j] * (y_n[j] + y_t[j] - 2.0 * eq.y[j]);
                }
                worst_identity = worst_identity.max(((e_t - e_n) - rhs).abs());
            }
            if interior_regime {
                worst_gap_interior = worst_gap_interior
                    .max(running_gap[t] - gap_bound_interior(eta, sigma, t + 1));
            }
            if let Some((eq, params)) = &region_setup {
                let v_t = energy_variant(a, eta, eq, x_t, y_t);
                let v_n = energy_variant(a, eta, eq, x_n, y_n);
                variant_increase_sum += (v_n - v_t).max(0.0);
                if !membership(params, eq, x_n, y_n).in_s {
                    outside_s += 1;
                }
                worst_gap_local = worst_gap_local
                    .max(running_gap[t] - gap_bound_local(eta, sigma, params.delta, t + 1));
            }
        }
    }

    rows.push(InvariantRow::asserted(
        "residual-nonnegative",
        worst_residual,
        tol::RESIDUAL_FLOOR,
        "projection optimality residual r stays nonnegative",
    ));
    rows.push(InvariantRow::asserted(
        "threshold-multiplier-identity",
        worst_threshold,
        tol::THRESHOLD,
        "projection threshold tau equals eta times the mean multiplier",
    ));
    rows.push(InvariantRow::asserted(
        "descent-inequality-phi",
        worst_phi,
        tol::DESCENT,
        "one-step descent inequality at random probe profiles",
    ));
    if steps >= 2 {
        rows.push(InvariantRow::asserted(
            "descent-inequality-psi",
            worst_psi,
            tol::DESCENT,
            "lagged descent inequality at random probe profiles",
        ));
    } else {
        rows.push(InvariantRow::skipped(
            "descent-inequality-psi",
            tol::DESCENT,
            "needs at least two steps".into(),
        ));
    }

    let interior_note = |bound: Option<f64>| match (reference, bound) {
        (None, _) => "no reference equilibrium (support enumeration cap)".to_string(),
        (Some(eq), _) if !eq.is_interior => "equilibrium is not interior".to_string(),
        (_, Some(b)) => format!("stepsize {eta} above interior threshold {b:.6}"),
        _ => "interior threshold unavailable".to_string(),
    };
    if reference.is_some() && interior_regime {
        rows.push(InvariantRow::asserted(
            "energy-monotone",
            worst_monotone,
            tol::ENERGY,
            "energy never increases along the trajectory",
        ));
        rows.push(InvariantRow::asserted(
            "residual-energy-sandwich",
            worst_sandwich,
            tol::ENERGY,
            "residual r bounded by the per-step energy drop",
        ));
        rows.push(InvariantRow::asserted(
            "gap-bound-interior",
            worst_gap_interior,
            tol::GAP_BOUND,
            "averaged gap within (9 + 4 eta sigma)/(eta t) at every step",
        ));
    } else {
        let reason = interior_note(interior_bound);
        rows.push(InvariantRow::skipped("energy-monotone", tol::ENERGY, reason.clone()));
        rows.push(InvariantRow::skipped("residual-energy-sandwich", tol::ENERGY, reason.clone()));
        rows.push(InvariantRow::skipped("gap-bound-interior", tol::GAP_BOUND, reason));
    }
    if reference.is_some_and(|eq| eq.is_interior) {
        rows.push(InvariantRow::asserted(
            "energy-decay-identity",
            worst_identity,
            tol::ENERGY,
            "per-step energy drop equals the multiplier pairing",
        ));
    } else {
        rows.push(InvariantRow::skipped(
            "energy-decay-identity",
            tol::ENERGY,
            interior_note(None),
        ));
    }

    if local_regime {
        let delta = region_setup.as_ref().map(|(_, p)| p.delta).unwrap_or(f64::NAN);
        rows.push(InvariantRow::asserted(
            "region-persistence",
            outside_s as f64,
            0.0,
            "iterates leaving the outer region",
        ));
        rows.push(InvariantRow::asserted(
            "variant-increase-budget",
            variant_increase_sum - delta * delta / 128.0,
            tol::INCREASE_BUDGET,
            "total shifted-energy increase within delta^2/128",
        ));
        rows.push(InvariantRow::asserted(
            "gap-bound-local",
            worst_gap_local,
            tol::GAP_BOUND,
            "averaged gap within the local guarantee at every step",
        ));
    } else {
        let reason = match (&region_setup, reference) {
            (None, None) => "no reference equilibrium (support enumeration cap)".to_string(),
            (None, Some(eq)) if eq.is_interior => "equilibrium is interior".to_string(),
            (None, Some(_)) => format!("stepsize {eta} above 1/(2 sigma)"),
            (Some(_), _) => "initial points outside the inner region".to_string(),
        };
        rows.push(InvariantRow::skipped("region-persistence", 0.0, reason.clone()));
        rows.push(InvariantRow::skipped("variant-increase-budget", tol::INCREASE_BUDGET, reason.clone()));
        rows.push(InvariantRow::skipped("gap-bound-local", tol::GAP_BOUND, reason));
    }

    Ok(AuditOutcome { rows, interior_regime, local_regime })
}
