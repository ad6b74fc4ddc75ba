//! `gda pep`: assemble one worst-case estimation program, export it in
//! SDPA sparse format with its sidecar manifest, and — when a solver is
//! configured — solve it, verify the certificate, and report the value.

use gda_core::pep::{assemble_pep_sdp, export_sdpa, solve_pep, PepSpec};
use serde::Serialize;

use crate::args::PepArgs;
use crate::common::{parse_algorithm, write_json, Ctx, Manifest};
use crate::config::{need, pick};
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct PepParams {
    algorithm: String,
    horizon: usize,
    eta: f64,
    assemble_only: bool,
}

pub fn execute(ctx: &Ctx, args: &PepArgs) -> CliResult<()> {
    let sec = &ctx.file.pep;
    let algorithm =
        parse_algorithm(&pick(args.algorithm.clone(), sec.algorithm.clone(), "alt".into()))?;
    let horizon = need(args.horizon, sec.horizon, "--horizon (time horizon T)")?;
    let eta = need(args.eta, sec.eta, "--eta (stepsize)")?;
    let spec = PepSpec::new(algorithm, horizon, eta)?;

    let dir = ctx.command_dir("pep")?;
    let params = PepParams {
        algorithm: algorithm.name().into(),
        horizon,
        eta,
        assemble_only: args.assemble_only,
    };
    Manifest::new(ctx, "pep", &params)?.write(&dir)?;

    // The SDP artifacts live in a subdirectory so the program's sidecar
    // manifest cannot collide with the experiment manifest above.
    let problem_dir = dir.join("problem");
    std::fs::create_dir_all(&problem_dir)?;

    if args.assemble_only {
        let inst = assemble_pep_sdp(&spec)?;
        let (file, sidecar) = export_sdpa(&inst)?;
        file.write_file(&problem_dir.join("problem.dat-s"))?;
        sidecar.write_file(&problem_dir.join("manifest.json"))?;
        let (cuts, radius, coupling) = inst.counts();
        println!(
            "pep: assembled {} T={horizon} eta={eta}: {} rows ({cuts} cuts, {radius} radius, \
             {coupling} coupling) ({})",
            params.algorithm,
            file.m_dim,
            problem_dir.display()
        );
        return Ok(());
    }

    let solver = ctx.solver_required("solving an estimation program")?;
    let outcome = solve_pep(&spec, &solver, Some(&problem_dir))?;
    write_json(&dir.join("certificate.json"), &outcome.certificate)?;
    if !outcome.certificate.accepted {
        return Err(CliError::Solver(format!(
            "certificate rejected: min eigenvalue {:.3e}, max equality residual {:.3e}, max \
             inequality violation {:.3e} (tolerance {:.1e})",
            outcome.certificate.min_eigenvalue,
            outcome.certificate.max_eq_residual,
            outcome.certificate.max_ineq_violation,
            outcome.certificate.tolerance,
        )));
    }
    println!(
        "pep: {} T={horizon} eta={eta} -> worst-case averaged gap {:.6} (verified; {})",
        params.algorithm,
        outcome.value,
        dir.display()
    );
    Ok(())
}
