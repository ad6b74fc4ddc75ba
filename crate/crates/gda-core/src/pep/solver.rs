//! External-solver bridge: subprocess contract, solution import, and
//! trustless certificate verification.
//!
//! Solving is delegated to any conic solver that accepts the sparse SDPA
//! format through the calling convention `<solver-cmd> <problem.dat-s>
//! <output>` and writes a csdp-style solution file (dual vector on the
//! first line, then `matno blkno i j value` entries where `matno` 2 is the
//! maximizing block-diagonal matrix). The returned Gram blocks are never
//! trusted: every constraint residual and eigenvalue bound is recomputed
//! here before a value is reported.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::assemble::{assemble_pep_sdp, ConstraintKind, SdpInstance};
use super::basis::PepSpec;
use super::sdpa::{export_sdpa, SdpaFile, BLOCK_GRAM_X, BLOCK_GRAM_Y, BLOCK_MAP_X, BLOCK_MAP_Y, BLOCK_SLACK};
use crate::error::{Error, Result};
use crate::tolerances;

/// Environment variable naming the solver command; overrides any
/// configured value.
pub const SOLVER_ENV: &str = "PEP_SDP_SOLVER";

/// A solver invocation template: a program plus leading arguments. The
/// problem and output paths are appended at call time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolverCommand {
    pub program: String,
    pub args: Vec<String>,
}

impl SolverCommand {
    /// Splits a command string on whitespace, e.g. `"csdp"` or
    /// `"python3 tools/sdpa_solver.py --solver clarabel"`.
    pub fn parse(command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace().map(str::to_owned);
        let program = parts
            .next()
            .ok_or_else(|| Error::Config("empty solver command".into()))?;
        Ok(Self { program, args: parts.collect() })
    }

    /// Reads the command from the `PEP_SDP_SOLVER` environment variable.
    pub fn from_env() -> Option<Self> {
        std::env::var(SOLVER_ENV).ok().and_then(|s| Self::parse(&s).ok())
    }

    /// Resolution order: environment variable, then the supplied value.
    pub fn resolve(configured: Option<&str>) -> Result<Option<Self>> {
        if let Ok(s) = std::env::var(SOLVER_ENV) {
            return Self::parse(&s).map(Some);
        }
        configured.map(Self::parse).transpose()
    }

    /// Runs the solver on a problem file. Blocks until the subprocess
    /// exits; output presence decides success, since several solvers use
    /// nonzero exit codes for reduced-accuracy results.
    pub fn run(&self, problem: &Path, output: &Path) -> Result<()> {
        let result = Command::new(&self.program)
            .args(&self.args)
            .arg(problem)
            .arg(output)
            .output()
            .map_err(|e| Error::Solver(format!("failed to launch '{}': {e}", self.program)))?;
        if output.exists() {
            return Ok(());
        }
        let stderr = String::from_utf8_lossy(&result.stderr);
        let stdout = String::from_utf8_lossy(&result.stdout);
        let tail = |s: &str| -> String {
            let t: Vec<&str> = s.lines().rev().take(8).collect();
            t.into_iter().rev().collect::<Vec<_>>().join("\n")
        };
        Err(Error::Solver(format!(
            "'{}' exited with {} and produced no output file\nstdout:\n{}\nstderr:\n{}",
            self.program,
            result.status,
            tail(&stdout),
            tail(&stderr)
        )))
    }
}

/// Imported solver output: the two Gram blocks, the auxiliary map blocks,
/// inequality slacks, and the dual vector, plus both objective readings
/// recomputed from the problem file.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub gram_x: DMatrix<f64>,
    pub gram_y: DMatrix<f64>,
    pub map_x: DMatrix<f64>,
    pub map_y: DMatrix<f64>,
    pub slacks: Vec<f64>,
    pub dual: Vec<f64>,
    /// `tr(F_0 X)` recomputed from the problem entries.
    pub primal_objective: f64,
    /// `c' y` from the reported dual vector.
    pub dual_objective: f64,
}

/// Parses a csdp-style solution file against the exported problem. Missing
/// entries default to zero; `matno` 1 (the slack matrix of the dual side)
/// is ignored.
pub fn parse_solution(text: &str, problem: &SdpaFile) -> Result<SdpSolution> {
    let tokens: Vec<&str> = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('*') && !l.trim_start().starts_with('"'))
        .flat_map(str::split_whitespace)
        .collect();
    if tokens.len() < problem.m_dim {
        return Err(Error::Solver(format!(
            "solution has {} values, expected at least the {}-entry dual vector",
            tokens.len(),
            problem.m_dim
        )));
    }
    let mut dual = Vec::with_capacity(problem.m_dim);
    for t in &tokens[..problem.m_dim] {
        dual.push(
            t.parse::<f64>()
                .map_err(|_| Error::Solver(format!("bad dual value '{t}'")))?,
        );
    }
    let rest = &tokens[problem.m_dim..];
    if rest.len() % 5 != 0 {
        return Err(Error::Solver(format!(
            "matrix entry tokens not in groups of five ({} left over)",
            rest.len() % 5
        )));
    }
    let order = |blkno: usize| problem.block_sizes[blkno - 1].unsigned_abs() as usize;
    let n = order(BLOCK_GRAM_X);
    let k = order(BLOCK_MAP_X);
    let mut gram_x = DMatrix::zeros(n, n);
    let mut gram_y = DMatrix::zeros(n, n);
    let mut map_x = DMatrix::zeros(k, k);
    let mut map_y = DMatrix::zeros(k, k);
    let mut slacks = vec![0.0; order(BLOCK_SLACK)];
    for group in rest.chunks(5) {
        let matno: usize = group[0]
            .parse()
            .map_err(|_| Error::Solver(format!("bad matrix number '{}'", group[0])))?;
        let blkno: usize = group[1]
            .parse()
            .map_err(|_| Error::Solver(format!("bad block number '{}'", group[1])))?;
        let i: usize = group[2]
            .parse()
            .map_err(|_| Error::Solver(format!("bad row index '{}'", group[2])))?;
        let j: usize = group[3]
            .parse()
            .map_err(|_| Error::Solver(format!("bad column index '{}'", group[3])))?;
        let value: f64 = group[4]
            .parse()
            .map_err(|_| Error::Solver(format!("bad entry value '{}'", group[4])))?;
        if matno != 2 {
            continue;
        }
        if blkno == 0 || blkno > problem.block_sizes.len() {
            return Err(Error::Solver(format!("solution references block {blkno}")));
        }
        let ord = order(blkno);
        if i == 0 || j == 0 || i > ord || j > ord {
            return Err(Error::Solver(format!(
                "solution entry ({i}, {j}) outside block {blkno} of order {ord}"
            )));
        }
        match blkno {
            BLOCK_GRAM_X => {
                gram_x[(i - 1, j - 1)] = value;
                gram_x[(j - 1, i - 1)] = value;
            }
            BLOCK_GRAM_Y => {
                gram_y[(i - 1, j - 1)] = value;
                gram_y[(j - 1, i - 1)] = value;
            }
            BLOCK_MAP_X => {
                map_x[(i - 1, j - 1)] = value;
                map_x[(j - 1, i - 1)] = value;
            }
            BLOCK_MAP_Y => {
                map_y[(i - 1, j - 1)] = value;
                map_y[(j - 1, i - 1)] = value;
            }
            _ => {
                if i == j {
                    slacks[i - 1] = value;
                }
            }
        }
    }
    let pick = |blkno: usize, i: usize, j: usize| -> f64 {
        match blkno {
            BLOCK_GRAM_X => gram_x[(i, j)],
            BLOCK_GRAM_Y => gram_y[(i, j)],
            BLOCK_MAP_X => map_x[(i, j)],
            BLOCK_MAP_Y => map_y[(i, j)],
            _ => {
                if i == j {
                    slacks[i]
                } else {
                    0.0
                }
            }
        }
    };
    let primal_objective = problem
        .entries
        .iter()
        .filter(|e| e.matno == 0)
        .map(|e| {
            let w = if e.i == e.j { 1.0 } else { 2.0 };
            w * e.value * pick(e.blkno, e.i - 1, e.j - 1)
        })
        .sum();
    let dual_objective = problem.rhs.iter().zip(&dual).map(|(c, y)| c * y).sum();
    Ok(SdpSolution {
        gram_x,
        gram_y,
        map_x,
        map_y,
        slacks,
        dual,
        primal_objective,
        dual_objective,
    })
}

/// Trustless verification report, recomputed entirely from the Gram
/// blocks against the assembled program.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    /// Objective value recomputed from the Grams.
    pub objective_value: f64,
    pub max_eq_residual: f64,
    pub max_ineq_violation: f64,
    /// Smallest eigenvalue across both Gram blocks and both matrix maps.
    pub min_eigenvalue: f64,
    pub worst_eq: Option<String>,
    pub worst_ineq: Option<String>,
    pub tolerance: f64,
    pub accepted: bool,
}

/// Recomputes every scalar constraint residual, the matrix-map values, and
/// all block eigenvalue floors from the returned Grams. Acceptance gate:
/// `min_eigenvalue >= -tol`, `max_eq_residual <= tol`,
/// `max_ineq_violation <= tol` with `tol` the certificate tolerance.
pub fn verify_certificate(inst: &SdpInstance, sol: &SdpSolution) -> CertificateReport {
    let tol = tolerances::CERTIFICATE;
    let mut max_eq = 0.0f64;
    let mut max_ineq = 0.0f64;
    let mut worst_eq = None;
    let mut worst_ineq = None;
    for c in &inst.constraints {
        let value = c.expr.eval(&sol.gram_x, &sol.gram_y);
        match c.kind {
            ConstraintKind::Eq => {
                let r = (value - c.rhs).abs();
                if r > max_eq {
                    max_eq = r;
                    worst_eq = Some(c.label.to_string());
                }
            }
            ConstraintKind::Le => {
                let v = (value - c.rhs).max(0.0);
                if v > max_ineq {
                    max_ineq = v;
                    worst_ineq = Some(c.label.to_string());
                }
            }
        }
    }
    let min_eig = |m: &DMatrix<f64>| -> f64 {
        let sym = (m + m.transpose()) * 0.5;
        nalgebra::SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    };
    let mut min_eigenvalue = min_eig(&sol.gram_x).min(min_eig(&sol.gram_y));
    for map in &inst.psd_maps {
        min_eigenvalue = min_eigenvalue.min(min_eig(&map.eval(&sol.gram_x, &sol.gram_y)));
    }
    let objective_value = inst.objective.eval(&sol.gram_x, &sol.gram_y);
    let accepted = min_eigenvalue >= -tol && max_eq <= tol && max_ineq <= tol;
    CertificateReport {
        objective_value,
        max_eq_residual: max_eq,
        max_ineq_violation: max_ineq,
        min_eigenvalue,
        worst_eq,
        worst_ineq,
        tolerance: tol,
        accepted,
    }
}

/// A verified solve: the recomputed objective, the full verification
/// report, and (when a working directory was supplied) the on-disk
/// artifacts.
#[derive(Debug, Clone)]
pub struct PepOutcome {
    pub spec: PepSpec,
    /// Verified objective value (recomputed from the Grams).
    pub value: f64,
    pub certificate: CertificateReport,
    pub solution: SdpSolution,
    pub problem_path: Option<PathBuf>,
    pub solution_path: Option<PathBuf>,
    pub manifest_path: Option<PathBuf>,
}

static SCRATCH_COUNTER: AtomicU64 = AtomicU64::new(0);

fn scratch_dir() -> PathBuf {
    let stamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.subsec_nanos())
        .unwrap_or(0);
    std::env::temp_dir().join(format!(
        "pep-scratch-{}-{}-{stamp}",
        std::process::id(),
        SCRATCH_COUNTER.fetch_add(1, Ordering::Relaxed)
    ))
}

/// Assembles, exports, solves, and verifies one estimation program. With
/// `workdir` set, the problem/solution/manifest files are kept there;
/// otherwise a private scratch directory is used and removed afterwards.
pub fn solve_pep(
    spec: &PepSpec,
    solver: &SolverCommand,
    workdir: Option<&Path>,
) -> Result<PepOutcome> {
    let inst = assemble_pep_sdp(spec)?;
    let (file, manifest) = export_sdpa(&inst)?;
    let (dir, ephemeral) = match workdir {
        Some(d) => (d.to_path_buf(), false),
        None => (scratch_dir(), true),
    };
    std::fs::create_dir_all(&dir)?;
    let problem = dir.join("problem.dat-s");
    let solution = dir.join("solution.sol");
    let manifest_path = dir.join("manifest.json");
    file.write_file(&problem)?;
    manifest.write_file(&manifest_path)?;
    let run = solver.run(&problem, &solution);
    let parsed = run.and_then(|()| {
        let text = std::fs::read_to_string(&solution)?;
        parse_solution(&text, &file)
    });
    if ephemeral {
        let _ = std::fs::remove_dir_all(&dir);
    }
    let sol = parsed?;
    let certificate = verify_certificate(&inst, &sol);
    let value = certificate.objective_value;
    Ok(PepOutcome {
        spec: *spec,
        value,
        certificate,
        solution: sol,
        problem_path: (!ephemeral).then(|| problem),
        solution_path: (!ephemeral).then(|| solution),
        manifest_path: (!ephemeral).then(|| manifest_path),
    })
}

/// Verified worst-case value for a spec; rejects solver output that fails
/// the certificate gate.
pub fn pep_value(spec: &PepSpec, solver: &SolverCommand) -> Result<f64> {
    let outcome = solve_pep(spec, solver, None)?;
    if !outcome.certificate.accepted {
        return Err(Error::Certificate(format!(
            "solution rejected: min eigenvalue {:.3e}, max equality residual {:.3e} ({}), max inequality violation {:.3e} ({})",
            outcome.certificate.min_eigenvalue,
            outcome.certificate.max_eq_residual,
            outcome.certificate.worst_eq.as_deref().unwrap_or("-"),
            outcome.certificate.max_ineq_violation,
            outcome.certificate.worst_ineq.as_deref().unwrap_or("-"),
        )));
    }
    Ok(outcome.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Algorithm;

    fn instance(t: usize) -> (PepSpec, SdpInstance, SdpaFile) {
        let spec = PepSpec::new(Algorithm::Alternating, t, 0.5).unwrap();
        let inst = assemble_pep_sdp(&spec).unwrap();
        let (file, _) = export_sdpa(&inst).unwrap();
        (spec, inst, file)
    }

    #[test]
    fn command_parsing_splits_program_and_args() {
        let cmd = SolverCommand::parse("python3 tools/sdpa_solver.py --solver clarabel").unwrap();
        assert_eq!(cmd.program, "python3");
        assert_eq!(cmd.args, vec!["tools/sdpa_solver.py", "--solver", "clarabel"]);
        assert!(SolverCommand::parse("   ").is_err());
    }

    #[test]
    fn zero_solution_parses_and_verifies_clean() {
        let (_, inst, file) = instance(1);
        let dual_line =
            (0..file.m_dim).map(|_| "0.0").collect::<Vec<_>>().join(" ");
        let sol = parse_solution(&format!("{dual_line}\n"), &file).unwrap();
        assert_eq!(sol.gram_x.nrows(), 8);
        assert_eq!(sol.primal_objective, 0.0);
        let report = verify_certificate(&inst, &sol);
        assert_eq!(report.max_eq_residual, 0.0);
        assert_eq!(report.max_ineq_violation, 0.0);
        assert_eq!(report.min_eigenvalue, 0.0);
        assert_eq!(report.objective_value, 0.0);
        assert!(report.accepted);
    }

    #[test]
    fn perturbed_gram_entry_is_flagged() {
        let (spec, inst, file) = instance(1);
        let dual_line =
            (0..file.m_dim).map(|_| "0.0").collect::<Vec<_>>().join(" ");
        let mut sol = parse_solution(&format!("{dual_line}\n"), &file).unwrap();
        // Touch the entry pairing the initial iterate with the comparator
        // gradient: it enters a coupling equality linearly.
        let grad_slot = spec.steps + 4;
        sol.gram_x[(1, grad_slot)] = 1e-3;
        sol.gram_x[(grad_slot, 1)] = 1e-3;
        let report = verify_certificate(&inst, &sol);
        assert!(
            report.max_eq_residual >= 1e-4,
            "residual {:.3e} should flag the 1e-3 perturbation",
            report.max_eq_residual
        );
        assert!(!report.accepted);
    }

    #[test]
    fn indefinite_gram_is_detected() {
        let (_, inst, file) = instance(1);
        let dual_line =
            (0..file.m_dim).map(|_| "0.0").collect::<Vec<_>>().join(" ");
        let mut sol = parse_solution(&format!("{dual_line}\n"), &file).unwrap();
        sol.gram_y[(2, 2)] = -0.25;
        let report = verify_certificate(&inst, &sol);
        assert!(report.min_eigenvalue <= -0.25 + 1e-12);
        assert!(!report.accepted);
    }

    #[test]
    fn solution_entries_fill_symmetric_blocks_and_objectives() {
        let (_, _, file) = instance(1);
        let mut text = String::new();
        let dual: Vec<String> = (1..=file.m_dim).map(|i| format!("{}", i as f64 * 0.5)).collect();
        text.push_str(&dual.join(" "));
        text.push('\n');
        text.push_str("2 1 1 2 0.25\n");
        text.push_str("2 2 3 3 1.5\n");
        text.push_str("1 1 1 1 9.0\n"); // ignored: dual-side matrix
        let sol = parse_solution(&text, &file).unwrap();
        assert_eq!(sol.gram_x[(0, 1)], 0.25);
        assert_eq!(sol.gram_x[(1, 0)], 0.25);
        assert_eq!(sol.gram_y[(2, 2)], 1.5);
        assert_eq!(sol.gram_x[(0, 0)], 0.0);
        let expect_dual: f64 =
            file.rhs.iter().zip(1..).map(|(c, i)| c * (i as f64 * 0.5)).sum();
        assert!((sol.dual_objective - expect_dual).abs() <= 1e-12);
    }

    #[test]
    fn malformed_solutions_are_rejected() {
        let (_, _, file) = instance(1);
        assert!(parse_solution("1.0 2.0", &file).is_err(), "dual vector too short");
        let dual_line = (0..file.m_dim).map(|_| "0.0").collect::<Vec<_>>().join(" ");
        assert!(
            parse_solution(&format!("{dual_line}\n2 1 1\n"), &file).is_err(),
            "entry tokens not in groups of five"
        );
        assert!(
            parse_solution(&format!("{dual_line}\n2 9 1 1 1.0\n"), &file).is_err(),
            "unknown block"
        );
    }

    #[test]
    fn fake_solver_subprocess_round_trip() {
        let spec = PepSpec::new(Algorithm::Alternating, 1, 0.5).unwrap();
        let inst = assemble_pep_sdp(&spec).unwrap();
        let (file, _) = export_sdpa(&inst).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("fake_solver.sh");
        let dual_line = (0..file.m_dim).map(|_| "0").collect::<Vec<_>>().join(" ");
        std::fs::write(
            &script,
            format!("#!/bin/sh\n# emit an all-zero solution for any problem\necho \"{dual_line}\" > \"$2\"\n"),
        )
        .unwrap();
        #[cfg(unix)]
        {
            use std::os::unix::fs::PermissionsExt;
            std::fs::set_permissions(&script, std::fs::Permissions::from_mode(0o755)).unwrap();
        }
        let cmd = SolverCommand::parse(script.to_str().unwrap()).unwrap();
        let keep = dir.path().join("artifacts");
        let outcome = solve_pep(&spec, &cmd, Some(&keep)).unwrap();
        assert!(outcome.certificate.accepted);
        assert_eq!(outcome.value, 0.0);
        assert!(outcome.problem_path.as_ref().unwrap().exists());
        assert!(outcome.solution_path.as_ref().unwrap().exists());
        assert!(outcome.manifest_path.as_ref().unwrap().exists());
        // The zero solution is feasible with objective zero, so the
        // strict-value path must reject nothing.
        let value = pep_value(&spec, &cmd).unwrap();
        assert_eq!(value, 0.0);
    }
}
