//! End-to-end tests for the `gda` binary: artifact layout, determinism,
//! exit codes, and the documented configuration precedence.

use std::path::Path;
use std::process::{Command, Output};

use gda_core::dynamics::log_checkpoints;
use gda_core::game::duality_gap;
use gda_core::matrix::rock_paper_scissors;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The solver override honored ahead of `--solver`; cleared in every test
/// so ambient configuration cannot change outcomes.
const SOLVER_ENV: &str = "PEP_SDP_SOLVER";

fn gda(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gda"))
        .env_remove(SOLVER_ENV)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary should launch")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {path:?}: {e}"))
}

/// Parses a CSV with a header into (header, rows of f64 columns).
fn csv_columns(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header: Vec<String> =
        lines.next().expect("csv header").split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| l.split(',').map(|t| t.parse::<f64>().expect("numeric cell")).collect())
        .collect();
    (header, rows)
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = [
        "run", "--builtin", "rps", "--eta", "0.05", "--steps", "500", "--repeats", "3",
    ];
    assert!(gda(&a, &args).status.success());
    assert!(gda(&b, &args).status.success());
    for file in ["summary.csv", "repeat_00.csv", "repeat_01.csv", "repeat_02.csv"] {
        let left = read(&a.join("run").join(file));
        let right = read(&b.join("run").join(file));
        assert_eq!(left, right, "{file} differs between identical invocations");
    }
}

#[test]
fn report_statistics_are_recomputable() {
    let dir = tempfile::tempdir().unwrap();
    let out = gda(
        dir.path(),
        &["run", "--builtin", "rps", "--eta", "0.05", "--steps", "300", "--repeats", "4"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("run/report.json"))).unwrap();
    let per_repeat: Vec<Vec<f64>> =
        serde_json::from_value(report["per_repeat_gap"].clone()).unwrap();
    let mean: Vec<f64> = serde_json::from_value(report["gap_mean"].clone()).unwrap();
    let std: Vec<f64> = serde_json::from_value(report["gap_std"].clone()).unwrap();
    assert_eq!(per_repeat.len(), 4);
    for k in 0..mean.len() {
        let vals: Vec<f64> = per_repeat.iter().map(|r| r[k]).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let var =
            vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (vals.len() - 1) as f64;
        assert!((m - mean[k]).abs() <= 1e-12, "mean at checkpoint {k}: {m} vs {}", mean[k]);
        assert!(
            (var.sqrt() - std[k]).abs() <= 1e-12,
            "std at checkpoint {k}: {} vs {}",
            var.sqrt(),
            std[k]
        );
    }
}

#[test]
fn single_step_average_equals_first_iterate_gap() {
    let dir = tempfile::tempdir().unwrap();
    let out = gda(
        dir.path(),
        &[
            "--seed", "11", "run", "--builtin", "rps", "--eta", "0.3", "--steps", "1",
            "--repeats", "1",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let (_, rows) = csv_columns(&read(&dir.path().join("run/summary.csv")));
    assert_eq!(rows.len(), 1, "a single step yields the single checkpoint t=1");
    let reported = rows[0][1];

    // Replay the derived-seed initialization and one alternating step.
    let a = rock_paper_scissors();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let x0 = gda_core::game::MixedStrategy::sample_uniform(3, &mut rng).unwrap();
    let y0 = gda_core::game::MixedStrategy::sample_uniform(3, &mut rng).unwrap();
    let cfg = gda_core::dynamics::RunConfig::new(
        gda_core::dynamics::Algorithm::Alternating,
        0.3,
        1,
        x0,
        y0,
    );
    let trace = gda_core::dynamics::run(&a, &cfg).unwrap();
    let expected = duality_gap(&a, &trace.final_x, &trace.final_y).unwrap();
    assert!(
        (reported - expected).abs() <= 1e-12,
        "t=1 average should be the first iterate: {reported} vs {expected}"
    );
}

#[test]
fn averaged_gap_decays_by_an_order_of_magnitude() {
    let dir = tempfile::tempdir().unwrap();
    let out = gda(
        dir.path(),
        &["run", "--builtin", "rps", "--eta", "0.01", "--steps", "10000", "--repeats", "2"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = csv_columns(&read(&dir.path().join("run/summary.csv")));
    assert_eq!(header, ["t", "gap_mean", "gap_std"]);
    let first = rows.first().unwrap();
    let last = rows.last().unwrap();
    assert_eq!(first[0], 1.0);
    assert_eq!(last[0], 10000.0);
    assert!(
        last[1] <= first[1] / 10.0,
        "averaged gap {} after 10^4 steps should be well under the initial {}",
        last[1],
        first[1]
    );
}

#[test]
fn simultaneous_updates_stall_above_the_alternating_curve() {
    let dir = tempfile::tempdir().unwrap();
    let out = gda(
        dir.path(),
        &[
            "run", "--builtin", "rps", "--algorithm", "sim", "--eta", "0.01", "--steps",
            "10000", "--repeats", "2", "--init", "vertex",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let (_, rows) = csv_columns(&read(&dir.path().join("run/summary.csv")));
    let final_gap = rows.last().unwrap()[1];
    assert!(
        final_gap > 0.01,
        "simultaneous updates at a constant stepsize should not converge this fast: {final_gap}"
    );
}

#[test]
fn checkpoint_schedule_is_logarithmic_with_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let out = gda(
        dir.path(),
        &["run", "--builtin", "rps", "--eta", "0.1", "--steps", "2500", "--repeats", "1"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let (_, rows) = csv_columns(&read(&dir.path().join("run/summary.csv")));
    let got: Vec<usize> = rows.iter().map(|r| r[0] as usize).collect();
    assert_eq!(got, log_checkpoints(2500, 100));
    assert_eq!(*got.first().unwrap(), 1);
    assert_eq!(*got.last().unwrap(), 2500);
}

#[test]
fn generated_games_are_reproducible_and_bounded() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let args = [
        "gen-game", "--m", "10", "--n", "20", "--dist", "uniform01", "--game-seed", "9",
    ];
    assert!(gda(&a, &args).status.success());
    assert!(gda(&b, &args).status.success());
    let text = read(&a.join("gen-game/game.txt"));
    assert_eq!(text, read(&b.join("gen-game/game.txt")), "same seed, same matrix");

    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("10 20"));
    for line in lines {
        for tok in line.split_whitespace() {
            let v: f64 = tok.parse().unwrap();
            assert!((0.0..=1.0).contains(&v), "uniform01 entry {v} out of range");
        }
    }

    // Round-tripping through --matrix reproduces the file bit-exactly.
    let c = dir.path().join("c");
    let matrix = a.join("gen-game/game.txt");
    let out = gda(&c, &["gen-game", "--matrix", matrix.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(text, read(&c.join("gen-game/game.txt")));
}

#[test]
fn audit_passes_in_both_stepsize_regimes() {
    let dir = tempfile::tempdir().unwrap();
    let small = gda(
        dir.path(),
        &["audit", "--builtin", "rps", "--eta", "0.1", "--steps", "2000"],
    );
    assert!(small.status.success(), "{}", stderr(&small));
    let text = stdout(&small);
    assert!(text.contains("regime=interior"), "missing regime note:\n{text}");
    assert!(text.contains("PASS  energy-monotone"), "energy row not asserted:\n{text}");
    assert!(text.contains("PASS  gap-bound-interior"), "bound row not asserted:\n{text}");

    let big = gda(
        dir.path().join("big").as_path(),
        &["audit", "--builtin", "rps", "--eta", "1.0", "--steps", "2000"],
    );
    assert!(big.status.success(), "{}", stderr(&big));
    let text = stdout(&big);
    assert!(
        text.contains("SKIPPED energy-monotone") && text.contains("above interior threshold"),
        "oversized stepsize must skip the interior-only rows:\n{text}"
    );
    assert!(
        text.contains("PASS  energy-decay-identity"),
        "the decay identity holds at any stepsize:\n{text}"
    );
}

#[test]
fn trace_energy_is_monotone_from_interior_start() {
    let dir = tempfile::tempdir().unwrap();
    let out = gda(dir.path(), &["reproduce", "fig2", "--steps", "20000"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = csv_columns(&read(&dir.path().join("reproduce/fig2/trace.csv")));
    let col = header.iter().position(|h| h == "energy_E").unwrap();
    let energies: Vec<f64> = rows.iter().map(|r| r[col]).collect();
    for pair in energies.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-12,
            "energy rose from {} to {}",
            pair[0],
            pair[1]
        );
    }
    assert!(dir.path().join("reproduce/fig2/trajectory_x.csv").exists());
    assert!(dir.path().join("reproduce/fig2/trajectory_y.csv").exists());
}

#[test]
fn trace_energy_rises_when_the_equilibrium_is_on_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let out = gda(dir.path(), &["reproduce", "fig3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = csv_columns(&read(&dir.path().join("reproduce/fig3/trace.csv")));
    let col = header.iter().position(|h| h == "energy_E").unwrap();
    let energies: Vec<f64> = rows.iter().map(|r| r[col]).collect();
    let max_rise = energies
        .windows(2)
        .map(|p| p[1] - p[0])
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        max_rise > 1e-9,
        "the dense trace should expose genuine energy increases, max rise {max_rise:.3e}"
    );
}

#[test]
fn missing_solver_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["pep", "--horizon", "2", "--eta", "0.5"],
        vec!["tune", "--horizon", "2"],
        vec!["reproduce", "tables"],
    ] {
        let out = gda(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "args {args:?}: {}", stderr(&out));
        assert!(
            stderr(&out).contains(SOLVER_ENV),
            "error should name the env override: {}",
            stderr(&out)
        );
    }
}

#[test]
fn broken_solver_is_a_solver_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gda(
        dir.path(),
        &["pep", "--horizon", "1", "--eta", "0.5", "--solver", "/bin/false"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn unknown_reproduce_target_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = gda(dir.path(), &["reproduce", "fig9"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("unknown reproduce target"));
}

#[test]
fn zero_jobs_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = gda(dir.path(), &["--jobs", "0", "run", "--builtin", "rps", "--steps", "10"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lab.toml");
    std::fs::write(
        &cfg,
        "seed = 5\n\n[game]\nbuiltin = \"rps\"\n\n[run]\neta = 0.02\nsteps = 200\nrepeats = 2\n",
    )
    .unwrap();
    let out = gda(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "run", "--eta", "0.07"],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("run/manifest.json"))).unwrap();
    assert_eq!(manifest["seed"], 5, "seed comes from the file");
    assert_eq!(manifest["params"]["eta"], 0.07, "flag wins over the file");
    assert_eq!(manifest["params"]["steps"], 200, "untouched values come from the file");

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[run]\nbogus = 1\n").unwrap();
    let out = gda(dir.path(), &["--config", bad.to_str().unwrap(), "run"]);
    assert_eq!(out.status.code(), Some(2), "unknown keys are config errors");
}

/// Gated on an external solver: checks the optimized-stepsize pipeline
/// against a published operating point.
#[test]
fn tables_row_matches_published_values() {
    if std::env::var(SOLVER_ENV).is_err() {
        println!("skipping: set {SOLVER_ENV} to run the solver-backed table test");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_gda"))
        .arg("--out")
        .arg(dir.path())
        .args(["reproduce", "tables", "--horizons", "6", "--algorithms", "alt"])
        .output()
        .expect("binary should launch");
    assert!(out.status.success(), "{}", stderr(&out));
    let (header, rows) = csv_columns_no_alg(&read(&dir.path().join("reproduce/tables/search.csv")));
    assert_eq!(header[0], "T");
    assert_eq!(rows.len(), 1);
    let (eta_star, value) = (rows[0][1], rows[0][2]);
    assert!(
        (eta_star - 1.389).abs() <= 0.02,
        "tuned stepsize {eta_star} should be near 1.389"
    );
    assert!((value - 0.555).abs() <= 0.01, "worst-case gap {value} should be near 0.555");
}

/// Like `csv_columns` but skips the non-numeric `algorithm` column of
/// search CSVs.
fn csv_columns_no_alg(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header: Vec<String> =
        lines.next().expect("csv header").split(',').map(str::to_owned).collect();
    let rows = lines
        .map(|l| {
            l.split(',')
                .filter(|t| t.parse::<f64>().is_ok())
                .map(|t| t.parse::<f64>().unwrap())
                .collect()
        })
        .collect();
    (header, rows)
}
