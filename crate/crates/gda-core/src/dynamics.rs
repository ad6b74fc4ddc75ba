//! The two projected gradient descent-ascent update rules on matrix games,
//! their traces, and the functions that certify their convergence.
//!
//! One alternating step with stepsize `eta` is
//!
//! ```text
//! x_{t+1} = proj_simplex(x_t - eta A' y_t)
//! y_{t+1} = proj_simplex(y_t + eta A x_{t+1})
//! ```
//!
//! while the simultaneous rule updates `y` against the stale `x_t`. Traces
//! report the duality gap of the running averages over iterates 1..=T (the
//! initial point is excluded from all averages), energies against a
//! reference equilibrium, the per-step residual, the peak threshold
//! multipliers of the two projections, and membership in the local regions
//! when those are defined.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::equilibrium::EquilibriumProfile;
use crate::error::{Error, Result};
use crate::game::{duality_gap_unchecked, MixedStrategy};
use crate::matrix::PayoffMatrix;
use crate::projection::{decompose_unchecked, project_simplex_into, replay_check, check_step_dims};
use crate::regions::{membership, LocalRegionParams};
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    /// Alternating update: the ascent step sees the fresh descent iterate.
    Alternating,
    /// Simultaneous update: both steps see the previous iterates.
    Simultaneous,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "alt" | "alternating" => Ok(Self::Alternating),
            "sim" | "simultaneous" => Ok(Self::Simultaneous),
            other => Err(Error::Config(format!("unknown algorithm {other:?}, want alt|sim"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Alternating => "alt",
            Self::Simultaneous => "sim",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub eta: f64,
    pub steps: usize,
    pub x0: MixedStrategy,
    pub y0: MixedStrategy,
    /// Diagnostics are recorded every `record_stride` steps and at the final
    /// step.
    pub record_stride: usize,
    /// Reference equilibrium for energies and region membership; without it
    /// those diagnostics are omitted.
    pub reference: Option<EquilibriumProfile>,
    /// Keep every iterate pair (including the initial one) in the trace.
    pub store_iterates: bool,
}

impl RunConfig {
    pub fn new(algorithm: Algorithm, eta: f64, steps: usize, x0: MixedStrategy, y0: MixedStrategy) -> Self {
        Self { algorithm, eta, steps, x0, y0, record_stride: 1, reference: None, store_iterates: false }
    }
}

/// Diagnostics at one recorded step `t`. Gap, energies, and membership
/// describe iterate `t`; `residual_r`, `gamma_bar`, `lambda_bar` describe
/// the update that produced iterate `t` and are only defined for the
/// alternating rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub t: usize,
    pub gap_avg: f64,
    pub energy_e: Option<f64>,
    pub energy_v: Option<f64>,
    pub residual_r: Option<f64>,
    pub gamma_bar: Option<f64>,
    pub lambda_bar: Option<f64>,
    pub in_s: Option<bool>,
    pub in_s0: Option<bool>,
}

#[derive(Debug, Clone)]
pub struct IterateTrace {
    pub algorithm: Algorithm,
    pub eta: f64,
    pub steps: usize,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Arithmetic means over iterates 1..=steps.
    pub avg_x: MixedStrategy,
    pub avg_y: MixedStrategy,
    pub final_x: MixedStrategy,
    pub final_y: MixedStrategy,
    /// Iterate pairs `(x_t, y_t)` for `t = 0..=steps` when requested.
    pub iterates: Option<Vec<(Vec<f64>, Vec<f64>)>>,
}

impl IterateTrace {
    /// Averaged-iterate duality gap at the last recorded checkpoint.
    pub fn final_gap(&self) -> f64 {
        self.diagnostics.last().map(|d| d.gap_avg).unwrap_or(f64::NAN)
    }
}

/// Runs the configured dynamics, recording diagnostics at every multiple of
/// `record_stride` and at the final step.
pub fn run(a: &PayoffMatrix, cfg: &RunConfig) -> Result<IterateTrace> {
    if cfg.record_stride == 0 {
        return Err(Error::Config("record_stride must be positive".into()));
    }
    let mut checkpoints: Vec<usize> =
        (1..=cfg.steps).filter(|t| t % cfg.record_stride == 0).collect();
    if checkpoints.last() != Some(&cfg.steps) {
        checkpoints.push(cfg.steps);
    }
    run_at_checkpoints(a, cfg, &checkpoints)
}

/// Runs the configured dynamics with an explicit strictly increasing
/// checkpoint schedule (each in `1..=steps`).
pub fn run_at_checkpoints(
    a: &PayoffMatrix,
    cfg: &RunConfig,
    checkpoints: &[usize],
) -> Result<IterateTrace> {
    let (m, n) = (a.rows(), a.cols());
    if cfg.x0.len() != n || cfg.y0.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "initial points must have lengths {n} and {m}"
        )));
    }
    if !(cfg.eta.is_finite() && cfg.eta > 0.0) {
        return Err(Error::Config(format!("stepsize must be positive, got {}", cfg.eta)));
    }
    if cfg.steps == 0 {
        return Err(Error::Config("need at least one step".into()));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1])
        || checkpoints.first().map(|&t| t == 0).unwrap_or(false)
        || checkpoints.last().map(|&t| t > cfg.steps).unwrap_or(false)
    {
        return Err(Error::Config("checkpoints must be strictly increasing within 1..=steps".into()));
    }
    if let Some(eq) = &cfg.reference {
        if eq.x.len() != n || eq.y.len() != m {
            return Err(Error::DimensionMismatch("reference profile does not match the matrix".into()));
        }
    }
    let sigma = a.spectral_norm();
    let regions: Option<LocalRegionParams> = match &cfg.reference {
        Some(eq) if sigma > 0.0 && cfg.eta <= 1.0 / (2.0 * sigma) => {
            crate::regions::local_regions(a, eq, cfg.eta).ok()
        }
        _ => None,
    };

    let mut x: Vec<f64> = cfg.x0.as_slice().to_vec();
    let mut y: Vec<f64> = cfg.y0.as_slice().to_vec();
    let mut avg_x = vec![0.0; n];
    let mut avg_y = vec![0.0; m];
    let mut grad_x = vec![0.0; n];
    let mut grad_y = vec![0.0; m];
    let mut pre_x = vec![0.0; n];
    let mut pre_y = vec![0.0; m];
    let mut next_x = vec![0.0; n];
    let mut next_y = vec![0.0; m];
    let mut sort_x = vec![0.0; n];
    let mut sort_y = vec![0.0; m];
    let mut iterates = if cfg.store_iterates {
        let mut v = Vec::with_capacity(cfg.steps + 1);
        v.push((x.clone(), y.clone()));
        Some(v)
    } else {
        None
    };
    let mut diagnostics = Vec::with_capacity(checkpoints.len());
    let mut next_checkpoint = checkpoints.iter().copied().peekable();

    for t in 1..=cfg.steps {
        let recorded = next_checkpoint.peek() == Some(&t);
        // Descent step.
        a.tmul_y_into(&y, &mut grad_x);
        for i in 0..n {
            pre_x[i] = x[i] - cfg.eta * grad_x[i];
        }
        project_simplex_into(&pre_x, &mut sort_x, &mut next_x);
        // Ascent step: fresh iterate for alternating, stale for simultaneous.
        match cfg.algorithm {
            Algorithm::Alternating => a.mul_x_into(&next_x, &mut grad_y),
            Algorithm::Simultaneous => a.mul_x_into(&x, &mut grad_y),
        }
        for j in 0..m {
            pre_y[j] = y[j] + cfg.eta * grad_y[j];
        }
        project_simplex_into(&pre_y, &mut sort_y, &mut next_y);

        // Decomposition of the incoming step, only when someone will see it.
        let mut residual_r = None;
        let mut gamma_bar = None;
        let mut lambda_bar = None;
        if recorded && cfg.algorithm == Algorithm::Alternating {
            let d = decompose_unchecked(a, cfg.eta, &x, &y, &next_x, &next_y);
            gamma_bar = Some(d.gamma_bar);
            lambda_bar = Some(d.lambda_bar);
            residual_r = Some(residual_unchecked(a, cfg.eta, &x, &y, &next_x, &next_y));
        }

        let inv_t = 1.0 / t as f64;
        for i in 0..n {
            avg_x[i] += (next_x[i] - avg_x[i]) * inv_t;
        }
        for j in 0..m {
            avg_y[j] += (next_y[j] - avg_y[j]) * inv_t;
        }
        if recorded {
            next_checkpoint.next();
            let gap_avg = duality_gap_unchecked(a, &avg_x, &avg_y);
            let (mut energy_e, mut energy_v) = (None, None);
            if let Some(eq) = &cfg.reference {
                energy_e = Some(energy(a, cfg.eta, eq, &next_x, &next_y));
                energy_v = Some(energy_variant(a, cfg.eta, eq, &next_x, &next_y));
            }
            let (mut in_s, mut in_s0) = (None, None);
            if let (Some(params), Some(eq)) = (&regions, &cfg.reference) {
                let mem = membership(params, eq, &next_x, &next_y);
                in_s = Some(mem.in_s);
                in_s0 = Some(mem.in_s0);
            }
            diagnostics.push(StepDiagnostics {
                t,
                gap_avg,
                energy_e,
                energy_v,
                residual_r,
                gamma_bar,
                lambda_bar,
                in_s,
                in_s0,
            });
        }
        std::mem::swap(&mut x, &mut next_x);
        std::mem::swap(&mut y, &mut next_y);
        if let Some(it) = iterates.as_mut() {
            it.push((x.clone(), y.clone()));
        }
    }

    Ok(IterateTrace {
        algorithm: cfg.algorithm,
        eta: cfg.eta,
        steps: cfg.steps,
        diagnostics,
        avg_x: MixedStrategy::new(avg_x)?,
        avg_y: MixedStrategy::new(avg_y)?,
        final_x: MixedStrategy::new(x)?,
        final_y: MixedStrategy::new(y)?,
        iterates,
    })
}

/// Energy of a profile against a reference equilibrium:
/// `|x - x*|^2 + |y - y*|^2 - eta y'Ax`.
pub fn energy(a: &PayoffMatrix, eta: f64, eq: &EquilibriumProfile, x: &[f64], y: &[f64]) -> f64 {
    vecops::dist2_sq(x, &eq.x) + vecops::dist2_sq(y, &eq.y) - eta * a.bilinear(y, x)
}

/// Shifted energy variant:
/// `|x - x*|^2 + |y - y*|^2 - eta (y - y*)'A(x - x*)`.
pub fn energy_variant(
    a: &PayoffMatrix,
    eta: f64,
    eq: &EquilibriumProfile,
    x: &[f64],
    y: &[f64],
) -> f64 {
    let dx = vecops::sub(x, &eq.x);
    let dy = vecops::sub(y, &eq.y);
    let ax = a.mul_x(&dx);
    vecops::dist2_sq(x, &eq.x) + vecops::dist2_sq(y, &eq.y) - eta * vecops::dot(&dy, &ax)
}

/// Descent potential evaluated at a probe profile `(x, y)`:
/// `0.5 |x_t - x|^2 + 0.5 |y_t - y|^2 + eta y_t' A x`.
pub fn potential_phi(
    a: &PayoffMatrix,
    eta: f64,
    x_t: &[f64],
    y_t: &[f64],
    x: &[f64],
    y: &[f64],
) -> f64 {
    0.5 * vecops::dist2_sq(x_t, x) + 0.5 * vecops::dist2_sq(y_t, y) + eta * a.bilinear(y_t, x)
}

/// Lagged potential evaluated at a probe profile; defined from step one on
/// since it sees the previous ascent iterate:
/// `0.5 |x_t - x|^2 + 0.5 |y_{t-1} - y|^2 - 0.5 |y_t - y_{t-1}|^2`.
pub fn potential_psi(x_t: &[f64], y_prev: &[f64], y_t: &[f64], x: &[f64], y: &[f64]) -> f64 {
    0.5 * vecops::dist2_sq(x_t, x) + 0.5 * vecops::dist2_sq(y_prev, y)
        - 0.5 * vecops::dist2_sq(y_t, y_prev)
}

/// Residual of one alternating step: the sum of the two projection
/// optimality inner products. Replays the step first; rejects non-steps.
pub fn residual(
    a: &PayoffMatrix,
    eta: f64,
    x_t: &[f64],
    y_t: &[f64],
    x_next: &[f64],
    y_next: &[f64],
) -> Result<f64> {
    check_step_dims(a, eta, x_t, y_t, x_next, y_next)?;
    replay_check(a, eta, x_t, y_t, x_next, y_next)?;
    Ok(residual_unchecked(a, eta, x_t, y_t, x_next, y_next))
}

pub(crate) fn residual_unchecked(
    a: &PayoffMatrix,
    eta: f64,
    x_t: &[f64],
    y_t: &[f64],
    x_next: &[f64],
    y_next: &[f64],
) -> f64 {
    let aty = a.tmul_y(y_t);
    let ax = a.mul_x(x_next);
    let mut r = 0.0;
    for i in 0..x_t.len() {
        let dx = x_next[i] - x_t[i];
        r += (-eta * aty[i] - x_next[i] + x_t[i]) * dx;
    }
    for j in 0..y_t.len() {
        let dy = y_next[j] - y_t[j];
        r += (eta * ax[j] - y_next[j] + y_t[j]) * dy;
    }
    r
}

/// Slack of the descent inequality tied to the potential `phi` at a probe
/// `(px, py)`; nonnegative (up to fp noise) on genuine alternating steps.
#[allow(clippy::too_many_arguments)]
pub fn descent_slack_phi(
    a: &PayoffMatrix,
    eta: f64,
    x_t: &[f64],
    y_t: &[f64],
    x_next: &[f64],
    y_next: &[f64],
    px: &[f64],
    py: &[f64],
) -> f64 {
    let lhs = eta * (a.bilinear(py, x_next) - a.bilinear(y_next, px));
    let dphi = potential_phi(a, eta, x_t, y_t, px, py) - potential_phi(a, eta, x_next, y_next, px, py);
    let ax_next = a.mul_x(x_next);
    let dy = vecops::sub(y_next, y_t);
    let cross = eta * vecops::dot(&ax_next, &dy);
    let rhs = dphi + cross
        - 0.5 * vecops::dist2_sq(x_next, x_t)
        - 0.5 * vecops::dist2_sq(y_next, y_t);
    rhs - lhs
}

/// Slack of the descent inequality tied to the lagged potential `psi` at a
/// probe `(px, py)`; needs the ascent iterate one step back, so it applies
/// from the second step on.
#[allow(clippy::too_many_arguments)]
pub fn descent_slack_psi(
    a: &PayoffMatrix,
    eta: f64,
    x_t: &[f64],
    y_prev: &[f64],
    y_t: &[f64],
    x_next: &[f64],
    y_next: &[f64],
    px: &[f64],
    py: &[f64],
) -> f64 {
    let lhs = eta * (a.bilinear(py, x_t) - a.bilinear(y_t, px));
    let dpsi = potential_psi(x_t, y_prev, y_t, px, py) - potential_psi(x_next, y_t, y_next, px, py);
    let aty = a.tmul_y(y_t);
    let dx = vecops::sub(x_next, x_t);
    let cross = -eta * vecops::dot(&aty, &dx);
    let rhs = dpsi + cross
        - 0.5 * vecops::dist2_sq(x_next, x_t)
        - 0.5 * vecops::dist2_sq(y_next, y_t);
    rhs - lhs
}

/// Largest stepsize covered by the interior convergence guarantee:
/// `min(min_i x*_i, min_j y*_j) / sigma`. Requires an interior reference;
/// returns infinity for the zero matrix.
pub fn interior_stepsize_bound(a: &PayoffMatrix, eq: &EquilibriumProfile) -> Result<f64> {
    if !eq.is_interior {
        return Err(Error::Precondition(
            "interior stepsize bound needs a fully supported equilibrium".into(),
        ));
    }
    let sigma = a.spectral_norm();
    let min_prob = vecops::min_entry(&eq.x).min(vecops::min_entry(&eq.y));
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(min_prob / sigma)
}

/// Gap guarantee for averaged iterates under an interior equilibrium:
/// `(9 + 4 eta sigma) / (eta T)`.
pub fn gap_bound_interior(eta: f64, sigma: f64, steps: usize) -> f64 {
    (9.0 + 4.0 * eta * sigma) / (eta * steps as f64)
}

/// Gap guarantee for averaged iterates started near a possibly non-interior
/// equilibrium: `(9 + 7 eta sigma + delta^2/128) / (eta T)`.
pub fn gap_bound_local(eta: f64, sigma: f64, delta: f64, steps: usize) -> f64 {
    (9.0 + 7.0 * eta * sigma + delta * delta / 128.0) / (eta * steps as f64)
}

const TRACE_HEADER: &str = "t,gap_avg,energy_E,energy_V,residual_r,gamma_bar,lambda_bar,in_S,in_S0";

fn csv_real(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.16e}"),
        None => "nan".to_string(),
    }
}

fn csv_bool(v: Option<bool>) -> String {
    match v {
        Some(true) => "1".to_string(),
        Some(false) => "0".to_string(),
        None => "nan".to_string(),
    }
}

/// Writes the recorded diagnostics as CSV: fixed header, decimals with 17
/// significant digits, booleans as 0/1, undefined fields as nan.
pub fn write_trace_csv(path: &Path, trace: &IterateTrace) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{TRACE_HEADER}")?;
    for d in &trace.diagnostics {
        writeln!(
            f,
            "{},{},{},{},{},{},{},{},{}",
            d.t,
            csv_real(Some(d.gap_avg)),
            csv_real(d.energy_e),
            csv_real(d.energy_v),
            csv_real(d.residual_r),
            csv_real(d.gamma_bar),
            csv_real(d.lambda_bar),
            csv_bool(d.in_s),
            csv_bool(d.in_s0),
        )?;
    }
    Ok(())
}

/// The exact header `write_trace_csv` emits.
pub fn trace_csv_header() -> &'static str {
    TRACE_HEADER
}

/// Log-spaced checkpoint schedule: at most `per_decade` points per decade,
/// always including 1 and `steps`, strictly increasing.
pub fn log_checkpoints(steps: usize, per_decade: usize) -> Vec<usize> {
    if steps == 0 {
        return Vec::new();
    }
    let per_decade = per_decade.max(1);
    let mut out = vec![1usize];
    let mut k = 1usize;
    loop {
        let t = 10f64.powf(k as f64 / per_decade as f64).round() as usize;
        if t >= steps {
            break;
        }
        if t > *out.last().expect("nonempty") {
            out.push(t);
        }
        k += 1;
    }
    if steps > 1 {
        out.push(steps);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_equilibrium_max_support;
    use crate::matrix::rock_paper_scissors;

    fn rps_cfg(eta: f64, steps: usize) -> (PayoffMatrix, RunConfig) {
        let a = rock_paper_scissors();
        let cfg = RunConfig::new(
            Algorithm::Alternating,
            eta,
            steps,
            MixedStrategy::vertex(3, 0).unwrap(),
            MixedStrategy::vertex(3, 1).unwrap(),
        );
        (a, cfg)
    }

    #[test]
    fn first_step_matches_hand_computation() {
        let (a, mut cfg) = rps_cfg(0.01, 1);
        cfg.store_iterates = true;
        let trace = run(&a, &cfg).unwrap();
        let (x1, y1) = &trace.iterates.as_ref().unwrap()[1];
        let want_x = [0.99, 0.0, 0.01];
        for (g, w) in x1.iter().zip(&want_x) {
            assert!((g - w).abs() <= 1e-15, "x1 = {x1:?}");
        }
        let want_y = [0.0, 1.0, 0.0];
        for (g, w) in y1.iter().zip(&want_y) {
            assert!((g - w).abs() <= 1e-15, "y1 = {y1:?}");
        }
    }

    #[test]
    fn averages_match_direct_mean() {
        let (a, mut cfg) = rps_cfg(0.05, 500);
        cfg.store_iterates = true;
        let trace = run(&a, &cfg).unwrap();
        let iterates = trace.iterates.as_ref().unwrap();
        assert_eq!(iterates.len(), 501);
        let mut mean = vec![0.0; 3];
        for (x, _) in iterates.iter().skip(1) {
            for i in 0..3 {
                mean[i] += x[i];
            }
        }
        for v in mean.iter_mut() {
            *v /= 500.0;
        }
        for (g, w) in trace.avg_x.iter().zip(&mean) {
            assert!((g - w).abs() <= 1e-10, "avg {:?} direct {:?}", trace.avg_x, mean);
        }
    }

    #[test]
    fn iterates_stay_on_the_simplex() {
        let (a, mut cfg) = rps_cfg(0.3, 2000);
        cfg.store_iterates = true;
        let trace = run(&a, &cfg).unwrap();
        for (x, y) in trace.iterates.as_ref().unwrap() {
            for v in [x, y] {
                let sum: f64 = v.iter().sum();
                assert!((sum - 1.0).abs() <= 1e-12);
                assert!(v.iter().all(|&p| p >= 0.0));
            }
        }
    }

    #[test]
    fn energy_matches_worked_example() {
        let a = rock_paper_scissors();
        let eq = solve_equilibrium_max_support(&a).unwrap();
        let x = [1.0, 0.0, 0.0];
        let y = [0.0, 1.0, 0.0];
        let e = energy(&a, 0.01, &eq, &x, &y);
        assert!((e - (4.0 / 3.0 - 0.01)).abs() <= 1e-14, "energy = {e}");
    }

    #[test]
    fn residual_matches_decomposition_identity() {
        let (a, mut cfg) = rps_cfg(0.19, 300);
        cfg.store_iterates = true;
        let trace = run(&a, &cfg).unwrap();
        let it = trace.iterates.as_ref().unwrap();
        for t in 0..300 {
            let (x_t, y_t) = &it[t];
            let (x_n, y_n) = &it[t + 1];
            let r = residual(&a, 0.19, x_t, y_t, x_n, y_n).unwrap();
            let d = crate::projection::decompose_update(&a, 0.19, x_t, y_t, x_n, y_n).unwrap();
            let mut identity = 0.0;
            for i in 0..3 {
                identity += 0.19 * d.gamma[i] * (x_n[i] - x_t[i]);
            }
            for j in 0..3 {
                identity += 0.19 * d.lambda[j] * (y_n[j] - y_t[j]);
            }
            assert!((r - identity).abs() <= 1e-10, "t={t}: r={r} identity={identity}");
            assert!(r >= -1e-12, "t={t}: negative residual {r}");
        }
    }

    #[test]
    fn recorded_gap_respects_interior_guarantee() {
        let (a, mut cfg) = rps_cfg(0.19, 3000);
        cfg.record_stride = 10;
        let trace = run(&a, &cfg).unwrap();
        let sigma = a.spectral_norm();
        for d in &trace.diagnostics {
            let bound = gap_bound_interior(0.19, sigma, d.t);
            assert!(d.gap_avg <= bound + 1e-9, "t={}: gap {} bound {}", d.t, d.gap_avg, bound);
        }
    }

    #[test]
    fn simultaneous_rule_reports_no_decomposition() {
        let a = rock_paper_scissors();
        let cfg = RunConfig {
            algorithm: Algorithm::Simultaneous,
            ..rps_cfg(0.1, 50).1
        };
        let trace = run(&a, &cfg).unwrap();
        for d in &trace.diagnostics {
            assert!(d.residual_r.is_none() && d.gamma_bar.is_none() && d.lambda_bar.is_none());
        }
    }

    #[test]
    fn interior_bound_for_rps() {
        let a = rock_paper_scissors();
        let eq = solve_equilibrium_max_support(&a).unwrap();
        let b = interior_stepsize_bound(&a, &eq).unwrap();
        assert!((b - 1.0 / (3.0 * 3.0f64.sqrt())).abs() <= 1e-12);
    }

    #[test]
    fn bound_values_match_formulas() {
        let b = gap_bound_interior(0.1, 3.0f64.sqrt(), 1000);
        assert!((b - 0.0969282032302755).abs() <= 1e-12, "bound = {b}");
        let bl = gap_bound_local(0.1, 2.0, 0.5, 100);
        assert!((bl - (9.0 + 1.4 + 0.001953125) / 10.0).abs() <= 1e-12);
    }

    #[test]
    fn log_checkpoints_shape() {
        let cps = log_checkpoints(100_000, 100);
        assert_eq!(cps.first(), Some(&1));
        assert_eq!(cps.last(), Some(&100_000));
        assert!(cps.windows(2).all(|w| w[0] < w[1]));
        // Never more than 100 points in any decade.
        let in_decade = cps.iter().filter(|&&t| t > 1000 && t <= 10_000).count();
        assert!(in_decade <= 100, "{in_decade} checkpoints in one decade");
    }

    #[test]
    fn trace_csv_has_exact_header_and_width() {
        let (a, mut cfg) = rps_cfg(0.19, 20);
        cfg.reference = solve_equilibrium_max_support(&a).ok();
        let trace = run(&a, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&path, &trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(trace_csv_header()));
        for line in lines {
            assert_eq!(line.split(',').count(), 9, "row {line:?}");
        }
        // Booleans are 0/1 for this interior run with a small stepsize.
        assert!(text.lines().nth(1).unwrap().ends_with(",0,0"));
    }
}
