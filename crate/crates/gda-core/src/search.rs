//! Stepsize search over reciprocal grids.
//!
//! One round evaluates an objective on a grid whose reciprocals are equally
//! spaced between the current bounds, then recenters a shrunken window on
//! the incumbent minimizer and repeats until the window is narrower than
//! the target resolution. Evaluations are memoized across rounds, the
//! incumbent is kept globally, and ties break toward the smaller stepsize.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parallel::par_map;
use crate::tolerances;

/// Ascending grid of `n` stepsizes in `[eta_min, eta_max]` whose
/// reciprocals are equally spaced. Endpoints are exact.
pub fn reciprocal_grid(eta_min: f64, eta_max: f64, n: usize) -> Result<Vec<f64>> {
    if !(eta_min.is_finite() && eta_max.is_finite()) || eta_min <= 0.0 || eta_max <= eta_min {
        return Err(Error::Config(format!(
            "grid needs 0 < eta_min < eta_max, got [{eta_min}, {eta_max}]"
        )));
    }
    if n < 2 {
        return Err(Error::Config("grid needs at least two points".into()));
    }
    let r_hi = 1.0 / eta_min;
    let r_lo = 1.0 / eta_max;
    let step = (r_lo - r_hi) / (n - 1) as f64;
    let mut grid: Vec<f64> = (0..n).map(|k| 1.0 / (r_hi + step * k as f64)).collect();
    grid[0] = eta_min;
    grid[n - 1] = eta_max;
    Ok(grid)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    pub eta_min: f64,
    pub eta_max: f64,
    /// Grid points per round.
    pub points: usize,
    /// Window half-width in units of the round's grid spacing.
    pub alpha: f64,
    /// Stop once the window is at most this wide.
    pub eps_eta: f64,
    pub max_rounds: usize,
}

impl SearchConfig {
    pub fn new(eta_min: f64, eta_max: f64) -> Self {
        Self { eta_min, eta_max, points: 20, alpha: 1.0, eps_eta: 1e-3, max_rounds: 50 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundRecord {
    pub eta_min: f64,
    pub eta_max: f64,
    /// Stepsizes evaluated for the first time this round, with values.
    pub evaluated: Vec<(f64, f64)>,
    /// Incumbent after this round.
    pub best_eta: f64,
    pub best_value: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub eta_star: f64,
    pub value: f64,
    pub rounds: usize,
    /// Number of objective evaluations (memoized repeats not counted).
    pub solver_calls: usize,
    pub converged: bool,
    pub trace: Vec<RoundRecord>,
}

/// Minimizes `objective` over stepsizes. The objective is called once per
/// distinct grid point; candidates within a round are evaluated through the
/// parallel fan-out, so it must be thread-safe. Any objective error aborts
/// the search.
pub fn optimize_stepsize<F>(cfg: &SearchConfig, objective: F) -> Result<SearchOutcome>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    if cfg.points < 2 {
        return Err(Error::Config("search needs at least two grid points per round".into()));
    }
    if !(cfg.alpha.is_finite() && cfg.alpha > 0.0) {
        return Err(Error::Config("alpha must be positive".into()));
    }
    if !(cfg.eps_eta.is_finite() && cfg.eps_eta > 0.0) {
        return Err(Error::Config("eps_eta must be positive".into()));
    }
    let mut lo = cfg.eta_min;
    let mut hi = cfg.eta_max;
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi <= lo {
        return Err(Error::Config(format!("search needs 0 < eta_min < eta_max, got [{lo}, {hi}]")));
    }
    let mut memo: HashMap<u64, f64> = HashMap::new();
    let mut best: Option<(f64, f64)> = None; // (eta, value)
    let mut trace = Vec::new();
    let mut solver_calls = 0usize;
    let mut converged = false;
    let mut rounds = 0usize;
    while rounds < cfg.max_rounds {
        rounds += 1;
        let grid = reciprocal_grid(lo, hi, cfg.points)?;
        let fresh: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|eta| !memo.contains_key(&eta.to_bits()))
            .collect();
        let values = par_map(&fresh, |&eta| objective(eta));
        let mut evaluated = Vec::with_capacity(fresh.len());
        for (eta, value) in fresh.iter().zip(values) {
            let value = value?;
            memo.insert(eta.to_bits(), value);
            evaluated.push((*eta, value));
            solver_calls += 1;
        }
        for &eta in &grid {
            let value = memo[&eta.to_bits()];
            let better = match best {
                None => true,
                Some((beta, bval)) => value < bval || (value == bval && eta < beta),
            };
            if better {
                best = Some((eta, value));
            }
        }
        let (round_best_eta, round_best_value) = best.expect("grid is nonempty");
        trace.push(RoundRecord {
            eta_min: lo,
            eta_max: hi,
            evaluated,
            best_eta: round_best_eta,
            best_value: round_best_value,
        });
        if hi - lo <= cfg.eps_eta {
            converged = true;
            break;
        }
        let (eta_star, _) = best.expect("at least one grid point evaluated");
        let spacing = cfg.alpha * (hi - lo) / (cfg.points - 1) as f64;
        lo = (eta_star - spacing).max(tolerances::SEARCH_ETA_FLOOR);
        hi = eta_star + spacing;
        if hi <= lo {
            hi = lo * (1.0 + 1e-9) + tolerances::SEARCH_ETA_FLOOR;
        }
    }
    let (eta_star, value) = best.expect("search ran at least one round");
    Ok(SearchOutcome { eta_star, value, rounds, solver_calls, converged, trace })
}

/// One row of a tuning result table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchRow {
    pub t: usize,
    pub algorithm: String,
    pub eta_star: f64,
    pub value: f64,
    pub solver_calls: usize,
    pub rounds: usize,
}

/// Writes tuning rows as CSV with the fixed header
/// `T,algorithm,eta_star,value,solver_calls,rounds`.
pub fn write_search_csv(path: &Path, rows: &[SearchRow]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "T,algorithm,eta_star,value,solver_calls,rounds")?;
    for r in rows {
        writeln!(
            f,
            "{},{},{:.16e},{:.16e},{},{}",
            r.t, r.algorithm, r.eta_star, r.value, r.solver_calls, r.rounds
        )?;
    }
    Ok(())
}
