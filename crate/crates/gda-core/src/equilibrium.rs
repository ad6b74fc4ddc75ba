//! Equilibrium solving for zero-sum matrix games at desk scale.
//!
//! `solve_equilibrium_max_support` enumerates support pairs in decreasing
//! total size and, for each pair, solves the within-support optimality
//! system by minimum-norm least squares centered at the uniform vector on
//! the claimed support (so underdetermined degenerate systems resolve
//! toward the relative interior). A candidate is accepted only if it is
//! strictly positive on its claimed support and the full profile verifies
//! with duality gap at most 1e-9, which makes the first hit a verified
//! equilibrium of maximal total support. Intended for matrices up to 12x12;
//! larger inputs are rejected.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{duality_gap, MixedStrategy};
use crate::matrix::PayoffMatrix;
use crate::tolerances;
use crate::vecops;

/// Dimension cap for support enumeration.
pub const MAX_ENUM_ACTIONS: usize = 12;

/// Strictly-positive floor for entries on a claimed support; candidates
/// closer to zero are re-found under the smaller support pair.
const SUPPORT_FLOOR: f64 = 1e-11;

/// Residual cap for the within-support linear systems.
const SYSTEM_RESIDUAL: f64 = 1e-8;

/// A verified equilibrium profile. `support_x` and `support_y` are the
/// strictly positive coordinates of the stored strategies, `value` the game
/// value seen from both sides (they agree up to the verification gap).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumProfile {
    pub x: MixedStrategy,
    pub y: MixedStrategy,
    pub value: f64,
    pub support_x: Vec<usize>,
    pub support_y: Vec<usize>,
    pub is_interior: bool,
}

impl EquilibriumProfile {
    /// Re-checks the stored profile against a matrix: gap within `1e-9` and
    /// supports matching the stored vectors.
    pub fn verify(&self, a: &PayoffMatrix) -> Result<()> {
        let gap = duality_gap(a, &self.x, &self.y)?;
        if gap.abs() > tolerances::EQUILIBRIUM_GAP {
            return Err(Error::Certificate(format!("stored profile has gap {gap}")));
        }
        if self.x.support() != self.support_x || self.y.support() != self.support_y {
            return Err(Error::Certificate("stored supports disagree with vectors".into()));
        }
        Ok(())
    }
}

fn masks_by_popcount(d: usize) -> Vec<Vec<u32>> {
    let mut by_count: Vec<Vec<u32>> = vec![Vec::new(); d + 1];
    for mask in 1u32..(1u32 << d) {
        by_count[mask.count_ones() as usize].push(mask);
    }
    by_count
}

fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// Solves `m z = b` by minimum-norm least squares after shifting the first
/// `shift_dims` unknowns by `center`; returns the shifted solution, or
/// `None` if the residual exceeds the consistency cap.
fn centered_min_norm_solve(
    m: &DMatrix<f64>,
    b: &DVector<f64>,
    center: f64,
    shift_dims: usize,
) -> Option<DVector<f64>> {
    let mut b_shift = b.clone();
    for r in 0..m.nrows() {
        let mut acc = 0.0;
        for c in 0..shift_dims {
            acc += m[(r, c)] * center;
        }
        b_shift[r] -= acc;
    }
    let svd = m.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = (max_sv * 1e-12).max(1e-300);
    let z = svd.solve(&b_shift, eps).ok()?;
    let mut sol = z;
    for c in 0..shift_dims {
        sol[c] += center;
    }
    let residual = (m * &sol - b).norm();
    if residual > SYSTEM_RESIDUAL {
        return None;
    }
    Some(sol)
}

/// Candidate `y` restricted to rows `rows_j`, equalizing `(A'y)_i = v` on
/// columns `cols_i` and summing to one. Returns `(y_on_j, v)`.
fn solve_y_system(a: &PayoffMatrix, cols_i: &[usize], rows_j: &[usize]) -> Option<(Vec<f64>, f64)> {
    let (ni, nj) = (cols_i.len(), rows_j.len());
    let mut m = DMatrix::zeros(ni + 1, nj + 1);
    let mut b = DVector::zeros(ni + 1);
    for (r, &i) in cols_i.iter().enumerate() {
        for (c, &j) in rows_j.iter().enumerate() {
            m[(r, c)] = a.get(j, i);
        }
        m[(r, nj)] = -1.0;
    }
    for c in 0..nj {
        m[(ni, c)] = 1.0;
    }
    b[ni] = 1.0;
    let sol = centered_min_norm_solve(&m, &b, 1.0 / nj as f64, nj)?;
    let y: Vec<f64> = (0..nj).map(|c| sol[c]).collect();
    if y.iter().any(|&v| v < SUPPORT_FLOOR) {
        return None;
    }
    Some((y, sol[nj]))
}

/// Candidate `x` restricted to columns `cols_i`, equalizing `(Ax)_j = v` on
/// rows `rows_j` and summing to one.
fn solve_x_system(a: &PayoffMatrix, cols_i: &[usize], rows_j: &[usize]) -> Option<(Vec<f64>, f64)> {
    let (ni, nj) = (cols_i.len(), rows_j.len());
    let mut m = DMatrix::zeros(nj + 1, ni + 1);
    let mut b = DVector::zeros(nj + 1);
    for (r, &j) in rows_j.iter().enumerate() {
        for (c, &i) in cols_i.iter().enumerate() {
            m[(r, c)] = a.get(j, i);
        }
        m[(r, ni)] = -1.0;
    }
    for c in 0..ni {
        m[(nj, c)] = 1.0;
    }
    b[nj] = 1.0;
    let sol = centered_min_norm_solve(&m, &b, 1.0 / ni as f64, ni)?;
    let x: Vec<f64> = (0..ni).map(|c| sol[c]).collect();
    if x.iter().any(|&v| v < SUPPORT_FLOOR) {
        return None;
    }
    Some((x, sol[ni]))
}

/// Finds a verified equilibrium of maximal total support size.
pub fn solve_equilibrium_max_support(a: &PayoffMatrix) -> Result<EquilibriumProfile> {
    let (m, n) = (a.rows(), a.cols());
    if m > MAX_ENUM_ACTIONS || n > MAX_ENUM_ACTIONS {
        return Err(Error::SizeGuard(format!(
            "support enumeration handles up to {MAX_ENUM_ACTIONS} actions per player, got {m}x{n}"
        )));
    }
    let col_masks = masks_by_popcount(n);
    let row_masks = masks_by_popcount(m);
    for total in (2..=n + m).rev() {
        for si in (1..=n.min(total.saturating_sub(1))).rev() {
            let sj = total - si;
            if sj == 0 || sj > m {
                continue;
            }
            for &im in &col_masks[si] {
                let cols_i = mask_indices(im);
                for &jm in &row_masks[sj] {
                    let rows_j = mask_indices(jm);
                    let Some((y_j, _v)) = solve_y_system(a, &cols_i, &rows_j) else {
                        continue;
                    };
                    let Some((x_i, _)) = solve_x_system(a, &cols_i, &rows_j) else {
                        continue;
                    };
                    let mut x = vec![0.0; n];
                    for (c, &i) in cols_i.iter().enumerate() {
                        x[i] = x_i[c];
                    }
                    let mut y = vec![0.0; m];
                    for (c, &j) in rows_j.iter().enumerate() {
                        y[j] = y_j[c];
                    }
                    let gap = crate::game::duality_gap_unchecked(a, &x, &y);
                    if gap.abs() > tolerances::EQUILIBRIUM_GAP {
                        continue;
                    }
                    let xs = MixedStrategy::new(x)?;
                    let ys = MixedStrategy::new(y)?;
                    let ax = a.mul_x(&xs);
                    let aty = a.tmul_y(&ys);
                    let value = 0.5 * (vecops::max_entry(&ax) + vecops::min_entry(&aty));
                    let support_x = xs.support();
                    let support_y = ys.support();
                    let is_interior = support_x.len() == n && support_y.len() == m;
                    return Ok(EquilibriumProfile {
                        x: xs,
                        y: ys,
                        value,
                        support_x,
                        support_y,
                        is_interior,
                    });
                }
            }
        }
    }
    Err(Error::EquilibriumNotFound(format!(
        "no support pair of a {m}x{n} game verified at gap 1e-9"
    )))
}

/// The separation margin of an equilibrium: the smallest of the
/// spectral-norm-scaled payoff gaps of off-support actions and the support
/// probabilities themselves. With a zero matrix the payoff terms are void
/// and the margin is the minimum support probability.
pub fn delta_margin(a: &PayoffMatrix, eq: &EquilibriumProfile) -> Result<f64> {
    if eq.x.len() != a.cols() || eq.y.len() != a.rows() {
        return Err(Error::DimensionMismatch("profile does not match the matrix".into()));
    }
    let sigma = a.spectral_norm();
    let ax = a.mul_x(&eq.x);
    let aty = a.tmul_y(&eq.y);
    let nu = eq.value;
    let mut margin = f64::INFINITY;
    if sigma > 0.0 {
        for i in 0..a.cols() {
            if !eq.support_x.contains(&i) {
                margin = margin.min(((aty[i] - nu) / sigma).max(0.0));
            }
        }
        for j in 0..a.rows() {
            if !eq.support_y.contains(&j) {
                margin = margin.min(((nu - ax[j]) / sigma).max(0.0));
            }
        }
    }
    for &i in &eq.support_x {
        margin = margin.min(eq.x[i]);
    }
    for &j in &eq.support_y {
        margin = margin.min(eq.y[j]);
    }
    Ok(margin)
}
