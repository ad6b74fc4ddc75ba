//! Euclidean projection onto the probability simplex and onto its affine
//! hull, plus the decomposition of one alternating update step into
//! projected-gradient and threshold components.
//!
//! The simplex projection is the sort-and-threshold scheme: with a unique
//! threshold `tau`, the output is `max(v_i - tau, 0)` coordinatewise.
//! Coordinates that tie the threshold exactly are set to zero and excluded
//! from the active set.

use crate::error::{Error, Result};
use crate::matrix::PayoffMatrix;
use crate::vecops;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vec<f64>,
    pub tau: f64,
    /// Coordinates with `v_i - tau > 0`, i.e. strictly positive output.
    pub active_set: Vec<usize>,
}

/// Projects onto the simplex. Input entries must be finite.
pub fn project_simplex(v: &[f64]) -> Result<ProjectionResult> {
    if v.is_empty() {
        return Err(Error::InvalidInput("cannot project an empty vector".into()));
    }
    if !vecops::all_finite(v) {
        return Err(Error::InvalidInput("projection input must be finite".into()));
    }
    let mut sorted = v.to_vec();
    let mut point = vec![0.0; v.len()];
    let tau = project_simplex_into(v, &mut sorted, &mut point);
    let active_set = v
        .iter()
        .enumerate()
        .filter(|(_, &vi)| vi - tau > 0.0)
        .map(|(i, _)| i)
        .collect();
    Ok(ProjectionResult { point, tau, active_set })
}

/// Sort-free-of-allocation core: `sorted` and `point` are caller scratch of
/// the input length. Returns the threshold.
pub(crate) fn project_simplex_into(v: &[f64], sorted: &mut [f64], point: &mut [f64]) -> f64 {
    sorted.copy_from_slice(v);
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).expect("finite by contract"));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            tau = candidate;
        } else {
            break;
        }
    }
    for (p, &vi) in point.iter_mut().zip(v) {
        *p = (vi - tau).max(0.0);
    }
    tau
}

/// Projects onto the affine hull of the simplex: subtracts the uniform
/// share of the excess sum from every coordinate.
pub fn project_affine_hull(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::InvalidInput("cannot project an empty vector".into()));
    }
    if !vecops::all_finite(v) {
        return Err(Error::InvalidInput("projection input must be finite".into()));
    }
    let shift = (v.iter().sum::<f64>() - 1.0) / v.len() as f64;
    Ok(v.iter().map(|x| x - shift).collect())
}

/// Components of one alternating step `(x_t, y_t) -> (x_next, y_next)`:
/// `v` and `u` are the affine-hull projections of the two gradients, with
/// `u` taken at the updated `x_next`; `gamma` and `lambda` absorb what the
/// simplex's inequality constraints cut away, so that
/// `x_next = x_t + eta v - eta gamma` and `y_next = y_t + eta u - eta lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateDecomposition {
    pub v: Vec<f64>,
    pub u: Vec<f64>,
    pub gamma: Vec<f64>,
    pub lambda: Vec<f64>,
    pub gamma_bar: f64,
    pub lambda_bar: f64,
}

/// Replays the alternating step from `(x_t, y_t)` with stepsize `eta` and
/// checks the supplied `(x_next, y_next)` against it within `1e-9` before
/// decomposing. Rejects pairs that are not one such step.
pub fn decompose_update(
    a: &PayoffMatrix,
    eta: f64,
    x_t: &[f64],
    y_t: &[f64],
    x_next: &[f64],
    y_next: &[f64],
) -> Result<UpdateDecomposition> {
    check_step_dims(a, eta, x_t, y_t, x_next, y_next)?;
    replay_check(a, eta, x_t, y_t, x_next, y_next)?;
    Ok(decompose_unchecked(a, eta, x_t, y_t, x_next, y_next))
}

pub(crate) fn check_step_dims(
    a: &PayoffMatrix,
    eta: f64,
    x_t: &[f64],
    y_t: &[f64],
    x_next: &[f64],
    y_next: &[f64],
) -> Result<()> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidInput(format!("stepsize must be positive, got {eta}")));
    }
    if x_t.len() != a.cols() || x_next.len() != a.cols() || y_t.len() != a.rows() || y_next.len() != a.rows()
    {
        return Err(Error::DimensionMismatch("step vectors do not match the matrix".into()));
    }
    Ok(())
}

pub(crate) fn replay_check(
    a: &PayoffMatrix,
    eta: f64,
    x_t: &[f64],
    y_t: &[f64],
    x_next: &[f64],
    y_next: &[f64],
) -> Result<()> {
    let aty = a.tmul_y(y_t);
    let pre_x: Vec<f64> = x_t.iter().zip(&aty).map(|(x, g)| x - eta * g).collect();
    let x_rep = project_simplex(&pre_x)?.point;
    let dev_x = x_rep
        .iter()
        .zip(x_next)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if dev_x > crate::tolerances::REPLAY {
        return Err(Error::NotAnAlternatingStep(format!(
            "x_next deviates from the replayed step by {dev_x:.3e}"
        )));
    }
    let ax = a.mul_x(x_next);
    let pre_y: Vec<f64> = y_t.iter().zip(&ax).map(|(y, g)| y + eta * g).collect();
    let y_rep = project_simplex(&pre_y)?.point;
    let dev_y = y_rep
        .iter()
        .zip(y_next)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if dev_y > crate::tolerances::REPLAY {
        return Err(Error::NotAnAlternatingStep(format!(
            "y_next deviates from the replayed step by {dev_y:.3e}"
        )));
    }
    Ok(())
}

pub(crate) fn decompose_unchecked(
    a: &PayoffMatrix,
    eta: f64,
    x_t: &[f64],
    y_t: &[f64],
    x_next: &[f64],
    y_next: &[f64],
) -> UpdateDecomposition {
    let aty = a.tmul_y(y_t);
    let neg_aty: Vec<f64> = aty.iter().map(|g| -g).collect();
    let v = vecops::center(&neg_aty);
    let ax_next = a.mul_x(x_next);
    let u = vecops::center(&ax_next);
    let gamma: Vec<f64> = x_t
        .iter()
        .zip(&v)
        .zip(x_next)
        .map(|((x, vi), xn)| (x + eta * vi - xn) / eta)
        .collect();
    let lambda: Vec<f64> = y_t
        .iter()
        .zip(&u)
        .zip(y_next)
        .map(|((y, ui), yn)| (y + eta * ui - yn) / eta)
        .collect();
    let gamma_bar = vecops::max_entry(&gamma);
    let lambda_bar = vecops::max_entry(&lambda);
    UpdateDecomposition { v, u, gamma, lambda, gamma_bar, lambda_bar }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::rock_paper_scissors;

    /// Brute-force quadratic-program oracle: tries every support pattern,
    /// builds the equality-constrained minimizer on it, keeps the feasible
    /// candidate closest to the input.
    fn oracle_project(v: &[f64]) -> Vec<f64> {
        let d = v.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 1u32..(1 << d) {
            let support: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
            let tau = (support.iter().map(|&i| v[i]).sum::<f64>() - 1.0) / support.len() as f64;
            let mut cand = vec![0.0; d];
            let mut feasible = true;
            for &i in &support {
                cand[i] = v[i] - tau;
                if cand[i] < 0.0 {
                    feasible = false;
                    break;
                }
            }
            if !feasible {
                continue;
            }
            let dist = vecops::dist2_sq(&cand, v);
            if best.as_ref().map(|(b, _)| dist < *b).unwrap_or(true) {
                best = Some((dist, cand));
            }
        }
        best.expect("full support pattern is always tried").1
    }

    #[test]
    fn projection_matches_worked_example() {
        let r = project_simplex(&[0.5, 0.5, 0.8]).unwrap();
        let want = [0.7 / 3.0, 0.7 / 3.0, 1.6 / 3.0];
        for (p, w) in r.point.iter().zip(&want) {
            assert!((p - w).abs() <= 1e-15, "point {:?}", r.point);
        }
        assert!((r.tau - 0.8 / 3.0).abs() <= 1e-15);
        assert_eq!(r.active_set, vec![0, 1, 2]);
    }

    #[test]
    fn projection_is_identity_on_simplex_points_with_zero_tau() {
        let r = project_simplex(&[0.2, 0.0, 0.8]).unwrap();
        assert_eq!(r.point, vec![0.2, 0.0, 0.8]);
        assert_eq!(r.tau, 0.0);
        assert_eq!(r.active_set, vec![0, 2]);
    }

    #[test]
    fn threshold_ties_go_to_zero() {
        // Input (1.5, 0.5): tau = 0.5, the second coordinate ties and is
        // excluded from the active set.
        let r = project_simplex(&[1.5, 0.5]).unwrap();
        assert_eq!(r.point, vec![1.0, 0.0]);
        assert!((r.tau - 0.5).abs() <= 1e-15);
        assert_eq!(r.active_set, vec![0]);
    }

    #[test]
    fn projection_matches_bruteforce_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for d in 2..=6 {
            for _ in 0..200 {
                let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
                let got = project_simplex(&v).unwrap().point;
                let want = oracle_project(&v);
                for (g, w) in got.iter().zip(&want) {
                    assert!((g - w).abs() <= 1e-10, "v={v:?} got={got:?} want={want:?}");
                }
            }
        }
    }

    #[test]
    fn affine_hull_projection_centers_the_excess() {
        let p = project_affine_hull(&[1.0, 2.0, 3.0]).unwrap();
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() <= 1e-15);
        assert_eq!(p, vec![1.0 - 5.0 / 3.0, 2.0 - 5.0 / 3.0, 3.0 - 5.0 / 3.0]);
    }

    #[test]
    fn simplex_projection_factors_through_affine_hull() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for d in 2..=10 {
            for _ in 0..100 {
                let v: Vec<f64> = (0..d).map(|_| rng.random::<f64>() * 8.0 - 4.0).collect();
                let direct = project_simplex(&v).unwrap().point;
                let via_hull = project_simplex(&project_affine_hull(&v).unwrap()).unwrap().point;
                for (a, b) in direct.iter().zip(&via_hull) {
                    assert!((a - b).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn first_rps_step_decomposition() {
        let a = rock_paper_scissors();
        let eta = 0.01;
        let x0 = [1.0, 0.0, 0.0];
        let y0 = [0.0, 1.0, 0.0];
        let x1 = [0.99, 0.0, 0.01];
        let y1 = [0.0, 1.0, 0.0];
        let d = decompose_update(&a, eta, &x0, &y0, &x1, &y1).unwrap();
        // v = centered -A'y0; A'y0 = (1, 0, -1), so v = (-1, 0, 1).
        assert_eq!(d.v, vec![-1.0, 0.0, 1.0]);
        assert!(d.v.iter().sum::<f64>().abs() <= 1e-15);
        assert!(d.u.iter().sum::<f64>().abs() <= 1e-15);
        // x update is interior here: gamma = 0.
        for g in &d.gamma {
            assert!(g.abs() <= 1e-12, "gamma {:?}", d.gamma);
        }
        // y projection thresholds at tau = 0.0098: lambda peaks on the
        // surviving action.
        assert!(d.lambda_bar > 0.0);
        let reconstructed_y: Vec<f64> = y0
            .iter()
            .zip(&d.u)
            .zip(&d.lambda)
            .map(|((y, u), l)| y + eta * u - eta * l)
            .collect();
        for (r, w) in reconstructed_y.iter().zip(&y1) {
            assert!((r - w).abs() <= 1e-12);
        }
    }

    #[test]
    fn decompose_rejects_non_steps() {
        let a = rock_paper_scissors();
        let u = [1.0 / 3.0; 3];
        let e1 = [1.0, 0.0, 0.0];
        let r = decompose_update(&a, 0.01, &e1, &u, &u, &u);
        assert!(matches!(r, Err(Error::NotAnAlternatingStep(_))));
    }
}
