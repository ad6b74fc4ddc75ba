//! Local neighbourhoods of a (possibly non-interior) equilibrium used by
//! the local convergence analysis.
//!
//! Both regions constrain the distance to the equilibrium per player and
//! cap the mass placed on off-support actions. The inner region is the one
//! trajectories may start from; the outer region is the one they are
//! guaranteed not to leave. When a player's support is full its tail cap is
//! vacuous and flagged redundant.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::equilibrium::{delta_margin, EquilibriumProfile};
use crate::error::{Error, Result};
use crate::game::MixedStrategy;
use crate::matrix::PayoffMatrix;
use crate::vecops;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalRegionParams {
    /// Separation margin of the equilibrium.
    pub delta: f64,
    /// Support ratios `min(|support| / #off-support, dimension)` per player.
    pub r_x: f64,
    pub r_y: f64,
    /// Tail contraction rate `min(eta sigma, delta/(192 |I*|), delta/(192 |J*|))`.
    pub c: f64,
    /// Distance radii of the outer and inner regions: `delta/4` and `delta/8`.
    pub radius_s: f64,
    pub radius_s0: f64,
    /// Off-support mass caps, outer region: `(eta sigma / 2) r delta`.
    pub tail_cap_s_x: f64,
    pub tail_cap_s_y: f64,
    /// Off-support mass caps, inner region: `(c / 2) r delta`.
    pub tail_cap_s0_x: f64,
    pub tail_cap_s0_y: f64,
    /// A full support makes the corresponding tail cap vacuous.
    pub x_cap_redundant: bool,
    pub y_cap_redundant: bool,
}

/// Computes the region parameters. Requires `0 < eta <= 1/(2 sigma)`.
pub fn local_regions(a: &PayoffMatrix, eq: &EquilibriumProfile, eta: f64) -> Result<LocalRegionParams> {
    if eq.x.len() != a.cols() || eq.y.len() != a.rows() {
        return Err(Error::DimensionMismatch("profile does not match the matrix".into()));
    }
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::Precondition(format!("stepsize must be positive, got {eta}")));
    }
    let sigma = a.spectral_norm();
    if sigma > 0.0 && eta > 1.0 / (2.0 * sigma) {
        return Err(Error::Precondition(format!(
            "local regions need eta <= 1/(2 sigma) = {}, got {eta}",
            1.0 / (2.0 * sigma)
        )));
    }
    let delta = delta_margin(a, eq)?;
    let n = a.cols();
    let m = a.rows();
    let si = eq.support_x.len();
    let sj = eq.support_y.len();
    let r_x = if si == n { n as f64 } else { (si as f64 / (n - si) as f64).min(n as f64) };
    let r_y = if sj == m { m as f64 } else { (sj as f64 / (m - sj) as f64).min(m as f64) };
    let c = (eta * sigma)
        .min(delta / (192.0 * si as f64))
        .min(delta / (192.0 * sj as f64));
    Ok(LocalRegionParams {
        delta,
        r_x,
        r_y,
        c,
        radius_s: delta / 4.0,
        radius_s0: delta / 8.0,
        tail_cap_s_x: 0.5 * eta * sigma * r_x * delta,
        tail_cap_s_y: 0.5 * eta * sigma * r_y * delta,
        tail_cap_s0_x: 0.5 * c * r_x * delta,
        tail_cap_s0_y: 0.5 * c * r_y * delta,
        x_cap_redundant: si == n,
        y_cap_redundant: sj == m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegionMembership {
    pub in_s: bool,
    pub in_s0: bool,
}

/// Tests a profile against both regions. Distances are measured per player;
/// tail caps are skipped for a player with full support.
pub fn membership(
    params: &LocalRegionParams,
    eq: &EquilibriumProfile,
    x: &[f64],
    y: &[f64],
) -> RegionMembership {
    let dx = vecops::dist2(x, &eq.x);
    let dy = vecops::dist2(y, &eq.y);
    let tail_x = x
        .iter()
        .enumerate()
        .filter(|(i, _)| !eq.support_x.contains(i))
        .map(|(_, &v)| v)
        .fold(0.0f64, f64::max);
    let tail_y = y
        .iter()
        .enumerate()
        .filter(|(j, _)| !eq.support_y.contains(j))
        .map(|(_, &v)| v)
        .fold(0.0f64, f64::max);
    let tails = |cap_x: f64, cap_y: f64| {
        (params.x_cap_redundant || tail_x <= cap_x) && (params.y_cap_redundant || tail_y <= cap_y)
    };
    let in_s = dx <= params.radius_s
        && dy <= params.radius_s
        && tails(params.tail_cap_s_x, params.tail_cap_s_y);
    let in_s0 = dx <= params.radius_s0
        && dy <= params.radius_s0
        && tails(params.tail_cap_s0_x, params.tail_cap_s0_y);
    RegionMembership { in_s, in_s0 }
}

/// Draws a strategy profile inside the inner region by rejection sampling:
/// a centered Gaussian perturbation on each support scaled to stay inside
/// the distance radius, plus uniform off-support dust below the tail caps,
/// rebalanced on the support. A zero radius returns the equilibrium itself.
pub fn sample_init_in_s0(
    params: &LocalRegionParams,
    eq: &EquilibriumProfile,
    seed: u64,
) -> Result<(MixedStrategy, MixedStrategy)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..100_000 {
        let x = perturb(
            &mut rng,
            &eq.x,
            &eq.support_x,
            params.radius_s0,
            if params.x_cap_redundant { 0.0 } else { params.tail_cap_s0_x },
        );
        let y = perturb(
            &mut rng,
            &eq.y,
            &eq.support_y,
            params.radius_s0,
            if params.y_cap_redundant { 0.0 } else { params.tail_cap_s0_y },
        );
        let (Some(x), Some(y)) = (x, y) else { continue };
        let mem = membership(params, eq, &x, &y);
        if !mem.in_s0 {
            continue;
        }
        let (Ok(xs), Ok(ys)) = (MixedStrategy::new(x), MixedStrategy::new(y)) else {
            continue;
        };
        return Ok((xs, ys));
    }
    Err(Error::Sampling("no inner-region point accepted after 100000 proposals".into()))
}

fn perturb<R: Rng>(
    rng: &mut R,
    center: &[f64],
    support: &[usize],
    radius: f64,
    tail_cap: f64,
) -> Option<Vec<f64>> {
    let mut out = center.to_vec();
    // Mean-zero Gaussian direction on the support, scaled to at most half
    // the radius (the tail rebalance below uses up some of the rest).
    if support.len() > 1 && radius > 0.0 {
        let mut z: Vec<f64> = (0..support.len()).map(|_| StandardNormal.sample(rng)).collect();
        let mean = z.iter().sum::<f64>() / z.len() as f64;
        z.iter_mut().for_each(|v| *v -= mean);
        let norm = vecops::norm2(&z);
        if norm > 0.0 {
            let target = 0.5 * radius * rng.random::<f64>();
            let scale = target / norm;
            for (k, &i) in support.iter().enumerate() {
                out[i] += scale * z[k];
            }
        }
    }
    // Off-support dust below the cap, paid for uniformly by the support.
    let mut dust_total = 0.0;
    if tail_cap > 0.0 {
        for i in 0..out.len() {
            if !support.contains(&i) {
                let d = 0.5 * tail_cap * rng.random::<f64>();
                out[i] = d;
                dust_total += d;
            }
        }
    }
    if dust_total > 0.0 {
        let share = dust_total / support.len() as f64;
        for &i in support {
            out[i] -= share;
        }
    }
    if out.iter().any(|&v| v < 0.0) {
        return None;
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_equilibrium_max_support;
    use crate::matrix::{noninterior_3x3, rock_paper_scissors};

    #[test]
    fn rps_region_parameters() {
        let a = rock_paper_scissors();
        let eq = solve_equilibrium_max_support(&a).unwrap();
        let p = local_regions(&a, &eq, 0.19).unwrap();
        assert!((p.delta - 1.0 / 3.0).abs() <= 1e-12);
        assert_eq!(p.r_x, 3.0);
        assert_eq!(p.r_y, 3.0);
        assert!(p.x_cap_redundant && p.y_cap_redundant);
        assert!((p.radius_s - 1.0 / 12.0).abs() <= 1e-12);
        assert!((p.radius_s0 - 1.0 / 24.0).abs() <= 1e-12);
        // c = min(eta sigma, delta/576) = delta/576 here.
        assert!((p.c - (1.0 / 3.0) / 576.0).abs() <= 1e-12, "c = {}", p.c);
    }

    #[test]
    fn stepsize_guard_is_enforced() {
        let a = rock_paper_scissors();
        let eq = solve_equilibrium_max_support(&a).unwrap();
        let too_big = 1.0 / (2.0 * a.spectral_norm()) + 1e-6;
        assert!(matches!(local_regions(&a, &eq, too_big), Err(Error::Precondition(_))));
        assert!(local_regions(&a, &eq, 1.0 / (2.0 * a.spectral_norm())).is_ok());
    }

    #[test]
    fn equilibrium_is_in_both_regions() {
        let a = noninterior_3x3();
        let eq = solve_equilibrium_max_support(&a).unwrap();
        let eta = 1.0 / (2.0 * a.spectral_norm());
        let p = local_regions(&a, &eq, eta).unwrap();
        let mem = membership(&p, &eq, &eq.x, &eq.y);
        assert!(mem.in_s && mem.in_s0);
    }

    #[test]
    fn membership_rejects_far_points() {
        let a = noninterior_3x3();
        let eq = solve_equilibrium_max_support(&a).unwrap();
        let eta = 1.0 / (2.0 * a.spectral_norm());
        let p = local_regions(&a, &eq, eta).unwrap();
        let u = [1.0 / 3.0; 3];
        let mem = membership(&p, &eq, &u, &u);
        assert!(!mem.in_s && !mem.in_s0);
    }

    #[test]
    fn sampler_lands_in_the_inner_region() {
        let a = noninterior_3x3();
        let eq = solve_equilibrium_max_support(&a).unwrap();
        let eta = 1.0 / (2.0 * a.spectral_norm());
        let p = local_regions(&a, &eq, eta).unwrap();
        for seed in 0..100 {
            let (x, y) = sample_init_in_s0(&p, &eq, seed).unwrap();
            let mem = membership(&p, &eq, &x, &y);
            assert!(mem.in_s0, "seed {seed} left the inner region");
            assert!(mem.in_s);
        }
        // Distinct seeds give distinct points.
        let (x1, _) = sample_init_in_s0(&p, &eq, 1).unwrap();
        let (x2, _) = sample_init_in_s0(&p, &eq, 2).unwrap();
        assert_ne!(x1.as_slice(), x2.as_slice());
    }

    #[test]
    fn zero_radius_returns_the_equilibrium() {
        let a = rock_paper_scissors();
        let eq = solve_equilibrium_max_support(&a).unwrap();
        let mut p = local_regions(&a, &eq, 0.1).unwrap();
        p.radius_s0 = 0.0;
        p.tail_cap_s0_x = 0.0;
        p.tail_cap_s0_y = 0.0;
        let (x, y) = sample_init_in_s0(&p, &eq, 5).unwrap();
        assert_eq!(x.as_slice(), eq.x.as_slice());
        assert_eq!(y.as_slice(), eq.y.as_slice());
    }
}
