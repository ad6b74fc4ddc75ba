//! Worst-case instance recovery from Gram solutions, and exact planted
//! solutions for testing the recovery path end to end.
//!
//! A verified pair of Gram blocks is factorized as `H' H`; the columns of
//! `H` are concrete Euclidean vectors whose inner products reproduce the
//! Grams. A payoff matrix is then fitted by least squares to the recovered
//! gradient columns and clipped to operator norm one. The replay contract:
//! running the algorithm on the recovered instance — with each player's
//! feasible set taken as the convex hull of that player's recovered points
//! — must reproduce the recovered iterates and the program objective.

use nalgebra::{DMatrix, DVector};

use super::assemble::assemble_pep_sdp;
use super::basis::{PepSpec, SelectionBasis};
use super::solver::{verify_certificate, SdpSolution};
use crate::dynamics::Algorithm;
use crate::error::{Error, Result};
use crate::game::MixedStrategy;
use crate::matrix::PayoffMatrix;
use crate::projection::project_simplex;
use crate::tolerances;
use crate::vecops;

fn slot(i: isize) -> usize {
    (i + 1) as usize
}

/// Builds the exact Gram solution generated by an actual run: comparator
/// and initial points, iterates, projection displacements as cuts, and the
/// true bilinear gradients. The matrix must already have operator norm at
/// most one.
pub fn planted_solution(
    spec: &PepSpec,
    matrix: &PayoffMatrix,
    x0: &MixedStrategy,
    y0: &MixedStrategy,
    comparator_x: &MixedStrategy,
    comparator_y: &MixedStrategy,
) -> Result<SdpSolution> {
    if x0.len() != matrix.cols() || comparator_x.len() != matrix.cols() {
        return Err(Error::DimensionMismatch(format!(
            "x strategies of length {}/{} for a matrix with {} columns",
            x0.len(),
            comparator_x.len(),
            matrix.cols()
        )));
    }
    if y0.len() != matrix.rows() || comparator_y.len() != matrix.rows() {
        return Err(Error::DimensionMismatch(format!(
            "y strategies of length {}/{} for a matrix with {} rows",
            y0.len(),
            comparator_y.len(),
            matrix.rows()
        )));
    }
    let sigma = matrix.spectral_norm();
    if sigma > 1.0 + 1e-9 {
        return Err(Error::InvalidInput(format!(
            "planting requires operator norm at most one, got {sigma:.6}; rescale the matrix"
        )));
    }
    let t_count = spec.steps;
    let count = spec.index_count();
    let eta = spec.eta;
    let n = matrix.cols();
    let m = matrix.rows();

    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut ys: Vec<Vec<f64>> = Vec::with_capacity(count);
    xs.push(comparator_x.as_slice().to_vec());
    xs.push(x0.as_slice().to_vec());
    ys.push(comparator_y.as_slice().to_vec());
    ys.push(y0.as_slice().to_vec());
    let mut x_cuts: Vec<Vec<f64>> = vec![vec![0.0; n], vec![0.0; n]];
    let mut y_cuts: Vec<Vec<f64>> = vec![vec![0.0; m], vec![0.0; m]];

    for t in 1..=t_count {
        let x_cur = &xs[slot(t as isize - 1)];
        let y_cur = &ys[slot(t as isize - 1)];
        let grad_x = matrix.tmul_y(y_cur);
        let z: Vec<f64> = x_cur.iter().zip(&grad_x).map(|(x, g)| x - eta * g).collect();
        let x_next = project_simplex(&z)?.point;
        x_cuts.push(vecops::sub(&z, &x_next));
        let x_for_y = match spec.algorithm {
            Algorithm::Alternating => &x_next,
            Algorithm::Simultaneous => x_cur,
        };
        let grad_y = matrix.mul_x(x_for_y);
        let w: Vec<f64> = y_cur.iter().zip(&grad_y).map(|(y, g)| y + eta * g).collect();
        let y_next = project_simplex(&w)?.point;
        y_cuts.push(vecops::sub(&w, &y_next));
        xs.push(x_next);
        ys.push(y_next);
    }

    // Gradient columns: index -1 holds the comparator's gradient.
    let qs: Vec<Vec<f64>> = ys.iter().map(|y| matrix.tmul_y(y)).collect();
    let ps: Vec<Vec<f64>> = xs.iter().map(|x| matrix.mul_x(x)).collect();

    let dim = spec.ambient_dim();
    let column = |points: &[Vec<f64>], cuts: &[Vec<f64>], grads: &[Vec<f64>], k: usize| {
        if k == 0 {
            points[0].clone()
        } else if k == 1 {
            points[1].clone()
        } else if k <= t_count + 3 {
            cuts[k - 2].clone()
        } else {
            grads[k - t_count - 4].clone()
        }
    };
    let gram = |points: &[Vec<f64>], cuts: &[Vec<f64>], grads: &[Vec<f64>]| {
        let cols: Vec<Vec<f64>> =
            (0..dim).map(|k| column(points, cuts, grads, k)).collect();
        DMatrix::from_fn(dim, dim, |a, b| vecops::dot(&cols[a], &cols[b]))
    };
    let gram_x = gram(&xs, &x_cuts, &qs);
    let gram_y = gram(&ys, &y_cuts, &ps);

    let inst = assemble_pep_sdp(spec)?;
    let map_x = inst.psd_maps[0].eval(&gram_x, &gram_y);
    let map_y = inst.psd_maps[1].eval(&gram_x, &gram_y);
    let mut slacks = Vec::new();
    for c in &inst.constraints {
        if c.kind == super::assemble::ConstraintKind::Le {
            slacks.push(c.rhs - c.expr.eval(&gram_x, &gram_y));
        }
    }
    let linkage: usize = inst.psd_maps.iter().map(|p| p.order() * (p.order() + 1) / 2).sum();
    let m_dim = inst.constraints.len() + linkage;
    let primal_objective = inst.objective.eval(&gram_x, &gram_y);
    Ok(SdpSolution {
        gram_x,
        gram_y,
        map_x,
        map_y,
        slacks,
        dual: vec![0.0; m_dim],
        primal_objective,
        dual_objective: f64::NAN,
    })
}

/// A concrete instance recovered from Gram blocks: a payoff matrix with
/// operator norm at most one and the recovered per-index point, cut, and
/// gradient vectors (index order `-1, 0, 1, ..., T`).
#[derive(Debug, Clone)]
pub struct ReconstructedInstance {
    pub spec: PepSpec,
    pub matrix: PayoffMatrix,
    pub x_points: Vec<Vec<f64>>,
    pub y_points: Vec<Vec<f64>>,
    pub x_cuts: Vec<Vec<f64>>,
    pub y_cuts: Vec<Vec<f64>>,
    pub q_vectors: Vec<Vec<f64>>,
    pub p_vectors: Vec<Vec<f64>>,
    /// Largest residual of the least-squares fit `A x_i = p_i`,
    /// `A' y_j = q_j` before clipping.
    pub fit_residual: f64,
}

impl ReconstructedInstance {
    pub fn comparator_x(&self) -> &[f64] {
        &self.x_points[0]
    }

    pub fn comparator_y(&self) -> &[f64] {
        &self.y_points[0]
    }

    pub fn initial_x(&self) -> &[f64] {
        &self.x_points[1]
    }

    pub fn initial_y(&self) -> &[f64] {
        &self.y_points[1]
    }

    pub fn x_point(&self, i: isize) -> &[f64] {
        &self.x_points[slot(i)]
    }

    pub fn y_point(&self, i: isize) -> &[f64] {
        &self.y_points[slot(i)]
    }
}

/// Factorizes a symmetric PSD-within-tolerance matrix as `H' H`, dropping
/// nonpositive directions. Eigenvalues below `-tol` are an error.
fn factor_gram(g: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let sym = (g + g.transpose()) * 0.5;
    let eig = nalgebra::SymmetricEigen::new(sym);
    let max_eig = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    let floor = 1e-12 * max_eig.max(1.0);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -tol {
            return Err(Error::Reconstruction(format!(
                "Gram block has eigenvalue {lambda:.3e}, below the acceptance floor -{tol:.0e}"
            )));
        }
        if lambda > floor {
            let s = lambda.sqrt();
            rows.push((0..n).map(|c| s * eig.eigenvectors[(c, k)]).collect());
        }
    }
    if rows.is_empty() {
        rows.push(vec![0.0; n]);
    }
    let r = rows.len();
    Ok(DMatrix::from_fn(r, n, |i, j| rows[i][j]))
}

fn apply_columns(h: &DMatrix<f64>, combo: &[f64]) -> Vec<f64> {
    let r = h.nrows();
    let mut out = vec![0.0; r];
    for (j, &c) in combo.iter().enumerate() {
        if c != 0.0 {
            for i in 0..r {
                out[i] += c * h[(i, j)];
            }
        }
    }
    out
}

/// Recovers a concrete worst-case instance from a verified solution.
/// The Grams are factorized, the per-index vectors are read off, and the
/// payoff matrix is fitted by least squares over both gradient families,
/// then clipped to operator norm one.
pub fn reconstruct_worst_case(
    spec: &PepSpec,
    solution: &SdpSolution,
) -> Result<ReconstructedInstance> {
    let inst = assemble_pep_sdp(spec)?;
    let report = verify_certificate(&inst, solution);
    if !report.accepted {
        return Err(Error::Reconstruction(format!(
            "refusing to reconstruct from a rejected solution (min eigenvalue {:.3e}, max equality residual {:.3e}, max inequality violation {:.3e})",
            report.min_eigenvalue, report.max_eq_residual, report.max_ineq_violation
        )));
    }
    let tol = tolerances::CERTIFICATE;
    let h_x = factor_gram(&solution.gram_x, tol)?;
    let h_y = factor_gram(&solution.gram_y, tol)?;
    let r_x = h_x.nrows();
    let r_y = h_y.nrows();
    let basis = SelectionBasis::build(spec);

    let mut x_points = Vec::new();
    let mut y_points = Vec::new();
    let mut x_cuts = Vec::new();
    let mut y_cuts = Vec::new();
    let mut q_vectors = Vec::new();
    let mut p_vectors = Vec::new();
    for i in spec.indices() {
        x_points.push(apply_columns(&h_x, basis.x_iter(i)));
        y_points.push(apply_columns(&h_y, basis.y_iter(i)));
        x_cuts.push(apply_columns(&h_x, basis.x_cut(i)));
        y_cuts.push(apply_columns(&h_y, basis.y_cut(i)));
        q_vectors.push(apply_columns(&h_x, basis.q_grad(i)));
        p_vectors.push(apply_columns(&h_y, basis.p_grad(i)));
    }

    // Least squares for A (r_y x r_x): A x_i = p_i and A' y_j = q_j,
    // unknowns vec(A) column-major.
    let count = spec.index_count();
    let rows = count * (r_y + r_x);
    let cols = r_x * r_y;
    let mut system = DMatrix::zeros(rows, cols);
    let mut rhs = DVector::zeros(rows);
    let mut row = 0;
    for idx in 0..count {
        let x = &x_points[idx];
        let p = &p_vectors[idx];
        for r in 0..r_y {
            for (k, &xk) in x.iter().enumerate() {
                system[(row, k * r_y + r)] = xk;
            }
            rhs[row] = p[r];
            row += 1;
        }
    }
    for idx in 0..count {
        let y = &y_points[idx];
        let q = &q_vectors[idx];
        for k in 0..r_x {
            for (l, &yl) in y.iter().enumerate() {
                system[(row, k * r_y + l)] = yl;
            }
            rhs[row] = q[k];
            row += 1;
        }
    }
    let svd = system.clone().svd(true, true);
    let max_sv = svd.singular_values.iter().copied().fold(0.0f64, f64::max);
    let vec_a = svd
        .solve(&rhs, max_sv * 1e-12)
        .map_err(|e| Error::Reconstruction(format!("least-squares fit failed: {e}")))?;
    let residual = (&system * &vec_a - &rhs).abs().max();
    let mut a = DMatrix::zeros(r_y, r_x);
    for k in 0..r_x {
        for l in 0..r_y {
            a[(l, k)] = vec_a[k * r_y + l];
        }
    }
    // Clip the operator norm to one.
    let mut asvd = a.svd(true, true);
    for s in asvd.singular_values.iter_mut() {
        if *s > 1.0 {
            *s = 1.0;
        }
    }
    let a = asvd
        .recompose()
        .map_err(|e| Error::Reconstruction(format!("operator-norm clipping failed: {e}")))?;
    let mut data = Vec::with_capacity(r_y * r_x);
    for i in 0..r_y {
        for j in 0..r_x {
            data.push(a[(i, j)]);
        }
    }
    let matrix = PayoffMatrix::new(r_y, r_x, data)?;
    Ok(ReconstructedInstance {
        spec: *spec,
        matrix,
        x_points,
        y_points,
        x_cuts,
        y_cuts,
        q_vectors,
        p_vectors,
        fit_residual: residual,
    })
}

/// Euclidean projection onto the convex hull of a finite point set, solved
/// as a simplex-constrained least-squares problem over the hull weights.
pub fn project_onto_hull(points: &[Vec<f64>], z: &[f64]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidInput("hull projection needs at least one point".into()));
    }
    let k = points.len();
    let dim = z.len();
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "hull point of length {} for a target of length {dim}",
                p.len()
            )));
        }
    }
    let gram = DMatrix::from_fn(k, k, |a, b| vecops::dot(&points[a], &points[b]));
    let b = DVector::from_fn(k, |a, _| vecops::dot(&points[a], z));
    let lip = nalgebra::SymmetricEigen::new(gram.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(0.0f64, f64::max);
    let combine = |alpha: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (w, p) in alpha.iter().zip(points) {
            if *w != 0.0 {
                for (o, &pi) in out.iter_mut().zip(p) {
                    *o += w * pi;
                }
            }
        }
        out
    };
    if lip <= f64::MIN_POSITIVE {
        // All points are at the origin.
        return Ok(combine(&vec![1.0 / k as f64; k]));
    }
    // Accelerated projected gradient on the hull weights.
    let mut alpha = vec![1.0 / k as f64; k];
    let mut momentum = alpha.clone();
    let mut theta = 1.0f64;
    for iter in 0..50_000 {
        let av = DVector::from_column_slice(&momentum);
        let grad = &gram * &av - &b;
        let step: Vec<f64> =
            momentum.iter().zip(grad.iter()).map(|(a, g)| a - g / lip).collect();
        let next = project_simplex(&step)?.point;
        let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
        let beta = (theta - 1.0) / theta_next;
        let moved: f64 = next
            .iter()
            .zip(&alpha)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        momentum = next
            .iter()
            .zip(&alpha)
            .map(|(n, a)| n + beta * (n - a))
            .collect();
        alpha = next;
        theta = theta_next;
        if moved <= 1e-15 && iter > 32 {
            break;
        }
    }
    Ok(combine(&alpha))
}

/// Replay outcome: the worst per-coordinate deviation between replayed and
/// recovered iterates, and the averaged-iterate gap measured against the
/// recovered comparators.
#[derive(Debug, Clone)]
pub struct ReplayReport {
    pub max_iterate_deviation: f64,
    pub gap_value: f64,
    pub average_x: Vec<f64>,
    pub average_y: Vec<f64>,
}

/// Runs the algorithm on a reconstructed instance, projecting onto the
/// convex hulls of the recovered points, and checks that it reproduces the
/// recovered iterates. Deviations beyond the reconstruction tolerance
/// fail with the first diverging step.
pub fn replay_reconstruction(rec: &ReconstructedInstance) -> Result<ReplayReport> {
    let spec = &rec.spec;
    let eta = spec.eta;
    let t_count = spec.steps;
    let mut x_cur = rec.initial_x().to_vec();
    let mut y_cur = rec.initial_y().to_vec();
    let mut avg_x = vec![0.0; x_cur.len()];
    let mut avg_y = vec![0.0; y_cur.len()];
    let mut max_dev = 0.0f64;
    for t in 1..=t_count {
        let grad_x = rec.matrix.tmul_y(&y_cur);
        let z: Vec<f64> = x_cur.iter().zip(&grad_x).map(|(x, g)| x - eta * g).collect();
        let x_next = project_onto_hull(&rec.x_points, &z)?;
        let x_for_y = match spec.algorithm {
            Algorithm::Alternating => &x_next,
            Algorithm::Simultaneous => &x_cur,
        };
        let grad_y = rec.matrix.mul_x(x_for_y);
        let w: Vec<f64> = y_cur.iter().zip(&grad_y).map(|(y, g)| y + eta * g).collect();
        let y_next = project_onto_hull(&rec.y_points, &w)?;
        let dev_x = max_abs_diff(&x_next, rec.x_point(t as isize));
        let dev_y = max_abs_diff(&y_next, rec.y_point(t as isize));
        let dev = dev_x.max(dev_y);
        if dev > tolerances::RECONSTRUCTION_ITERATES {
            return Err(Error::Reconstruction(format!(
                "replay diverged at step {t}: iterate deviation {dev:.3e} exceeds {:.0e}",
                tolerances::RECONSTRUCTION_ITERATES
            )));
        }
        max_dev = max_dev.max(dev);
        x_cur = x_next;
        y_cur = y_next;
        let inv = 1.0 / t as f64;
        for (a, v) in avg_x.iter_mut().zip(&x_cur) {
            *a += (v - *a) * inv;
        }
        for (a, v) in avg_y.iter_mut().zip(&y_cur) {
            *a += (v - *a) * inv;
        }
    }
    let gap_value = dot_through(&rec.matrix, rec.comparator_y(), &avg_x)
        - dot_through(&rec.matrix, &avg_y, rec.comparator_x());
    Ok(ReplayReport { max_iterate_deviation: max_dev, gap_value, average_x: avg_x, average_y: avg_y })
}

fn dot_through(a: &PayoffMatrix, y: &[f64], x: &[f64]) -> f64 {
    vecops::dot(y, &a.mul_x(x))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::PayoffMatrix;

    fn planted_setup() -> (PepSpec, PayoffMatrix, MixedStrategy, MixedStrategy, MixedStrategy, MixedStrategy)
    {
        // Matching pennies scaled to operator norm one.
        let matrix =
            PayoffMatrix::from_rows(&[vec![0.5, -0.5], vec![-0.5, 0.5]]).unwrap();
        let spec = PepSpec::new(Algorithm::Alternating, 2, 0.9).unwrap();
        let x0 = MixedStrategy::vertex(2, 0).unwrap();
        let y0 = MixedStrategy::vertex(2, 1).unwrap();
        let comp = MixedStrategy::uniform(2).unwrap();
        (spec, matrix, x0, y0, comp.clone(), comp)
    }

    #[test]
    fn planted_solution_passes_certificate() {
        let (spec, matrix, x0, y0, cx, cy) = planted_setup();
        let sol = planted_solution(&spec, &matrix, &x0, &y0, &cx, &cy).unwrap();
        let inst = assemble_pep_sdp(&spec).unwrap();
        let report = verify_certificate(&inst, &sol);
        assert!(
            report.accepted,
            "planted solution rejected: eq {:.3e} ineq {:.3e} eig {:.3e}",
            report.max_eq_residual, report.max_ineq_violation, report.min_eigenvalue
        );
        assert!(report.max_eq_residual <= 1e-12);
        assert!(report.max_ineq_violation <= 1e-12);
    }

    #[test]
    fn planted_objective_matches_direct_average_gap() {
        let (spec, matrix, x0, y0, cx, cy) = planted_setup();
        let sol = planted_solution(&spec, &matrix, &x0, &y0, &cx, &cy).unwrap();
        // Recompute the averaged comparator gap by running the updates
        // directly.
        let eta = spec.eta;
        let mut x = x0.as_slice().to_vec();
        let mut y = y0.as_slice().to_vec();
        let mut gap_sum = 0.0;
        for _ in 1..=spec.steps {
            let gx = matrix.tmul_y(&y);
            let zx: Vec<f64> = x.iter().zip(&gx).map(|(a, g)| a - eta * g).collect();
            x = project_simplex(&zx).unwrap().point;
            let gy = matrix.mul_x(&x);
            let zy: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a + eta * g).collect();
            y = project_simplex(&zy).unwrap().point;
            gap_sum += vecops::dot(cy.as_slice(), &matrix.mul_x(&x))
                - vecops::dot(&y, &matrix.mul_x(cx.as_slice()));
        }
        let want = gap_sum / spec.steps as f64;
        assert!(
            (sol.primal_objective - want).abs() <= 1e-12,
            "objective {} vs direct {}",
            sol.primal_objective,
            want
        );
    }

    #[test]
    fn reconstruction_preserves_pairwise_geometry() {
        let (spec, matrix, x0, y0, cx, cy) = planted_setup();
        let sol = planted_solution(&spec, &matrix, &x0, &y0, &cx, &cy).unwrap();
        let rec = reconstruct_worst_case(&spec, &sol).unwrap();
        let basis = SelectionBasis::build(&spec);
        for (a, pa) in rec.x_points.iter().enumerate() {
            for (b, pb) in rec.x_points.iter().enumerate() {
                let got = vecops::dot(pa, pb);
                let ia = a as isize - 1;
                let ib = b as isize - 1;
                let combo_a = basis.x_iter(ia);
                let combo_b = basis.x_iter(ib);
                let mut expect = 0.0;
                for (p, &ca) in combo_a.iter().enumerate() {
                    if ca == 0.0 {
                        continue;
                    }
                    for (q, &cb) in combo_b.iter().enumerate() {
                        if cb != 0.0 {
                            expect += ca * cb * sol.gram_x[(p, q)];
                        }
                    }
                }
                assert!(
                    (got - expect).abs() <= 1e-9,
                    "recovered <x_{ia}, x_{ib}> = {got}, Gram says {expect}"
                );
            }
        }
        assert!(rec.matrix.spectral_norm() <= 1.0 + 1e-6);
        assert!(rec.fit_residual <= 1e-9, "fit residual {:.3e}", rec.fit_residual);
    }

    #[test]
    fn replay_reproduces_planted_run() {
        let (spec, matrix, x0, y0, cx, cy) = planted_setup();
        let sol = planted_solution(&spec, &matrix, &x0, &y0, &cx, &cy).unwrap();
        let rec = reconstruct_worst_case(&spec, &sol).unwrap();
        let report = replay_reconstruction(&rec).unwrap();
        assert!(
            report.max_iterate_deviation <= 1e-8,
            "deviation {:.3e}",
            report.max_iterate_deviation
        );
        assert!(
            (report.gap_value - sol.primal_objective).abs() <= 1e-9,
            "gap {} vs objective {}",
            report.gap_value,
            sol.primal_objective
        );
    }

    #[test]
    fn hull_projection_matches_hand_cases() {
        let points = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let inside = project_onto_hull(&points, &[0.8, 0.8]).unwrap();
        assert!((inside[0] - 0.5).abs() <= 1e-10 && (inside[1] - 0.5).abs() <= 1e-10);
        let clamped = project_onto_hull(&points, &[2.0, -1.0]).unwrap();
        assert!((clamped[0] - 1.0).abs() <= 1e-10 && (clamped[1] - 0.0).abs() <= 1e-10);
        let exact = project_onto_hull(&points, &[0.25, 0.75]).unwrap();
        assert!((exact[0] - 0.25).abs() <= 1e-10 && (exact[1] - 0.75).abs() <= 1e-10);
    }

    #[test]
    fn zero_gram_reconstruction_is_degenerate_but_sound() {
        let spec = PepSpec::new(Algorithm::Alternating, 1, 0.5).unwrap();
        let dim = spec.ambient_dim();
        let sol = SdpSolution {
            gram_x: DMatrix::zeros(dim, dim),
            gram_y: DMatrix::zeros(dim, dim),
            map_x: DMatrix::zeros(3, 3),
            map_y: DMatrix::zeros(3, 3),
            slacks: Vec::new(),
            dual: Vec::new(),
            primal_objective: 0.0,
            dual_objective: 0.0,
        };
        let rec = reconstruct_worst_case(&spec, &sol).unwrap();
        let report = replay_reconstruction(&rec).unwrap();
        assert_eq!(report.max_iterate_deviation, 0.0);
        assert_eq!(report.gap_value, 0.0);
    }

    #[test]
    fn rejected_solutions_are_refused() {
        let spec = PepSpec::new(Algorithm::Alternating, 1, 0.5).unwrap();
        let dim = spec.ambient_dim();
        let mut gram_x = DMatrix::zeros(dim, dim);
        gram_x[(0, 0)] = -1.0; // indefinite
        let sol = SdpSolution {
            gram_x,
            gram_y: DMatrix::zeros(dim, dim),
            map_x: DMatrix::zeros(3, 3),
            map_y: DMatrix::zeros(3, 3),
            slacks: Vec::new(),
            dual: Vec::new(),
            primal_objective: 0.0,
            dual_objective: 0.0,
        };
        let err = reconstruct_worst_case(&spec, &sol).unwrap_err();
        assert!(matches!(err, Error::Reconstruction(_)));
    }
}
