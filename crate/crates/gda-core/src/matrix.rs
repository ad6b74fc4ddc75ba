//! Dense payoff matrices.
//!
//! A payoff matrix couples the maximizing player's `rows()` actions with the
//! minimizing player's `cols()` actions: the bilinear payoff of mixed
//! strategies `y` (length `rows`) and `x` (length `cols`) is `y' A x`.
//! Storage is row-major. The spectral norm is estimated by power iteration
//! on the smaller of `A'A` and `AA'` and cached after the first call.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::vecops;

#[derive(Debug, Clone, Default)]
pub struct PayoffMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    sigma: OnceLock<f64>,
}

impl PartialEq for PayoffMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.data == other.data
    }
}

impl PayoffMatrix {
    /// Builds an `rows x cols` matrix from row-major entries. All entries
    /// must be finite and both dimensions positive.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "matrix dimensions must be positive, got {rows} x {cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {rows} x {cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if !vecops::all_finite(&data) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        Ok(Self { rows, cols, data, sigma: OnceLock::new() })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("matrix needs at least one row".into()));
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), cols, data)
    }

    /// Number of actions of the maximizing player.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of actions of the minimizing player.
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// `A x` into `out` (length `rows`).
    pub fn mul_x_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (j, o) in out.iter_mut().enumerate() {
            *o = vecops::dot(self.row(j), x);
        }
    }

    /// `A' y` into `out` (length `cols`).
    pub fn tmul_y_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.fill(0.0);
        for (j, &yj) in y.iter().enumerate() {
            if yj != 0.0 {
                for (o, &a) in out.iter_mut().zip(self.row(j)) {
                    *o += yj * a;
                }
            }
        }
    }

    pub fn mul_x(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_x_into(x, &mut out);
        out
    }

    pub fn tmul_y(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.tmul_y_into(y, &mut out);
        out
    }

    /// `y' A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(x.len(), self.cols);
        y.iter()
            .enumerate()
            .filter(|(_, &yj)| yj != 0.0)
            .map(|(j, &yj)| yj * vecops::dot(self.row(j), x))
            .sum()
    }

    /// Largest singular value, estimated by power iteration on the Gram
    /// matrix of the smaller side and cached. Repeated calls return the
    /// identical value.
    pub fn spectral_norm(&self) -> f64 {
        *self.sigma.get_or_init(|| self.power_iteration_sigma())
    }

    fn power_iteration_sigma(&self) -> f64 {
        let frob_sq: f64 = self.data.iter().map(|a| a * a).sum();
        if frob_sq == 0.0 {
            return 0.0;
        }
        // Power iteration on B = A'A (d = cols) or AA' (d = rows),
        // whichever is smaller. Two deterministic starts guard against an
        // unlucky initial vector orthogonal to the top eigenspace.
        let use_cols = self.cols <= self.rows;
        let d = if use_cols { self.cols } else { self.rows };
        let mut best = 0.0f64;
        for start in 0..2 {
            let mut v: Vec<f64> = (0..d)
                .map(|i| {
                    if start == 0 {
                        1.0 + (i as f64) * 1e-3
                    } else {
                        (if i % 2 == 0 { 1.0 } else { -1.0 }) * (1.0 + (i as f64) * 1e-2)
                    }
                })
                .collect();
            let norm = vecops::norm2(&v);
            v.iter_mut().for_each(|z| *z /= norm);
            let mut tmp = vec![0.0; if use_cols { self.rows } else { self.cols }];
            let mut bv = vec![0.0; d];
            let mut lambda_prev = 0.0f64;
            let mut stall = 0;
            for _ in 0..100_000 {
                if use_cols {
                    self.mul_x_into(&v, &mut tmp);
                    self.tmul_y_into(&tmp, &mut bv);
                } else {
                    self.tmul_y_into(&v, &mut tmp);
                    self.mul_x_into(&tmp, &mut bv);
                }
                let lambda = vecops::dot(&v, &bv); // Rayleigh quotient, v normalized
                let bv_norm = vecops::norm2(&bv);
                if bv_norm == 0.0 {
                    lambda_prev = 0.0;
                    break;
                }
                // Residual bound: some eigenvalue of B lies within res of lambda.
                let res_sq = (bv_norm * bv_norm - lambda * lambda).max(0.0);
                if res_sq.sqrt() <= 1e-13 * lambda.abs().max(frob_sq.sqrt() * 1e-30) {
                    lambda_prev = lambda;
                    break;
                }
                if (lambda - lambda_prev).abs() <= 1e-16 * lambda.abs() {
                    stall += 1;
                    if stall >= 4 {
                        lambda_prev = lambda;
                        break;
                    }
                } else {
                    stall = 0;
                }
                lambda_prev = lambda;
                v.iter_mut().zip(&bv).for_each(|(z, &w)| *z = w / bv_norm);
            }
            best = best.max(lambda_prev.max(0.0));
        }
        best.sqrt()
    }

    /// Serializes as text: a `rows cols` header line, then one line per row
    /// of space-separated decimals with 17 significant digits, which
    /// round-trips `f64` exactly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.rows, self.cols);
        for j in 0..self.rows {
            let line: Vec<String> = self.row(j).iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty matrix file".into()))?;
        let mut parts = header.split_whitespace();
        let parse_dim = |p: Option<&str>| -> Result<usize> {
            p.ok_or_else(|| Error::InvalidInput("matrix header needs two integers".into()))?
                .parse::<usize>()
                .map_err(|e| Error::InvalidInput(format!("bad matrix header: {e}")))
        };
        let rows = parse_dim(parts.next())?;
        let cols = parse_dim(parts.next())?;
        let mut data = Vec::with_capacity(rows * cols);
        for line in lines {
            for tok in line.split_whitespace() {
                let v: f64 = tok
                    .parse()
                    .map_err(|e| Error::InvalidInput(format!("bad matrix entry {tok:?}: {e}")))?;
                data.push(v);
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}

/// Rock-paper-scissors payoff: skew-symmetric circulant with spectral norm
/// `sqrt(3)` and the uniform profile as its unique equilibrium.
pub fn rock_paper_scissors() -> PayoffMatrix {
    PayoffMatrix::from_rows(&[
        vec![0.0, -1.0, 1.0],
        vec![1.0, 0.0, -1.0],
        vec![-1.0, 1.0, 0.0],
    ])
    .expect("static matrix is valid")
}

/// The checked-in non-interior 3x3 instance used by the local-convergence
/// experiments. Located by searching standard-normal samples for the matrix
/// whose unique max-support equilibrium is x* = (0, 0.56, 0.44),
/// y* = (0.37, 0.63, 0) to two decimals; pinned here by its entries, not by
/// any generator.
pub fn noninterior_3x3() -> PayoffMatrix {
    PayoffMatrix::from_rows(&[
        vec![1.6243453636632417, -1.0729686221561705, 1.74481176421648],
        vec![-0.61175641365007538, 0.86540762932467852, -0.76120690089510279],
        vec![-0.5281717522634557, -2.3015386968802827, 0.31903909605709857],
    ])
    .expect("static matrix is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle_sigma(a: &PayoffMatrix) -> f64 {
        // Full symmetric eigendecomposition of A'A, independent of the
        // power-iteration path.
        let m = nalgebra::DMatrix::from_row_slice(a.rows(), a.cols(), a.entries());
        let gram = m.transpose() * &m;
        let eig = nalgebra::SymmetricEigen::new(gram);
        eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max).sqrt()
    }

    #[test]
    fn spectral_norm_rock_paper_scissors_is_sqrt3() {
        let a = rock_paper_scissors();
        let got = a.spectral_norm();
        assert!(
            (got - 3.0f64.sqrt()).abs() <= 1e-10,
            "sigma(RPS) = {got}, want sqrt(3)"
        );
    }

    #[test]
    fn spectral_norm_matching_pennies_is_two() {
        let a = PayoffMatrix::from_rows(&[vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
        assert!((a.spectral_norm() - 2.0).abs() <= 1e-10);
    }

    #[test]
    fn spectral_norm_zero_matrix() {
        let a = PayoffMatrix::new(3, 4, vec![0.0; 12]).unwrap();
        assert_eq!(a.spectral_norm(), 0.0);
    }

    #[test]
    fn spectral_norm_matches_eigendecomposition_oracle_up_to_200() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for &(m, n) in &[(2, 2), (5, 3), (17, 17), (40, 7), (200, 200), (200, 50)] {
            let data: Vec<f64> = (0..m * n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let a = PayoffMatrix::new(m, n, data).unwrap();
            let want = oracle_sigma(&a);
            let got = a.spectral_norm();
            let rel = (got - want).abs() / want.max(1e-300);
            assert!(rel <= crate::tolerances::SPECTRAL_REL, "{m}x{n}: rel err {rel}");
        }
    }

    #[test]
    fn spectral_norm_is_cached_bit_identical() {
        let a = noninterior_3x3();
        let s1 = a.spectral_norm();
        let s2 = a.spectral_norm();
        assert_eq!(s1.to_bits(), s2.to_bits());
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let a = noninterior_3x3();
        let b = PayoffMatrix::from_text(&a.to_text()).unwrap();
        assert_eq!(a, b);
        for (x, y) in a.entries().iter().zip(b.entries()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn rejects_bad_shapes_and_nonfinite() {
        assert!(PayoffMatrix::new(0, 2, vec![]).is_err());
        assert!(PayoffMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(PayoffMatrix::new(1, 2, vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn matvec_agrees_with_bilinear() {
        let a = noninterior_3x3();
        let x = [0.2, 0.3, 0.5];
        let y = [0.1, 0.6, 0.3];
        let ax = a.mul_x(&x);
        let aty = a.tmul_y(&y);
        let v1: f64 = y.iter().zip(&ax).map(|(u, v)| u * v).sum();
        let v2: f64 = x.iter().zip(&aty).map(|(u, v)| u * v).sum();
        assert!((v1 - v2).abs() <= 1e-14);
        assert!((a.bilinear(&y, &x) - v1).abs() <= 1e-14);
    }
}
