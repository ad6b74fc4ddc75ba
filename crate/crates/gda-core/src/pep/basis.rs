//! Selection-vector bases for the estimation programs.
//!
//! Each player's Gram block is indexed by an ambient basis of dimension
//! `2T + 6`: two coordinates for the comparator and the initial point,
//! `T + 2` for the projection cuts, and `T + 2` for the opponent-coupled
//! gradients, with the index set running over `-1, 0, 1, ..., T` (`-1` is
//! the comparator, `0` the initial point). Iterates are linear
//! combinations of these determined by the update rule: every descent
//! iterate accumulates the cuts up to itself and the gradients up to the
//! previous index, and the ascent side shifts that gradient window by one
//! when the rule is alternating.

use crate::dynamics::Algorithm;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PepSpec {
    pub algorithm: Algorithm,
    /// Step count `T >= 1`.
    pub steps: usize,
    pub eta: f64,
}

impl PepSpec {
    pub fn new(algorithm: Algorithm, steps: usize, eta: f64) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("estimation needs at least one step".into()));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::Config(format!("stepsize must be positive, got {eta}")));
        }
        Ok(Self { algorithm, steps, eta })
    }

    /// Ambient dimension of each Gram block.
    pub fn ambient_dim(&self) -> usize {
        2 * self.steps + 6
    }

    /// The index set `-1, 0, ..., T`.
    pub fn indices(&self) -> impl Iterator<Item = isize> {
        -1..=(self.steps as isize)
    }

    /// Number of indices, `T + 2`.
    pub fn index_count(&self) -> usize {
        self.steps + 2
    }
}

/// Selection vectors for one player pair. `x`/`y` are the iterate
/// combinations, `gx`/`gy` the projection cuts, `q`/`p` the coupled
/// gradients (`q_i` stands for the descent player's view `A'y_i`, `p_i`
/// for the ascent player's view `A x_i`).
#[derive(Debug, Clone)]
pub struct SelectionBasis {
    spec: PepSpec,
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    gx: Vec<Vec<f64>>,
    gy: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
}

fn unit(dim: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[k] = 1.0;
    v
}

fn slot(i: isize) -> usize {
    (i + 1) as usize
}

impl SelectionBasis {
    pub fn build(spec: &PepSpec) -> Self {
        let t = spec.steps;
        let dim = spec.ambient_dim();
        let count = spec.index_count();
        // Layout per block: slot 0 the comparator, slot 1 the initial
        // point, then the cuts at 2..T+4, then the gradients at T+4..2T+6.
        let cut = |i: isize| unit(dim, (i + 3) as usize);
        let grad = |i: isize| unit(dim, (i + t as isize + 5) as usize);
        let mut gx = Vec::with_capacity(count);
        let mut gy = Vec::with_capacity(count);
        let mut q = Vec::with_capacity(count);
        let mut p = Vec::with_capacity(count);
        for i in spec.indices() {
            gx.push(cut(i));
            gy.push(cut(i));
            q.push(grad(i));
            p.push(grad(i));
        }
        let mut x = vec![Vec::new(); count];
        let mut y = vec![Vec::new(); count];
        x[slot(-1)] = unit(dim, 0);
        x[slot(0)] = unit(dim, 1);
        y[slot(-1)] = unit(dim, 0);
        y[slot(0)] = unit(dim, 1);
        for i in 1..=t as isize {
            // x_i = x_{i-1} - gx_i - eta q_{i-1}
            let mut xv = x[slot(i - 1)].clone();
            axpy(&mut xv, -1.0, &gx[slot(i)]);
            axpy(&mut xv, -spec.eta, &q[slot(i - 1)]);
            x[slot(i)] = xv;
            // y_i = y_{i-1} - gy_i + eta p_i (alternating) or p_{i-1}.
            let p_idx = match spec.algorithm {
                Algorithm::Alternating => slot(i),
                Algorithm::Simultaneous => slot(i - 1),
            };
            let mut yv = y[slot(i - 1)].clone();
            axpy(&mut yv, -1.0, &gy[slot(i)]);
            axpy(&mut yv, spec.eta, &p[p_idx]);
            y[slot(i)] = yv;
        }
        Self { spec: *spec, x, y, gx, gy, q, p }
    }

    pub fn spec(&self) -> &PepSpec {
        &self.spec
    }

    pub fn ambient_dim(&self) -> usize {
        self.spec.ambient_dim()
    }

    pub fn x_iter(&self, i: isize) -> &[f64] {
        &self.x[slot(i)]
    }

    pub fn y_iter(&self, i: isize) -> &[f64] {
        &self.y[slot(i)]
    }

    pub fn x_cut(&self, i: isize) -> &[f64] {
        &self.gx[slot(i)]
    }

    pub fn y_cut(&self, i: isize) -> &[f64] {
        &self.gy[slot(i)]
    }

    pub fn q_grad(&self, i: isize) -> &[f64] {
        &self.q[slot(i)]
    }

    pub fn p_grad(&self, i: isize) -> &[f64] {
        &self.p[slot(i)]
    }

    /// Columns `x_{-1}, x_0, ..., x_T` as a dense matrix, one per index.
    pub fn x_columns(&self) -> Vec<Vec<f64>> {
        self.x.clone()
    }

    pub fn y_columns(&self) -> Vec<Vec<f64>> {
        self.y.clone()
    }

    pub fn q_columns(&self) -> Vec<Vec<f64>> {
        self.q.clone()
    }

    pub fn p_columns(&self) -> Vec<Vec<f64>> {
        self.p.clone()
    }
}

fn axpy(acc: &mut [f64], c: f64, v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += c * b;
    }
}
