//! Assembly of the estimation SDP from selection vectors.
//!
//! Variables are two Gram matrices of order `2T + 6`, one per player.
//! Scalar constraints are traces against symmetrized rank-two coefficient
//! matrices: projection-cut inequalities and unit-radius inequalities per
//! block, and cross-block coupling equalities identifying the two views of
//! the bilinear form. Two order-`T + 2` linear matrix maps tie the Gram
//! blocks to a common operator of norm at most one. The objective is the
//! averaged comparator gap, to be maximized.

use serde::{Deserialize, Serialize};

use super::basis::{PepSpec, SelectionBasis};
use crate::error::Result;
use crate::vecops;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GramBlock {
    X,
    Y,
}

/// `coeff * sym(left right')` against one Gram block, where
/// `sym(M) = (M + M') / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankTwoTerm {
    pub block: GramBlock,
    pub coeff: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

/// A sum of rank-two trace terms over the two Gram blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearExpr {
    pub terms: Vec<RankTwoTerm>,
}

impl LinearExpr {
    fn push(&mut self, block: GramBlock, coeff: f64, left: &[f64], right: &[f64]) {
        self.terms.push(RankTwoTerm { block, coeff, left: left.to_vec(), right: right.to_vec() });
    }

    /// Evaluates the expression on dense symmetric blocks.
    pub fn eval(&self, gram_x: &nalgebra::DMatrix<f64>, gram_y: &nalgebra::DMatrix<f64>) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let g = match t.block {
                    GramBlock::X => gram_x,
                    GramBlock::Y => gram_y,
                };
                // tr(G sym(l r')) = l' G r for symmetric G.
                let mut acc = 0.0;
                for (i, &li) in t.left.iter().enumerate() {
                    if li != 0.0 {
                        let mut row = 0.0;
                        for (j, &rj) in t.right.iter().enumerate() {
                            if rj != 0.0 {
                                row += g[(i, j)] * rj;
                            }
                        }
                        acc += li * row;
                    }
                }
                t.coeff * acc
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `expr <= rhs`.
    Le,
    /// `expr == rhs`.
    Eq,
}

/// Identifies a scalar constraint in exports and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintLabel {
    /// Projection-cut inequality on the descent block at `(i, j)`.
    CutX { i: isize, j: isize },
    /// Projection-cut inequality on the ascent block at `(i, j)`.
    CutY { i: isize, j: isize },
    /// Unit-radius inequality for iterate `i` of a block.
    RadiusX { i: isize },
    RadiusY { i: isize },
    /// Cross-block equality identifying `x_i' q_j` with `p_i' y_j`.
    Couple { i: isize, j: isize },
}

impl std::fmt::Display for ConstraintLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::CutX { i, j } => write!(f, "cut_x[{i},{j}]"),
            Self::CutY { i, j } => write!(f, "cut_y[{i},{j}]"),
            Self::RadiusX { i } => write!(f, "radius_x[{i}]"),
            Self::RadiusY { i } => write!(f, "radius_y[{i}]"),
            Self::Couple { i, j } => write!(f, "couple[{i},{j}]"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScalarConstraint {
    pub label: ConstraintLabel,
    pub kind: ConstraintKind,
    pub expr: LinearExpr,
    pub rhs: f64,
}

/// An order-`T + 2` matrix map `plus_cols' G_plus plus_cols -
/// minus_cols' G_minus minus_cols`, required positive semidefinite.
#[derive(Debug, Clone)]
pub struct PsdMap {
    pub name: &'static str,
    pub plus_block: GramBlock,
    pub plus_cols: Vec<Vec<f64>>,
    pub minus_block: GramBlock,
    pub minus_cols: Vec<Vec<f64>>,
}

impl PsdMap {
    pub fn order(&self) -> usize {
        self.plus_cols.len()
    }

    /// Dense value of the map on given Gram blocks.
    pub fn eval(
        &self,
        gram_x: &nalgebra::DMatrix<f64>,
        gram_y: &nalgebra::DMatrix<f64>,
    ) -> nalgebra::DMatrix<f64> {
        let pick = |b: GramBlock| match b {
            GramBlock::X => gram_x,
            GramBlock::Y => gram_y,
        };
        let quad = |cols: &[Vec<f64>], g: &nalgebra::DMatrix<f64>| {
            let k = cols.len();
            let mut out = nalgebra::DMatrix::zeros(k, k);
            for a in 0..k {
                for b in 0..k {
                    let mut acc = 0.0;
                    for (i, &ci) in cols[a].iter().enumerate() {
                        if ci != 0.0 {
                            for (j, &cj) in cols[b].iter().enumerate() {
                                if cj != 0.0 {
                                    acc += ci * g[(i, j)] * cj;
                                }
                            }
                        }
                    }
                    out[(a, b)] = acc;
                }
            }
            out
        };
        quad(&self.plus_cols, pick(self.plus_block)) - quad(&self.minus_cols, pick(self.minus_block))
    }
}

/// The assembled program: maximize `objective` subject to the scalar
/// constraints, the two PSD maps, and both Gram blocks positive
/// semidefinite.
#[derive(Debug, Clone)]
pub struct SdpInstance {
    pub spec: PepSpec,
    pub gram_order: usize,
    pub objective: LinearExpr,
    pub constraints: Vec<ScalarConstraint>,
    pub psd_maps: Vec<PsdMap>,
}

impl SdpInstance {
    pub fn counts(&self) -> (usize, usize, usize) {
        let cuts = self
            .constraints
            .iter()
            .filter(|c| matches!(c.label, ConstraintLabel::CutX { .. } | ConstraintLabel::CutY { .. }))
            .count();
        let radii = self
            .constraints
            .iter()
            .filter(|c| matches!(c.label, ConstraintLabel::RadiusX { .. } | ConstraintLabel::RadiusY { .. }))
            .count();
        let couplings = self
            .constraints
            .iter()
            .filter(|c| matches!(c.label, ConstraintLabel::Couple { .. }))
            .count();
        (cuts, radii, couplings)
    }
}

/// Builds the estimation SDP for a spec. Constraint order is deterministic:
/// all cut inequalities (descent block then ascent block, row-major over
/// `(i, j)`), all radius inequalities (descent then ascent), then the
/// coupling equalities row-major.
pub fn assemble_pep_sdp(spec: &PepSpec) -> Result<SdpInstance> {
    let basis = SelectionBasis::build(spec);
    let mut constraints = Vec::new();
    for i in spec.indices() {
        for j in spec.indices() {
            let mut expr = LinearExpr::default();
            let diff = vecops::sub(basis.x_iter(i), basis.x_iter(j));
            expr.push(GramBlock::X, 1.0, basis.x_cut(j), &diff);
            constraints.push(ScalarConstraint {
                label: ConstraintLabel::CutX { i, j },
                kind: ConstraintKind::Le,
                expr,
                rhs: 0.0,
            });
        }
    }
    for i in spec.indices() {
        for j in spec.indices() {
            let mut expr = LinearExpr::default();
            let diff = vecops::sub(basis.y_iter(i), basis.y_iter(j));
            expr.push(GramBlock::Y, 1.0, basis.y_cut(j), &diff);
            constraints.push(ScalarConstraint {
                label: ConstraintLabel::CutY { i, j },
                kind: ConstraintKind::Le,
                expr,
                rhs: 0.0,
            });
        }
    }
    for i in spec.indices() {
        let mut expr = LinearExpr::default();
        expr.push(GramBlock::X, 1.0, basis.x_iter(i), basis.x_iter(i));
        constraints.push(ScalarConstraint {
            label: ConstraintLabel::RadiusX { i },
            kind: ConstraintKind::Le,
            expr,
            rhs: 1.0,
        });
    }
    for i in spec.indices() {
        let mut expr = LinearExpr::default();
        expr.push(GramBlock::Y, 1.0, basis.y_iter(i), basis.y_iter(i));
        constraints.push(ScalarConstraint {
            label: ConstraintLabel::RadiusY { i },
            kind: ConstraintKind::Le,
            expr,
            rhs: 1.0,
        });
    }
    for i in spec.indices() {
        for j in spec.indices() {
            let mut expr = LinearExpr::default();
            expr.push(GramBlock::X, 1.0, basis.x_iter(i), basis.q_grad(j));
            expr.push(GramBlock::Y, -1.0, basis.p_grad(i), basis.y_iter(j));
            constraints.push(ScalarConstraint {
                label: ConstraintLabel::Couple { i, j },
                kind: ConstraintKind::Eq,
                expr,
                rhs: 0.0,
            });
        }
    }

    let psd_maps = vec![
        PsdMap {
            name: "norm_bound_x",
            plus_block: GramBlock::X,
            plus_cols: basis.x_columns(),
            minus_block: GramBlock::Y,
            minus_cols: basis.p_columns(),
        },
        PsdMap {
            name: "norm_bound_y",
            plus_block: GramBlock::Y,
            plus_cols: basis.y_columns(),
            minus_block: GramBlock::X,
            minus_cols: basis.q_columns(),
        },
    ];

    let mut objective = LinearExpr::default();
    let weight = 1.0 / spec.steps as f64;
    for i in 1..=spec.steps as isize {
        objective.push(GramBlock::X, weight, basis.q_grad(-1), basis.x_iter(i));
        objective.push(GramBlock::Y, -weight, basis.y_iter(i), basis.p_grad(-1));
    }

    Ok(SdpInstance {
        spec: *spec,
        gram_order: spec.ambient_dim(),
        objective,
        constraints,
        psd_maps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Algorithm;

    #[test]
    fn constraint_counts_for_two_steps() {
        let spec = PepSpec::new(Algorithm::Alternating, 2, 1.0).unwrap();
        let inst = assemble_pep_sdp(&spec).unwrap();
        let (cuts, radii, couplings) = inst.counts();
        assert_eq!(cuts, 32);
        assert_eq!(radii, 8);
        assert_eq!(couplings, 16);
        assert_eq!(inst.gram_order, 10);
        assert_eq!(inst.psd_maps.len(), 2);
        assert_eq!(inst.psd_maps[0].order(), 4);
        assert_eq!(inst.psd_maps[1].order(), 4);
    }

    #[test]
    fn objective_has_one_term_pair_per_step() {
        let spec = PepSpec::new(Algorithm::Simultaneous, 5, 0.7).unwrap();
        let inst = assemble_pep_sdp(&spec).unwrap();
        assert_eq!(inst.objective.terms.len(), 10);
        let w: f64 = 1.0 / 5.0;
        for t in &inst.objective.terms {
            assert!((t.coeff.abs() - w).abs() <= 1e-15);
        }
    }

    #[test]
    fn self_cut_constraints_are_trivially_zero() {
        let spec = PepSpec::new(Algorithm::Alternating, 2, 1.0).unwrap();
        let inst = assemble_pep_sdp(&spec).unwrap();
        let g = nalgebra::DMatrix::identity(10, 10);
        for c in &inst.constraints {
            if let ConstraintLabel::CutX { i, j } = c.label {
                if i == j {
                    assert_eq!(c.expr.eval(&g, &g), 0.0);
                }
            }
        }
    }
}
