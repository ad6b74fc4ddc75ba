//! Sparse SDPA (`.dat-s`) export and import.
//!
//! The assembled program is exported in the dual standard form commonly
//! consumed by conic solvers (`csdp`, `sdpa`, and compatible wrappers):
//! maximize `tr(F_0 X)` subject to `tr(F_k X) = c_k` and block-diagonal
//! `X ⪰ 0`. Inequalities receive one slot each in a diagonal slack block,
//! and each order-`T + 2` matrix map gets its own block tied to the Gram
//! blocks by per-entry equalities. A JSON sidecar manifest records the
//! block and row meanings so solutions can be reimported unambiguously.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::assemble::{ConstraintKind, GramBlock, SdpInstance};
use crate::dynamics::Algorithm;
use crate::error::{Error, Result};

/// One coefficient entry, SDPA conventions: `matno` 0 is the objective,
/// `1..=m_dim` the constraints; `blkno`, `i`, `j` are 1-based with
/// `i <= j` (upper triangle of a symmetric coefficient matrix).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpaEntry {
    pub matno: usize,
    pub blkno: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// An SDPA sparse-format problem: maximize `tr(F_0 X)` over block-diagonal
/// `X ⪰ 0` with `tr(F_k X) = c_k`. Negative block sizes denote diagonal
/// blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpaFile {
    pub m_dim: usize,
    pub block_sizes: Vec<i64>,
    pub rhs: Vec<f64>,
    pub entries: Vec<SdpaEntry>,
}

impl SdpaFile {
    pub fn n_blocks(&self) -> usize {
        self.block_sizes.len()
    }

    /// Structural validity: consistent dimensions, 1-based upper-triangle
    /// indices inside their blocks, diagonal blocks touched only on the
    /// diagonal.
    pub fn validate(&self) -> Result<()> {
        if self.rhs.len() != self.m_dim {
            return Err(Error::InvalidInput(format!(
                "constraint vector has {} entries for {} constraints",
                self.rhs.len(),
                self.m_dim
            )));
        }
        if self.block_sizes.iter().any(|&s| s == 0) {
            return Err(Error::InvalidInput("zero-sized block".into()));
        }
        for e in &self.entries {
            if e.matno > self.m_dim {
                return Err(Error::InvalidInput(format!(
                    "entry references constraint {} of {}",
                    e.matno, self.m_dim
                )));
            }
            if e.blkno == 0 || e.blkno > self.block_sizes.len() {
                return Err(Error::InvalidInput(format!("entry references block {}", e.blkno)));
            }
            let size = self.block_sizes[e.blkno - 1];
            let order = size.unsigned_abs() as usize;
            if e.i == 0 || e.j == 0 || e.i > order || e.j > order || e.i > e.j {
                return Err(Error::InvalidInput(format!(
                    "entry ({}, {}) outside upper triangle of block {} (order {order})",
                    e.i, e.j, e.blkno
                )));
            }
            if size < 0 && e.i != e.j {
                return Err(Error::InvalidInput(format!(
                    "off-diagonal entry ({}, {}) in diagonal block {}",
                    e.i, e.j, e.blkno
                )));
            }
            if !e.value.is_finite() {
                return Err(Error::InvalidInput("non-finite coefficient".into()));
            }
        }
        Ok(())
    }

    /// Renders the standard `.dat-s` layout. Floats carry 17 significant
    /// digits so a parse of the output reproduces them bit-exactly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("{}\n", self.m_dim));
        out.push_str(&format!("{}\n", self.block_sizes.len()));
        let sizes: Vec<String> = self.block_sizes.iter().map(|s| s.to_string()).collect();
        out.push_str(&sizes.join(" "));
        out.push('\n');
        let rhs: Vec<String> = self.rhs.iter().map(|v| format!("{v:.16e}")).collect();
        out.push_str(&rhs.join(" "));
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{} {} {} {} {:.16e}\n",
                e.matno, e.blkno, e.i, e.j, e.value
            ));
        }
        out
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Parses `.dat-s` text. Comment lines (leading `*` or `"`) are
    /// skipped; separators `{}(),` are tolerated in the header lines.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty() && !l.starts_with('*') && !l.starts_with('"'));
        let mut next_line = || {
            lines.next().ok_or_else(|| Error::InvalidInput("truncated SDPA file".into()))
        };
        let clean = |l: &str| l.replace(['{', '}', '(', ')', ','], " ");
        let m_dim: usize = clean(next_line()?)
            .split_whitespace()
            .next()
            .ok_or_else(|| Error::InvalidInput("missing constraint count".into()))?
            .parse()
            .map_err(|_| Error::InvalidInput("bad constraint count".into()))?;
        let n_block: usize = clean(next_line()?)
            .split_whitespace()
            .next()
            .ok_or_else(|| Error::InvalidInput("missing block count".into()))?
            .parse()
            .map_err(|_| Error::InvalidInput("bad block count".into()))?;
        let block_sizes: Vec<i64> = clean(next_line()?)
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::InvalidInput(format!("bad block size {t}"))))
            .collect::<Result<_>>()?;
        if block_sizes.len() != n_block {
            return Err(Error::InvalidInput(format!(
                "block structure lists {} sizes for {} blocks",
                block_sizes.len(),
                n_block
            )));
        }
        // The constraint vector may span lines in files from other tools;
        // keep consuming until m_dim values are read.
        let mut rhs = Vec::with_capacity(m_dim);
        while rhs.len() < m_dim {
            for t in clean(next_line()?).split_whitespace() {
                let v: f64 =
                    t.parse().map_err(|_| Error::InvalidInput(format!("bad rhs value {t}")))?;
                rhs.push(v);
            }
        }
        if rhs.len() != m_dim {
            return Err(Error::InvalidInput("constraint vector longer than declared".into()));
        }
        let mut entries = Vec::new();
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 5 {
                return Err(Error::InvalidInput(format!("bad entry line: {line}")));
            }
            let parse_u = |t: &str| -> Result<usize> {
                t.parse().map_err(|_| Error::InvalidInput(format!("bad entry index {t}")))
            };
            entries.push(SdpaEntry {
                matno: parse_u(toks[0])?,
                blkno: parse_u(toks[1])?,
                i: parse_u(toks[2])?,
                j: parse_u(toks[3])?,
                value: toks[4]
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad entry value {}", toks[4])))?,
            });
        }
        let file = Self { m_dim, block_sizes, rhs, entries };
        file.validate()?;
        Ok(file)
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Block roles in an exported problem, in file order.
pub const BLOCK_GRAM_X: usize = 1;
pub const BLOCK_GRAM_Y: usize = 2;
pub const BLOCK_MAP_X: usize = 3;
pub const BLOCK_MAP_Y: usize = 4;
pub const BLOCK_SLACK: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestBlock {
    pub block: usize,
    pub name: String,
    /// SDPA block size (negative = diagonal).
    pub size: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub row: usize,
    pub label: String,
    pub kind: ConstraintKind,
    pub rhs: f64,
    /// Diagonal slack position for inequalities.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<usize>,
}

/// Sidecar metadata mapping file blocks and rows back to the assembled
/// program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpaManifest {
    pub algorithm: Algorithm,
    pub steps: usize,
    pub eta: f64,
    pub objective_sign: String,
    pub gram_order: usize,
    pub map_order: usize,
    pub block_map: Vec<ManifestBlock>,
    pub constraint_map: Vec<ManifestRow>,
}

impl SdpaManifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

type EntryMap = BTreeMap<(usize, usize, usize), f64>;

/// Adds `coeff * sym(left right')` to a block's upper triangle.
fn accumulate_rank_two(map: &mut EntryMap, blkno: usize, coeff: f64, left: &[f64], right: &[f64]) {
    for (p, &lp) in left.iter().enumerate() {
        if lp == 0.0 {
            continue;
        }
        for (q, &rq) in right.iter().enumerate() {
            if rq == 0.0 {
                continue;
            }
            let half = if p == q { 1.0 } else { 0.5 };
            let key = (blkno, p.min(q) + 1, p.max(q) + 1);
            *map.entry(key).or_insert(0.0) += coeff * lp * rq * half;
        }
    }
}

fn block_of(b: GramBlock) -> usize {
    match b {
        GramBlock::X => BLOCK_GRAM_X,
        GramBlock::Y => BLOCK_GRAM_Y,
    }
}

fn flush(entries: &mut Vec<SdpaEntry>, matno: usize, map: EntryMap) {
    for ((blkno, i, j), value) in map {
        if value != 0.0 {
            entries.push(SdpaEntry { matno, blkno, i, j, value });
        }
    }
}

/// Exports an assembled program. Row order follows the instance's
/// constraint order, then the per-entry linkage equalities of each matrix
/// map (row-major upper triangle).
pub fn export_sdpa(inst: &SdpInstance) -> Result<(SdpaFile, SdpaManifest)> {
    let n = inst.gram_order as i64;
    let k = inst.spec.index_count();
    let n_ineq = inst.constraints.iter().filter(|c| c.kind == ConstraintKind::Le).count();
    let linkage_rows: usize = inst.psd_maps.iter().map(|m| m.order() * (m.order() + 1) / 2).sum();
    let m_dim = inst.constraints.len() + linkage_rows;

    let block_sizes = vec![n, n, k as i64, k as i64, -(n_ineq as i64)];
    let mut entries = Vec::new();
    let mut rhs = Vec::with_capacity(m_dim);
    let mut rows = Vec::with_capacity(m_dim);

    let mut objective = EntryMap::new();
    for t in &inst.objective.terms {
        accumulate_rank_two(&mut objective, block_of(t.block), t.coeff, &t.left, &t.right);
    }
    flush(&mut entries, 0, objective);

    let mut row = 0usize;
    let mut slack = 0usize;
    for c in &inst.constraints {
        row += 1;
        let mut map = EntryMap::new();
        for t in &c.expr.terms {
            accumulate_rank_two(&mut map, block_of(t.block), t.coeff, &t.left, &t.right);
        }
        let slack_pos = match c.kind {
            ConstraintKind::Le => {
                slack += 1;
                map.insert((BLOCK_SLACK, slack, slack), 1.0);
                Some(slack)
            }
            ConstraintKind::Eq => None,
        };
        flush(&mut entries, row, map);
        rhs.push(c.rhs);
        rows.push(ManifestRow {
            row,
            label: c.label.to_string(),
            kind: c.kind,
            rhs: c.rhs,
            slack: slack_pos,
        });
    }

    for (m_idx, psd) in inst.psd_maps.iter().enumerate() {
        let own_block = BLOCK_MAP_X + m_idx;
        for a in 0..psd.order() {
            for b in a..psd.order() {
                row += 1;
                let mut map = EntryMap::new();
                map.insert((own_block, a + 1, b + 1), if a == b { 1.0 } else { 0.5 });
                accumulate_rank_two(
                    &mut map,
                    block_of(psd.plus_block),
                    -1.0,
                    &psd.plus_cols[a],
                    &psd.plus_cols[b],
                );
                accumulate_rank_two(
                    &mut map,
                    block_of(psd.minus_block),
                    1.0,
                    &psd.minus_cols[a],
                    &psd.minus_cols[b],
                );
                flush(&mut entries, row, map);
                rhs.push(0.0);
                rows.push(ManifestRow {
                    row,
                    label: format!("link[{}][{a},{b}]", psd.name),
                    kind: ConstraintKind::Eq,
                    rhs: 0.0,
                    slack: None,
                });
            }
        }
    }

    debug_assert_eq!(row, m_dim);
    let file = SdpaFile { m_dim, block_sizes, rhs, entries };
    file.validate()?;
    let manifest = SdpaManifest {
        algorithm: inst.spec.algorithm,
        steps: inst.spec.steps,
        eta: inst.spec.eta,
        objective_sign: "maximize".into(),
        gram_order: inst.gram_order,
        map_order: k,
        block_map: vec![
            ManifestBlock { block: BLOCK_GRAM_X, name: "gram_x".into(), size: n },
            ManifestBlock { block: BLOCK_GRAM_Y, name: "gram_y".into(), size: n },
            ManifestBlock { block: BLOCK_MAP_X, name: "map_x".into(), size: k as i64 },
            ManifestBlock { block: BLOCK_MAP_Y, name: "map_y".into(), size: k as i64 },
            ManifestBlock { block: BLOCK_SLACK, name: "slack".into(), size: -(n_ineq as i64) },
        ],
        constraint_map: rows,
    };
    Ok((file, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Algorithm;
    use crate::pep::assemble::assemble_pep_sdp;
    use crate::pep::basis::PepSpec;
    use nalgebra::DMatrix;

    fn toy_file() -> SdpaFile {
        SdpaFile {
            m_dim: 2,
            block_sizes: vec![2, -1],
            rhs: vec![1.0, 0.5],
            entries: vec![
                SdpaEntry { matno: 0, blkno: 1, i: 1, j: 1, value: 1.0 },
                SdpaEntry { matno: 0, blkno: 1, i: 1, j: 2, value: -0.125 },
                SdpaEntry { matno: 1, blkno: 1, i: 2, j: 2, value: 3.0 },
                SdpaEntry { matno: 1, blkno: 2, i: 1, j: 1, value: 1.0 },
                SdpaEntry { matno: 2, blkno: 1, i: 1, j: 2, value: 0.7071067811865476 },
            ],
        }
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let file = toy_file();
        let text = file.to_text();
        let back = SdpaFile::from_text(&text).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn parser_tolerates_comments_and_separators() {
        let text = "* a comment\n\"another\n2\n2\n{2, -1}\n1.0, 0.5\n1 1 2 2 3.0\n";
        let file = SdpaFile::from_text(text).unwrap();
        assert_eq!(file.m_dim, 2);
        assert_eq!(file.block_sizes, vec![2, -1]);
        assert_eq!(file.entries.len(), 1);
    }

    #[test]
    fn validation_rejects_lower_triangle_and_bad_blocks() {
        let mut file = toy_file();
        file.entries.push(SdpaEntry { matno: 1, blkno: 1, i: 2, j: 1, value: 1.0 });
        assert!(file.validate().is_err());
        let mut file = toy_file();
        file.entries.push(SdpaEntry { matno: 1, blkno: 3, i: 1, j: 1, value: 1.0 });
        assert!(file.validate().is_err());
        let mut file = toy_file();
        file.entries.push(SdpaEntry { matno: 1, blkno: 2, i: 1, j: 2, value: 1.0 });
        assert!(file.validate().is_err(), "diagonal block must reject off-diagonal entries");
    }

    #[test]
    fn export_structure_for_two_steps() {
        let spec = PepSpec::new(Algorithm::Alternating, 2, 1.3).unwrap();
        let inst = assemble_pep_sdp(&spec).unwrap();
        let (file, manifest) = export_sdpa(&inst).unwrap();
        // 32 cuts + 8 radii + 16 couplings + 2 maps of order 4 -> 20 links.
        assert_eq!(file.m_dim, 76);
        assert_eq!(file.block_sizes, vec![10, 10, 4, 4, -40]);
        assert_eq!(manifest.constraint_map.len(), 76);
        assert_eq!(manifest.block_map.len(), 5);
        assert_eq!(manifest.steps, 2);
        assert_eq!(manifest.algorithm, Algorithm::Alternating);
        let slacked: Vec<_> =
            manifest.constraint_map.iter().filter_map(|r| r.slack).collect();
        assert_eq!(slacked.len(), 40);
        assert_eq!(*slacked.last().unwrap(), 40);
        file.validate().unwrap();
    }

    /// Every exported row must agree with the assembled expressions when
    /// evaluated on arbitrary symmetric blocks, with the map blocks set to
    /// the map values and slacks absorbing inequality gaps.
    #[test]
    fn exported_rows_reproduce_instance_arithmetic() {
        let spec = PepSpec::new(Algorithm::Simultaneous, 2, 0.7).unwrap();
        let inst = assemble_pep_sdp(&spec).unwrap();
        let (file, manifest) = export_sdpa(&inst).unwrap();
        let n = inst.gram_order;
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut gram_x = DMatrix::zeros(n, n);
        let mut gram_y = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let (a, b) = (next(), next());
                gram_x[(i, j)] = a;
                gram_x[(j, i)] = a;
                gram_y[(i, j)] = b;
                gram_y[(j, i)] = b;
            }
        }
        let map_x = inst.psd_maps[0].eval(&gram_x, &gram_y);
        let map_y = inst.psd_maps[1].eval(&gram_x, &gram_y);
        let mut slacks = vec![0.0; 40];
        for (c, row) in inst.constraints.iter().zip(&manifest.constraint_map) {
            if let Some(s) = row.slack {
                slacks[s - 1] = c.rhs - c.expr.eval(&gram_x, &gram_y);
            }
        }
        let blocks: Vec<DMatrix<f64>> = vec![
            gram_x.clone(),
            gram_y.clone(),
            map_x,
            map_y,
            DMatrix::from_fn(40, 40, |i, j| if i == j { slacks[i] } else { 0.0 }),
        ];
        let eval_mat = |matno: usize| -> f64 {
            file.entries
                .iter()
                .filter(|e| e.matno == matno)
                .map(|e| {
                    let x = &blocks[e.blkno - 1];
                    let w = if e.i == e.j { 1.0 } else { 2.0 };
                    w * e.value * x[(e.i - 1, e.j - 1)]
                })
                .sum()
        };
        for ((idx, c), row) in inst.constraints.iter().enumerate().zip(&manifest.constraint_map) {
            let slack_term = row.slack.map_or(0.0, |s| slacks[s - 1]);
            let got = eval_mat(idx + 1) - slack_term;
            let want = c.expr.eval(&gram_x, &gram_y);
            assert!(
                (got - want).abs() <= 1e-9,
                "row {} ({}) evaluates to {got}, expression says {want}",
                idx + 1,
                c.label,
            );
            if row.slack.is_some() {
                // With the slack absorbing the gap, inequality rows meet
                // their right-hand side exactly.
                assert!((eval_mat(idx + 1) - c.rhs).abs() <= 1e-9);
            }
        }
        for row in inst.constraints.len()..file.m_dim {
            let got = eval_mat(row + 1);
            assert!(got.abs() <= 1e-9, "linkage row {} evaluates to {got}", row + 1);
        }
        let obj = eval_mat(0);
        let want = inst.objective.eval(&gram_x, &gram_y);
        assert!((obj - want).abs() <= 1e-9, "objective {obj} vs {want}");
    }

    #[test]
    fn manifest_json_round_trip() {
        let spec = PepSpec::new(Algorithm::Alternating, 1, 0.5).unwrap();
        let inst = assemble_pep_sdp(&spec).unwrap();
        let (_, manifest) = export_sdpa(&inst).unwrap();
        let back = SdpaManifest::from_json(&manifest.to_json().unwrap()).unwrap();
        assert_eq!(back, manifest);
    }
}
