//! Block-diagonal semidefinite programs in SDPA form, an embedded
//! interior-point solver, and SDPA sparse file exchange.
//!
//! The convention is the one SDPA files use:
//!
//! ```text
//! primal:  minimize   c . x
//!          subject to X = sum_i F_i x_i - F_0,  X psd
//! dual:    maximize   Tr(F_0 Y)
//!          subject to Tr(F_i Y) = c_i,  Y psd
//! ```
//!
//! Any primal feasible `x` certifies `Tr(F_0 Y) <= c . x` for every dual
//! feasible `Y`, so maximization problems over a matrix variable are posed
//! as the dual and the primal objective is the certified upper bound.

mod ipm;
mod sdpa;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ipm::{solve_embedded, IpmOptions, MAX_CONSTRAINTS, MAX_DIMENSION};
pub use sdpa::{export_sdpa, import_sdpa_solution, parse_sdpa};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    Dense,
    Diagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockSpec {
    pub kind: BlockKind,
    pub size: usize,
}

impl BlockSpec {
    pub fn dense(size: usize) -> BlockSpec {
        BlockSpec { kind: BlockKind::Dense, size }
    }

    pub fn diagonal(size: usize) -> BlockSpec {
        BlockSpec { kind: BlockKind::Diagonal, size }
    }

    /// Size as written in SDPA files: negative for diagonal blocks.
    pub fn sdpa_size(&self) -> i64 {
        match self.kind {
            BlockKind::Dense => self.size as i64,
            BlockKind::Diagonal => -(self.size as i64),
        }
    }
}

/// One upper-triangle entry, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Symmetric block matrix stored as sorted upper-triangle entries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseSym {
    entries: Vec<Entry>,
}

impl SparseSym {
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn normalize(&mut self) {
        self.entries.sort_by(|a, b| (a.block, a.i, a.j).cmp(&(b.block, b.i, b.j)));
        let mut merged: Vec<Entry> = Vec::with_capacity(self.entries.len());
        for e in self.entries.drain(..) {
            match merged.last_mut() {
                Some(last) if (last.block, last.i, last.j) == (e.block, e.i, e.j) => last.value += e.value,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.value != 0.0);
        self.entries = merged;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpProblem {
    blocks: Vec<BlockSpec>,
    c: Vec<f64>,
    /// `f[0]` is `F_0`, `f[i]` is `F_i`.
    f: Vec<SparseSym>,
}

impl SdpProblem {
    pub fn new(blocks: Vec<BlockSpec>, c: Vec<f64>) -> SdpProblem {
        let m = c.len();
        SdpProblem {
            blocks,
            c,
            f: vec![SparseSym::default(); m + 1],
        }
    }

    pub fn m(&self) -> usize {
        self.c.len()
    }

    pub fn blocks(&self) -> &[BlockSpec] {
        &self.blocks
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn matrix(&self, k: usize) -> &SparseSym {
        &self.f[k]
    }

    pub fn total_dimension(&self) -> usize {
        self.blocks.iter().map(|b| b.size).sum()
    }

    /// Adds `value` at `(i, j)` and its mirror in matrix `k` (0 is `F_0`).
    /// Entries at the same position accumulate.
    pub fn add(&mut self, k: usize, block: usize, i: usize, j: usize, value: f64) -> Result<()> {
        let spec = self
            .blocks
            .get(block)
            .ok_or_else(|| Error::InvalidParameter(format!("block {block} does not exist")))?;
        if k > self.m() {
            return Err(Error::InvalidParameter(format!("matrix {k} exceeds m = {}", self.m())));
        }
        if i >= spec.size || j >= spec.size {
            return Err(Error::InvalidParameter(format!(
                "entry ({i}, {j}) outside block {block} of size {}",
                spec.size
            )));
        }
        if spec.kind == BlockKind::Diagonal && i != j {
            return Err(Error::InvalidParameter(format!("off-diagonal entry in diagonal block {block}")));
        }
        let (i, j) = (i.min(j), i.max(j));
        self.f[k].entries.push(Entry { block, i, j, value });
        Ok(())
    }

    /// Sorts and merges entries so that equal problems compare and export
    /// identically.
    pub fn finalize(&mut self) {
        for f in &mut self.f {
            f.normalize();
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (k, f) in self.f.iter().enumerate() {
            for e in f.entries() {
                let spec = self.blocks.get(e.block).ok_or_else(|| {
                    Error::InvalidParameter(format!("matrix {k} references missing block {}", e.block))
                })?;
                if e.i > e.j || e.j >= spec.size || (spec.kind == BlockKind::Diagonal && e.i != e.j) {
                    return Err(Error::InvalidParameter(format!(
                        "matrix {k} has invalid entry ({}, {}) in block {}",
                        e.i, e.j, e.block
                    )));
                }
                if !e.value.is_finite() {
                    return Err(Error::InvalidParameter(format!("matrix {k} has a non-finite entry")));
                }
            }
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("objective has a non-finite entry".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    NearOptimal,
    Infeasible,
    Unbounded,
    Failed,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near-optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::Failed => "failed",
        })
    }
}

/// Dense symmetric block, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseBlock {
    pub size: usize,
    pub data: Vec<f64>,
}

impl DenseBlock {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// `c . x`.
    pub primal_objective: f64,
    /// `Tr(F_0 Y)`.
    pub dual_objective: f64,
    /// Relative duality gap.
    pub gap: f64,
    pub iterations: usize,
    pub solver: String,
    /// Dual matrix `Y`, when the solver reports it.
    pub dual_matrix: Option<Vec<DenseBlock>>,
    /// Smallest eigenvalue of the primal slack `sum F_i x_i - F_0`.
    pub primal_min_eigenvalue: Option<f64>,
    pub message: String,
}

/// `|p - d| / max(1, (|p| + |d|) / 2)`.
pub fn relative_gap(primal: f64, dual: f64) -> f64 {
    (primal - dual).abs() / f64::max(1.0, (primal.abs() + dual.abs()) / 2.0)
}
