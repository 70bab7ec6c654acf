//! Midpoint collocation of the transfer operator `L h(x) = sum_{f(y) = x} w(y) h(y)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::map::IntervalMap;
use crate::potential::UPotential;

/// Row-oriented sparse matrix with nonnegative entries in practice.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().flatten().any(|&(j, _)| j >= n) {
            return Err(Error::Validation("column index out of range".into()));
        }
        Ok(SparseMatrix { rows })
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self> {
        let n = dense.len();
        if dense.iter().any(|r| r.len() != n) {
            return Err(Error::Validation("matrix must be square".into()));
        }
        Self::from_rows(
            dense
                .iter()
                .map(|r| r.iter().enumerate().filter(|(_, &v)| v != 0.0).map(|(j, &v)| (j, v)).collect())
                .collect(),
        )
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.size();
        let mut d = vec![vec![0.0; n]; n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                d[i][j] += v;
            }
        }
        d
    }

    pub fn mul(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(j, a)| a * v[j]).sum()).collect()
    }

    pub fn mul_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                out[j] += a * v[i];
            }
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.iter().map(|e| e.1).sum()).collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.rows.iter().flatten().all(|&(_, v)| v >= 0.0)
    }

    /// Copy with every row and column flagged in `mask` removed (zeroed).
    pub fn without_cells(&self, mask: &[bool]) -> SparseMatrix {
        SparseMatrix {
            rows: self
                .rows
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    if mask[i] {
                        Vec::new()
                    } else {
                        row.iter().copied().filter(|&(j, _)| !mask[j]).collect()
                    }
                })
                .collect(),
        }
    }
}

/// The t-independent part of the collocation: midpoints, their preimages and the cells
/// those preimages fall in.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationGrid {
    lo: f64,
    hi: f64,
    /// For each row, `(column, preimage)`.
    entries: Vec<Vec<(usize, f64)>>,
}

pub const MIN_GRID: usize = 64;

impl CollocationGrid {
    pub fn new(map: &IntervalMap, n: usize) -> Result<Self> {
        if n < MIN_GRID {
            return Err(Error::InvalidParameter(format!("collocation needs at least {MIN_GRID} cells, got {n}")));
        }
        let (lo, hi) = map.domain();
        let h = (hi - lo) / n as f64;
        let entries = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = lo + (i as f64 + 0.5) * h;
                let pre = map.preimages(x, 1e-12)?;
                Ok(pre
                    .into_iter()
                    .map(|y| ((((y - lo) / h).floor() as usize).min(n - 1), y))
                    .collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CollocationGrid { lo, hi, entries })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn cell_width(&self) -> f64 {
        (self.hi - self.lo) / self.size() as f64
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * self.cell_width()
    }

    pub fn cell_of(&self, x: f64) -> usize {
        (((x - self.lo) / self.cell_width()).floor().max(0.0) as usize).min(self.size() - 1)
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    /// Operator for an arbitrary weight function.
    pub fn operator<W>(&self, weight: W) -> Result<SparseMatrix>
    where
        W: Fn(f64) -> Result<f64> + Sync,
    {
        let rows = self
            .entries
            .par_iter()
            .map(|row| {
                row.iter()
                    .map(|&(j, y)| {
                        let w = weight(y)?;
                        if !w.is_finite() {
                            return Err(Error::PoleOnGrid { y });
                        }
                        Ok((j, w))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SparseMatrix { rows })
    }

    /// Operator for the weight `exp(-t u)`; poles contribute zero for `t < 0`.
    pub fn weights(&self, map: &IntervalMap, u: &UPotential, t: f64) -> Result<SparseMatrix> {
        self.operator(|y| {
            let v = u.eval(map, y)?;
            potential_weight(v, t, y)
        })
    }
}

/// `exp(-t v)` with the pole conventions used by every engine.
pub fn potential_weight(v: f64, t: f64, y: f64) -> Result<f64> {
    if v.is_infinite() {
        if t == 0.0 {
            return Ok(1.0);
        }
        let exponent_sign = -t.signum() * v.signum();
        return if exponent_sign < 0.0 {
            Ok(0.0)
        } else {
            Err(Error::PoleOnGrid { y })
        };
    }
    Ok((-t * v).exp())
}

/// Collocation matrix of `weight` on `n` uniform cells.
pub fn collocation_operator<W>(map: &IntervalMap, weight: W, n: usize) -> Result<SparseMatrix>
where
    W: Fn(f64) -> Result<f64> + Sync,
{
    CollocationGrid::new(map, n)?.operator(weight)
}
