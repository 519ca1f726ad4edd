//! A first-order conic solver for `min cᵀx  s.t.  Ax + s = b,  s ∈ K`, where `K` is a product
//! of zero, nonnegative, second-order and positive semidefinite cones.
//!
//! PSD blocks of order `d` occupy `d(d+1)/2` rows holding the lower triangle column by column,
//! with off-diagonal entries multiplied by `√2` so that Euclidean inner products of packed
//! vectors equal Frobenius inner products of the matrices. A second-order block `(t, u)`
//! means `‖u‖ ≤ t`.

mod admm;
mod cones;

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

pub use admm::{solve, solve_warm, ConicSettings};
pub use cones::project;

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cone {
    Zero(usize),
    Nonneg(usize),
    /// Dimension including the leading `t`.
    Soc(usize),
    /// Matrix order.
    Psd(usize),
}

impl Cone {
    pub fn rows(&self) -> usize {
        match *self {
            Cone::Zero(m) | Cone::Nonneg(m) | Cone::Soc(m) => m,
            Cone::Psd(d) => d * (d + 1) / 2,
        }
    }

    fn tag(&self) -> String {
        match *self {
            Cone::Zero(m) => format!("zero:{m}"),
            Cone::Nonneg(m) => format!("nonneg:{m}"),
            Cone::Soc(m) => format!("soc:{m}"),
            Cone::Psd(d) => format!("psd:{d}"),
        }
    }
}

/// Position of entry `(i, j)`, `i ≥ j`, of an order-`d` matrix in the packed vector.
pub fn pack_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    // column j starts after Σ_{t<j} (d − t) entries
    j * d - j * j.saturating_sub(1) / 2 + (i - j)
}

/// Scale of entry `(i, j)` in the packing.
pub fn pack_scale(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        SQRT2
    }
}

pub fn pack(m: &SymMatrix) -> Vec<f64> {
    let d = m.n();
    let mut out = vec![0.0; d * (d + 1) / 2];
    for j in 0..d {
        for i in j..d {
            out[pack_index(d, i, j)] = pack_scale(i, j) * m.get(i, j);
        }
    }
    out
}

pub fn unpack(v: &[f64], d: usize) -> SymMatrix {
    assert_eq!(v.len(), d * (d + 1) / 2);
    let mut m = SymMatrix::zeros(d);
    for j in 0..d {
        for i in j..d {
            m.set(i, j, v[pack_index(d, i, j)] / pack_scale(i, j));
        }
    }
    m
}

/// One constraint row: `Σ coefs·x + s = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRow {
    pub coefs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl SparseRow {
    pub fn new(coefs: Vec<(usize, f64)>, rhs: f64) -> Self {
        SparseRow { coefs, rhs }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConicProblem {
    pub c: Vec<f64>,
    /// Added to every reported objective value.
    pub offset: f64,
    pub rows: Vec<SparseRow>,
    pub cones: Vec<Cone>,
}

impl ConicProblem {
    pub fn new(c: Vec<f64>) -> Self {
        ConicProblem {
            c,
            offset: 0.0,
            rows: Vec::new(),
            cones: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_block(&mut self, cone: Cone, rows: Vec<SparseRow>) -> Result<()> {
        if rows.len() != cone.rows() {
            return Err(Error::DimensionMismatch {
                expected: cone.rows(),
                got: rows.len(),
            });
        }
        if let Some(&(j, _)) = rows
            .iter()
            .flat_map(|r| &r.coefs)
            .find(|(j, _)| *j >= self.num_vars())
        {
            return Err(Error::IndexOutOfRange {
                index: j,
                n: self.num_vars(),
            });
        }
        if rows.is_empty() {
            return Ok(());
        }
        self.rows.extend(rows);
        self.cones.push(cone);
        Ok(())
    }

    /// Appends `rows` as one nonnegative block (`Σ coefs·x ≤ rhs`).
    pub fn push_cut_rows(&mut self, rows: Vec<SparseRow>) -> Result<()> {
        self.add_block(Cone::Nonneg(rows.len()), rows)
    }

    /// Copy of `self` with `rows` appended as a nonnegative block.
    pub fn add_cut_rows(&self, rows: Vec<SparseRow>) -> Result<ConicProblem> {
        let mut p = self.clone();
        p.push_cut_rows(rows)?;
        Ok(p)
    }

    /// `(start row, cone)` for each block.
    pub fn blocks(&self) -> Vec<(usize, Cone)> {
        let mut start = 0;
        self.cones
            .iter()
            .map(|&c| {
                let b = (start, c);
                start += c.rows();
                b
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let total: usize = self.cones.iter().map(Cone::rows).sum();
        if total != self.rows.len() {
            return Err(Error::DimensionMismatch {
                expected: total,
                got: self.rows.len(),
            });
        }
        let finite = self.c.iter().all(|v| v.is_finite())
            && self
                .rows
                .iter()
                .all(|r| r.rhs.is_finite() && r.coefs.iter().all(|(_, v)| v.is_finite()));
        if !finite {
            return Err(Error::InvalidArgument("non-finite problem data".into()));
        }
        Ok(())
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.coefs.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn mul_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_vars()];
        for (r, &yi) in self.rows.iter().zip(y) {
            if yi != 0.0 {
                for &(j, v) in &r.coefs {
                    out[j] += v * yi;
                }
            }
        }
        out
    }

    /// Plain-text dump: header lines, then `c`, `A` (`i j value`) and `b` sections.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "vars {}", self.num_vars());
        let _ = writeln!(out, "rows {}", self.num_rows());
        let tags: Vec<String> = self.cones.iter().map(Cone::tag).collect();
        let _ = writeln!(out, "cones {}", tags.join(" "));
        let _ = writeln!(out, "offset {:e}", self.offset);
        let _ = writeln!(out, "c");
        for (j, v) in self.c.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            let _ = writeln!(out, "{j} {v:e}");
        }
        let _ = writeln!(out, "A");
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in &r.coefs {
                let _ = writeln!(out, "{i} {j} {v:e}");
            }
        }
        let _ = writeln!(out, "b");
        for (i, r) in self.rows.iter().enumerate().filter(|(_, r)| r.rhs != 0.0) {
            let _ = writeln!(out, "{i} {:e}", r.rhs);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConicStatus {
    Optimal,
    MaxIter,
    InfeasibleLike,
}

/// Solution and residuals measured on the original (unscaled) data.
#[derive(Clone, Debug, PartialEq)]
pub struct ConicSolution {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    /// Dual multipliers, `y ∈ K*` with `c + Aᵀy ≈ 0`.
    pub y: Vec<f64>,
    /// `cᵀx + offset`.
    pub objective: f64,
    /// `−bᵀy + offset`.
    pub dual_objective: f64,
    /// `‖Ax + s − b‖∞ / (1 + max(‖Ax‖∞, ‖s‖∞, ‖b‖∞))`.
    pub primal_residual: f64,
    /// `‖c + Aᵀy‖∞ / (1 + max(‖c‖∞, ‖Aᵀy‖∞))`.
    pub dual_residual: f64,
    /// `|cᵀx + bᵀy| / (1 + |cᵀx| + |bᵀy|)`.
    pub gap: f64,
    pub status: ConicStatus,
    pub iterations: usize,
}

impl ConicSolution {
    /// Starting point for the same problem with rows appended: slacks of new rows are set from
    /// the current `x`, their multipliers to zero.
    pub fn warm_start_for(&self, p: &ConicProblem) -> WarmStart {
        let m = p.num_rows();
        let mut s = self.s.clone();
        let mut y = self.y.clone();
        s.truncate(m);
        y.truncate(m);
        for r in &p.rows[s.len()..] {
            let ax: f64 = r.coefs.iter().map(|&(j, v)| v * self.x[j]).sum();
            s.push((r.rhs - ax).max(0.0));
            y.push(0.0);
        }
        WarmStart {
            x: self.x.clone(),
            s,
            y,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WarmStart {
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packing_layout_golden() {
        // column-major lower triangle of a 3×3 matrix
        let idx: Vec<usize> = [(0, 0), (1, 0), (2, 0), (1, 1), (2, 1), (2, 2)]
            .iter()
            .map(|&(i, j)| pack_index(3, i, j))
            .collect();
        assert_eq!(idx, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(pack_index(3, 0, 2), 2);
        let m = SymMatrix::from_rows(&[[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]]).unwrap();
        let r2 = SQRT2;
        assert_eq!(pack(&m), vec![1.0, 2.0 * r2, 3.0 * r2, 4.0, 5.0 * r2, 6.0]);
        let back = unpack(&pack(&m), 3);
        assert!(back.max_abs_diff(&m) < 1e-15);
        let other = SymMatrix::from_fn(3, |i, j| (i + 2 * j) as f64 - 1.5);
        let ip: f64 = pack(&m).iter().zip(pack(&other)).map(|(a, b)| a * b).sum();
        assert!((ip - m.inner(&other)).abs() < 1e-12);
    }

    #[test]
    fn pack_index_is_a_bijection() {
        for d in 1..7 {
            let mut seen = vec![false; d * (d + 1) / 2];
            for j in 0..d {
                for i in j..d {
                    let k = pack_index(d, i, j);
                    assert!(!seen[k]);
                    seen[k] = true;
                }
            }
            assert!(seen.iter().all(|s| *s));
        }
    }

    #[test]
    fn block_bookkeeping() {
        let mut p = ConicProblem::new(vec![1.0, 0.0]);
        p.add_block(Cone::Zero(1), vec![SparseRow::new(vec![(0, 1.0)], 1.0)])
            .unwrap();
        assert!(p
            .add_block(Cone::Nonneg(2), vec![SparseRow::new(vec![], 0.0)])
            .is_err());
        assert!(p
            .add_block(Cone::Nonneg(1), vec![SparseRow::new(vec![(5, 1.0)], 0.0)])
            .is_err());
        let q = p
            .add_cut_rows(vec![SparseRow::new(vec![(1, -1.0)], 0.0)])
            .unwrap();
        assert_eq!(q.blocks(), vec![(0, Cone::Zero(1)), (1, Cone::Nonneg(1))]);
        assert!(q.validate().is_ok());
        assert_eq!(p.add_cut_rows(vec![]).unwrap(), p);
        let text = q.dump();
        assert!(text.starts_with("vars 2\nrows 2\ncones zero:1 nonneg:1\n"));
        assert!(text.contains("\nA\n0 0 1e0\n1 1 -1e0\nb\n0 1e0\n"));
    }
}
