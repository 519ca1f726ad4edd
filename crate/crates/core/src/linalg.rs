//! Dense symmetric linear algebra.
//!
//! Everything downstream works with [`SymMatrix`], a dense row-major symmetric matrix whose
//! setters always write both triangles, so `A[i][j] == A[j][i]` holds bit-for-bit.

use std::fmt;
use std::ops::{Add, Index, Mul, Sub};

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Relative pivot tolerance for the Cholesky kernels.
pub const PIVOT_TOL: f64 = 1e-12;

/// Iteration cap handed to the eigensolver.
pub const EIG_MAX_ITER: usize = 10_000;

/// Dense symmetric matrix.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m.data[i * d.len() + i] = v;
        }
        m
    }

    /// Builds a matrix from `f(i, j)` evaluated on the upper triangle `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Builds a matrix from rows, requiring exact symmetry.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidArgument("empty matrix".into()));
        }
        for r in rows {
            if r.as_ref().len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: r.as_ref().len(),
                });
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if rows[i].as_ref()[j] != rows[j].as_ref()[i] {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        let data = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Ok(SymMatrix { n, data })
    }

    /// Builds a matrix from a general square matrix by averaging it with its transpose.
    pub fn symmetrize_from(n: usize, a: &[f64]) -> Self {
        assert_eq!(a.len(), n * n);
        Self::from_fn(n, |i, j| 0.5 * (a[i * n + j] + a[j * n + i]))
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets entries `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let cur = self.get(i, j);
        self.set(i, j, cur + v);
    }

    /// Row-major entries.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.mul_vec(x))
    }

    /// Frobenius inner product `⟨A, B⟩`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        dot(&self.data, &other.data)
    }

    pub fn scaled(&self, s: f64) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.n, other.n);
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// Principal submatrix on `s` (which must be nonempty).
    pub fn principal(&self, s: &SupportSet) -> SymMatrix {
        let m = s.members();
        assert!(!m.is_empty(), "principal submatrix of an empty set");
        SymMatrix::from_fn(m.len(), |a, b| self.get(m[a], m[b]))
    }

    /// Embeds `sub` (indexed by `s`) into an `n × n` zero matrix.
    pub fn embed(n: usize, s: &SupportSet, sub: &SymMatrix) -> SymMatrix {
        let m = s.members();
        assert_eq!(sub.n(), m.len());
        let mut out = SymMatrix::zeros(n);
        for (a, &i) in m.iter().enumerate() {
            for (b, &j) in m.iter().enumerate() {
                out.data[i * n + j] = sub.get(a, b);
            }
        }
        out
    }

    /// `B[a][b] = A[perm[a]][perm[b]]`.
    pub fn permuted(&self, perm: &[usize]) -> SymMatrix {
        assert_eq!(perm.len(), self.n);
        let mut out = SymMatrix::zeros(self.n);
        for (a, &i) in perm.iter().enumerate() {
            for (b, &j) in perm.iter().enumerate() {
                out.data[a * self.n + b] = self.get(i, j);
            }
        }
        out
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> SymMatrix {
        assert_eq!(m.nrows(), m.ncols());
        SymMatrix::from_fn(m.nrows(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)]))
    }

    /// Inverse of a positive definite matrix.
    pub fn inverse(&self) -> Result<SymMatrix> {
        let l = cholesky_lower(self)?;
        Ok(inverse_from_lower(&l, self.n))
    }

    /// Minimum eigenvalue.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(sym_eig(self)?
            .values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min))
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{}) [", self.n, self.n)?;
        for i in 0..self.n {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

impl Add for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, rhs.n);
        SymMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        assert_eq!(self.n, rhs.n);
        SymMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, s: f64) -> SymMatrix {
        self.scaled(s)
    }
}

impl Serialize for SymMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SymMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        SymMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Sorted set of distinct indices in `0..n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportSet {
    n: usize,
    members: Vec<usize>,
}

impl SupportSet {
    /// Builds a set from arbitrary indices; duplicates are merged.
    pub fn new(n: usize, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut m: Vec<usize> = members.into_iter().collect();
        if let Some(&bad) = m.iter().find(|&&i| i >= n) {
            return Err(Error::IndexOutOfRange { index: bad, n });
        }
        m.sort_unstable();
        m.dedup();
        Ok(SupportSet { n, members: m })
    }

    pub fn empty(n: usize) -> Self {
        SupportSet {
            n,
            members: Vec::new(),
        }
    }

    pub fn full(n: usize) -> Self {
        SupportSet {
            n,
            members: (0..n).collect(),
        }
    }

    /// Set whose members are the bits of `mask`.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        SupportSet {
            n,
            members: (0..n).filter(|&i| mask >> i & 1 == 1).collect(),
        }
    }

    /// Indices where `z > 0.5`.
    pub fn from_indicator(z: &[f64]) -> Self {
        SupportSet {
            n: z.len(),
            members: (0..z.len()).filter(|&i| z[i] > 0.5).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn with(&self, k: usize) -> SupportSet {
        let mut s = self.clone();
        if let Err(pos) = s.members.binary_search(&k) {
            s.members.insert(pos, k);
        }
        s
    }

    /// The indicator vector `e_S`.
    pub fn indicator(&self) -> Vec<f64> {
        let mut z = vec![0.0; self.n];
        for &i in &self.members {
            z[i] = 1.0;
        }
        z
    }

    pub fn mask(&self) -> u64 {
        self.members.iter().fold(0u64, |m, &i| m | 1 << i)
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// Factor `A = Σ_k v_k v_kᵀ` where `v_k` is supported on the first `k + 1` entries of `order`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CholeskyFactor {
    pub order: Vec<usize>,
    /// `columns[k]` in ambient coordinates.
    pub columns: Vec<Vec<f64>>,
}

impl CholeskyFactor {
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.order.len();
        let mut out = vec![0.0; n * n];
        for v in &self.columns {
            for i in 0..n {
                if v[i] == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += v[i] * v[j];
                }
            }
        }
        SymMatrix::symmetrize_from(n, &out)
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(Error::InvalidPermutation(n));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || seen[i] {
            return Err(Error::InvalidPermutation(n));
        }
        seen[i] = true;
    }
    Ok(())
}

/// Lower Cholesky factor of `a`, row-major `n × n`.
pub fn cholesky_lower(a: &SymMatrix) -> Result<Vec<f64>> {
    let n = a.n();
    let scale = a.diag().iter().copied().fold(0.0, f64::max);
    let tol = PIVOT_TOL * scale.max(f64::MIN_POSITIVE);
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = a.get(j, j);
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > tol) {
            return Err(Error::NotPositiveDefinite {
                position: j,
                pivot: d,
            });
        }
        let djj = d.sqrt();
        l[j * n + j] = djj;
        for i in (j + 1)..n {
            let mut s = a.get(i, j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(l)
}

/// Solves `L Lᵀ x = b` given the row-major lower factor.
pub fn cholesky_solve(l: &[f64], n: usize, b: &[f64]) -> Vec<f64> {
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

fn inverse_from_lower(l: &[f64], n: usize) -> SymMatrix {
    // columns of L⁻¹, then A⁻¹ = L⁻ᵀ L⁻¹
    let mut linv = vec![0.0; n * n];
    for c in 0..n {
        for i in c..n {
            let mut s = if i == c { 1.0 } else { 0.0 };
            for k in c..i {
                s -= l[i * n + k] * linv[k * n + c];
            }
            linv[i * n + c] = s / l[i * n + i];
        }
    }
    SymMatrix::from_fn(n, |i, j| {
        let start = i.max(j);
        (start..n).map(|k| linv[k * n + i] * linv[k * n + j]).sum()
    })
}

/// Solves `A x = b` for positive definite `A`.
pub fn spd_solve(a: &SymMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.n() {
        return Err(Error::DimensionMismatch {
            expected: a.n(),
            got: b.len(),
        });
    }
    let l = cholesky_lower(a)?;
    Ok(cholesky_solve(&l, a.n(), b))
}

/// Cholesky factorization following a prescribed order.
///
/// The returned column `k` is supported on `order[0..=k]`. Internally this is the standard
/// lower factorization of `A` permuted into the reverse of `order`, mapped back.
pub fn cholesky_ordered(a: &SymMatrix, order: &[usize]) -> Result<CholeskyFactor> {
    let n = a.n();
    check_permutation(order, n)?;
    let rev: Vec<usize> = order.iter().rev().copied().collect();
    let b = a.permuted(&rev);
    let l = cholesky_lower(&b).map_err(|e| match e {
        Error::NotPositiveDefinite { position, pivot } => Error::NotPositiveDefinite {
            position: rev[position],
            pivot,
        },
        other => other,
    })?;
    let columns = (0..n)
        .map(|k| {
            let c = n - 1 - k;
            let mut v = vec![0.0; n];
            for r in c..n {
                v[rev[r]] = l[r * n + c];
            }
            v
        })
        .collect();
    Ok(CholeskyFactor {
        order: order.to_vec(),
        columns,
    })
}

/// `pinv(Q, S)`: the inverse of `Q_S` embedded into an `n × n` zero matrix.
pub fn sub_pseudoinverse(q: &SymMatrix, s: &SupportSet) -> Result<SymMatrix> {
    if s.n() != q.n() {
        return Err(Error::DimensionMismatch {
            expected: q.n(),
            got: s.n(),
        });
    }
    if s.is_empty() {
        return Ok(SymMatrix::zeros(q.n()));
    }
    let sub = q.principal(s);
    let l = cholesky_lower(&sub).map_err(|e| match e {
        Error::NotPositiveDefinite { position, pivot } => Error::NotPositiveDefinite {
            position: s.members()[position],
            pivot,
        },
        other => other,
    })?;
    Ok(SymMatrix::embed(q.n(), s, &inverse_from_lower(&l, sub.n())))
}

/// Bordered inverse of `R = (A v; vᵀ d)` from `A⁻¹`.
///
/// Returns `(R⁻¹, u, 1/(d − vᵀA⁻¹v))` with `u = (−A⁻¹v; 1)`, so that
/// `R⁻¹ − pad(A⁻¹) = u uᵀ / (d − vᵀA⁻¹v)`.
pub fn rank_one_inverse_update(
    ainv: &SymMatrix,
    v: &[f64],
    d: f64,
) -> Result<(SymMatrix, Vec<f64>, f64)> {
    let m = ainv.n();
    if v.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: v.len(),
        });
    }
    let w = ainv.mul_vec(v);
    let schur = d - dot(v, &w);
    if !(schur > PIVOT_TOL * d.abs().max(1.0)) {
        return Err(Error::SchurNotPositive(schur));
    }
    let scalar = 1.0 / schur;
    let mut u: Vec<f64> = w.iter().map(|x| -x).collect();
    u.push(1.0);
    let bordered = SymMatrix::from_fn(m + 1, |i, j| {
        let base = if i < m && j < m { ainv.get(i, j) } else { 0.0 };
        base + scalar * u[i] * u[j]
    });
    Ok((bordered, u, scalar))
}

/// Eigendecomposition `A = U diag(λ) Uᵀ`.
#[derive(Clone, Debug)]
pub struct SymEigen {
    pub values: Vec<f64>,
    /// Column-major: eigenvector `k` is `vectors[k*n..(k+1)*n]`.
    pub vectors: Vec<f64>,
}

impl SymEigen {
    pub fn vector(&self, k: usize) -> &[f64] {
        let n = self.values.len();
        &self.vectors[k * n..(k + 1) * n]
    }

    /// `U diag(f(λ)) Uᵀ`.
    pub fn reassemble(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let n = self.values.len();
        let mut out = vec![0.0; n * n];
        for k in 0..n {
            let lam = f(self.values[k]);
            if lam == 0.0 {
                continue;
            }
            let u = self.vector(k);
            for i in 0..n {
                let ui = lam * u[i];
                for j in 0..n {
                    out[i * n + j] += ui * u[j];
                }
            }
        }
        SymMatrix::symmetrize_from(n, &out)
    }
}

pub fn sym_eig(a: &SymMatrix) -> Result<SymEigen> {
    let n = a.n();
    let eig = a
        .to_dmatrix()
        .try_symmetric_eigen(f64::EPSILON, EIG_MAX_ITER)
        .ok_or(Error::NoConvergence)?;
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NoConvergence);
    }
    let mut vectors = Vec::with_capacity(n * n);
    for k in 0..n {
        vectors.extend(eig.eigenvectors.column(k).iter().copied());
    }
    Ok(SymEigen { values, vectors })
}

/// Projection onto the positive semidefinite cone.
pub fn psd_project(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eig(a)?;
    if eig.values.iter().all(|&v| v >= 0.0) {
        return Ok(a.clone());
    }
    Ok(eig.reassemble(|l| l.max(0.0)))
}
