//! Set functions on inverses of principal submatrices and the polymatroid inequalities they
//! induce.
//!
//! For a Stieltjes `Q`, `θ_ij(S) = pinv(Q, S)_ij` is non-decreasing and supermodular. Along a
//! chain `S_0 = ∅ ⊂ S_1 ⊂ … ⊂ S_n` given by a permutation `π`, the increments
//! `R(π_k; S_{k−1}) = pinv(Q, S_k) − pinv(Q, S_{k−1})` are rank one, supported on `S_k`, and sum
//! to `Q⁻¹`. That is exactly an ordered Cholesky factor of `Q⁻¹`, which gives the
//! `O(n³)` separation routine in [`separate`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    check_permutation, cholesky_ordered, rank_one_inverse_update, sub_pseudoinverse, SupportSet,
    SymMatrix,
};

/// Largest dimension accepted by the `2ⁿ` enumerators.
pub const MAX_ENUMERATION_DIM: usize = 16;

/// `W ≤ Σ_k v_k v_kᵀ z_{perm[k]}` where `v_k` is supported on `perm[0..=k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolymatroidCut {
    pub perm: Vec<usize>,
    pub factors: Vec<Vec<f64>>,
}

impl PolymatroidCut {
    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// `R(π_k; S_{k−1})` as a dense matrix.
    pub fn coefficient(&self, k: usize) -> SymMatrix {
        let v = &self.factors[k];
        SymMatrix::from_fn(self.n(), |i, j| v[i] * v[j])
    }

    /// Right-hand side `Σ_k R_k z_{π_k}`.
    pub fn rhs(&self, z: &[f64]) -> SymMatrix {
        let n = self.n();
        let mut out = vec![0.0; n * n];
        for (k, v) in self.factors.iter().enumerate() {
            let zk = z[self.perm[k]];
            if zk == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = v[i] * zk;
                if vi == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += vi * v[j];
                }
            }
        }
        SymMatrix::symmetrize_from(n, &out)
    }

    /// Coefficients of `z` in the scalar inequality for entry `(i, j)`, as `(index, coef)`
    /// pairs with exact zeros dropped.
    pub fn row_coefficients(&self, i: usize, j: usize) -> Vec<(usize, f64)> {
        self.factors
            .iter()
            .zip(&self.perm)
            .filter_map(|(v, &p)| {
                let c = v[i] * v[j];
                (c != 0.0).then_some((p, c))
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }
}

/// A vertex `(e_S, pinv(Q, S))` of the Stieltjes polytope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StieltjesPolytopePoint {
    pub z: Vec<f64>,
    pub w: SymMatrix,
}

impl StieltjesPolytopePoint {
    pub fn support(&self) -> SupportSet {
        SupportSet::from_indicator(&self.z)
    }
}

/// `θ_ij(S)`.
pub fn theta(q: &SymMatrix, s: &SupportSet, i: usize, j: usize) -> Result<f64> {
    check_index(i, q.n())?;
    check_index(j, q.n())?;
    if s.is_empty() {
        return Ok(0.0);
    }
    Ok(sub_pseudoinverse(q, s)?.get(i, j))
}

/// `ρ_ij(k; S) = θ_ij(S ∪ {k}) − θ_ij(S)`.
pub fn rho(q: &SymMatrix, k: usize, s: &SupportSet, i: usize, j: usize) -> Result<f64> {
    check_index(i, q.n())?;
    check_index(j, q.n())?;
    Ok(big_r(q, k, s)?.get(i, j))
}

/// `R(k; S)`, the rank-one increment of `pinv(Q, ·)` when `k` joins `S`.
pub fn big_r(q: &SymMatrix, k: usize, s: &SupportSet) -> Result<SymMatrix> {
    let n = q.n();
    check_index(k, n)?;
    if s.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: s.n(),
        });
    }
    if s.contains(k) {
        return Err(Error::InvalidArgument(format!("index {k} already in S")));
    }
    let mut out = SymMatrix::zeros(n);
    if s.is_empty() {
        let d = q.get(k, k);
        if !(d > 0.0) {
            return Err(Error::SchurNotPositive(d));
        }
        out.set(k, k, 1.0 / d);
        return Ok(out);
    }
    let ainv = sub_pseudoinverse(q, s)?.principal(s);
    let v: Vec<f64> = s.members().iter().map(|&i| q.get(i, k)).collect();
    let (_, u, scalar) = rank_one_inverse_update(&ainv, &v, q.get(k, k))?;
    let idx: Vec<usize> = s.members().iter().copied().chain([k]).collect();
    for (a, &i) in idx.iter().enumerate() {
        for (b, &j) in idx.iter().enumerate().skip(a) {
            out.set(i, j, scalar * u[a] * u[b]);
        }
    }
    Ok(out)
}

/// Chain order used by [`separate`]: `z̄` descending, ties by ascending index.
pub fn separation_order(z_bar: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..z_bar.len()).collect();
    order.sort_by(|&a, &b| z_bar[b].total_cmp(&z_bar[a]).then(a.cmp(&b)));
    order
}

/// Most violated polymatroid cut at `z̄`.
///
/// The chain adds indices in non-increasing order of `z̄`. Its coefficients are the columns of
/// the Cholesky factor of `Q⁻¹` eliminated in the opposite (non-decreasing) order, so one
/// factorization yields all `n²` scalar inequalities.
pub fn separate(q: &SymMatrix, qinv: &SymMatrix, z_bar: &[f64]) -> Result<PolymatroidCut> {
    let n = q.n();
    if qinv.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: qinv.n(),
        });
    }
    if z_bar.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z_bar.len(),
        });
    }
    if z_bar.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("z̄ has non-finite entries".into()));
    }
    let clamped: Vec<f64> = z_bar.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    if clamped != z_bar {
        log::warn!("separation point outside [0,1]^n; clamping");
    }
    let order = separation_order(&clamped);
    let factor = cholesky_ordered(qinv, &order)?;
    // v_k is nonnegative in exact arithmetic (its pivot entry is positive); drop roundoff
    let factors = factor
        .columns
        .into_iter()
        .map(|v| v.into_iter().map(|x| x.max(0.0)).collect())
        .collect();
    Ok(PolymatroidCut {
        perm: order,
        factors,
    })
}

/// Cut for an arbitrary chain order (used by exhaustive checks).
pub fn cut_for_order(qinv: &SymMatrix, order: &[usize]) -> Result<PolymatroidCut> {
    check_permutation(order, qinv.n())?;
    let factor = cholesky_ordered(qinv, order)?;
    Ok(PolymatroidCut {
        perm: order.to_vec(),
        factors: factor.columns,
    })
}

/// `RHS(z̄) − W̄`; negative entries are violated scalar inequalities.
pub fn cut_violation(cut: &PolymatroidCut, z_bar: &[f64], w_bar: &SymMatrix) -> SymMatrix {
    &cut.rhs(z_bar) - w_bar
}

/// Slack against a possibly non-symmetric `W̄` given row-major.
pub fn cut_violation_dense(cut: &PolymatroidCut, z_bar: &[f64], w_bar: &[f64]) -> Vec<f64> {
    let n = cut.n();
    let rhs = cut.rhs(z_bar);
    (0..n * n)
        .map(|idx| rhs.as_slice()[idx] - w_bar[idx])
        .collect()
}

/// All `2ⁿ` vertices `(e_S, pinv(Q, S))`, ordered by the bitmask of `S`.
pub fn enumerate_extreme_points(q: &SymMatrix) -> Result<Vec<StieltjesPolytopePoint>> {
    let n = q.n();
    if n > MAX_ENUMERATION_DIM {
        return Err(Error::TooLarge {
            n,
            max: MAX_ENUMERATION_DIM,
        });
    }
    (0..1u64 << n)
        .map(|mask| {
            let s = SupportSet::from_mask(n, mask);
            Ok(StieltjesPolytopePoint {
                z: s.indicator(),
                w: sub_pseudoinverse(q, &s)?,
            })
        })
        .collect()
}

/// Violations of the four equality/sign properties every point of the polytope satisfies,
/// as human-readable messages (empty when all hold).
pub fn extreme_point_property_violations(
    q: &SymMatrix,
    qinv: &SymMatrix,
    p: &StieltjesPolytopePoint,
) -> Vec<String> {
    let n = q.n();
    let mut out = Vec::new();
    for i in 0..n {
        let lhs: f64 = (0..n).map(|j| q.get(i, j) * p.w.get(i, j)).sum();
        if (lhs - p.z[i]).abs() > 1e-10 {
            out.push(format!("row {i}: Σ_j Q_ij W_ij = {lhs} ≠ z_i = {}", p.z[i]));
        }
        for j in 0..n {
            if p.w.get(i, j) != p.w.get(j, i) {
                out.push(format!("W not symmetric at ({i},{j})"));
            }
            if qinv.get(i, j) == 0.0 && p.w.get(i, j) != 0.0 {
                out.push(format!("W_{i}{j} nonzero where Q⁻¹ vanishes"));
            }
            if p.w.get(i, j) < -1e-12 {
                out.push(format!("W_{i}{j} = {} negative", p.w.get(i, j)));
            }
        }
    }
    out
}

/// A point `(z, W)` with a general (possibly non-symmetric) row-major `W`.
#[derive(Clone, Debug, PartialEq)]
pub struct FixturePoint {
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

/// Points of the relaxed set that are tight for the `(i, j)` inequality of the cut with chain
/// `perm`: `(e, Q⁻¹)`, then `(e, Q⁻¹ − E_kl)` for every `(k, l) ≠ (i, j)`, then
/// `(e_{S_k}, pinv(Q, S_k))` for `k = 0..n−1`.
///
/// The chain point with `k = n` repeats the first point, so the chain rows start at `S_0 = ∅`
/// to keep `n + n²` affinely independent points (see [`chain_fixture_point`]).
pub fn facet_fixture_points(
    q: &SymMatrix,
    i: usize,
    j: usize,
    perm: &[usize],
) -> Result<Vec<FixturePoint>> {
    let n = q.n();
    check_index(i, n)?;
    check_index(j, n)?;
    check_permutation(perm, n)?;
    let qinv = q.inverse()?;
    let e = vec![1.0; n];
    let mut pts = vec![FixturePoint {
        z: e.clone(),
        w: qinv.as_slice().to_vec(),
    }];
    for k in 0..n {
        for l in 0..n {
            if (k, l) == (i, j) {
                continue;
            }
            let mut w = qinv.as_slice().to_vec();
            w[k * n + l] -= 1.0;
            pts.push(FixturePoint { z: e.clone(), w });
        }
    }
    for k in 0..n {
        pts.push(chain_fixture_point(q, perm, k)?);
    }
    Ok(pts)
}

/// `(e_{S_k}, pinv(Q, S_k))` with `S_k = {perm[0], …, perm[k−1]}`.
pub fn chain_fixture_point(q: &SymMatrix, perm: &[usize], k: usize) -> Result<FixturePoint> {
    let n = q.n();
    let s = SupportSet::new(n, perm[..k].iter().copied())?;
    Ok(FixturePoint {
        z: s.indicator(),
        w: sub_pseudoinverse(q, &s)?.as_slice().to_vec(),
    })
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        Err(Error::IndexOutOfRange { index: i, n })
    } else {
        Ok(())
    }
}
