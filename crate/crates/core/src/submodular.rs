//! Submodular minimization of `F(S) = ⟨Σ, pinv(Q, S)⟩ + cᵀe_S` for `Σ ≤ 0`.
//!
//! With `Σ = −¼aaᵀ` the minimum of `F` equals the optimum of the indicator problem with no
//! side constraints whenever `a` has uniform sign, and `x* = −½ pinv(Q, S*) a`.
//!
//! [`sfm_minimize`] runs pairwise Frank–Wolfe on `min ½‖s‖²` over the base polytope of `F`.
//! Every iterate `s` certifies `min_S F(S) ≥ Σ_i min(s_i, 0)`, and the prefixes of `s` sorted
//! ascending give feasible sets; with a cardinality cap the same iterate certifies the
//! Lagrangian bound `max_{λ≥0} Σ_i min(s_i + λ, 0) − λk`.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::linalg::{
    dot, rank_one_inverse_update, spd_solve, sub_pseudoinverse, SupportSet, SymMatrix,
};
use crate::models::{Instance, Model, SolveReport, Status};
use crate::polymatroid::separation_order;
use crate::stieltjes::require_stieltjes;

pub const MAX_BRUTEFORCE_DIM: usize = 22;
pub const MAX_SFM_DIM: usize = 500;
pub const SFM_MAX_ITER: usize = 2000;
const STALL_WINDOW: usize = 50;
const STALL_TOL: f64 = 1e-9;
const CERT_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct SetObjective {
    q: SymMatrix,
    sigma: SymMatrix,
    c: Vec<f64>,
    /// `Σ = −bbᵀ` when known.
    root: Option<Vec<f64>>,
}

impl SetObjective {
    pub fn new(q: SymMatrix, sigma: SymMatrix, c: Vec<f64>) -> Result<Self> {
        Self::check(&q, sigma.n(), &c)?;
        if let Some(v) = sigma.as_slice().iter().find(|v| **v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "Σ must be entrywise nonpositive, found {v}"
            )));
        }
        Ok(SetObjective {
            q,
            sigma,
            c,
            root: None,
        })
    }

    /// `Σ = −bbᵀ`.
    pub fn rank_one(q: SymMatrix, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        Self::check(&q, b.len(), &c)?;
        let sigma = SymMatrix::from_fn(q.n(), |i, j| -b[i] * b[j]);
        if sigma.as_slice().iter().any(|v| *v > 0.0) {
            return Err(Error::SignMixed);
        }
        Ok(SetObjective {
            q,
            sigma,
            c,
            root: Some(b),
        })
    }

    /// `F(S) = cᵀe_S − ¼ a_Sᵀ Q_S⁻¹ a_S` for any sign pattern of `a`. Only the evaluation and
    /// enumeration routines are meaningful when `a` has mixed signs.
    pub(crate) fn quadratic(q: SymMatrix, a: &[f64], c: Vec<f64>) -> Result<Self> {
        let b: Vec<f64> = a.iter().map(|v| 0.5 * v).collect();
        Self::check(&q, b.len(), &c)?;
        let sigma = SymMatrix::from_fn(q.n(), |i, j| -b[i] * b[j]);
        Ok(SetObjective {
            q,
            sigma,
            c,
            root: Some(b),
        })
    }

    fn check(q: &SymMatrix, m: usize, c: &[f64]) -> Result<()> {
        let n = q.n();
        for len in [m, c.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: len,
                });
            }
        }
        require_stieltjes(q)
    }

    pub fn n(&self) -> usize {
        self.q.n()
    }

    pub fn q(&self) -> &SymMatrix {
        &self.q
    }

    pub fn sigma(&self) -> &SymMatrix {
        &self.sigma
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    /// Values `F(S_0), …, F(S_n)` along the chain `S_j = {order[0..j]}`, using bordered
    /// inverses: `O(n²)` per step.
    pub fn chain_values(&self, order: &[usize]) -> Result<Vec<f64>> {
        let mut walk = ChainWalk::new(self);
        let mut out = Vec::with_capacity(order.len() + 1);
        out.push(0.0);
        for &k in order {
            out.push(walk.push(k)?);
        }
        Ok(out)
    }
}

/// Incrementally maintained `Q_S⁻¹` and `F(S)` along a growing set.
#[derive(Clone)]
struct ChainWalk<'a> {
    obj: &'a SetObjective,
    members: Vec<usize>,
    ainv: SymMatrix,
    value: f64,
}

impl<'a> ChainWalk<'a> {
    fn new(obj: &'a SetObjective) -> Self {
        ChainWalk {
            obj,
            members: Vec::new(),
            ainv: SymMatrix::zeros(0),
            value: 0.0,
        }
    }

    /// Adds `k` and returns the new `F(S)`. The increment is
    /// `c_k + scalar · uᵀ Σ_{S∪k} u` with `u = (−A⁻¹v; 1)`.
    fn push(&mut self, k: usize) -> Result<f64> {
        let q = &self.obj.q;
        let v: Vec<f64> = self.members.iter().map(|&i| q.get(i, k)).collect();
        let (bordered, u, scalar) = rank_one_inverse_update(&self.ainv, &v, q.get(k, k))?;
        self.members.push(k);
        let delta = match &self.obj.root {
            Some(b) => {
                let ub: f64 = self.members.iter().zip(&u).map(|(&i, ui)| b[i] * ui).sum();
                -scalar * ub * ub
            }
            None => {
                let s = &self.obj.sigma;
                let mut acc = 0.0;
                for (a, &i) in self.members.iter().enumerate() {
                    let row: f64 = self
                        .members
                        .iter()
                        .zip(&u)
                        .map(|(&j, uj)| s.get(i, j) * uj)
                        .sum();
                    acc += u[a] * row;
                }
                scalar * acc
            }
        };
        self.value += self.obj.c[k] + delta;
        self.ainv = bordered;
        Ok(self.value)
    }
}

/// `⟨Σ, pinv(Q, S)⟩ + cᵀe_S`.
pub fn theta_total(obj: &SetObjective, s: &SupportSet) -> Result<f64> {
    if s.n() != obj.n() {
        return Err(Error::DimensionMismatch {
            expected: obj.n(),
            got: s.n(),
        });
    }
    let linear: f64 = s.members().iter().map(|&i| obj.c[i]).sum();
    if s.is_empty() {
        return Ok(0.0);
    }
    if let Some(b) = &obj.root {
        let b_s: Vec<f64> = s.members().iter().map(|&i| b[i]).collect();
        let sol = spd_solve(&obj.q.principal(s), &b_s)?;
        return Ok(linear - dot(&b_s, &sol));
    }
    Ok(obj.sigma.inner(&sub_pseudoinverse(&obj.q, s)?) + linear)
}

/// Lovász extension value at `z` and the greedy vertex of the base polytope (a subgradient).
pub fn lovasz_eval(obj: &SetObjective, z: &[f64]) -> Result<(f64, Vec<f64>)> {
    if z.len() != obj.n() {
        return Err(Error::DimensionMismatch {
            expected: obj.n(),
            got: z.len(),
        });
    }
    let order = separation_order(z);
    let vals = obj.chain_values(&order)?;
    let mut g = vec![0.0; z.len()];
    let mut value = 0.0;
    for (j, &k) in order.iter().enumerate() {
        g[k] = vals[j + 1] - vals[j];
        value += z[k] * g[k];
    }
    Ok((value, g))
}

/// Exact minimum over all sets with at most `max_card` elements; ties go to the
/// lexicographically smallest sorted index list.
pub fn enumerate_minimum(obj: &SetObjective, max_card: usize) -> Result<(SupportSet, f64)> {
    let n = obj.n();
    if n > MAX_BRUTEFORCE_DIM {
        return Err(Error::TooLarge {
            n,
            max: MAX_BRUTEFORCE_DIM,
        });
    }
    let mut best = (Vec::new(), 0.0);
    // pre-order DFS visits sets in lexicographic order of their sorted members
    fn visit(
        walk: &ChainWalk,
        next: usize,
        max_card: usize,
        best: &mut (Vec<usize>, f64),
    ) -> Result<()> {
        if walk.members.len() == max_card {
            return Ok(());
        }
        for k in next..walk.obj.n() {
            let mut child = walk.clone();
            let v = child.push(k)?;
            if v < best.1 - 1e-12 * best.1.abs().max(1.0) {
                *best = (child.members.clone(), v);
            }
            visit(&child, k + 1, max_card, best)?;
        }
        Ok(())
    }
    visit(&ChainWalk::new(obj), 0, max_card, &mut best)?;
    Ok((SupportSet::new(n, best.0)?, best.1))
}

/// Exact minimizer over all `2ⁿ` sets.
pub fn sfm_bruteforce(obj: &SetObjective) -> Result<(SupportSet, f64)> {
    enumerate_minimum(obj, obj.n())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SfmResult {
    /// Minimizer of the convex relaxation (integral without a cardinality cap).
    pub z: Vec<f64>,
    /// Certified lower bound on the (capped) set minimum.
    pub lower_bound: f64,
    pub best_set: SupportSet,
    pub best_value: f64,
    /// `best_value − lower_bound` within tolerance.
    pub certified: bool,
    pub iterations: usize,
}

impl SfmResult {
    pub fn value(&self) -> f64 {
        if self.certified {
            self.best_value
        } else {
            self.lower_bound
        }
    }
}

struct Vertex {
    order: Vec<usize>,
    point: Vec<f64>,
    weight: f64,
}

/// Greedy vertex for ascending `w`, with the prefix values of that chain.
fn greedy_vertex(obj: &SetObjective, w: &[f64]) -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let mut order: Vec<usize> = (0..w.len()).collect();
    order.sort_by(|&a, &b| w[a].total_cmp(&w[b]).then(a.cmp(&b)));
    let vals = obj.chain_values(&order)?;
    let mut q = vec![0.0; w.len()];
    for (j, &k) in order.iter().enumerate() {
        q[k] = vals[j + 1] - vals[j];
    }
    Ok((order, q, vals))
}

/// `max_{λ≥0} Σ min(s_i + λ, 0) − λk`, with the maximizing `λ`.
fn lagrangian_bound(s: &[f64], k: usize) -> (f64, f64) {
    let eval = |lam: f64| s.iter().map(|v| (v + lam).min(0.0)).sum::<f64>() - lam * k as f64;
    std::iter::once(0.0)
        .chain(s.iter().filter(|v| **v < 0.0).map(|v| -v))
        .map(|lam| (eval(lam), lam))
        .fold((f64::NEG_INFINITY, 0.0), |best, cur| {
            if cur.0 > best.0 {
                cur
            } else {
                best
            }
        })
}

pub fn sfm_minimize(obj: &SetObjective, cardinality: Option<usize>) -> Result<SfmResult> {
    let n = obj.n();
    if n > MAX_SFM_DIM {
        return Err(Error::TooLarge {
            n,
            max: MAX_SFM_DIM,
        });
    }
    let k = cardinality.unwrap_or(n).min(n);
    let capped = k < n;

    let mut best_set = SupportSet::empty(n);
    let mut best_value = 0.0_f64;
    let consider_prefixes =
        |order: &[usize], vals: &[f64], best_set: &mut SupportSet, best_value: &mut f64| {
            for j in 1..=k {
                if vals[j] < *best_value - 1e-12 * best_value.abs().max(1.0) {
                    *best_value = vals[j];
                    *best_set = SupportSet::new(n, order[..j].iter().copied()).expect("in range");
                }
            }
        };

    let (order, q0, vals) = greedy_vertex(obj, &obj.c)?;
    consider_prefixes(&order, &vals, &mut best_set, &mut best_value);
    let mut active = vec![Vertex {
        order,
        point: q0.clone(),
        weight: 1.0,
    }];
    let mut s = q0;
    let mut norm_hist = vec![dot(&s, &s)];
    let mut lower = f64::NEG_INFINITY;
    let mut iterations = 0;

    let bound_of = |s: &[f64]| {
        if capped {
            lagrangian_bound(s, k).0
        } else {
            s.iter().map(|v| v.min(0.0)).sum()
        }
    };

    while iterations < SFM_MAX_ITER {
        lower = lower.max(bound_of(&s));
        if best_value - lower <= CERT_TOL * best_value.abs().max(1.0) {
            break;
        }
        iterations += 1;
        let (order, q, vals) = greedy_vertex(obj, &s)?;
        consider_prefixes(&order, &vals, &mut best_set, &mut best_value);
        let fw_gap = dot(&s, &s) - dot(&s, &q);
        if fw_gap <= 1e-15 * dot(&s, &s).max(1.0) {
            break;
        }
        // pairwise step: move weight from the worst active vertex to q
        let away = active
            .iter()
            .enumerate()
            .max_by(|a, b| dot(&s, &a.1.point).total_cmp(&dot(&s, &b.1.point)))
            .map(|(i, _)| i)
            .expect("active set nonempty");
        let d: Vec<f64> = q
            .iter()
            .zip(&active[away].point)
            .map(|(x, y)| x - y)
            .collect();
        let dd = dot(&d, &d);
        if dd == 0.0 {
            break;
        }
        let gamma = (-dot(&s, &d) / dd).clamp(0.0, active[away].weight);
        for (si, di) in s.iter_mut().zip(&d) {
            *si += gamma * di;
        }
        active[away].weight -= gamma;
        match active.iter_mut().find(|v| v.order == order) {
            Some(v) => v.weight += gamma,
            None => active.push(Vertex {
                order,
                point: q,
                weight: gamma,
            }),
        }
        active.retain(|v| v.weight > 1e-14);
        norm_hist.push(dot(&s, &s));
        if norm_hist.len() > STALL_WINDOW {
            let old = norm_hist[norm_hist.len() - 1 - STALL_WINDOW];
            let now = *norm_hist.last().unwrap();
            if old - now <= STALL_TOL * old.max(1e-300) {
                break;
            }
        }
    }
    lower = lower.max(bound_of(&s));

    if capped {
        let inst_like = CappedSearch { obj, k };
        inst_like.improve(&mut best_set, &mut best_value)?;
    }
    let certified = best_value - lower <= CERT_TOL * best_value.abs().max(1.0) * 10.0;
    let z = if capped {
        relaxed_point(&s, k)
    } else {
        best_set.indicator()
    };
    Ok(SfmResult {
        z,
        lower_bound: lower.min(best_value),
        best_set,
        best_value,
        certified,
        iterations,
    })
}

/// Lagrangian relaxation point: `z_i = 1` where `s_i < −λ*`, fractional on the boundary
/// level so that `Σz = k` when that level is reached.
fn relaxed_point(s: &[f64], k: usize) -> Vec<f64> {
    let (_, lam) = lagrangian_bound(s, k);
    let tol = 1e-9 * lam.abs().max(1.0);
    let below: Vec<usize> = (0..s.len()).filter(|&i| s[i] < -lam - tol).collect();
    let level: Vec<usize> = (0..s.len())
        .filter(|&i| (s[i] + lam).abs() <= tol)
        .collect();
    let mut z = vec![0.0; s.len()];
    for &i in &below {
        z[i] = 1.0;
    }
    if lam > 0.0 && !level.is_empty() {
        let room = (k.saturating_sub(below.len())) as f64 / level.len() as f64;
        for &i in &level {
            z[i] = room.min(1.0);
        }
    }
    z
}

/// Add / drop / swap local search on capped sets.
struct CappedSearch<'a> {
    obj: &'a SetObjective,
    k: usize,
}

impl CappedSearch<'_> {
    fn improve(&self, set: &mut SupportSet, value: &mut f64) -> Result<()> {
        let n = self.obj.n();
        loop {
            let mut moved = false;
            let mut candidates: Vec<SupportSet> = Vec::new();
            for i in 0..n {
                if set.contains(i) {
                    candidates.push(SupportSet::new(
                        n,
                        set.members().iter().copied().filter(|&j| j != i),
                    )?);
                    for o in (0..n).filter(|o| !set.contains(*o)) {
                        candidates.push(SupportSet::new(
                            n,
                            set.members().iter().copied().filter(|&j| j != i).chain([o]),
                        )?);
                    }
                } else if set.len() < self.k {
                    candidates.push(set.with(i));
                }
            }
            for cand in candidates {
                let v = theta_total(self.obj, &cand)?;
                if v < *value - 1e-12 * value.abs().max(1.0) {
                    *set = cand;
                    *value = v;
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Ok(());
            }
        }
    }
}

/// Solves the indicator problem exactly when `a` has uniform sign and there is no
/// cardinality constraint. The big-M bound is not imposed.
pub fn solve_exact_unconstrained(inst: &Instance) -> Result<SolveReport> {
    let start = Instant::now();
    let n = inst.n();
    if inst.a.iter().any(|v| *v > 0.0) && inst.a.iter().any(|v| *v < 0.0) {
        return Err(Error::SignMixed);
    }
    if inst.cardinality_active() {
        return Err(Error::InvalidArgument(
            "exact path requires k = n (no cardinality constraint)".into(),
        ));
    }
    let b: Vec<f64> = inst.a.iter().map(|v| 0.5 * v.abs()).collect();
    let obj = SetObjective::rank_one(inst.q.clone(), b, inst.c.clone())?;
    let res = sfm_minimize(&obj, None)?;
    let support = res.best_set.clone();
    let (x, _) = inst.support_solution(&support)?;
    let z = support.indicator();
    let mut report = SolveReport::new(Model::Sfm, n);
    report.objective = inst.objective(&x, &z);
    report.bound = res.lower_bound + inst.constant;
    report.status = if res.certified {
        Status::Optimal
    } else {
        Status::IterationLimit
    };
    report.rounds = res.iterations;
    report.t = Some(inst.q.quad_form(&x));
    report.w = Some(sub_pseudoinverse(&inst.q, &support)?);
    if !inst.within_big_m(&x) {
        report.note = Some("solution exceeds the big-M bound".into());
    }
    report.x = x;
    report.z = z;
    report.time_s = start.elapsed().as_secs_f64();
    Ok(report)
}
