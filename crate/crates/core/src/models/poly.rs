//! Semidefinite master with row equalities and polymatroid cutting planes.
//!
//! Variables are `z`, `x`, `t` and the lower triangle of `W`. The master minimizes
//! `cᵀz + aᵀx + t` subject to `[[W, x], [xᵀ, t]] ⪰ 0`, `Σ_j Q_ij W_ij = z_i`, `W ≥ 0`,
//! `0 ≤ z ≤ 1`, `Σz ≤ k`, and the scalar rows `W_ij ≤ Σ_k R(π_k; S_{k−1})_ij z_{π_k}` of every cut
//! found so far. Each round separates at the current `z̄` and appends the violated rows.

use std::collections::HashMap;
use std::time::Instant;

use super::{Incumbent, Instance, Model, SolveReport, Status};
use crate::conic::{
    pack_index, pack_scale, solve_warm, Cone, ConicProblem, ConicSettings, ConicStatus, SparseRow,
    WarmStart,
};
use crate::error::Result;
use crate::linalg::{SupportSet, SymMatrix};
use crate::polymatroid::{separate, PolymatroidCut};

/// Which structural rows the master carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MasterOptions {
    pub w_nonneg: bool,
    pub row_equalities: bool,
}

impl Default for MasterOptions {
    fn default() -> Self {
        MasterOptions {
            w_nonneg: true,
            row_equalities: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MasterLayout {
    pub n: usize,
}

impl MasterLayout {
    pub fn z(&self, i: usize) -> usize {
        i
    }

    pub fn x(&self, i: usize) -> usize {
        self.n + i
    }

    pub fn t(&self) -> usize {
        2 * self.n
    }

    /// Variable holding `W_ij = W_ji`.
    pub fn w(&self, i: usize, j: usize) -> usize {
        2 * self.n + 1 + pack_index(self.n, i, j)
    }

    pub fn num_vars(&self) -> usize {
        2 * self.n + 1 + self.n * (self.n + 1) / 2
    }

    pub fn w_matrix(&self, x: &[f64]) -> SymMatrix {
        SymMatrix::from_fn(self.n, |i, j| x[self.w(i, j)])
    }
}

pub fn build_poly_master(inst: &Instance) -> Result<ConicProblem> {
    build_poly_master_with(inst, MasterOptions::default())
}

pub fn build_poly_master_with(inst: &Instance, opts: MasterOptions) -> Result<ConicProblem> {
    let n = inst.n();
    let lay = MasterLayout { n };
    let mut c = vec![0.0; lay.num_vars()];
    for i in 0..n {
        c[lay.z(i)] = inst.c[i];
        c[lay.x(i)] = inst.a[i];
    }
    c[lay.t()] = 1.0;
    let mut p = ConicProblem::new(c);
    p.offset = inst.constant;

    if opts.row_equalities {
        let rows = (0..n)
            .map(|i| {
                let mut coefs: Vec<(usize, f64)> = (0..n)
                    .filter(|&j| inst.q.get(i, j) != 0.0)
                    .map(|j| (lay.w(i, j), inst.q.get(i, j)))
                    .collect();
                coefs.push((lay.z(i), -1.0));
                SparseRow::new(coefs, 0.0)
            })
            .collect();
        p.add_block(Cone::Zero(n), rows)?;
    }

    let mut lin = Vec::new();
    for i in 0..n {
        lin.push(SparseRow::new(vec![(lay.z(i), 1.0)], 1.0));
        lin.push(SparseRow::new(vec![(lay.z(i), -1.0)], 0.0));
    }
    if opts.w_nonneg {
        for j in 0..n {
            for i in j..n {
                lin.push(SparseRow::new(vec![(lay.w(i, j), -1.0)], 0.0));
            }
        }
    }
    lin.push(SparseRow::new(vec![(lay.t(), -1.0)], 0.0));
    if inst.cardinality_active() {
        let all = (0..n).map(|i| (lay.z(i), 1.0)).collect();
        lin.push(SparseRow::new(all, inst.k as f64));
    }
    p.add_block(Cone::Nonneg(lin.len()), lin)?;

    // [[W, x], [xᵀ, t]] in scaled packing
    let d = n + 1;
    let mut psd = vec![SparseRow::new(vec![], 0.0); d * (d + 1) / 2];
    for j in 0..d {
        for i in j..d {
            let var = match (i == n, j == n) {
                (false, false) => lay.w(i, j),
                (true, false) => lay.x(j),
                _ => lay.t(),
            };
            psd[pack_index(d, i, j)] = SparseRow::new(vec![(var, -pack_scale(i, j))], 0.0);
        }
    }
    p.add_block(Cone::Psd(d), psd)?;
    Ok(p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CuttingPlaneOptions {
    /// Stop when `|f_r − f_{r−1}| / max(1, |f_r|)` falls below this.
    pub tol_round: f64,
    pub max_rounds: usize,
    /// Scalar rows with slack below `−cut_tol` are added.
    pub cut_tol: f64,
    pub conic: ConicSettings,
    pub master: MasterOptions,
    /// Start from the cut separated at `z̄ = e` instead of the bare master.
    pub seed_cut: bool,
}

impl Default for CuttingPlaneOptions {
    fn default() -> Self {
        CuttingPlaneOptions {
            tol_round: 1e-3,
            max_rounds: 50,
            cut_tol: 1e-6,
            conic: ConicSettings::default(),
            master: MasterOptions::default(),
            seed_cut: true,
        }
    }
}

pub fn cutting_plane_solve(
    inst: &Instance,
    tol_round: f64,
    max_rounds: usize,
) -> Result<SolveReport> {
    cutting_plane_solve_with(
        inst,
        &CuttingPlaneOptions {
            tol_round,
            max_rounds,
            ..CuttingPlaneOptions::default()
        },
    )
}

/// Scalar rows already in the master, keyed by `(i, j)`, as dense coefficient vectors on `z`.
#[derive(Default)]
struct RowPool {
    rows: HashMap<(usize, usize), Vec<Vec<f64>>>,
}

impl RowPool {
    /// Returns `true` when the row is new (no stored row within 1e-9 in every coefficient).
    fn insert(&mut self, i: usize, j: usize, coefs: Vec<f64>) -> bool {
        let bucket = self.rows.entry((i, j)).or_default();
        let dup = bucket
            .iter()
            .any(|r| r.iter().zip(&coefs).all(|(a, b)| (a - b).abs() <= 1e-9));
        if !dup {
            bucket.push(coefs);
        }
        !dup
    }
}

fn violated_rows(
    cut: &PolymatroidCut,
    z: &[f64],
    w: &SymMatrix,
    cut_tol: f64,
    lay: &MasterLayout,
    pool: &mut RowPool,
) -> Vec<SparseRow> {
    let n = lay.n;
    let rhs = cut.rhs(z);
    let mut out = Vec::new();
    for j in 0..n {
        for i in j..n {
            if rhs.get(i, j) - w.get(i, j) >= -cut_tol {
                continue;
            }
            let mut dense = vec![0.0; n];
            for (p, coef) in cut.row_coefficients(i, j) {
                dense[p] += coef;
            }
            if !pool.insert(i, j, dense.clone()) {
                continue;
            }
            let mut coefs = vec![(lay.w(i, j), 1.0)];
            coefs.extend(
                dense
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(p, v)| (lay.z(p), -v)),
            );
            out.push(SparseRow::new(coefs, 0.0));
        }
    }
    out
}

pub fn cutting_plane_solve_with(
    inst: &Instance,
    opts: &CuttingPlaneOptions,
) -> Result<SolveReport> {
    let start = Instant::now();
    let n = inst.n();
    let lay = MasterLayout { n };
    let qinv = inst.q.inverse()?;
    let mut p = build_poly_master_with(inst, opts.master)?;
    let mut report = SolveReport::new(Model::Poly, n);
    let mut pool = RowPool::default();
    let mut warm: Option<WarmStart> = None;
    let mut status = Status::Solved;
    let mut last = None;
    if opts.seed_cut {
        let ones = vec![1.0; n];
        let cut = separate(&inst.q, &qinv, &ones)?;
        let unbounded = SymMatrix::from_fn(n, |_, _| f64::INFINITY);
        let rows = violated_rows(&cut, &ones, &unbounded, opts.cut_tol, &lay, &mut pool);
        report.cuts_added += rows.len();
        p.push_cut_rows(rows)?;
    }

    for round in 1..=opts.max_rounds.max(1) {
        let sol = solve_warm(&p, &opts.conic, warm.as_ref())?;
        report.rounds = round;
        if sol.status == ConicStatus::InfeasibleLike {
            report.status = Status::InfeasibleLike;
            report.note = Some("master flagged infeasible or unbounded".into());
            report.time_s = start.elapsed().as_secs_f64();
            return Ok(report);
        }
        let f = sol.objective;
        let prev = report.history.last().copied();
        report.history.push(f);
        log::debug!(
            "round {round}: bound {f:.8} ({} iterations)",
            sol.iterations
        );
        let z: Vec<f64> = (0..n).map(|i| sol.x[lay.z(i)]).collect();
        let w = lay.w_matrix(&sol.x);
        let converged = prev.is_some_and(|pf| (f - pf).abs() / f.abs().max(1.0) < opts.tol_round);
        let rows = if converged {
            Vec::new()
        } else {
            let cut = separate(&inst.q, &qinv, &z)?;
            violated_rows(&cut, &z, &w, opts.cut_tol, &lay, &mut pool)
        };
        let stop = converged || rows.is_empty();
        if !stop && round == opts.max_rounds {
            status = Status::RoundLimit;
        }
        last = Some((sol, z, w));
        if stop || round == opts.max_rounds {
            break;
        }
        report.cuts_added += rows.len();
        p.push_cut_rows(rows)?;
        warm = last.as_ref().map(|(s, _, _)| s.warm_start_for(&p));
    }

    let (sol, z, w) = last.expect("at least one round");
    if sol.status == ConicStatus::MaxIter && status == Status::Solved {
        status = Status::IterationLimit;
    }
    let mut inc = Incumbent::empty(inst);
    if z.iter().all(|v| (v - v.round()).abs() <= 1e-4) {
        let rounded: Vec<f64> = z.iter().map(|v| v.round()).collect();
        inc.offer(inst, &SupportSet::from_indicator(&rounded));
    }
    inc.offer_chain(inst, &z);
    inc.local_search(inst);

    report.bound = sol.objective;
    report.objective = inc.value;
    report.x = inc.x;
    report.z = inc.support.indicator();
    report.t = Some(sol.x[lay.t()]);
    report.w = Some(w);
    report.z_relaxed = Some(z);
    report.status = if status == Status::Solved && report.rel_gap() <= 1e-6 {
        Status::Optimal
    } else {
        status
    };
    report.time_s = start.elapsed().as_secs_f64();
    Ok(report)
}
