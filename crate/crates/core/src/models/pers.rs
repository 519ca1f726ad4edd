//! Perspective relaxation with big-M bounds.
//!
//! `Q` is split as `D + FᵀF` with `D ≥ 0` diagonal; the separable part becomes
//! `Σ d_i x_i²/z_i` (one rotated cone per index) and `FᵀF` stays as `τ ≥ ‖Fx‖²`. For diagonally
//! dominant `Q`, `D` holds the row sums and `F` the weighted edge differences
//! `√(−Q_ij)(e_i − e_j)`, which on lattice instances is exactly the fidelity/Laplacian split.
//! Otherwise `D = λ_min(Q)·I` and `F` comes from the eigendecomposition of `Q − D`.

use std::time::Instant;

use super::{Incumbent, Instance, Model, SolveReport, Status};
use crate::conic::{solve, Cone, ConicProblem, ConicSettings, ConicStatus, SparseRow};
use crate::error::Result;
use crate::linalg::{sym_eig, SymMatrix};

/// Variable and row positions of the perspective model.
#[derive(Clone, Debug, PartialEq)]
pub struct PersLayout {
    pub n: usize,
    pub d: Vec<f64>,
    /// Factor rows of `Q − D`, sparse.
    pub factor: Vec<Vec<(usize, f64)>>,
    /// First row of the `−z ≤ −lo` rows; the `z ≤ hi` rows follow.
    pub bound_row: usize,
}

impl PersLayout {
    pub fn x(&self, i: usize) -> usize {
        i
    }

    pub fn z(&self, i: usize) -> usize {
        self.n + i
    }

    pub fn p(&self, i: usize) -> usize {
        2 * self.n + i
    }

    pub fn tau(&self) -> usize {
        3 * self.n
    }

    pub fn num_vars(&self) -> usize {
        3 * self.n + 1
    }
}

/// `Q = D + FᵀF`.
pub fn split_quadratic(q: &SymMatrix) -> Result<(Vec<f64>, Vec<Vec<(usize, f64)>>)> {
    let n = q.n();
    let dominant = (0..n).all(|i| {
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| q.get(i, j).abs()).sum();
        q.get(i, i) >= off
    });
    if dominant {
        let d = (0..n)
            .map(|i| q.row(i).iter().sum::<f64>().max(0.0))
            .collect();
        let mut rows = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let w = -q.get(i, j);
                if w > 0.0 {
                    let r = w.sqrt();
                    rows.push(vec![(i, r), (j, -r)]);
                }
            }
        }
        return Ok((d, rows));
    }
    let eig = sym_eig(q)?;
    let lmin = eig.values.iter().copied().fold(f64::INFINITY, f64::min);
    let shift = lmin * (1.0 - 1e-9);
    let rows = (0..n)
        .filter_map(|k| {
            let w = eig.values[k] - shift;
            (w > 1e-14 * lmin.abs().max(1.0)).then(|| {
                let r = w.sqrt();
                eig.vector(k)
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(i, v)| (i, r * v))
                    .collect()
            })
        })
        .collect();
    Ok((vec![shift; n], rows))
}

pub(crate) fn build_with_layout(inst: &Instance) -> Result<(ConicProblem, PersLayout)> {
    let n = inst.n();
    let (d, factor) = split_quadratic(&inst.q)?;
    let mut layout = PersLayout {
        n,
        d: d.clone(),
        factor,
        bound_row: 0,
    };
    let mut c = vec![0.0; layout.num_vars()];
    for i in 0..n {
        c[layout.x(i)] = inst.a[i];
        c[layout.z(i)] = inst.c[i];
        c[layout.p(i)] = d[i];
    }
    c[layout.tau()] = 1.0;
    let mut p = ConicProblem::new(c);
    p.offset = inst.constant;

    let mut lin = Vec::new();
    let m = inst.big_m;
    for i in 0..n {
        lin.push(SparseRow::new(
            vec![(layout.x(i), 1.0), (layout.z(i), -m)],
            0.0,
        ));
        lin.push(SparseRow::new(
            vec![(layout.x(i), -1.0), (layout.z(i), -m)],
            0.0,
        ));
    }
    if inst.cardinality_active() {
        let all = (0..n).map(|i| (layout.z(i), 1.0)).collect();
        lin.push(SparseRow::new(all, inst.k as f64));
    }
    layout.bound_row = lin.len();
    for i in 0..n {
        lin.push(SparseRow::new(vec![(layout.z(i), -1.0)], 0.0));
    }
    for i in 0..n {
        lin.push(SparseRow::new(vec![(layout.z(i), 1.0)], 1.0));
    }
    if layout.factor.is_empty() {
        lin.push(SparseRow::new(vec![(layout.tau(), -1.0)], 0.0));
    }
    p.add_block(Cone::Nonneg(lin.len()), lin)?;

    // ‖(2x_i, p_i − z_i)‖ ≤ p_i + z_i  ⇔  x_i² ≤ p_i z_i
    for i in 0..n {
        let (x, z, pi) = (layout.x(i), layout.z(i), layout.p(i));
        p.add_block(
            Cone::Soc(3),
            vec![
                SparseRow::new(vec![(pi, -1.0), (z, -1.0)], 0.0),
                SparseRow::new(vec![(x, -2.0)], 0.0),
                SparseRow::new(vec![(pi, -1.0), (z, 1.0)], 0.0),
            ],
        )?;
    }
    // ‖(2Fx, τ − 1)‖ ≤ τ + 1  ⇔  ‖Fx‖² ≤ τ
    if !layout.factor.is_empty() {
        let tau = layout.tau();
        let mut rows = vec![SparseRow::new(vec![(tau, -1.0)], 1.0)];
        for f in &layout.factor {
            rows.push(SparseRow::new(
                f.iter().map(|&(i, v)| (layout.x(i), -2.0 * v)).collect(),
                0.0,
            ));
        }
        rows.push(SparseRow::new(vec![(tau, -1.0)], -1.0));
        p.add_block(Cone::Soc(rows.len()), rows)?;
    }
    Ok((p, layout))
}

/// Conic form of the perspective relaxation.
pub fn build_pers_c(inst: &Instance) -> Result<ConicProblem> {
    Ok(build_with_layout(inst)?.0)
}

/// Sets `lo ≤ z ≤ hi` through the right-hand sides of the bound rows.
pub(crate) fn set_z_bounds(p: &mut ConicProblem, layout: &PersLayout, lo: &[f64], hi: &[f64]) {
    let n = layout.n;
    for i in 0..n {
        p.rows[layout.bound_row + i].rhs = -lo[i];
        p.rows[layout.bound_row + n + i].rhs = hi[i];
    }
}

/// Solves the relaxation and rounds its `z` for an upper bound.
pub fn pers_c_solve(inst: &Instance, settings: &ConicSettings) -> Result<SolveReport> {
    let start = Instant::now();
    let n = inst.n();
    let (p, layout) = build_with_layout(inst)?;
    let sol = solve(&p, settings)?;
    let mut report = SolveReport::new(Model::PersC, n);
    report.rounds = 1;
    if sol.status == ConicStatus::InfeasibleLike {
        report.status = Status::InfeasibleLike;
        report.time_s = start.elapsed().as_secs_f64();
        return Ok(report);
    }
    let z: Vec<f64> = (0..n).map(|i| sol.x[layout.z(i)]).collect();
    let mut inc = Incumbent::empty(inst);
    inc.offer_chain(inst, &z);
    inc.local_search(inst);
    report.bound = sol.objective;
    report.objective = inc.value;
    report.z = inc.support.indicator();
    report.x = inc.x;
    report.z_relaxed = Some(z);
    report.status = match sol.status {
        ConicStatus::MaxIter => Status::IterationLimit,
        _ if report.rel_gap() <= 1e-6 => Status::Optimal,
        _ => Status::Solved,
    };
    report.history = vec![sol.objective];
    report.time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example1_q;
    use crate::instances::random::random_instance;
    use crate::linalg::spd_solve;
    use crate::models::exact_enumerate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn split_reconstructs_q() {
        for q in [
            example1_q(),
            crate::instances::grid_quadratic(3, 0.5),
            SymMatrix::from_rows(&[[1.0, -0.6, -0.6], [-0.6, 1.0, -0.05], [-0.6, -0.05, 1.0]])
                .unwrap(),
        ] {
            let (d, f) = split_quadratic(&q).unwrap();
            assert!(d.iter().all(|&v| v >= 0.0));
            let rebuilt = SymMatrix::from_fn(q.n(), |i, j| {
                let diag = if i == j { d[i] } else { 0.0 };
                let ff: f64 = f
                    .iter()
                    .map(|row| {
                        let gi = row.iter().find(|e| e.0 == i).map_or(0.0, |e| e.1);
                        let gj = row.iter().find(|e| e.0 == j).map_or(0.0, |e| e.1);
                        gi * gj
                    })
                    .sum();
                diag + ff
            });
            assert!(rebuilt.max_abs_diff(&q) < 1e-9);
        }
        let (d, f) = split_quadratic(&crate::instances::grid_quadratic(4, 2.0)).unwrap();
        assert_eq!(d, vec![0.5; 16]);
        assert_eq!(f.len(), 24);
    }

    #[test]
    fn zero_data_gives_zero() {
        let inst = Instance::new(example1_q(), vec![0.0; 3], vec![0.5; 3], 0.0, 3, 10.0).unwrap();
        let r = pers_c_solve(&inst, &ConicSettings::default()).unwrap();
        assert!(r.bound.abs() < 1e-5);
        assert_eq!(r.objective, 0.0);
    }

    /// Value of the relaxation at fixed `z > 0`: `cᵀz − ¼ aᵀ(D/z + L)⁻¹a`.
    fn toy_value(z: [f64; 2]) -> f64 {
        // Q = [[2,−1],[−1,2]] = diag(1,1) + [[1,−1],[−1,1]]
        let qz =
            SymMatrix::from_rows(&[[1.0 / z[0] + 1.0, -1.0], [-1.0, 1.0 / z[1] + 1.0]]).unwrap();
        let a = [-2.0, 0.0];
        let sol = spd_solve(&qz, &a).unwrap();
        0.5 * (z[0] + z[1]) - 0.25 * (a[0] * sol[0] + a[1] * sol[1])
    }

    #[test]
    fn toy_matches_grid_search() {
        let q = SymMatrix::from_rows(&[[2.0, -1.0], [-1.0, 2.0]]).unwrap();
        let inst = Instance::new(q, vec![-2.0, 0.0], vec![0.5, 0.5], 0.0, 2, 10.0).unwrap();
        let r = pers_c_solve(&inst, &ConicSettings::default()).unwrap();
        let mut grid = f64::INFINITY;
        for i in 1..=200 {
            for j in 1..=200 {
                grid = grid.min(toy_value([i as f64 / 200.0, j as f64 / 200.0]));
            }
        }
        // the face z₂ = 0 forces x₂ = 0, leaving min −2x₁ + (1/z₁ + 1)x₁²
        let edge = (1..=200)
            .map(|i| {
                let z1 = i as f64 / 200.0;
                0.5 * z1 - 1.0 / (1.0 / z1 + 1.0)
            })
            .fold(0.0, f64::min);
        let oracle = grid.min(edge);
        assert!((r.bound - oracle).abs() < 1e-4, "{} vs {oracle}", r.bound);
    }

    #[test]
    fn bound_below_exact_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let inst = random_instance(10, 10, &mut rng);
            let r = pers_c_solve(&inst, &ConicSettings::default()).unwrap();
            let e = exact_enumerate(&inst).unwrap();
            assert!(r.bound <= e.objective + 1e-6 * e.objective.abs().max(1.0));
            assert!(r.objective >= e.objective - 1e-9);
        }
    }
}
