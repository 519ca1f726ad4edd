//! Operator splitting (ADMM) for `min cᵀx  s.t.  Ax + s = b,  s ∈ K`.
//!
//! Each iteration solves `(σI + AᵀRA) x̃ = σx − c + Aᵀ(y + R(b − s))` with a cached dense
//! Cholesky factor, relaxes, projects `s̃ + R⁻¹y` onto `K`, and updates the multiplier `y`, which
//! stays in the polar cone by Moreau's decomposition. The reported dual is `−y` mapped back
//! through the scaling. Data are equilibrated with a modified Ruiz scheme that keeps one
//! scale per second-order or semidefinite block.

use std::time::Instant;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use super::cones::{dist, project};
use super::{Cone, ConicProblem, ConicSolution, ConicStatus, WarmStart};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ConicSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Over-relaxation in `(0, 2)`.
    pub alpha: f64,
    pub sigma: f64,
    pub rho: f64,
    pub scaling_iters: usize,
    pub check_every: usize,
    /// Wall-clock limit in seconds.
    pub time_limit: Option<f64>,
}

impl Default for ConicSettings {
    fn default() -> Self {
        ConicSettings {
            tol: 1e-6,
            max_iter: 50_000,
            alpha: 1.6,
            sigma: 1e-6,
            rho: 0.1,
            scaling_iters: 10,
            check_every: 10,
            time_limit: None,
        }
    }
}

const RHO_EQ_FACTOR: f64 = 1e3;
const SCALE_MIN: f64 = 1e-4;
const SCALE_MAX: f64 = 1e4;
const INFEAS_EVERY: usize = 50;
const INFEAS_TOL: f64 = 1e-6;
const INFEAS_CONFIRM: usize = 3;

struct Scaled {
    rows: Vec<Vec<(usize, f64)>>,
    b: Vec<f64>,
    c: Vec<f64>,
    /// Column scaling `D`.
    d: Vec<f64>,
    /// Row scaling `E`.
    e: Vec<f64>,
    /// Cost scaling.
    cs: f64,
}

impl Scaled {
    fn new(p: &ConicProblem, iters: usize) -> Self {
        let n = p.num_vars();
        let m = p.num_rows();
        let blocks = p.blocks();
        let mut d = vec![1.0; n];
        let mut e = vec![1.0; m];
        for _ in 0..iters {
            let mut col = vec![0.0_f64; n];
            let mut row = vec![0.0_f64; m];
            for (i, r) in p.rows.iter().enumerate() {
                for &(j, v) in &r.coefs {
                    let a = (e[i] * v * d[j]).abs();
                    col[j] = col[j].max(a);
                    row[i] = row[i].max(a);
                }
            }
            for (start, cone) in &blocks {
                if matches!(cone, Cone::Soc(_) | Cone::Psd(_)) {
                    let range = *start..start + cone.rows();
                    let mx = row[range.clone()].iter().copied().fold(0.0, f64::max);
                    row[range].fill(mx);
                }
            }
            let inv_sqrt = |v: f64| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 };
            for j in 0..n {
                d[j] = (d[j] * inv_sqrt(col[j])).clamp(SCALE_MIN, SCALE_MAX);
            }
            for i in 0..m {
                e[i] = (e[i] * inv_sqrt(row[i])).clamp(SCALE_MIN, SCALE_MAX);
            }
        }
        let c_inf =
            p.c.iter()
                .zip(&d)
                .map(|(c, d)| (c * d).abs())
                .fold(0.0, f64::max);
        let cs = if c_inf > 0.0 {
            (1.0 / c_inf).clamp(SCALE_MIN, SCALE_MAX)
        } else {
            1.0
        };
        let rows = p
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| r.coefs.iter().map(|&(j, v)| (j, e[i] * v * d[j])).collect())
            .collect();
        Scaled {
            rows,
            b: p.rows.iter().zip(&e).map(|(r, e)| e * r.rhs).collect(),
            c: p.c.iter().zip(&d).map(|(c, d)| cs * c * d).collect(),
            d,
            e,
            cs,
        }
    }

    fn mul(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    fn mul_transpose(&self, y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (r, &yi) in self.rows.iter().zip(y) {
            if yi != 0.0 {
                for &(j, v) in r {
                    out[j] += v * yi;
                }
            }
        }
    }
}

fn factor(sc: &Scaled, n: usize, sigma: f64, r: &[f64]) -> Result<Cholesky<f64, Dyn>> {
    let mut k = DMatrix::<f64>::zeros(n, n);
    for (row, &ri) in sc.rows.iter().zip(r) {
        for &(p, vp) in row {
            let f = ri * vp;
            for &(q, vq) in row {
                k[(p, q)] += f * vq;
            }
        }
    }
    let mut shift = sigma;
    for _ in 0..6 {
        let mut kk = k.clone();
        for j in 0..n {
            kk[(j, j)] += shift;
        }
        if let Some(ch) = Cholesky::new(kk) {
            return Ok(ch);
        }
        shift *= 100.0;
    }
    Err(Error::Solver("KKT matrix factorization failed".into()))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn solve(p: &ConicProblem, settings: &ConicSettings) -> Result<ConicSolution> {
    solve_warm(p, settings, None)
}

pub fn solve_warm(
    p: &ConicProblem,
    settings: &ConicSettings,
    warm: Option<&WarmStart>,
) -> Result<ConicSolution> {
    p.validate()?;
    if !(settings.tol > 0.0) || !(settings.alpha > 0.0 && settings.alpha < 2.0) {
        return Err(Error::InvalidArgument("invalid solver settings".into()));
    }
    let start = Instant::now();
    let n = p.num_vars();
    let m = p.num_rows();
    let blocks = p.blocks();
    let sc = Scaled::new(p, settings.scaling_iters);

    // equality rows get a stiffer penalty
    let mut r = vec![settings.rho; m];
    for (start, cone) in &blocks {
        if let Cone::Zero(len) = cone {
            r[*start..start + len].fill(settings.rho * RHO_EQ_FACTOR);
        }
    }
    let chol = factor(&sc, n, settings.sigma, &r)?;

    let (mut x, mut s, mut y) = match warm {
        Some(w) if w.x.len() == n && w.s.len() == m && w.y.len() == m => (
            w.x.iter()
                .zip(&sc.d)
                .map(|(x, d)| x / d)
                .collect::<Vec<_>>(),
            w.s.iter()
                .zip(&sc.e)
                .map(|(s, e)| s * e)
                .collect::<Vec<_>>(),
            w.y.iter()
                .zip(&sc.e)
                .map(|(y, e)| -y * sc.cs / e)
                .collect::<Vec<_>>(),
        ),
        _ => (vec![0.0; n], vec![0.0; m], vec![0.0; m]),
    };

    let alpha = settings.alpha;
    let mut rhs = DVector::<f64>::zeros(n);
    let mut aty = vec![0.0; n];
    let mut w = vec![0.0; m];
    let mut x_prev = x.clone();
    let mut y_prev = y.clone();
    let mut infeasible_hits = 0;
    let mut status = ConicStatus::MaxIter;
    let mut iterations = 0;
    let mut report = None;

    for iter in 1..=settings.max_iter {
        iterations = iter;
        x_prev.copy_from_slice(&x);
        y_prev.copy_from_slice(&y);
        for i in 0..m {
            w[i] = y[i] + r[i] * (sc.b[i] - s[i]);
        }
        sc.mul_transpose(&w, &mut aty);
        for j in 0..n {
            rhs[j] = settings.sigma * x[j] - sc.c[j] + aty[j];
        }
        chol.solve_mut(&mut rhs);
        let ax = sc.mul(rhs.as_slice());
        for j in 0..n {
            x[j] = alpha * rhs[j] + (1.0 - alpha) * x[j];
        }
        // v = relaxed s̃ + R⁻¹y, then s = Π_K(v), y = R(v − s)
        let mut v: Vec<f64> = (0..m)
            .map(|i| alpha * (sc.b[i] - ax[i]) + (1.0 - alpha) * s[i] + y[i] / r[i])
            .collect();
        s.copy_from_slice(&v);
        for (start, cone) in &blocks {
            project(*cone, &mut s[*start..start + cone.rows()]);
        }
        for i in 0..m {
            v[i] -= s[i];
            y[i] = r[i] * v[i];
        }

        let last = iter == settings.max_iter;
        if iter % settings.check_every.max(1) != 0 && !last {
            continue;
        }
        let sol = unscale(p, &sc, &x, &s, &y);
        let converged = sol.primal_residual <= settings.tol
            && sol.dual_residual <= settings.tol
            && sol.gap <= settings.tol;
        report = Some(sol);
        if converged {
            status = ConicStatus::Optimal;
            break;
        }
        if iter % INFEAS_EVERY == 0 {
            if infeasibility_certificate(p, &sc, &blocks, &x, &x_prev, &y, &y_prev) {
                infeasible_hits += 1;
                if infeasible_hits >= INFEAS_CONFIRM {
                    status = ConicStatus::InfeasibleLike;
                    break;
                }
            } else {
                infeasible_hits = 0;
            }
        }
        if let Some(limit) = settings.time_limit {
            if start.elapsed().as_secs_f64() > limit {
                break;
            }
        }
    }
    let mut sol = report.unwrap_or_else(|| unscale(p, &sc, &x, &s, &y));
    sol.status = status;
    sol.iterations = iterations;
    Ok(sol)
}

fn unscale(p: &ConicProblem, sc: &Scaled, x: &[f64], s: &[f64], y: &[f64]) -> ConicSolution {
    let xu: Vec<f64> = x.iter().zip(&sc.d).map(|(x, d)| x * d).collect();
    let su: Vec<f64> = s.iter().zip(&sc.e).map(|(s, e)| s / e).collect();
    let yu: Vec<f64> = y.iter().zip(&sc.e).map(|(y, e)| -y * e / sc.cs).collect();
    let ax = p.mul(&xu);
    let aty = p.mul_transpose(&yu);
    let b: Vec<f64> = p.rows.iter().map(|r| r.rhs).collect();
    let rp = (0..ax.len())
        .map(|i| (ax[i] + su[i] - b[i]).abs())
        .fold(0.0, f64::max);
    let rd = (0..xu.len())
        .map(|j| (p.c[j] + aty[j]).abs())
        .fold(0.0, f64::max);
    let pobj = dot(&p.c, &xu);
    let dobj = -dot(&b, &yu);
    let scale_p = inf_norm(&ax).max(inf_norm(&su)).max(inf_norm(&b));
    let scale_d = inf_norm(&p.c).max(inf_norm(&aty));
    ConicSolution {
        objective: pobj + p.offset,
        dual_objective: dobj + p.offset,
        primal_residual: rp / (1.0 + scale_p),
        dual_residual: rd / (1.0 + scale_d),
        gap: (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs()),
        x: xu,
        s: su,
        y: yu,
        status: ConicStatus::MaxIter,
        iterations: 0,
    }
}

/// One-step differences that look like a primal (Farkas) or dual (recession) certificate.
fn infeasibility_certificate(
    p: &ConicProblem,
    sc: &Scaled,
    blocks: &[(usize, Cone)],
    x: &[f64],
    x_prev: &[f64],
    y: &[f64],
    y_prev: &[f64],
) -> bool {
    let dy: Vec<f64> = (0..y.len())
        .map(|i| -(y[i] - y_prev[i]) * sc.e[i] / sc.cs)
        .collect();
    let ny = inf_norm(&dy);
    if ny > 0.0 {
        let u: Vec<f64> = dy.iter().map(|v| v / ny).collect();
        let atu = p.mul_transpose(&u);
        let bu: f64 = p.rows.iter().zip(&u).map(|(r, u)| r.rhs * u).sum();
        let in_dual = blocks
            .iter()
            .all(|(st, c)| dist(*c, &u[*st..st + c.rows()], true) <= INFEAS_TOL);
        if inf_norm(&atu) <= INFEAS_TOL && bu < -INFEAS_TOL && in_dual {
            return true;
        }
    }
    let dx: Vec<f64> = (0..x.len()).map(|j| (x[j] - x_prev[j]) * sc.d[j]).collect();
    let nx = inf_norm(&dx);
    if nx > 0.0 {
        let d: Vec<f64> = dx.iter().map(|v| v / nx).collect();
        let cd = dot(&p.c, &d);
        if cd < -INFEAS_TOL * inf_norm(&p.c).max(1.0) {
            let v: Vec<f64> = p.mul(&d).into_iter().map(|t| -t).collect();
            let recession = blocks
                .iter()
                .all(|(st, c)| dist(*c, &v[*st..st + c.rows()], false) <= INFEAS_TOL);
            if recession {
                return true;
            }
        }
    }
    false
}
