//! Problem data, solve reports, and the three formulations compared in the experiments:
//! the perspective relaxation (`pers-c`), its branch-and-bound completion (`pers-b`) and the
//! polymatroid cutting-plane relaxation (`poly`), plus an enumeration oracle (`exact`).

mod bnb;
mod exact;
mod pers;
mod poly;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, spd_solve, SupportSet, SymMatrix};
use crate::stieltjes::{apply_switch, apply_switch_vec, find_switch, require_stieltjes, SwitchSet};

pub use bnb::{branch_and_bound, BnbOptions};
pub use exact::{exact_enumerate, MAX_EXACT_DIM};
pub use pers::{build_pers_c, pers_c_solve, PersLayout};
pub use poly::{
    build_poly_master, build_poly_master_with, cutting_plane_solve, cutting_plane_solve_with,
    CuttingPlaneOptions, MasterLayout, MasterOptions,
};

/// Default big-M bound on `|x_i|`.
pub const DEFAULT_BIG_M: f64 = 10.0;

/// Provenance of generated lattice instances.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    pub m: Option<usize>,
    pub sigma2: Option<f64>,
    pub mu: Option<f64>,
    pub seed: Option<u64>,
    pub y: Option<Vec<f64>>,
}

/// `min aᵀx + cᵀz + xᵀQx + constant` over `x_i(1 − z_i) = 0`, `z ∈ {0,1}ⁿ`, `Σz ≤ k`,
/// `|x| ≤ M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub q: SymMatrix,
    pub a: Vec<f64>,
    pub c: Vec<f64>,
    pub constant: f64,
    pub k: usize,
    pub big_m: f64,
    pub meta: InstanceMeta,
}

impl Instance {
    pub fn new(
        q: SymMatrix,
        a: Vec<f64>,
        c: Vec<f64>,
        constant: f64,
        k: usize,
        big_m: f64,
    ) -> Result<Self> {
        let n = q.n();
        for v in [&a, &c] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        if k > n {
            return Err(Error::InvalidArgument(format!(
                "cardinality {k} exceeds n = {n}"
            )));
        }
        if !(big_m > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "big-M must be positive, got {big_m}"
            )));
        }
        if a.iter().chain(&c).any(|v| !v.is_finite()) || !constant.is_finite() {
            return Err(Error::InvalidArgument("non-finite coefficient".into()));
        }
        require_stieltjes(&q)?;
        Ok(Instance {
            q,
            a,
            c,
            constant,
            k,
            big_m,
            meta: InstanceMeta::default(),
        })
    }

    /// Builds an instance from a Stieltjes-equivalent `q`, switching signs of `q` and `a`.
    /// Solutions of the returned instance map back through [`apply_switch_vec`].
    pub fn with_switch(
        q: SymMatrix,
        a: Vec<f64>,
        c: Vec<f64>,
        constant: f64,
        k: usize,
        big_m: f64,
    ) -> Result<(Self, SwitchSet)> {
        let switch = find_switch(&q).map_err(|_| Error::NotStieltjes)?;
        if a.len() != q.n() {
            return Err(Error::DimensionMismatch {
                expected: q.n(),
                got: a.len(),
            });
        }
        let inst = Instance::new(
            apply_switch(&q, &switch),
            apply_switch_vec(&a, &switch),
            c,
            constant,
            k,
            big_m,
        )?;
        Ok((inst, switch))
    }

    pub fn with_meta(mut self, meta: InstanceMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn n(&self) -> usize {
        self.q.n()
    }

    pub fn cardinality_active(&self) -> bool {
        self.k < self.n()
    }

    /// `aᵀx + cᵀz + xᵀQx + constant`.
    pub fn objective(&self, x: &[f64], z: &[f64]) -> f64 {
        dot(&self.a, x) + dot(&self.c, z) + self.q.quad_form(x) + self.constant
    }

    /// Optimal continuous part on a fixed support: `x_S = −½ Q_S⁻¹ a_S`, with value
    /// `cᵀe_S − ¼ a_Sᵀ Q_S⁻¹ a_S + constant`.
    pub fn support_solution(&self, s: &SupportSet) -> Result<(Vec<f64>, f64)> {
        let n = self.n();
        let mut x = vec![0.0; n];
        let mut value = self.constant;
        if !s.is_empty() {
            let a_s: Vec<f64> = s.members().iter().map(|&i| self.a[i]).collect();
            let sol = spd_solve(&self.q.principal(s), &a_s)?;
            for (idx, &i) in s.members().iter().enumerate() {
                x[i] = -0.5 * sol[idx];
                value += self.c[i];
            }
            value -= 0.25 * dot(&a_s, &sol);
        }
        Ok((x, value))
    }

    pub fn within_big_m(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.abs() <= self.big_m * (1.0 + 1e-9))
    }

    /// Relabels indices: entry `i` of the result is entry `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        crate::linalg::check_permutation(perm, self.n())?;
        let pick = |v: &[f64]| perm.iter().map(|&i| v[i]).collect::<Vec<_>>();
        let mut out = Instance::new(
            self.q.permuted(perm),
            pick(&self.a),
            pick(&self.c),
            self.constant,
            self.k,
            self.big_m,
        )?;
        out.meta = self.meta.clone();
        out.meta.y = self.meta.y.as_ref().map(|y| pick(y));
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    PersC,
    PersB,
    Poly,
    Exact,
    Sfm,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::PersC => "pers-c",
            Model::PersB => "pers-b",
            Model::Poly => "poly",
            Model::Exact => "exact",
            Model::Sfm => "sfm",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pers-c" => Model::PersC,
            "pers-b" => Model::PersB,
            "poly" => Model::Poly,
            "exact" => Model::Exact,
            "sfm" => Model::Sfm,
            other => return Err(Error::InvalidArgument(format!("unknown model `{other}`"))),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    /// Gap closed: the bound is certified by a matching feasible solution.
    Optimal,
    /// A relaxation solved to tolerance; the gap may be positive.
    Solved,
    RoundLimit,
    TimeLimit,
    IterationLimit,
    InfeasibleLike,
    Failed,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Optimal => "optimal",
            Status::Solved => "solved",
            Status::RoundLimit => "round_limit",
            Status::TimeLimit => "time_limit",
            Status::IterationLimit => "iteration_limit",
            Status::InfeasibleLike => "infeasible_like",
            Status::Failed => "failed",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "optimal" => Status::Optimal,
            "solved" => Status::Solved,
            "round_limit" => Status::RoundLimit,
            "time_limit" => Status::TimeLimit,
            "iteration_limit" => Status::IterationLimit,
            "infeasible_like" => Status::InfeasibleLike,
            "failed" => Status::Failed,
            other => return Err(Error::InvalidArgument(format!("unknown status `{other}`"))),
        })
    }
}

/// Outcome of one solve. `objective` is the best feasible value found (`NaN` when none),
/// `bound` a valid lower bound on the mixed-integer optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub model: Model,
    pub status: Status,
    pub objective: f64,
    pub bound: f64,
    pub time_s: f64,
    pub rounds: usize,
    pub cuts_added: usize,
    pub nodes: usize,
    pub x: Vec<f64>,
    pub z: Vec<f64>,
    pub w: Option<SymMatrix>,
    pub t: Option<f64>,
    /// Relaxed `z` returned by the last relaxation solve, when there is one.
    pub z_relaxed: Option<Vec<f64>>,
    /// Relaxation value after each round (cutting planes) or solve.
    pub history: Vec<f64>,
    pub note: Option<String>,
}

impl SolveReport {
    pub(crate) fn new(model: Model, n: usize) -> Self {
        SolveReport {
            model,
            status: Status::Failed,
            objective: f64::NAN,
            bound: f64::NEG_INFINITY,
            time_s: 0.0,
            rounds: 0,
            cuts_added: 0,
            nodes: 0,
            x: vec![0.0; n],
            z: vec![0.0; n],
            w: None,
            t: None,
            z_relaxed: None,
            history: Vec::new(),
            note: None,
        }
    }

    /// `(objective − bound) / max(|objective|, 1)`; `NaN` without a feasible solution.
    pub fn rel_gap(&self) -> f64 {
        relative_gap(self.objective, self.bound)
    }

    pub fn support(&self) -> SupportSet {
        SupportSet::from_indicator(&self.z)
    }

    /// Values in the order of [`CSV_HEADER`].
    pub fn csv_record(&self, instance_id: &str) -> Vec<String> {
        vec![
            instance_id.to_string(),
            self.model.to_string(),
            self.status.to_string(),
            format!("{}", self.objective),
            format!("{}", self.bound),
            format!("{}", self.rel_gap()),
            format!("{:.6}", self.time_s),
            self.rounds.to_string(),
            self.cuts_added.to_string(),
        ]
    }
}

pub const CSV_HEADER: [&str; 9] = [
    "instance_id",
    "model",
    "status",
    "objective",
    "bound",
    "rel_gap",
    "time_s",
    "rounds",
    "cuts_added",
];

pub fn relative_gap(upper: f64, lower: f64) -> f64 {
    (upper - lower) / upper.abs().max(1.0)
}

/// Best feasible solution among supports, kept by the searches.
#[derive(Clone, Debug)]
pub(crate) struct Incumbent {
    pub support: SupportSet,
    pub x: Vec<f64>,
    pub value: f64,
}

impl Incumbent {
    pub fn empty(inst: &Instance) -> Self {
        Incumbent {
            support: SupportSet::empty(inst.n()),
            x: vec![0.0; inst.n()],
            value: inst.constant,
        }
    }

    /// Replaces `self` when `s` is feasible and strictly better.
    pub fn offer(&mut self, inst: &Instance, s: &SupportSet) -> bool {
        if s.len() > inst.k {
            return false;
        }
        match inst.support_solution(s) {
            Ok((x, v)) if v < self.value - 1e-12 && inst.within_big_m(&x) => {
                *self = Incumbent {
                    support: s.clone(),
                    x,
                    value: v,
                };
                true
            }
            _ => false,
        }
    }

    /// 1-swap / add / drop local search from the current support.
    pub fn local_search(&mut self, inst: &Instance) {
        let n = inst.n();
        loop {
            let base = self.support.clone();
            let mut improved = false;
            for i in 0..n {
                let cand = if base.contains(i) {
                    SupportSet::new(n, base.members().iter().copied().filter(|&j| j != i))
                } else {
                    Ok(base.with(i))
                };
                if let Ok(cand) = cand {
                    improved |= self.offer(inst, &cand);
                }
            }
            if !improved && base.len() == inst.k {
                for &out in base.members() {
                    for i in (0..n).filter(|i| !base.contains(*i)) {
                        let members = base
                            .members()
                            .iter()
                            .copied()
                            .filter(|&j| j != out)
                            .chain([i]);
                        if let Ok(cand) = SupportSet::new(n, members) {
                            improved |= self.offer(inst, &cand);
                        }
                    }
                }
            }
            if !improved {
                return;
            }
        }
    }

    /// Offers every prefix (up to size `k`) of `z` sorted in non-increasing order.
    pub fn offer_chain(&mut self, inst: &Instance, z: &[f64]) {
        let order = crate::polymatroid::separation_order(z);
        let mut members = Vec::new();
        for &i in order.iter().take(inst.k) {
            members.push(i);
            if let Ok(s) = SupportSet::new(inst.n(), members.iter().copied()) {
                self.offer(inst, &s);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{example1_instance, example1_q};

    #[test]
    fn support_solution_closed_form() {
        let inst = example1_instance();
        let (x, v) = inst.support_solution(&SupportSet::full(3)).unwrap();
        for (xi, e) in x.iter().zip([4.0, 3.0, 4.0]) {
            assert!((xi - e).abs() < 1e-12);
        }
        assert!((v + 9.2).abs() < 1e-12);
        let z = [1.0; 3];
        assert!((inst.objective(&x, &z) - v).abs() < 1e-12);
        let (x0, v0) = inst.support_solution(&SupportSet::empty(3)).unwrap();
        assert_eq!(x0, vec![0.0; 3]);
        assert_eq!(v0, 0.0);
    }

    #[test]
    fn instance_validation() {
        let q = example1_q();
        assert!(Instance::new(q.clone(), vec![0.0; 2], vec![0.0; 3], 0.0, 3, 10.0).is_err());
        assert!(Instance::new(q.clone(), vec![0.0; 3], vec![0.0; 3], 0.0, 4, 10.0).is_err());
        let pos = SymMatrix::from_rows(&[[2.0, 1.0], [1.0, 2.0]]).unwrap();
        assert_eq!(
            Instance::new(pos.clone(), vec![0.0; 2], vec![0.0; 2], 0.0, 2, 10.0),
            Err(Error::NotStieltjes)
        );
        let (inst, switch) =
            Instance::with_switch(pos, vec![1.0, -1.0], vec![0.0; 2], 0.0, 2, 10.0).unwrap();
        assert_eq!(switch.flips(), &[1]);
        assert_eq!(inst.a, vec![1.0, 1.0]);
    }

    #[test]
    fn names_round_trip() {
        for m in [
            Model::PersC,
            Model::PersB,
            Model::Poly,
            Model::Exact,
            Model::Sfm,
        ] {
            assert_eq!(m.as_str().parse::<Model>().unwrap(), m);
        }
        assert_eq!("round_limit".parse::<Status>().unwrap(), Status::RoundLimit);
        assert!("nope".parse::<Status>().is_err());
    }

    #[test]
    fn gap_uses_unit_floor() {
        assert_eq!(relative_gap(0.5, 0.0), 0.5);
        assert_eq!(relative_gap(-10.0, -11.0), 0.1);
    }
}
