use std::time::Instant;

use super::{Instance, Model, SolveReport, Status};
use crate::error::{Error, Result};
use crate::linalg::sub_pseudoinverse;
use crate::submodular::{enumerate_minimum, SetObjective, MAX_BRUTEFORCE_DIM};

pub const MAX_EXACT_DIM: usize = MAX_BRUTEFORCE_DIM;

/// Enumerates every support with `|S| ≤ k`; ties go to the lexicographically smallest
/// support. The big-M bound is not imposed.
pub fn exact_enumerate(inst: &Instance) -> Result<SolveReport> {
    let start = Instant::now();
    let n = inst.n();
    if n > MAX_EXACT_DIM {
        return Err(Error::TooLarge {
            n,
            max: MAX_EXACT_DIM,
        });
    }
    let obj = SetObjective::quadratic(inst.q.clone(), &inst.a, inst.c.clone())?;
    let (support, _) = enumerate_minimum(&obj, inst.k)?;
    let (x, value) = inst.support_solution(&support)?;
    let mut report = SolveReport::new(Model::Exact, n);
    report.status = Status::Optimal;
    report.objective = value;
    report.bound = value;
    report.z = support.indicator();
    report.t = Some(inst.q.quad_form(&x));
    report.w = Some(sub_pseudoinverse(&inst.q, &support)?);
    if !inst.within_big_m(&x) {
        report.note = Some("solution exceeds the big-M bound".into());
    }
    report.x = x;
    report.time_s = start.elapsed().as_secs_f64();
    Ok(report)
}
