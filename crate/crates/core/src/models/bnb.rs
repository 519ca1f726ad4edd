//! Best-first branch and bound on the perspective relaxation.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::pers::{build_with_layout, set_z_bounds};
use super::{Incumbent, Instance, Model, SolveReport, Status};
use crate::conic::{solve_warm, ConicSettings, ConicStatus, WarmStart};
use crate::error::Result;
use crate::linalg::SupportSet;

#[derive(Clone, Debug, PartialEq)]
pub struct BnbOptions {
    /// Seconds.
    pub time_limit: f64,
    pub node_limit: usize,
    pub conic: ConicSettings,
    /// Nodes whose bound is within `gap_tol · max(1, |incumbent|)` of the incumbent are pruned.
    pub gap_tol: f64,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions {
            time_limit: 3600.0,
            node_limit: usize::MAX,
            conic: ConicSettings::default(),
            gap_tol: 1e-6,
        }
    }
}

const INTEGRAL_TOL: f64 = 1e-4;

struct Node {
    bound: f64,
    lo: Vec<f64>,
    hi: Vec<f64>,
    warm: Option<WarmStart>,
    seq: usize,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: smallest bound first, older node first on ties
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.seq.cmp(&self.seq))
    }
}

pub fn branch_and_bound(inst: &Instance, opts: &BnbOptions) -> Result<SolveReport> {
    let start = Instant::now();
    let n = inst.n();
    let (mut p, layout) = build_with_layout(inst)?;
    let mut report = SolveReport::new(Model::PersB, n);
    let mut inc = Incumbent::empty(inst);
    let prune =
        |bound: f64, inc: &Incumbent| bound >= inc.value - opts.gap_tol * inc.value.abs().max(1.0);

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        lo: vec![0.0; n],
        hi: vec![1.0; n],
        warm: None,
        seq: 0,
    });
    let mut seq = 1;
    // smallest bound among nodes closed without branching (pruned or integral)
    let mut closed_bound = f64::INFINITY;
    let mut root_bound = None;
    let mut limited = false;

    while let Some(node) = heap.pop() {
        if prune(node.bound, &inc) {
            closed_bound = closed_bound.min(node.bound);
            continue;
        }
        if report.nodes >= opts.node_limit || start.elapsed().as_secs_f64() > opts.time_limit {
            heap.push(node);
            limited = true;
            break;
        }
        report.nodes += 1;
        set_z_bounds(&mut p, &layout, &node.lo, &node.hi);
        let mut settings = opts.conic.clone();
        let remaining = opts.time_limit - start.elapsed().as_secs_f64();
        settings.time_limit = Some(settings.time_limit.map_or(remaining, |t| t.min(remaining)));
        let sol = solve_warm(&p, &settings, node.warm.as_ref())?;
        if sol.status == ConicStatus::InfeasibleLike {
            continue;
        }
        // a child bound never drops below its parent's
        let bound = sol.objective.max(node.bound);
        if root_bound.is_none() {
            root_bound = Some(bound);
            report.history.push(bound);
        }
        let z: Vec<f64> = (0..n).map(|i| sol.x[layout.z(i)]).collect();
        inc.offer_chain(inst, &z);
        inc.local_search(inst);
        if prune(bound, &inc) {
            closed_bound = closed_bound.min(bound);
            continue;
        }
        let branch = (0..n)
            .filter(|&i| node.lo[i] != node.hi[i])
            .map(|i| (i, (z[i] - z[i].round()).abs()))
            .filter(|&(_, f)| f > INTEGRAL_TOL)
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
        let Some((i, _)) = branch else {
            let rounded: Vec<f64> = z.iter().map(|v| v.round()).collect();
            inc.offer(inst, &SupportSet::from_indicator(&rounded));
            closed_bound = closed_bound.min(bound.min(inc.value));
            continue;
        };
        let warm = sol.warm_start_for(&p);
        for v in [0.0, 1.0] {
            let mut lo = node.lo.clone();
            let mut hi = node.hi.clone();
            lo[i] = v;
            hi[i] = v;
            if lo.iter().sum::<f64>() > inst.k as f64 {
                continue;
            }
            heap.push(Node {
                bound,
                lo,
                hi,
                warm: Some(warm.clone()),
                seq,
            });
            seq += 1;
        }
    }

    let open = heap.iter().map(|nd| nd.bound).fold(f64::INFINITY, f64::min);
    report.bound = inc.value.min(closed_bound).min(open);
    report.objective = inc.value;
    report.z = inc.support.indicator();
    report.x = inc.x;
    report.rounds = report.nodes;
    report.status = if limited {
        Status::TimeLimit
    } else {
        Status::Optimal
    };
    report.time_s = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example1_instance;
    use crate::instances::random::random_instance;
    use crate::models::exact_enumerate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn example_solves_to_optimality() {
        let r = branch_and_bound(&example1_instance(), &BnbOptions::default()).unwrap();
        assert_eq!(r.status, Status::Optimal);
        assert!((r.objective + 9.2).abs() < 1e-9);
        let k2 = Instance {
            k: 2,
            ..example1_instance()
        };
        let r = branch_and_bound(&k2, &BnbOptions::default()).unwrap();
        assert!((r.objective + 0.8).abs() < 1e-9);
        assert_eq!(r.z, vec![1.0, 0.0, 1.0]);
    }

    #[test]
    fn matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in [3, 8, 8, 8] {
            let inst = random_instance(8, k, &mut rng);
            let e = exact_enumerate(&inst).unwrap();
            let r = branch_and_bound(&inst, &BnbOptions::default()).unwrap();
            assert_eq!(r.status, Status::Optimal);
            assert!((r.objective - e.objective).abs() <= 1e-6 * e.objective.abs().max(1.0));
            assert!(r.bound <= e.objective + 1e-6 * e.objective.abs().max(1.0));
        }
    }

    #[test]
    fn node_limit_reports_time_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let inst = random_instance(10, 4, &mut rng);
        let opts = BnbOptions {
            node_limit: 1,
            ..BnbOptions::default()
        };
        let r = branch_and_bound(&inst, &opts).unwrap();
        let e = exact_enumerate(&inst).unwrap();
        assert!(r.nodes <= 1);
        assert!(r.bound <= e.objective + 1e-6 * e.objective.abs().max(1.0));
        assert!(r.objective >= e.objective - 1e-9);
    }
}
