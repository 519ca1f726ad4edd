//! Stieltjes classification and the sign-switching transform.
//!
//! Negating the variables in a set `I` maps `xᵀQx` to `x̄ᵀQ̄x̄` where `Q̄_ij = −Q_ij` whenever
//! exactly one of `i, j` lies in `I`. A matrix is Stieltjes-equivalent when some `I` makes
//! `Q̄` Stieltjes; finding `I` is a parity 2-coloring of the off-diagonal sign graph.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{SupportSet, SymMatrix};

/// Off-diagonal magnitude below which an entry imposes no sign constraint.
pub const SIGN_TOL: f64 = 1e-12;

/// Indices whose variables are negated.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchSet {
    flips: SupportSet,
}

impl SwitchSet {
    pub fn new(n: usize, flips: impl IntoIterator<Item = usize>) -> Result<Self> {
        Ok(SwitchSet {
            flips: SupportSet::new(n, flips)?,
        })
    }

    pub fn none(n: usize) -> Self {
        SwitchSet {
            flips: SupportSet::empty(n),
        }
    }

    pub fn n(&self) -> usize {
        self.flips.n()
    }

    pub fn flips(&self) -> &[usize] {
        self.flips.members()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.flips.contains(i)
    }

    fn sign(&self, i: usize) -> f64 {
        if self.contains(i) {
            -1.0
        } else {
            1.0
        }
    }
}

/// No switch exists; `cycle` is a closed walk whose sign constraints are inconsistent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchInfeasible {
    pub cycle: Vec<usize>,
}

impl std::fmt::Display for SwitchInfeasible {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "no Stieltjes switch exists; inconsistent cycle {:?}",
            self.cycle
        )
    }
}

impl std::error::Error for SwitchInfeasible {}

/// `Q ≻ 0` with nonpositive off-diagonal entries.
pub fn is_stieltjes(q: &SymMatrix) -> bool {
    let n = q.n();
    for i in 0..n {
        for j in (i + 1)..n {
            if q.get(i, j) > SIGN_TOL {
                return false;
            }
        }
    }
    let max_diag = q.diag().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if !(max_diag > 0.0) {
        return false;
    }
    match q.min_eigenvalue() {
        Ok(lmin) => lmin > 1e-10 * max_diag,
        Err(_) => false,
    }
}

pub(crate) fn require_stieltjes(q: &SymMatrix) -> Result<()> {
    if is_stieltjes(q) {
        Ok(())
    } else {
        Err(Error::NotStieltjes)
    }
}

/// Finds a sign switch making `q` Stieltjes.
///
/// Each connected component of the nonzero off-diagonal graph is colored independently;
/// of the two consistent colorings the one flipping fewer indices is kept, and on ties the
/// component's lowest index stays unflipped.
pub fn find_switch(q: &SymMatrix) -> std::result::Result<SwitchSet, SwitchInfeasible> {
    let n = q.n();
    // side[i] = Some(false) keeps x_i, Some(true) flips it
    let mut side: Vec<Option<bool>> = vec![None; n];
    let mut parent: Vec<usize> = (0..n).collect();
    let mut flips = Vec::new();

    for root in 0..n {
        if side[root].is_some() {
            continue;
        }
        side[root] = Some(false);
        let mut component = vec![root];
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for w in 0..n {
                if w == u {
                    continue;
                }
                let qv = q.get(u, w);
                if qv.abs() <= SIGN_TOL {
                    continue;
                }
                // positive entries need opposite sides, negative entries the same side
                let want = side[u].unwrap() ^ (qv > 0.0);
                match side[w] {
                    None => {
                        side[w] = Some(want);
                        parent[w] = u;
                        component.push(w);
                        queue.push_back(w);
                    }
                    Some(s) if s != want => {
                        return Err(SwitchInfeasible {
                            cycle: tree_cycle(&parent, u, w),
                        });
                    }
                    Some(_) => {}
                }
            }
        }
        let flipped: Vec<usize> = component
            .iter()
            .copied()
            .filter(|&i| side[i] == Some(true))
            .collect();
        if 2 * flipped.len() > component.len() {
            // the complement is smaller
            flips.extend(
                component
                    .iter()
                    .copied()
                    .filter(|&i| side[i] == Some(false)),
            );
        } else {
            // on ties the root (lowest index of the component) keeps its sign
            flips.extend(flipped);
        }
    }
    Ok(SwitchSet::new(n, flips).expect("indices are in range"))
}

/// Cycle closed by the non-tree edge `(u, w)` in the BFS forest given by `parent`.
fn tree_cycle(parent: &[usize], u: usize, w: usize) -> Vec<usize> {
    let path_to_root = |mut v: usize| {
        let mut p = vec![v];
        while parent[v] != v {
            v = parent[v];
            p.push(v);
        }
        p
    };
    let pu = path_to_root(u);
    let pw = path_to_root(w);
    let lca = *pu.iter().find(|v| pw.contains(v)).expect("same BFS tree");
    let mut cycle: Vec<usize> = pu.iter().copied().take_while(|&v| v != lca).collect();
    cycle.push(lca);
    let tail: Vec<usize> = pw.iter().copied().take_while(|&v| v != lca).collect();
    cycle.extend(tail.into_iter().rev());
    cycle
}

/// `Q̄_ij = −Q_ij` when exactly one of `i, j` is flipped.
pub fn apply_switch(q: &SymMatrix, switch: &SwitchSet) -> SymMatrix {
    assert_eq!(q.n(), switch.n());
    SymMatrix::from_fn(q.n(), |i, j| switch.sign(i) * switch.sign(j) * q.get(i, j))
}

/// Companion transform for vectors (`x`, or the linear coefficients `a`).
pub fn apply_switch_vec(x: &[f64], switch: &SwitchSet) -> Vec<f64> {
    assert_eq!(x.len(), switch.n());
    x.iter()
        .enumerate()
        .map(|(i, &v)| switch.sign(i) * v)
        .collect()
}

/// Checks that the sign constraints along `cycle` (a closed walk) are inconsistent.
pub fn cycle_is_inconsistent(q: &SymMatrix, cycle: &[usize]) -> bool {
    if cycle.len() < 3 {
        return false;
    }
    let mut positives = 0;
    for k in 0..cycle.len() {
        let (i, j) = (cycle[k], cycle[(k + 1) % cycle.len()]);
        let v = q.get(i, j);
        if v.abs() <= SIGN_TOL {
            return false;
        }
        if v > 0.0 {
            positives += 1;
        }
    }
    positives % 2 == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::example1_q;
    use crate::instances::random::{random_stieltjes, random_tridiagonal_spd};
    use crate::linalg::dot;
    use proptest::prelude::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn classification() {
        assert!(is_stieltjes(&example1_q()));
        assert!(is_stieltjes(&SymMatrix::identity(4)));
        let pos = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        assert!(!is_stieltjes(&pos));
        let indefinite = SymMatrix::from_rows(&[vec![1.0, -2.0], vec![-2.0, 1.0]]).unwrap();
        assert!(!is_stieltjes(&indefinite));
    }

    #[test]
    fn two_by_two_positive_flips_one_index() {
        let q = SymMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let s = find_switch(&q).unwrap();
        assert_eq!(s.flips().len(), 1);
        assert!(is_stieltjes(&apply_switch(&q, &s)));
        // ties keep the lowest index
        assert_eq!(s.flips(), &[1]);
    }

    #[test]
    fn already_stieltjes_needs_no_flip() {
        assert_eq!(find_switch(&example1_q()).unwrap(), SwitchSet::none(3));
    }

    #[test]
    fn tridiagonal_always_switchable() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..30 {
            let n = rng.random_range(2..9);
            let q = random_tridiagonal_spd(n, &mut rng);
            let s = find_switch(&q).unwrap();
            assert!(is_stieltjes(&apply_switch(&q, &s)));
        }
    }

    #[test]
    fn all_positive_three_cycle_is_infeasible() {
        let q = SymMatrix::from_rows(&[
            vec![2.0, 1.0, 1.0],
            vec![1.0, 2.0, 1.0],
            vec![1.0, 1.0, 2.0],
        ])
        .unwrap();
        // brute force over the 2³ sign patterns
        let brute = (0..8u64).any(|mask| {
            let s = SwitchSet::new(3, (0..3).filter(|i| mask >> i & 1 == 1)).unwrap();
            is_stieltjes(&apply_switch(&q, &s))
        });
        assert!(!brute);
        let err = find_switch(&q).unwrap_err();
        assert_eq!(err.cycle.len(), 3);
        assert!(cycle_is_inconsistent(&q, &err.cycle));
    }

    #[test]
    fn disconnected_components_switch_independently() {
        let q = SymMatrix::from_rows(&[
            vec![2.0, 0.5, 0.0, 0.0],
            vec![0.5, 2.0, 0.0, 0.0],
            vec![0.0, 0.0, 2.0, -0.5],
            vec![0.0, 0.0, -0.5, 2.0],
        ])
        .unwrap();
        assert_eq!(find_switch(&q).unwrap().flips(), &[1]);
    }

    #[test]
    fn trivial_switches_leave_matrix_unchanged() {
        let q = example1_q();
        assert_eq!(apply_switch(&q, &SwitchSet::none(3)), q);
        assert_eq!(apply_switch(&q, &SwitchSet::new(3, 0..3).unwrap()), q);
    }

    proptest! {
        #[test]
        fn switch_preserves_quadratic_form(seed in any::<u64>(), mask in 0u64..64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_stieltjes(6, &mut rng);
            let s = SwitchSet::new(6, (0..6).filter(|i| mask >> i & 1 == 1)).unwrap();
            let qbar = apply_switch(&q, &s);
            prop_assert_eq!(apply_switch(&qbar, &s), q.clone());
            for _ in 0..100 {
                let x: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
                let xbar = apply_switch_vec(&x, &s);
                prop_assert!((q.quad_form(&x) - qbar.quad_form(&xbar)).abs() < 1e-12);
            }
        }

        #[test]
        fn switch_round_trip(seed in any::<u64>(), mask in 0u64..256) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_stieltjes(8, &mut rng);
            let s = SwitchSet::new(8, (0..8).filter(|i| mask >> i & 1 == 1)).unwrap();
            let qbar = apply_switch(&q, &s);
            let back = find_switch(&qbar).unwrap();
            prop_assert!(is_stieltjes(&apply_switch(&qbar, &back)));
        }

        #[test]
        fn switched_points_stay_in_the_epigraph(seed in any::<u64>(), mask in 0u64..32) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = random_stieltjes(5, &mut rng);
            let s = SwitchSet::new(5, (0..5).filter(|i| mask >> i & 1 == 1)).unwrap();
            let qbar = apply_switch(&q, &s);
            let z: Vec<f64> = (0..5).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
            let x: Vec<f64> = z.iter().map(|&zi| zi * rng.random_range(-3.0..3.0)).collect();
            let t = q.quad_form(&x) + rng.random_range(0.0..1.0);
            let xbar = apply_switch_vec(&x, &s);
            prop_assert!(t >= qbar.quad_form(&xbar) - 1e-12);
            let comp: Vec<f64> = xbar.iter().zip(&z).map(|(xi, zi)| xi * (1.0 - zi)).collect();
            prop_assert_eq!(dot(&comp, &comp), 0.0);
        }
    }
}
