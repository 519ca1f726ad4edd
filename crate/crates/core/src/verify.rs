//! Randomized property suites over random Stieltjes matrices.
//!
//! Each suite returns the largest violation seen and the first failing case. The suites are
//! deterministic given the seed.

use std::fmt;
use std::str::FromStr;

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::instances::random::{random_nonpositive, random_stieltjes};
use crate::linalg::{sub_pseudoinverse, SupportSet, SymMatrix};
use crate::polymatroid::{big_r, cut_for_order, enumerate_extreme_points, separate};
use crate::submodular::{sfm_bruteforce, SetObjective};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Suite {
    Supermodular,
    Validity,
    Hull,
    Identity,
    Nesting,
    All,
}

impl Suite {
    pub const EACH: [Suite; 5] = [
        Suite::Supermodular,
        Suite::Validity,
        Suite::Hull,
        Suite::Identity,
        Suite::Nesting,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Supermodular => "supermodular",
            Suite::Validity => "validity",
            Suite::Hull => "hull",
            Suite::Identity => "identity",
            Suite::Nesting => "nesting",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|suite| suite.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite `{s}`")))
    }
}

/// Deliberate defects used to check that the suites can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Flips the sign of every increment `ρ`.
    RhoSign,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyConfig {
    pub suite: Suite,
    /// Largest dimension drawn.
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub fault: Option<Fault>,
    /// Violations above this fail.
    pub tol: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            suite: Suite::All,
            n: 8,
            trials: 200,
            seed: 7,
            fault: None,
            tol: 1e-9,
        }
    }
}

/// First failing case of a suite.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Counterexample {
    pub suite: String,
    pub trial: usize,
    pub q: Vec<Vec<f64>>,
    pub detail: String,
    pub violation: f64,
}

impl Counterexample {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub checks: usize,
    pub max_violation: f64,
    pub counterexample: Option<Counterexample>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

struct Tally {
    suite: Suite,
    tol: f64,
    checks: usize,
    max_violation: f64,
    counterexample: Option<Counterexample>,
}

impl Tally {
    fn new(suite: Suite, tol: f64) -> Self {
        Tally {
            suite,
            tol,
            checks: 0,
            max_violation: 0.0,
            counterexample: None,
        }
    }

    fn record(
        &mut self,
        violation: f64,
        trial: usize,
        q: &SymMatrix,
        detail: impl FnOnce() -> String,
    ) {
        self.checks += 1;
        let violation = if violation.is_nan() {
            f64::INFINITY
        } else {
            violation
        };
        self.max_violation = self.max_violation.max(violation);
        if violation > self.tol && self.counterexample.is_none() {
            self.counterexample = Some(Counterexample {
                suite: self.suite.to_string(),
                trial,
                q: q.to_rows(),
                detail: detail(),
                violation,
            });
        }
    }

    fn finish(self) -> SuiteOutcome {
        SuiteOutcome {
            suite: self.suite,
            checks: self.checks,
            max_violation: self.max_violation,
            counterexample: self.counterexample,
        }
    }
}

/// Runs the selected suite (or all of them, in a fixed order).
pub fn run(cfg: &VerifyConfig) -> Result<Vec<SuiteOutcome>> {
    if cfg.n < 3 {
        return Err(Error::InvalidArgument(format!(
            "n must be at least 3, got {}",
            cfg.n
        )));
    }
    let suites: Vec<Suite> = match cfg.suite {
        Suite::All => Suite::EACH.to_vec(),
        s => vec![s],
    };
    suites.into_iter().map(|s| run_suite(s, cfg)).collect()
}

fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<SuiteOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (suite as u64).wrapping_mul(0x9e37_79b9));
    match suite {
        Suite::Supermodular => supermodular(cfg, &mut rng),
        Suite::Validity => validity(cfg, &mut rng),
        Suite::Hull => hull(cfg, &mut rng),
        Suite::Identity => identity(cfg, &mut rng),
        Suite::Nesting => nesting(cfg, &mut rng),
        Suite::All => unreachable!("expanded by run"),
    }
}

fn increment(q: &SymMatrix, k: usize, s: &SupportSet, fault: Option<Fault>) -> Result<SymMatrix> {
    let r = big_r(q, k, s)?;
    Ok(match fault {
        Some(Fault::RhoSign) => r.scaled(-1.0),
        None => r,
    })
}

/// `ρ(k; S) ≥ 0` and `ρ(k; S) ≤ ρ(k; T)` for all `S ⊆ T ⊆ N \ {k}`, entrywise.
fn supermodular(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<SuiteOutcome> {
    let mut tally = Tally::new(Suite::Supermodular, cfg.tol);
    for trial in 0..cfg.trials {
        let n = 3 + trial % (cfg.n - 2);
        let q = random_stieltjes(n, rng);
        let full = (1u64 << n) - 1;
        for k in 0..n {
            let bit = 1u64 << k;
            let rest = full & !bit;
            // increments for every S not containing k, indexed by mask
            let mut incs = vec![None; 1 << n];
            let mut s = rest;
            loop {
                incs[s as usize] = Some(increment(&q, k, &SupportSet::from_mask(n, s), cfg.fault)?);
                if s == 0 {
                    break;
                }
                s = (s - 1) & rest;
            }
            for t in 0..=full {
                if t & bit != 0 {
                    continue;
                }
                let rt = incs[t as usize].as_ref().expect("filled");
                let neg = rt.as_slice().iter().fold(0.0_f64, |m, v| m.max(-v));
                tally.record(neg, trial, &q, || {
                    format!("rho(k={k}; S={t:#b}) has a negative entry")
                });
                let mut s = t;
                loop {
                    if s != t {
                        let rs = incs[s as usize].as_ref().expect("filled");
                        let v = rs
                            .as_slice()
                            .iter()
                            .zip(rt.as_slice())
                            .fold(0.0_f64, |m, (a, b)| m.max(a - b));
                        tally.record(v, trial, &q, || {
                            format!("rho(k={k}; S={s:#b}) exceeds rho(k={k}; T={t:#b})")
                        });
                    }
                    if s == 0 {
                        break;
                    }
                    s = (s - 1) & t;
                }
            }
        }
    }
    Ok(tally.finish())
}

/// Every cut separated at a random point holds at every extreme point.
fn validity(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<SuiteOutcome> {
    let mut tally = Tally::new(Suite::Validity, cfg.tol);
    let trials = cfg.trials.div_ceil(2);
    for trial in 0..trials {
        let n = 3 + trial % (cfg.n - 2);
        let q = random_stieltjes(n, rng);
        let qinv = q.inverse()?;
        let points = enumerate_extreme_points(&q)?;
        for _ in 0..10 {
            let z: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let cut = separate(&q, &qinv, &z)?;
            for p in &points {
                let rhs = cut.rhs(&p.z);
                let v = rhs
                    .as_slice()
                    .iter()
                    .zip(p.w.as_slice())
                    .fold(0.0_f64, |m, (r, w)| m.max(w - r));
                tally.record(v, trial, &q, || {
                    format!("cut with order {:?} violated at z = {:?}", cut.perm, p.z)
                });
            }
        }
    }
    Ok(tally.finish())
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len())
        .rev()
        .find(|&j| p[j] > p[i - 1])
        .expect("exists");
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Minimum of `cᵀz + ⟨Σ, W⟩` over the `n!` cuts and `0 ≤ z ≤ 1`, as an LP.
pub fn hull_lp_minimum(q: &SymMatrix, sigma: &SymMatrix, c: &[f64]) -> Result<f64> {
    let n = q.n();
    let qinv = q.inverse()?;
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let z: Vec<_> = c.iter().map(|&ci| lp.add_var(ci, (0.0, 1.0))).collect();
    let mut w = vec![None; n * n];
    for i in 0..n {
        for j in i..n {
            let coef = if i == j { 1.0 } else { 2.0 } * sigma.get(i, j);
            w[i * n + j] = Some(lp.add_var(coef, (f64::NEG_INFINITY, f64::INFINITY)));
        }
    }
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let cut = cut_for_order(&qinv, &perm)?;
        for i in 0..n {
            for j in i..n {
                let mut dense = vec![0.0; n];
                for (p, v) in cut.row_coefficients(i, j) {
                    dense[p] += v;
                }
                let mut expr = vec![(w[i * n + j].expect("set"), 1.0)];
                expr.extend(
                    (0..n)
                        .filter(|&p| dense[p] != 0.0)
                        .map(|p| (z[p], -dense[p])),
                );
                lp.add_constraint(expr, ComparisonOp::Le, 0.0);
            }
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    lp.solve()
        .map(|s| s.objective())
        .map_err(|e| Error::Solver(format!("hull LP: {e}")))
}

fn hull(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<SuiteOutcome> {
    let mut tally = Tally::new(Suite::Hull, cfg.tol.max(1e-7));
    let max_n = cfg.n.min(5);
    let trials = cfg.trials.min(50);
    for trial in 0..trials {
        let n = 2 + trial % (max_n - 1);
        let q = random_stieltjes(n, rng);
        let sigma = random_nonpositive(n, rng);
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(-0.5..2.0)).collect();
        let lp = hull_lp_minimum(&q, &sigma, &c)?;
        let (_, best) = sfm_bruteforce(&SetObjective::new(q.clone(), sigma, c)?)?;
        let v = (lp - best).abs();
        tally.record(v, trial, &q, || {
            format!("LP minimum {lp} vs enumeration {best}")
        });
    }
    Ok(tally.finish())
}

fn random_subset(n: usize, rng: &mut impl Rng) -> SupportSet {
    SupportSet::from_mask(n, rng.random_range(0..1u64 << n))
}

/// `R(k; S)` from the bordered inverse equals `pinv(S ∪ k) − pinv(S)` from direct inverses.
fn identity(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<SuiteOutcome> {
    let mut tally = Tally::new(Suite::Identity, cfg.tol);
    for trial in 0..cfg.trials {
        let n = 3 + trial % (cfg.n - 2);
        let q = random_stieltjes(n, rng);
        let s = random_subset(n, rng);
        let Some(k) = (0..n).find(|i| !s.contains(*i)) else {
            continue;
        };
        let r = increment(&q, k, &s, cfg.fault)?;
        let direct = sub_pseudoinverse(&q, &s.with(k))?;
        let diff = direct.max_abs_diff(&(&sub_pseudoinverse(&q, &s)? + &r));
        let scale = direct.max_abs().max(1.0);
        tally.record(diff / scale, trial, &q, || {
            format!("bordered increment for k={k}, S={:?}", s.members())
        });
    }
    Ok(tally.finish())
}

/// `pinv(S) ≤ pinv(T)` for `S ⊆ T`, and `Q_S pinv(S)_S = I`.
fn nesting(cfg: &VerifyConfig, rng: &mut ChaCha8Rng) -> Result<SuiteOutcome> {
    let mut tally = Tally::new(Suite::Nesting, cfg.tol);
    for trial in 0..cfg.trials {
        let n = 3 + trial % (cfg.n - 2);
        let q = random_stieltjes(n, rng);
        let t = random_subset(n, rng);
        let s = SupportSet::new(
            n,
            t.members().iter().copied().filter(|_| rng.random::<bool>()),
        )?;
        let ps = sub_pseudoinverse(&q, &s)?;
        let pt = sub_pseudoinverse(&q, &t)?;
        let order = ps
            .as_slice()
            .iter()
            .zip(pt.as_slice())
            .fold(0.0_f64, |m, (a, b)| m.max(a - b));
        tally.record(order, trial, &q, || {
            format!(
                "pinv not monotone for S={:?} within T={:?}",
                s.members(),
                t.members()
            )
        });
        if t.is_empty() {
            continue;
        }
        let prod = q.principal(&t).to_dmatrix() * pt.principal(&t).to_dmatrix();
        let err = (0..t.len())
            .flat_map(|i| (0..t.len()).map(move |j| (i, j)))
            .map(|(i, j)| (prod[(i, j)] - if i == j { 1.0 } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        tally.record(err, trial, &q, || {
            format!("Q_T pinv(T) != I for T={:?}", t.members())
        });
    }
    Ok(tally.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(suite: Suite) -> VerifyConfig {
        VerifyConfig {
            suite,
            n: 6,
            trials: 30,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn suites_pass() {
        for out in run(&cfg(Suite::All)).unwrap() {
            assert!(out.passed(), "{}: {:?}", out.suite, out.counterexample);
            assert!(out.checks > 0);
        }
    }

    #[test]
    fn sign_fault_is_caught() {
        let mut c = cfg(Suite::Supermodular);
        c.fault = Some(Fault::RhoSign);
        let out = run(&c).unwrap().remove(0);
        let ce = out.counterexample.expect("fault detected");
        assert!(ce.to_json().contains("\"suite\": \"supermodular\""));
        c.suite = Suite::Identity;
        assert!(!run(&c).unwrap()[0].passed());
    }

    #[test]
    fn permutations_enumerated() {
        let mut p = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut p) {
            count += 1;
        }
        assert_eq!(count, 24);
        assert_eq!(p, vec![3, 2, 1, 0]);
    }

    #[test]
    fn hull_lp_on_example() {
        // Σ = −¼aaᵀ with a = −2e gives Σ = −1 everywhere
        let q = crate::fixtures::example1_q();
        let sigma = SymMatrix::from_fn(3, |_, _| -1.0);
        let v = hull_lp_minimum(&q, &sigma, &[0.6; 3]).unwrap();
        assert!((v + 9.2).abs() < 1e-9, "{v}");
    }

    #[test]
    fn suite_names_parse() {
        for s in Suite::EACH {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
        }
        assert!("hul".parse::<Suite>().is_err());
    }
}
