//! Models against the enumeration oracle through the public API.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stieltjes_cuts::conic::ConicSettings;
use stieltjes_cuts::fixtures::example1_instance;
use stieltjes_cuts::instances::random::random_instance;
use stieltjes_cuts::instances::{assemble, read_json, write_json, GridSpec};
use stieltjes_cuts::models::{
    branch_and_bound, cutting_plane_solve, exact_enumerate, pers_c_solve, BnbOptions,
};
use stieltjes_cuts::submodular::solve_exact_unconstrained;
use stieltjes_cuts::Status;

fn scale(v: f64) -> f64 {
    v.abs().max(1.0)
}

#[test]
fn example_one_agrees_across_models() {
    let inst = example1_instance();
    let exact = exact_enumerate(&inst).unwrap();
    assert!((exact.objective + 9.2).abs() < 1e-12);

    let sfm = solve_exact_unconstrained(&inst).unwrap();
    assert!((sfm.objective - exact.objective).abs() < 1e-9);

    let poly = cutting_plane_solve(&inst, 1e-6, 50).unwrap();
    assert!((poly.bound - exact.objective).abs() < 1e-4);

    let pers = pers_c_solve(&inst, &ConicSettings::default()).unwrap();
    assert!(pers.bound <= poly.bound + 1e-5);
}

#[test]
fn bounds_are_ordered_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..6 {
        let n = rng.random_range(4..=7);
        let inst = random_instance(n, n, &mut rng);
        let opt = exact_enumerate(&inst).unwrap().objective;

        let sfm = solve_exact_unconstrained(&inst).unwrap();
        assert!((sfm.objective - opt).abs() <= 1e-8 * scale(opt));

        let pers = pers_c_solve(&inst, &ConicSettings::default()).unwrap();
        let poly = cutting_plane_solve(&inst, 1e-4, 50).unwrap();
        let slack = 1e-4 * scale(opt);
        assert!(pers.bound <= opt + slack, "{} > {opt}", pers.bound);
        assert!(pers.bound <= poly.bound + slack);
        assert!((poly.bound - opt).abs() <= slack, "{} vs {opt}", poly.bound);
        assert!(poly.objective >= opt - 1e-9 * scale(opt));
    }
}

#[test]
fn branch_and_bound_matches_enumeration_with_cardinality() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..4 {
        let n = rng.random_range(4..=7);
        let k = rng.random_range(1..n);
        let inst = random_instance(n, k, &mut rng);
        let exact = exact_enumerate(&inst).unwrap();
        let bnb = branch_and_bound(&inst, &BnbOptions::default()).unwrap();
        assert_eq!(bnb.status, Status::Optimal);
        assert!(bnb.support().len() <= k);
        assert!((bnb.objective - exact.objective).abs() <= 1e-6 * scale(exact.objective));
    }
}

#[test]
fn generated_instances_round_trip() {
    let spec = GridSpec::penalized(4, 2.0, 3).unwrap();
    let (inst, _) = assemble(&spec).unwrap();
    let back = read_json(&write_json(&inst)).unwrap();
    assert_eq!(write_json(&back), write_json(&inst));
    assert_eq!(back.n(), 16);
}
