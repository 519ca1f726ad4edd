use rand::{Rng, RngExt};

use crate::linalg::SymMatrix;

pub use crate::fixtures::example1_q;

/// `BᵀB + 0.5 I` with `B` uniform in `[−1, 1]`.
pub fn random_spd(n: usize, rng: &mut impl Rng) -> SymMatrix {
    let b: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
    SymMatrix::from_fn(n, |i, j| {
        let s: f64 = (0..n).map(|k| b[k * n + i] * b[k * n + j]).sum();
        s + if i == j { 0.5 } else { 0.0 }
    })
}

pub fn random_symmetric(n: usize, rng: &mut impl Rng) -> SymMatrix {
    SymMatrix::from_fn(n, |_, _| rng.random_range(-2.0..2.0))
}
