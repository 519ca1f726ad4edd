//! The three-dimensional worked example used throughout the tests and the CLI demos.
//!
//! `Q = D − eeᵀ` with `D = diag(3, 4, 3)`.

use crate::linalg::{SupportSet, SymMatrix};
use crate::models::Instance;

pub fn example1_q() -> SymMatrix {
    SymMatrix::from_rows(&[[2.0, -1.0, -1.0], [-1.0, 3.0, -1.0], [-1.0, -1.0, 2.0]])
        .expect("symmetric")
}

/// The eight extreme points `(e_S, pinv(Q, S))`, keyed by support, as exact fractions.
pub fn example1_points() -> Vec<(SupportSet, SymMatrix)> {
    let m = |rows: [[f64; 3]; 3]| SymMatrix::from_rows(&rows).expect("symmetric");
    let s = |idx: &[usize]| SupportSet::new(3, idx.iter().copied()).expect("in range");
    vec![
        (s(&[]), SymMatrix::zeros(3)),
        (s(&[0]), m([[0.5, 0., 0.], [0., 0., 0.], [0., 0., 0.]])),
        (s(&[1]), m([[0., 0., 0.], [0., 1. / 3., 0.], [0., 0., 0.]])),
        (s(&[2]), m([[0., 0., 0.], [0., 0., 0.], [0., 0., 0.5]])),
        (
            s(&[0, 1]),
            m([[3. / 5., 1. / 5., 0.], [1. / 5., 2. / 5., 0.], [0., 0., 0.]]),
        ),
        (
            s(&[1, 2]),
            m([[0., 0., 0.], [0., 2. / 5., 1. / 5.], [0., 1. / 5., 3. / 5.]]),
        ),
        (
            s(&[0, 2]),
            m([[2. / 3., 0., 1. / 3.], [0., 0., 0.], [1. / 3., 0., 2. / 3.]]),
        ),
        (
            s(&[0, 1, 2]),
            m([[5. / 3., 1., 4. / 3.], [1., 1., 1.], [4. / 3., 1., 5. / 3.]]),
        ),
    ]
}

/// Coefficient matrices of the polymatroid cut for the chain `0, 1, 2`.
pub fn example1_cut_matrices() -> [SymMatrix; 3] {
    let m = |rows: [[f64; 3]; 3]| SymMatrix::from_rows(&rows).expect("symmetric");
    [
        m([[0.5, 0., 0.], [0., 0., 0.], [0., 0., 0.]]),
        m([[0.1, 0.2, 0.], [0.2, 0.4, 0.], [0., 0., 0.]]),
        m([
            [16. / 15., 0.8, 4. / 3.],
            [0.8, 0.6, 1.],
            [4. / 3., 1., 5. / 3.],
        ]),
    ]
}

/// Example data `a = −2e`, `c = 0.6e`, no cardinality limit; optimum −9.2 at `S = [3]`.
pub fn example1_instance() -> Instance {
    Instance::new(example1_q(), vec![-2.0; 3], vec![0.6; 3], 0.0, 3, 10.0).expect("valid instance")
}
