//! Polymatroid inequalities for convex quadratic minimization with indicator variables when the
//! Hessian is a Stieltjes matrix.
//!
//! The problem family is
//!
//! ```text
//! min aᵀx + cᵀz + xᵀQx   s.t.  x_i (1 − z_i) = 0,  z ∈ {0,1}ⁿ,  Σ z ≤ k
//! ```
//!
//! with `Q` positive definite and `Q_ij ≤ 0` off the diagonal. The crate provides the set
//! functions `θ_ij(S) = (Q_S⁻¹)_ij`, their polymatroid inequalities and separation routine, a
//! first-order conic solver, the perspective and polymatroid relaxations, exact oracles, and a
//! generator for lattice denoising instances.

pub mod conic;
pub mod error;
pub mod fixtures;
pub mod instances;
pub mod linalg;
pub mod models;
pub mod polymatroid;
pub mod stieltjes;
pub mod submodular;
pub mod verify;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use linalg::{SupportSet, SymMatrix};
pub use models::{Instance, SolveReport, Status};
pub use polymatroid::PolymatroidCut;
