//! Detector tomography: invert the Born-rule relation `P = F Pi^T` for a
//! diagonal POVM.
//!
//! The reconstruction minimizes
//!
//! ```text
//! ||P - F Pi^T||_F^2 + gamma * sum_n sum_i (theta_n(i+1) - theta_n(i))^2
//! ```
//!
//! over POVMs whose photon-number columns lie on the probability simplex.
//! The solver is a monotone accelerated projected gradient method with
//! backtracking and function-value restarts; every iterate is feasible
//! because each column is projected exactly.
//!
//! Steps are scaled per photon number by the absolute row sums of the
//! Hessian, which bounds the scaled curvature by one. Weakly
//! probed columns, which are held only by the smoothing term, would otherwise
//! take millions of iterations to settle. The scale is the same for every
//! outcome of a column, so the scaled step still ends in a plain Euclidean
//! simplex projection.

mod simplex;
mod solver;

pub use simplex::{simplex_project, simplex_project_in_place};
pub use solver::{reconstruct, reconstruct_with_matrix, residual, ReconstructionConfig, ReconstructionResult};
