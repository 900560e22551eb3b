//! Sparse support recovery for `y = A x + e` with `‖x‖₀ ≤ k`.
//!
//! The central solver is the support exploration algorithm ([`solvers::sea`]):
//! a dense exploration vector is driven by full gradients evaluated at
//! least-squares fits on its `k` largest entries, and the best fit visited is
//! returned. Around it sit the usual baselines (IHT, NIHT, HTP, OMP, OMPR,
//! exhaustive local search, random search), warm-start composition, a logistic
//! loss, recovery metrics, a theory module that certifies iteration bounds on a
//! concrete instance, and drivers for the phase-transition and deconvolution
//! benchmarks.

// `!(x < y)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod solvers;
pub mod theory;

pub use error::{Error, Result};
pub use linalg::DenseMatrix;
pub use model::{largest_k, Problem, SparseVector, Support};
pub use solvers::{run_solver, SolverConfig, SolverId, SolverResult, Trace};
