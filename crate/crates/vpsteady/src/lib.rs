//! Spherically symmetric self-gravitating steady states as fixed points of a
//! mass-preserving map.
//!
//! A polytropic ansatz turns a potential into a density, which is rescaled
//! back to unit mass and fed through the radial Poisson solver again. This
//! crate computes fixed points of that map by damped Picard iteration,
//! certifies every bound the map is known to satisfy on the admissible set
//! (monotone potential, `U >= -1/r`, a uniform margin below the cut-off
//! energy near the center, amplitude and Lp range windows), and
//! cross-validates converged profiles against an independent Lane-Emden
//! shooting solver.
//!
//! # Modules
//!
//! - [`radial`]: grid, quadrature, norms, projection onto the admissible set
//! - [`gravity`]: radial Poisson solver and potential certificates
//! - [`ansatz`]: the polytropic map, amplitude, and the composite operator T
//! - [`solver`]: damped Picard iteration with per-iterate diagnostics
//! - [`lane_emden`]: the independent shooting oracle and profile comparison
//! - [`sampling`]: seeded random members of the admissible set
//! - [`io`]: profile CSV / sweep CSV / JSON report formats
//! - [`cli`]: the `vpsteady` command line (solve, verify, oracle, sweep)

// Precondition guards are written `!(x > 0.0)` so that NaN is rejected too;
// the un-negated forms clippy prefers would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ansatz;
pub mod cli;
pub mod error;
pub mod gravity;
pub mod io;
pub mod lane_emden;
pub mod radial;
pub mod sampling;
pub mod solver;

pub use ansatz::{
    amplitude, amplitude_window, ansatz_density, apply_t, check_range_bound, compute_ck,
    report_exponent, AmplitudeBounds, PolytropeParams,
};
pub use error::{Error, Result};
pub use gravity::{
    center_bound, check_monotone_and_boundary, check_pointwise_lower_bound, potential,
    CenterBoundCertificate, RadialPotential,
};
pub use lane_emden::{compare, lane_emden_shoot, oracle_steady_state, OracleSolution};
pub use radial::{LpNorm, RadialDensity, RadialGrid};
pub use solver::{initial_guess, residual, solve, IterationReport, SolverConfig};
