//! Explicitly solvable systems of first-order difference equations
//!
//! ```text
//! z_n(s+1) = sum_{|m| = M} c_{n,m} z_1(s)^{m_1} ... z_N(s)^{m_N},   n = 1..N
//! ```
//!
//! whose coefficients, initial data and a parameter `Z` satisfy
//! `Z r_n = sum_m c_{n,m} prod_l r_l^{m_l}` with `r_n = z_n(0)/z_N(0)`. Such
//! systems evolve as
//!
//! ```text
//! z_n(s) = z_n(0) z_N(0)^(M^s - 1) Z^((M^s - 1)/(M - 1)).
//! ```
//!
//! The crate builds these instances, solves the constraints (linearly for
//! designated coefficients or `Z`, by Newton for `Z` and the ratios) and
//! checks the closed form against direct iteration, exactly over the Gaussian
//! rationals or in double precision.

pub mod constraints;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod io;
pub mod model;
pub mod scalar;

pub use constraints::{
    constraint_residuals, newton_jacobian, newton_residual, newton_solve, random_solvable_instance, ratios_from_init,
    solve_designated_coefficients, solve_z_pivot, Certificate, ConstructionMode, Designation, NewtonControls,
    NewtonOutcome, RatioVector, SolvableInstance, SolveSpec,
};
pub use dynamics::{
    closed_form_state, eval_rhs, geometric_exponent, iterate, iterate_with_budget, power_exponent, SizeBudget,
    Trajectory, Truncation, TruncationReason,
};
pub use error::{Error, Result};
pub use harness::{run_example, verify_instance, verify_instance_with_budget, Verdict, VerificationReport};
pub use model::{
    enumerate_multi_indices, monomial_eval, multi_index_count, HomogeneousSystem, MultiIndex, StateVector,
};
pub use scalar::{BigExponent, Regime, Scalar, ScalarError};
