//! Dantzig selector and basis pursuit de-noising solvers.
//!
//! Dense matrices are row-major ([`kernels::DenseMatrix`]). Problems come from
//! [`model::generate_instance`] or JSON files, are turned into linear or
//! quadratic programs by [`formulations`], and are solved by the interior-point
//! ([`ipm`]), greedy active-set ([`greedy`]) or dual simplex ([`simplex`])
//! solvers. [`certify`] checks optimality independently and [`bench`] runs
//! whole experiment suites.

pub mod bench;
pub mod certify;
pub mod cli;
pub mod error;
pub mod formulations;
pub mod greedy;
pub mod ipm;
pub mod kernels;
pub mod model;
pub mod simplex;

pub use error::{Error, Result};
pub use model::{generate_instance, ProblemInstance, Solution, SolveStatus};
