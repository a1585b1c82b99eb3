//! Sparse linear and mixed-integer linear programming.
//!
//! [`LpProblem`] holds a minimisation LP in column-major form. [`solve_lp`]
//! runs a bounded-variable revised simplex over it, and [`solve_milp`] adds
//! best-bound branch and bound for integer columns.

#![allow(clippy::needless_range_loop)]

pub mod branch_bound;
pub mod error;
pub mod feasibility;
pub mod lu;
pub mod mps;
pub mod problem;
pub mod simplex;

pub use branch_bound::{
    branch_select, relative_gap, solve_milp, solve_milp_with, Branching, Heuristic, MilpOptions,
    MilpResult, MilpStatus, MipProblem, NearestRounding, Progress, ThresholdRounding,
};
pub use error::{LpError, MpsError};
pub use feasibility::{check_feasibility, FeasibilityReport};
pub use mps::{read_mps, write_mps, MpsModel};
pub use problem::{LpBuilder, LpProblem, Sense};
pub use simplex::{
    solve_lp, solve_lp_with, Basis, LpSolution, LpStatus, SimplexOptions, VarStatus,
};
