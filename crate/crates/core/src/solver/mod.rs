//! Zero finding on each Galerkin level, the level sweep and the
//! strong-generalized-solution diagnostics.

mod brouwer;
mod diagnostics;
mod level;
mod report;
mod run;

pub use brouwer::{brouwer_zero, BrouwerFailure, BrouwerOptions, BrouwerSolution, ZeroProblem};
pub use diagnostics::{d1_diagnostics, lebesgue_error, test_set, w1p_error, D1Diagnostics, D1Row};
pub use level::{
    default_start, solve_level, sphere_certificate, LevelFailure, LevelSolve, LevelSystem,
    SphereCertificate,
};
pub use report::{LevelRow, RunStatus, SolveReport, CSV_COLUMNS};
pub use run::{
    analyze, compute_constants, run_hierarchy, run_with_analysis, Analysis, HierarchyRun,
};
