#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod constants;
pub mod discretization;
pub mod error;
pub mod intrinsic;
pub mod linalg;
pub mod operators;
pub mod problem;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use problem::{parse_config, ConfigCode, ConfigError, Problem, ProblemSpec};

/// Double-precision aliases of the generic types.
pub mod f64 {
    pub type ProblemSpec = crate::problem::ProblemSpec<f64>;
    pub type Problem = crate::problem::Problem<f64>;
    pub type SpaceHierarchy = crate::discretization::SpaceHierarchy<f64>;
    pub type FEFunction = crate::discretization::FEFunction<f64>;
    pub type DomainMesh = crate::discretization::DomainMesh<f64>;
    pub type SolveReport = crate::solver::SolveReport<f64>;
    pub type EmbeddingConstants = crate::constants::EmbeddingConstants<f64>;
}

/// Single-precision aliases of the generic types.
pub mod f32 {
    pub type ProblemSpec = crate::problem::ProblemSpec<f32>;
    pub type Problem = crate::problem::Problem<f32>;
    pub type SpaceHierarchy = crate::discretization::SpaceHierarchy<f32>;
    pub type FEFunction = crate::discretization::FEFunction<f32>;
    pub type SolveReport = crate::solver::SolveReport<f32>;
}
