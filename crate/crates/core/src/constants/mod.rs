//! Embedding constants, the critical-exponent surrogate, the smallness
//! conditions and the coercivity radius.

mod coercivity;
mod estimate;
mod hypotheses;

pub use coercivity::{coercivity_function, coercivity_radius};
pub use estimate::{
    critical_surrogate, estimate_embedding_constant, estimate_lambda1p, ConstantEntry,
    EmbeddingConstants, EstimatorOptions, LambdaEstimate, Provenance,
};
pub use hypotheses::{
    check_h2, check_t2, check_t3, required_exponents, Condition, HypothesisReport,
};
