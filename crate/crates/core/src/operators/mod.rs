//! The competing operator `−Δₚ + Δ_q`, the convection right-hand side and
//! the growth envelope it must respect.

mod assembly;
mod convection;
mod envelope;

pub use assembly::{
    assemble_jacobian, assemble_residual, competing_pairing, growth_envelope_check, lemma_l1_bound,
    source_integral, EnvelopeCheck, ResidualVector, SourceCoupling,
};
pub use convection::{ConvectionKind, ConvectionTerm, ExactSolution, SourceTerm};
pub use envelope::{GrowthEnvelope, RangeViolation, Weight};
