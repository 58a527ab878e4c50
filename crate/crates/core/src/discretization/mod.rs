//! Meshes, nested P1 spaces forming a Galerkin basis of `W₀^{1,p}(Ω)`,
//! quadrature, norms and function algebra.

mod function;
mod hierarchy;
mod mesh;
mod quadrature;

pub(crate) use function::check_level;
pub use function::{FEFunction, NodalField, QuadratureSamples, SamplePoint};
pub use hierarchy::{build_hierarchy, Element, Level, Parent, SpaceHierarchy};
pub use mesh::DomainMesh;
pub use quadrature::{gauss_legendre_nodes, QuadratureRule};
