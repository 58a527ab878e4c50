//! Problem files: the serialized [`ProblemSpec`], its validation and the
//! runtime [`Problem`] built from it.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constants::critical_surrogate;
use crate::discretization::{build_hierarchy, DomainMesh, SpaceHierarchy};
use crate::intrinsic::IntrinsicOperator;
use crate::operators::{ConvectionKind, ConvectionTerm, ExactSolution, GrowthEnvelope, SourceTerm};
use crate::scalar::{lit, Real};

/// Stable machine-readable error codes of [`ConfigError`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ConfigCode {
    MalformedJson,
    UnknownCatalogId,
    InvalidField,
    ExponentOrder,
    AlphaRange,
    BetaRange,
    RRange,
    CoefficientRange,
    Levels,
    QuadOrder,
    Mesh,
    Domain,
    Operator,
    InitialGuess,
    Constants,
    Io,
}

impl ConfigCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConfigCode::MalformedJson => "MALFORMED_JSON",
            ConfigCode::UnknownCatalogId => "UNKNOWN_CATALOG_ID",
            ConfigCode::InvalidField => "INVALID_FIELD",
            ConfigCode::ExponentOrder => "EXPONENT_ORDER",
            ConfigCode::AlphaRange => "ALPHA_RANGE",
            ConfigCode::BetaRange => "BETA_RANGE",
            ConfigCode::RRange => "R_RANGE",
            ConfigCode::CoefficientRange => "COEFFICIENT_RANGE",
            ConfigCode::Levels => "LEVELS",
            ConfigCode::QuadOrder => "QUAD_ORDER",
            ConfigCode::Mesh => "MESH",
            ConfigCode::Domain => "DOMAIN",
            ConfigCode::Operator => "OPERATOR",
            ConfigCode::InitialGuess => "INITIAL_GUESS",
            ConfigCode::Constants => "CONSTANTS",
            ConfigCode::Io => "IO",
        }
    }
}

impl std::fmt::Display for ConfigCode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ConfigError {
    pub code: ConfigCode,
    pub message: String,
}

impl ConfigError {
    pub fn new(code: ConfigCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn zero<T: Real>() -> T {
    T::zero()
}

fn one<T: Real>() -> T {
    T::one()
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", bound = "T: Real")]
pub enum DomainSpec<T> {
    /// `(a, b)` split into `elements` equal pieces on the coarsest level.
    Interval {
        #[serde(default = "zero")]
        a: T,
        #[serde(default = "one")]
        b: T,
        #[serde(default = "one_usize")]
        elements: usize,
    },
    Mesh {
        mesh: DomainMesh<T>,
    },
    /// Mesh JSON on disk; relative paths resolve against the problem file.
    MeshFile {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisPolicy {
    /// Do not solve when an applicable smallness condition fails.
    #[default]
    Refuse,
    Warn,
}

/// Where Newton starts on each level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialGuess {
    Zero,
    /// Prolongated solution of the previous level.
    #[default]
    WarmStart,
    /// Interpolant of the closed-form solution (manufactured problems).
    Manufactured,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Real")]
pub struct SolverOptions<T> {
    /// Residual sup-norm tolerance; `1e-10` in 1D and `1e-8` in 2D when absent,
    /// but never below `1000·ε` of the scalar type.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<T>,
    pub max_newton: usize,
    pub max_depth: usize,
    pub eps_reg: T,
    pub initial_guess: InitialGuess,
    pub sphere_samples: usize,
    pub test_set_size: usize,
    pub max_outer: usize,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            tol: None,
            max_newton: 100,
            max_depth: 20,
            eps_reg: T::zero(),
            initial_guess: InitialGuess::WarmStart,
            sphere_samples: 100,
            test_set_size: 16,
            max_outer: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, bound = "T: Real")]
pub struct ConstantsOptions<T> {
    pub safety: T,
    pub starts: usize,
    pub iters: usize,
    pub tol: T,
    /// Critical surrogate used when `p ≥ N`; `2p` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_hat: Option<T>,
}

impl<T: Real> Default for ConstantsOptions<T> {
    fn default() -> Self {
        Self {
            safety: lit(1.1),
            starts: 8,
            iters: 400,
            tol: lit(1e-10),
            p_hat: None,
        }
    }
}

fn default_levels() -> usize {
    6
}

fn default_quad_order() -> usize {
    4
}

fn default_f<T>() -> ConvectionKind<T> {
    ConvectionKind::Zero
}

fn default_t<T>() -> IntrinsicOperator<T> {
    IntrinsicOperator::Identity
}

/// One problem instance as read from a JSON file. After [`parse_config`]
/// every default is explicit, so emitting and re-parsing gives the same
/// value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "T: Real")]
pub struct ProblemSpec<T> {
    pub domain: DomainSpec<T>,
    pub p: T,
    pub q: T,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_quad_order")]
    pub quad_order: usize,
    #[serde(default = "default_f")]
    pub f: ConvectionKind<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<GrowthEnvelope<T>>,
    #[serde(rename = "T", default = "default_t")]
    pub t: IntrinsicOperator<T>,
    #[serde(default)]
    pub hypothesis_policy: HypothesisPolicy,
    #[serde(default)]
    pub solver: SolverOptions<T>,
    #[serde(default)]
    pub constants: ConstantsOptions<T>,
    #[serde(default)]
    pub seed: u64,
}

fn json_error(e: serde_json::Error) -> ConfigError {
    use serde_json::error::Category;
    let msg = e.to_string();
    let code = match e.classify() {
        Category::Syntax | Category::Eof | Category::Io => ConfigCode::MalformedJson,
        Category::Data if msg.contains("unknown variant") => ConfigCode::UnknownCatalogId,
        Category::Data => ConfigCode::InvalidField,
    };
    ConfigError::new(code, msg)
}

/// Reads, fills and validates a problem file.
pub fn parse_config<T: Real>(path: impl AsRef<Path>) -> Result<ProblemSpec<T>, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(ConfigCode::Io, format!("{}: {e}", path.display())))?;
    parse_str(&text, path.parent())
}

/// [`parse_config`] on an in-memory document; `base` anchors relative
/// mesh paths.
pub fn parse_str<T: Real>(text: &str, base: Option<&Path>) -> Result<ProblemSpec<T>, ConfigError> {
    let mut spec: ProblemSpec<T> = serde_json::from_str(text).map_err(json_error)?;
    if let (DomainSpec::MeshFile { path }, Some(base)) = (&mut spec.domain, base) {
        if path.is_relative() && !base.as_os_str().is_empty() {
            *path = base.join(&*path);
        }
    }
    spec.fill_defaults()?;
    spec.validate()?;
    Ok(spec)
}

impl<T: Real> ProblemSpec<T> {
    /// Canonical JSON form.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem spec serializes")
    }

    pub fn mesh(&self) -> Result<DomainMesh<T>, ConfigError> {
        let mesh = match &self.domain {
            DomainSpec::Interval { a, b, elements } => DomainMesh::interval(*a, *b, *elements),
            DomainSpec::Mesh { mesh } => Ok(mesh.clone()),
            DomainSpec::MeshFile { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    ConfigError::new(ConfigCode::Io, format!("{}: {e}", path.display()))
                })?;
                DomainMesh::from_json(&text)
            }
        };
        let mesh = mesh.map_err(|e| ConfigError::new(ConfigCode::Mesh, e.to_string()))?;
        mesh.validate()
            .map_err(|e| ConfigError::new(ConfigCode::Mesh, e.to_string()))?;
        Ok(mesh)
    }

    pub fn dim(&self) -> Result<usize, ConfigError> {
        Ok(self.mesh()?.dimension())
    }

    pub fn p_hat(&self) -> Result<T, ConfigError> {
        Ok(critical_surrogate(
            self.p,
            self.dim()?,
            self.constants.p_hat,
        ))
    }

    fn check_exponents(&self) -> Result<(), ConfigError> {
        let (p, q) = (self.p, self.q);
        if !(p.is_finite() && T::one() < q && q < p) {
            return Err(ConfigError::new(
                ConfigCode::ExponentOrder,
                format!("exponents must satisfy 1 < q < p < inf, got p = {p}, q = {q}"),
            ));
        }
        Ok(())
    }

    fn fill_defaults(&mut self) -> Result<(), ConfigError> {
        self.check_exponents()?;
        let dim = self.dim()?;
        if self.solver.tol.is_none() {
            let base = lit::<T>(if dim == 1 { 1e-10 } else { 1e-8 });
            self.solver.tol = Some(base.max(lit::<T>(1e3) * T::epsilon()));
        }
        if self.envelope.is_none() {
            let p_hat = self.p_hat()?;
            self.envelope = Some(self.f.default_envelope(self.p, p_hat));
        }
        Ok(())
    }

    /// All range checks of a problem file; `Ok` means [`Problem::new`]
    /// will succeed.
    pub fn validate(&self) -> Result<(), ConfigError> {
        use ConfigCode as C;
        self.check_exponents()?;
        if self.levels == 0 {
            return Err(ConfigError::new(C::Levels, "levels must be at least 1"));
        }
        let mesh = self.mesh()?;
        let dim = mesh.dimension();
        let max_quad = if dim == 1 { 20 } else { 5 };
        if self.quad_order == 0 || self.quad_order > max_quad {
            return Err(ConfigError::new(
                C::QuadOrder,
                format!(
                    "quad_order must lie in [1, {max_quad}] for dimension {dim}, got {}",
                    self.quad_order
                ),
            ));
        }
        self.t
            .validate(dim)
            .map_err(|m| ConfigError::new(C::Operator, m))?;
        let p_hat = self.p_hat()?;
        if !(p_hat > self.p) {
            return Err(ConfigError::new(
                C::Constants,
                format!(
                    "critical surrogate p_hat = {p_hat} must exceed p = {}",
                    self.p
                ),
            ));
        }
        if let Some(env) = &self.envelope {
            env.check_ranges(self.p, p_hat).map_err(|v| {
                let code = match v.parameter {
                    "alpha" => C::AlphaRange,
                    "beta" => C::BetaRange,
                    "r" => C::RRange,
                    _ => C::CoefficientRange,
                };
                ConfigError::new(code, v.to_string())
            })?;
        }
        let manufactured = matches!(
            self.f,
            ConvectionKind::ManufacturedP3Q2 | ConvectionKind::ManufacturedQuadratic { .. }
        );
        if manufactured {
            let unit = match &mesh {
                DomainMesh::Interval { nodes } => {
                    nodes.first() == Some(&T::zero()) && nodes.last() == Some(&T::one())
                }
                DomainMesh::Triangulation { .. } => false,
            };
            if !unit {
                return Err(ConfigError::new(
                    C::Domain,
                    "manufactured problems live on the interval (0, 1)",
                ));
            }
            if let ConvectionKind::ManufacturedQuadratic { p, q } = self.f {
                if p != self.p || q != self.q {
                    return Err(ConfigError::new(
                        C::ExponentOrder,
                        format!("manufactured_quadratic built for p = {p}, q = {q} but the problem has p = {}, q = {}", self.p, self.q),
                    ));
                }
            }
            if matches!(self.f, ConvectionKind::ManufacturedP3Q2)
                && (self.p != lit(3.0) || self.q != lit(2.0))
            {
                return Err(ConfigError::new(
                    C::ExponentOrder,
                    "manufactured_p3q2 requires p = 3, q = 2",
                ));
            }
        }
        if self.solver.initial_guess == InitialGuess::Manufactured
            && !(manufactured && self.t == IntrinsicOperator::Identity)
        {
            return Err(ConfigError::new(
                C::InitialGuess,
                "initial_guess \"manufactured\" needs a manufactured f with the identity operator",
            ));
        }
        let s = &self.solver;
        if !(s.tol.is_none_or(|t| t > T::zero()) && s.eps_reg >= T::zero() && s.max_outer >= 1) {
            return Err(ConfigError::new(
                C::InvalidField,
                "solver: tol > 0, eps_reg >= 0 and max_outer >= 1 required",
            ));
        }
        let c = &self.constants;
        if !(c.safety >= T::one() && c.starts >= 1 && c.iters >= 1 && c.tol > T::zero()) {
            return Err(ConfigError::new(
                C::Constants,
                format!("constants: safety >= 1, starts >= 1, iters >= 1, tol > 0 required (safety = {})", c.safety),
            ));
        }
        Ok(())
    }
}

/// A validated problem ready to solve. The source term is a trait object
/// so that custom evaluators can replace the catalog entry.
#[derive(Clone)]
pub struct Problem<T: Real> {
    pub spec: ProblemSpec<T>,
    pub mesh: DomainMesh<T>,
    pub dim: usize,
    pub p_hat: T,
    pub source: Arc<dyn SourceTerm<T>>,
    pub exact: Option<ExactSolution>,
}

impl<T: Real> std::fmt::Debug for Problem<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Problem")
            .field("spec", &self.spec)
            .field("dim", &self.dim)
            .field("p_hat", &self.p_hat)
            .finish_non_exhaustive()
    }
}

impl<T: Real + 'static> Problem<T> {
    pub fn new(mut spec: ProblemSpec<T>) -> Result<Self, ConfigError> {
        spec.fill_defaults()?;
        spec.validate()?;
        let mesh = spec.mesh()?;
        let dim = mesh.dimension();
        let p_hat = spec.p_hat()?;
        let term = ConvectionTerm::new(spec.f.clone(), spec.envelope.clone(), spec.p, p_hat);
        let exact = term.exact_solution();
        Ok(Self {
            spec,
            mesh,
            dim,
            p_hat,
            source: Arc::new(term),
            exact,
        })
    }

    /// Replaces the catalog convection term; the exact solution is dropped.
    pub fn with_source(mut self, source: Arc<dyn SourceTerm<T>>) -> Self {
        self.source = source;
        self.exact = None;
        self
    }
}

impl<T: Real> Problem<T> {
    pub fn p(&self) -> T {
        self.spec.p
    }

    pub fn q(&self) -> T {
        self.spec.q
    }

    pub fn envelope(&self) -> &GrowthEnvelope<T> {
        self.source.envelope()
    }

    pub fn operator(&self) -> &IntrinsicOperator<T> {
        &self.spec.t
    }

    pub fn tol(&self) -> T {
        self.spec
            .solver
            .tol
            .unwrap_or_else(|| lit(if self.dim == 1 { 1e-10 } else { 1e-8 }))
    }

    pub fn hierarchy(&self) -> crate::error::Result<SpaceHierarchy<T>> {
        build_hierarchy(&self.mesh, self.spec.levels, self.spec.quad_order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"domain":{"kind":"interval"},"p":3,"q":2}"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let s: ProblemSpec<f64> = parse_str(MINIMAL, None).unwrap();
        assert_eq!(s.levels, 6);
        assert_eq!(s.f, ConvectionKind::Zero);
        assert_eq!(s.t, IntrinsicOperator::Identity);
        assert_eq!(s.solver.tol, Some(1e-10));
        assert_eq!(s.hypothesis_policy, HypothesisPolicy::Refuse);
        let env = s.envelope.as_ref().unwrap();
        assert_eq!((env.a1, env.alpha, env.r), (0.0, 2.0, 2.0));
        let again: ProblemSpec<f64> = parse_str(&s.to_json(), None).unwrap();
        assert_eq!(again, s);
    }

    fn code(text: &str) -> ConfigCode {
        parse_str::<f64>(text, None).unwrap_err().code
    }

    #[test]
    fn error_codes() {
        assert_eq!(
            code(r#"{"domain":{"kind":"interval"},"p":3,"q":3}"#),
            ConfigCode::ExponentOrder
        );
        assert_eq!(
            code(r#"{"domain":{"kind":"interval"},"p":3,"q":1}"#),
            ConfigCode::ExponentOrder
        );
        assert_eq!(
            code(r#"{"domain":{"kind":"interval"},"p":3,"q":2"#),
            ConfigCode::MalformedJson
        );
        assert_eq!(
            code(r#"{"domain":{"kind":"interval"},"p":3,"q":2,"f":{"kind":"nope"}}"#),
            ConfigCode::UnknownCatalogId
        );
        assert_eq!(
            code(r#"{"domain":{"kind":"interval"},"p":3,"q":2,"T":{"kind":"mystery"}}"#),
            ConfigCode::UnknownCatalogId
        );
        assert_eq!(
            code(r#"{"domain":{"kind":"interval"},"p":3,"q":2,"levels":0}"#),
            ConfigCode::Levels
        );
        assert_eq!(
            code(r#"{"domain":{"kind":"interval"},"p":3,"q":2,"bogus":1}"#),
            ConfigCode::InvalidField
        );
        assert_eq!(
            code(r#"{"domain":{"kind":"interval","elements":0},"p":3,"q":2}"#),
            ConfigCode::Mesh
        );
    }

    #[test]
    fn alpha_at_open_end_is_rejected() {
        // p = 3 in 1D: p_hat = 6, so alpha must stay below 5.
        let env = r#"{"a1":0.1,"a2":0,"alpha":5,"beta":1,"r":2,"sigma":{"kind":"zero"}}"#;
        let text = format!(r#"{{"domain":{{"kind":"interval"}},"p":3,"q":2,"envelope":{env}}}"#);
        let err = parse_str::<f64>(&text, None).unwrap_err();
        assert_eq!(err.code, ConfigCode::AlphaRange);
        assert!(err.message.contains("(0, p_hat - 1)"));
        let text = text.replace("\"alpha\":5", "\"alpha\":4.9");
        assert!(parse_str::<f64>(&text, None).is_ok());
    }

    #[test]
    fn manufactured_guess_needs_manufactured_f() {
        let text = r#"{"domain":{"kind":"interval"},"p":3,"q":2,"solver":{"initial_guess":"manufactured"}}"#;
        assert_eq!(code(text), ConfigCode::InitialGuess);
        let text = r#"{"domain":{"kind":"interval"},"p":3,"q":2,"f":{"kind":"manufactured_p3q2"},
                      "solver":{"initial_guess":"manufactured"}}"#;
        assert!(parse_str::<f64>(text, None).is_ok());
    }
}
