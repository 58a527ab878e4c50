//! The finite-dimensional problem on one level `X_n` and its solve.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::{FEFunction, NodalField, QuadratureSamples, SpaceHierarchy};
use crate::error::Result;
use crate::linalg::{dot, sup_norm, SparseMatrix};
use crate::operators::{assemble_jacobian, assemble_residual, SourceCoupling};
use crate::problem::{InitialGuess, Problem};
use crate::scalar::{lit, Real};
use crate::solver::brouwer::{brouwer_zero, BrouwerOptions, ZeroProblem};

/// `c ↦ [⟨−Δₚu + Δ_q u, φᵢ⟩ − ∫ f(x, T(u), ∇T(u)) φᵢ]ᵢ` on one level, with
/// the ball measured in `‖∇·‖ₚ`. While an image is frozen, `T(u)` is
/// replaced by it.
pub struct LevelSystem<'a, T: Real> {
    problem: &'a Problem<T>,
    h: &'a SpaceHierarchy<T>,
    level: usize,
    lift: Option<NodalField<T>>,
    frozen: Option<QuadratureSamples<T>>,
}

impl<'a, T: Real> LevelSystem<'a, T> {
    pub fn new(problem: &'a Problem<T>, h: &'a SpaceHierarchy<T>, level: usize) -> Self {
        Self {
            problem,
            h,
            level,
            lift: problem.operator().lift_field(h, level),
            frozen: None,
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn lift(&self) -> Option<&NodalField<T>> {
        self.lift.as_ref()
    }

    pub fn function(&self, c: &[T]) -> FEFunction<T> {
        FEFunction {
            level: self.level,
            coeffs: c.to_vec(),
        }
    }

    pub fn freeze(&mut self, image: Option<QuadratureSamples<T>>) {
        self.frozen = image;
    }

    fn image(&self, u: &FEFunction<T>) -> Result<QuadratureSamples<T>> {
        match &self.frozen {
            Some(t) => Ok(t.clone()),
            None => self.problem.operator().apply(self.h, u),
        }
    }

    /// Residual with `T` applied to `c` itself, whatever is frozen.
    pub fn full_residual(&self, c: &[T]) -> Result<Vec<T>> {
        let u = self.function(c);
        let t = self.problem.operator().apply(self.h, &u)?;
        Ok(assemble_residual(
            self.h,
            &u,
            &t,
            &*self.problem.source,
            self.problem.p(),
            self.problem.q(),
            self.lift(),
        )?
        .values)
    }

    /// `⟨Aₙ(v), v⟩ = Σ cᵢ Rᵢ(c)`.
    pub fn pairing(&self, c: &[T]) -> Result<T> {
        Ok(dot(c, &self.full_residual(c)?))
    }
}

impl<T: Real> ZeroProblem<T> for LevelSystem<'_, T> {
    fn dim(&self) -> usize {
        self.h.level(self.level).num_dofs()
    }

    fn residual(&self, c: &[T]) -> Result<Vec<T>> {
        let u = self.function(c);
        let t = self.image(&u)?;
        Ok(assemble_residual(
            self.h,
            &u,
            &t,
            &*self.problem.source,
            self.problem.p(),
            self.problem.q(),
            self.lift(),
        )?
        .values)
    }

    fn jacobian(&self, c: &[T]) -> Result<SparseMatrix<T>> {
        let u = self.function(c);
        let t = self.image(&u)?;
        let coupling = if self.frozen.is_some() {
            SourceCoupling::Frozen
        } else {
            self.problem.operator().coupling()
        };
        assemble_jacobian(
            self.h,
            &u,
            &t,
            &*self.problem.source,
            self.problem.p(),
            self.problem.q(),
            self.problem.spec.solver.eps_reg,
            self.lift(),
            coupling,
        )
    }

    fn norm(&self, c: &[T]) -> T {
        self.h.nodal_grad_norm(
            self.level,
            &self.h.level(self.level).expand(c),
            self.problem.p(),
        )
    }

    fn anchor(&self) -> SparseMatrix<T> {
        self.h.stiffness(self.level)
    }
}

/// Sampled check of `⟨Aₙ(v), v⟩ ≥ 0` on the sphere `‖∇v‖ₚ = R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SphereCertificate<T> {
    pub radius: T,
    pub samples: usize,
    pub min_pairing: T,
    pub negative: usize,
}

impl<T: Real> SphereCertificate<T> {
    pub fn holds(&self) -> bool {
        self.negative == 0
    }
}

/// Pairs `Aₙ(v)` with `v` at `samples` random points of the sphere of
/// radius `radius`. Even samples are raw uniform coefficient vectors, odd
/// ones are smoothed by the inverse stiffness matrix.
pub fn sphere_certificate<T: Real>(
    problem: &Problem<T>,
    h: &SpaceHierarchy<T>,
    level: usize,
    radius: T,
    samples: usize,
    seed: u64,
) -> Result<Option<SphereCertificate<T>>> {
    let sys = LevelSystem::new(problem, h, level);
    let n = sys.dim();
    if n == 0 || samples == 0 || !radius.is_finite() {
        return Ok(None);
    }
    let smoother = h.stiffness(level).factor()?;
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ (level as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let mut out = SphereCertificate {
        radius,
        samples: 0,
        min_pairing: T::infinity(),
        negative: 0,
    };
    for k in 0..samples {
        let mut c: Vec<T> = (0..n).map(|_| lit(rng.gen_range(-1.0..1.0))).collect();
        if k % 2 == 1 {
            c = smoother.solve(&c);
        }
        let norm = sys.norm(&c);
        if !(norm > T::zero()) {
            continue;
        }
        let scale = radius / norm;
        for x in c.iter_mut() {
            *x = *x * scale;
        }
        let pairing = sys.pairing(&c)?;
        out.samples += 1;
        if pairing < out.min_pairing {
            out.min_pairing = pairing;
        }
        if pairing < T::zero() {
            out.negative += 1;
        }
    }
    Ok(Some(out))
}

/// Outcome of one accepted level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LevelSolve<T> {
    pub level: usize,
    pub solution: FEFunction<T>,
    pub residual_sup: T,
    pub grad_norm_p: T,
    pub newton_iters: usize,
    pub continuation_steps: usize,
    /// Fixed-point sweeps in `T`; 1 for local operators.
    pub outer_iters: usize,
    /// Ball radius; `None` when the ball is unbounded.
    pub radius: Option<T>,
    pub sphere: Option<SphereCertificate<T>>,
    /// `⟨Aₙ(uₙ), uₙ⟩`, zero up to the residual tolerance.
    pub energy_defect: T,
    pub warnings: Vec<String>,
}

/// A level on which no zero was found.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelFailure<T> {
    pub level: usize,
    pub message: String,
    pub best: FEFunction<T>,
    pub best_residual: T,
    pub newton_iters: usize,
    pub warnings: Vec<String>,
}

impl<T: Real> std::fmt::Display for LevelFailure<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "level {}: {}", self.level + 1, self.message)
    }
}

impl<T: Real> std::error::Error for LevelFailure<T> {}

impl<T: Real> From<LevelFailure<T>> for crate::error::Error {
    fn from(f: LevelFailure<T>) -> Self {
        crate::error::Error::Solver(f.to_string())
    }
}

/// Starting coefficients when no warm start is supplied.
pub fn default_start<T: Real>(
    problem: &Problem<T>,
    h: &SpaceHierarchy<T>,
    level: usize,
) -> FEFunction<T> {
    match (problem.spec.solver.initial_guess, problem.exact) {
        (InitialGuess::Manufactured, Some(exact)) => h.interpolate(level, |x| exact.value(x)),
        _ => h.zero(level),
    }
}

fn project<T: Real>(sys: &LevelSystem<'_, T>, radius: T, c: &mut [T]) {
    if radius.is_finite() {
        let n = sys.norm(c);
        if n > radius {
            let s = radius / n;
            c.iter_mut().for_each(|x| *x = *x * s);
        }
    }
}

/// Finds `uₙ ∈ Xₙ` with `‖∇uₙ‖ₚ ≤ R` solving the Galerkin equations to the
/// problem tolerance. `start` overrides the configured initial guess.
/// Nonlocal operators are handled by a fixed point in `T`: each sweep
/// solves with `T(u)` frozen, and the update is halved once the full
/// residual stops decreasing.
pub fn solve_level<T: Real>(
    problem: &Problem<T>,
    h: &SpaceHierarchy<T>,
    level: usize,
    radius: Option<T>,
    start: Option<&FEFunction<T>>,
) -> std::result::Result<LevelSolve<T>, LevelFailure<T>> {
    let opts = &problem.spec.solver;
    let r = radius.unwrap_or_else(T::infinity);
    let tol = problem.tol();
    let mut warnings = Vec::new();
    let fail = |message: String,
                best: Vec<T>,
                best_residual: T,
                newton_iters: usize,
                warnings: Vec<String>| LevelFailure {
        level,
        message,
        best: FEFunction {
            level,
            coeffs: best,
        },
        best_residual,
        newton_iters,
        warnings,
    };

    let sphere =
        match sphere_certificate(problem, h, level, r, opts.sphere_samples, problem.spec.seed) {
            Ok(s) => s,
            Err(e) => {
                return Err(fail(
                    e.to_string(),
                    vec![T::zero(); h.level(level).num_dofs()],
                    T::infinity(),
                    0,
                    warnings,
                ))
            }
        };
    if let Some(s) = sphere.as_ref().filter(|s| !s.holds()) {
        warnings.push(format!(
            "sphere certificate: {} of {} samples with negative pairing (min {}) at R = {}",
            s.negative, s.samples, s.min_pairing, s.radius
        ));
    }

    let mut sys = LevelSystem::new(problem, h, level);
    let mut v = match start {
        Some(u) => u.coeffs.clone(),
        None => default_start(problem, h, level).coeffs,
    };
    if v.len() != sys.dim() {
        return Err(fail(
            format!(
                "start has {} coefficients, level has {}",
                v.len(),
                sys.dim()
            ),
            vec![T::zero(); sys.dim()],
            T::infinity(),
            0,
            warnings,
        ));
    }
    project(&sys, r, &mut v);
    let bopts = BrouwerOptions {
        tol,
        max_newton: opts.max_newton,
        max_depth: opts.max_depth,
        ..BrouwerOptions::default()
    };

    let (mut newton_iters, mut continuation_steps, mut outer_iters) = (0, 0, 0);
    let residual_sup;
    if problem.operator().coupling() == SourceCoupling::Local {
        match brouwer_zero(&sys, r, Some(&v), &bopts) {
            Ok(sol) => {
                v = sol.v;
                residual_sup = sol.residual_sup;
                newton_iters = sol.newton_iters;
                continuation_steps = sol.continuation_steps;
                outer_iters = 1;
            }
            Err(f) => {
                return Err(fail(
                    f.message,
                    f.best,
                    f.best_residual,
                    f.newton_iters,
                    warnings,
                ))
            }
        }
    } else {
        let mut theta = T::one();
        let mut prev = T::infinity();
        let mut reached = None;
        while outer_iters < opts.max_outer {
            outer_iters += 1;
            let image = problem
                .operator()
                .apply(h, &sys.function(&v))
                .map_err(|e| {
                    fail(
                        e.to_string(),
                        v.clone(),
                        prev,
                        newton_iters,
                        warnings.clone(),
                    )
                })?;
            sys.freeze(Some(image));
            let sol = brouwer_zero(&sys, r, Some(&v), &bopts).map_err(|f| {
                fail(
                    format!("outer sweep {outer_iters}: {}", f.message),
                    v.clone(),
                    prev,
                    newton_iters + f.newton_iters,
                    warnings.clone(),
                )
            })?;
            newton_iters += sol.newton_iters;
            continuation_steps += sol.continuation_steps;
            let cand: Vec<T> = v
                .iter()
                .zip(&sol.v)
                .map(|(&a, &b)| a + theta * (b - a))
                .collect();
            let res = sys
                .full_residual(&cand)
                .map(|r| sup_norm(&r))
                .map_err(|e| {
                    fail(
                        e.to_string(),
                        v.clone(),
                        prev,
                        newton_iters,
                        warnings.clone(),
                    )
                })?;
            v = cand;
            if res <= tol {
                reached = Some(res);
                break;
            }
            if res >= prev && theta == T::one() {
                theta = lit(0.5);
            }
            prev = prev.min(res);
        }
        sys.freeze(None);
        match reached {
            Some(res) => residual_sup = res,
            None => {
                return Err(fail(
                    format!(
                        "fixed point in T did not converge in {} sweeps",
                        opts.max_outer
                    ),
                    v,
                    prev,
                    newton_iters,
                    warnings,
                ))
            }
        }
    }

    let energy_defect = match sys.pairing(&v) {
        Ok(e) => e,
        Err(e) => return Err(fail(e.to_string(), v, residual_sup, newton_iters, warnings)),
    };
    let solution = sys.function(&v);
    Ok(LevelSolve {
        level,
        grad_norm_p: h.grad_norm_p(&solution, problem.p()),
        solution,
        residual_sup,
        newton_iters,
        continuation_steps,
        outer_iters,
        radius,
        sphere,
        energy_defect,
        warnings,
    })
}
