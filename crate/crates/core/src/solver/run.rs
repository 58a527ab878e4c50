//! Constants, hypothesis checks and the coercivity radius for a problem,
//! then the sweep over all levels.

use serde::{Deserialize, Serialize};

use crate::constants::{
    check_h2, check_t2, check_t3, coercivity_radius, estimate_embedding_constant,
    estimate_lambda1p, required_exponents, EmbeddingConstants, EstimatorOptions, HypothesisReport,
};
use crate::discretization::SpaceHierarchy;
use crate::error::Result;
use crate::intrinsic::{certificate, IntrinsicCertificate, IntrinsicOperator};
use crate::problem::{HypothesisPolicy, InitialGuess, Problem};
use crate::scalar::Real;
use crate::solver::diagnostics::{d1_diagnostics, w1p_error, D1Diagnostics};
use crate::solver::level::{solve_level, LevelFailure, LevelSolve};
use crate::solver::report::{LevelRow, RunStatus, SolveReport};

/// Estimates every `S_r` the checks read, and `λ₁,ₚ`, on `h`.
pub fn compute_constants<T: Real>(
    problem: &Problem<T>,
    h: &SpaceHierarchy<T>,
) -> Result<EmbeddingConstants<T>> {
    let (p, p_hat) = (problem.p(), problem.p_hat);
    let c = &problem.spec.constants;
    let env = problem.envelope();
    let nonlocal = !matches!(problem.operator(), IntrinsicOperator::Identity);
    let opts = EstimatorOptions {
        starts: c.starts,
        iters: c.iters,
        tol: c.tol,
        safety: c.safety,
        seed: problem.spec.seed,
    };
    let mut out = EmbeddingConstants::new(p, problem.dim, p_hat, c.safety);
    for r in required_exponents(p, p_hat, env.alpha, env.beta, env.r, nonlocal) {
        let e = estimate_embedding_constant(h, r, p, &opts)?;
        out.insert(r, e.raw, e.provenance);
    }
    out.lambda1p = Some(estimate_lambda1p(h, p, c.iters, c.tol)?);
    Ok(out)
}

/// Everything known about a problem before solving.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Analysis<T> {
    pub constants: EmbeddingConstants<T>,
    pub certificate: IntrinsicCertificate<T>,
    pub hypotheses: Vec<HypothesisReport<T>>,
    pub kappa: T,
    pub c0: T,
    pub radius: Option<T>,
    pub apriori_applicable: bool,
    pub warnings: Vec<String>,
}

impl<T: Real> Analysis<T> {
    pub fn all_pass(&self) -> bool {
        self.hypotheses.iter().all(|h| h.pass)
    }
}

/// Certificate, hypothesis reports, `κ`, `c₀` and the radius
/// `R` from the coercivity inequality. The a-priori ball applies to the
/// homogeneous problem only; for the boundary lift the ball is unbounded.
pub fn analyze<T: Real>(
    problem: &Problem<T>,
    h: &SpaceHierarchy<T>,
    mut constants: EmbeddingConstants<T>,
) -> Result<Analysis<T>> {
    let p = problem.p();
    let p_hat = problem.p_hat;
    let env = problem.envelope().clone();
    let op = problem.operator();
    let cert = certificate(op, h, p, env.alpha, env.beta, &constants)?;
    let mut hypotheses = vec![check_h2(
        env.a1, env.a2, &cert, &constants, env.alpha, env.beta,
    )?];
    let mut warnings = Vec::new();
    match op {
        IntrinsicOperator::Identity => {}
        IntrinsicOperator::BoundaryLift { .. } => {
            hypotheses.push(check_t2(env.a1, env.a2, p, &constants)?)
        }
        IntrinsicOperator::Convolution { kernel, .. } => {
            constants.whole_space()?;
            warnings.push("whole-space constant S replaced by the domain estimate S_phat".into());
            hypotheses.push(check_t3(
                env.a1,
                env.a2,
                p,
                problem.dim,
                kernel.l1_norm(),
                &constants,
            )?);
        }
    }
    let kappa = hypotheses[0].value;
    let mut c0 = constants.get(env.r)? * env.sigma.norm(h, h.finest(), env.r_conjugate());
    if env.a1 > T::zero() {
        c0 = c0 + env.a1 * cert.k3 * constants.get(p_hat / (p_hat - env.alpha))?;
    }
    if env.a2 > T::zero() {
        c0 = c0 + env.a2 * cert.k3 * constants.get(p / (p - env.beta))?;
    }
    let apriori_applicable = !matches!(op, IntrinsicOperator::BoundaryLift { .. });
    let radius = if !apriori_applicable {
        warnings.push("boundary lift: no a-priori ball, solving without projection".into());
        None
    } else if kappa < T::one() {
        Some(coercivity_radius(
            kappa,
            problem.mesh.measure(),
            p,
            problem.q(),
            c0,
        )?)
    } else {
        warnings.push(format!(
            "kappa = {kappa} >= 1: no coercivity radius, ball unbounded"
        ));
        None
    };
    Ok(Analysis {
        constants,
        certificate: cert,
        hypotheses,
        kappa,
        c0,
        radius,
        apriori_applicable,
        warnings,
    })
}

/// Result of [`run_hierarchy`]: the report plus the raw solves.
#[derive(Clone, Debug)]
pub struct HierarchyRun<T> {
    pub report: SolveReport<T>,
    pub solves: Vec<LevelSolve<T>>,
    pub diagnostics: Option<D1Diagnostics<T>>,
    pub failure: Option<LevelFailure<T>>,
}

fn row<T: Real>(problem: &Problem<T>, h: &SpaceHierarchy<T>, s: &LevelSolve<T>) -> LevelRow<T> {
    LevelRow {
        level: s.level + 1,
        dim: s.solution.len(),
        grad_norm_p: s.grad_norm_p,
        residual_sup: s.residual_sup,
        radius: s.radius,
        apriori_margin: s.radius.map(|r| r - s.grad_norm_p),
        diag_a: None,
        diag_b: None,
        diag_c_strong: None,
        diag_c_full: None,
        newton_iters: s.newton_iters,
        continuation_steps: s.continuation_steps,
        outer_iters: s.outer_iters,
        energy_defect: s.energy_defect,
        error_w1p: problem
            .exact
            .map(|ex| w1p_error(h, &s.solution, |x| ex.gradient(x), problem.p())),
        sphere: s.sphere.clone(),
        converged: true,
        warnings: s.warnings.clone(),
    }
}

/// Solves every level of `h` in order and fills the diagnostics with the
/// finest solution as the limit. A refused hypothesis or a failed level
/// ends the run with a partial report.
pub fn run_hierarchy<T: Real>(
    problem: &Problem<T>,
    h: &SpaceHierarchy<T>,
) -> Result<HierarchyRun<T>> {
    let constants = compute_constants(problem, h)?;
    let analysis = analyze(problem, h, constants)?;
    run_with_analysis(problem, h, analysis)
}

/// [`run_hierarchy`] with constants and hypotheses already computed.
pub fn run_with_analysis<T: Real>(
    problem: &Problem<T>,
    h: &SpaceHierarchy<T>,
    analysis: Analysis<T>,
) -> Result<HierarchyRun<T>> {
    let report = SolveReport {
        status: RunStatus::Ok,
        message: None,
        p: problem.p(),
        q: problem.q(),
        dim: problem.dim,
        p_hat: problem.p_hat,
        operator: problem.operator().name().to_string(),
        seed: problem.spec.seed,
        constants: analysis.constants.clone(),
        certificate: analysis.certificate.clone(),
        hypotheses: analysis.hypotheses.clone(),
        kappa: analysis.kappa,
        c0: analysis.c0,
        radius: analysis.radius,
        apriori_applicable: analysis.apriori_applicable,
        levels: Vec::new(),
        steps: Vec::new(),
        non_cauchy: false,
        warnings: analysis.warnings.clone(),
    };
    let mut run = HierarchyRun {
        report,
        solves: Vec::new(),
        diagnostics: None,
        failure: None,
    };
    if !analysis.all_pass() {
        let failed: Vec<String> = analysis
            .hypotheses
            .iter()
            .filter(|r| !r.pass)
            .map(|r| format!("{:?} = {}", r.condition, r.value))
            .collect();
        let msg = format!("smallness condition failed: {}", failed.join(", "));
        if problem.spec.hypothesis_policy == HypothesisPolicy::Refuse {
            run.report.status = RunStatus::HypothesisRefused;
            run.report.message = Some(msg);
            return Ok(run);
        }
        run.report.warnings.push(msg);
    }

    for level in 0..h.num_levels() {
        let start = match (problem.spec.solver.initial_guess, run.solves.last()) {
            (InitialGuess::WarmStart, Some(prev)) => Some(h.prolongate(&prev.solution, level)?),
            _ => None,
        };
        match solve_level(problem, h, level, analysis.radius, start.as_ref()) {
            Ok(s) => {
                run.report.levels.push(row(problem, h, &s));
                run.solves.push(s);
            }
            Err(f) => {
                run.report.status = RunStatus::SolverFailed;
                run.report.message = Some(f.to_string());
                let mut failed_row = row(
                    problem,
                    h,
                    &LevelSolve {
                        level,
                        grad_norm_p: h.grad_norm_p(&f.best, problem.p()),
                        solution: f.best.clone(),
                        residual_sup: f.best_residual,
                        newton_iters: f.newton_iters,
                        continuation_steps: 0,
                        outer_iters: 0,
                        radius: analysis.radius,
                        sphere: None,
                        energy_defect: T::zero(),
                        warnings: f.warnings.clone(),
                    },
                );
                failed_row.converged = false;
                run.report.levels.push(failed_row);
                run.failure = Some(f);
                return Ok(run);
            }
        }
    }

    let finest = run.solves.last().expect("at least one level");
    let diag = d1_diagnostics(
        problem,
        h,
        &run.solves,
        &finest.solution.clone(),
        problem.spec.solver.test_set_size,
    )?;
    for d in &diag.rows {
        let r = &mut run.report.levels[d.level];
        r.diag_a = Some(d.a);
        r.diag_b = Some(d.b);
        r.diag_c_strong = Some(d.c_strong);
        r.diag_c_full = Some(d.c_full);
    }
    run.report.steps = diag.steps.clone();
    run.report.non_cauchy = diag.non_cauchy;
    if diag.non_cauchy {
        run.report
            .warnings
            .push("level-to-level steps grow: the sequence may switch between solutions".into());
    }
    run.diagnostics = Some(diag);
    Ok(run)
}
