//! The four batch commands. Each writes its artifacts into an output
//! directory and returns the process exit code; a report is written on
//! every path, failures included.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::{ConfigError, Problem, ProblemSpec};
use crate::scalar::Real;
use crate::solver::{analyze, compute_constants, run_with_analysis, Analysis, RunStatus};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

pub const SOLVE_JSON: &str = "solve_report.json";
pub const SOLVE_CSV: &str = "solve_levels.csv";
pub const CHECK_JSON: &str = "hypotheses.json";
pub const CONSTANTS_JSON: &str = "constants.json";
pub const STUDY_CSV: &str = "study.csv";
pub const STUDY_JSON: &str = "study_report.json";
pub const ERROR_JSON: &str = "error.json";

/// Command-line overrides applied on top of a problem file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub levels: Option<usize>,
}

impl Overrides {
    pub fn apply<T: Real>(
        &self,
        spec: &mut ProblemSpec<T>,
    ) -> std::result::Result<(), ConfigError> {
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(l) = self.levels {
            spec.levels = l;
        }
        spec.validate()
    }
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    status: &'static str,
    code: &'a str,
    message: String,
}

/// Writes `error.json` for a failure that produced no other report.
pub fn write_error(out_dir: &Path, code: &str, message: String) -> Result<()> {
    write_json(
        out_dir,
        ERROR_JSON,
        &ErrorReport {
            status: "error",
            code,
            message,
        },
    )
}

fn write_json<S: Serialize>(out_dir: &Path, name: &str, value: &S) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(out_dir.join(name), text)?;
    Ok(())
}

fn exit_for_error(out_dir: &Path, e: Error) -> Result<i32> {
    let (code, exit) = match &e {
        Error::Config(c) => (c.code.as_str(), EXIT_CONFIG),
        Error::Unsupported(_) => ("UNSUPPORTED", EXIT_CONFIG),
        Error::HypothesisViolated(_) => ("HYPOTHESIS", EXIT_HYPOTHESIS),
        _ => ("SOLVER", EXIT_SOLVER),
    };
    write_error(out_dir, code, e.to_string())?;
    Ok(exit)
}

fn prepare<T: Real + 'static>(
    spec: &ProblemSpec<T>,
) -> Result<(Problem<T>, crate::discretization::SpaceHierarchy<T>)> {
    let problem = Problem::new(spec.clone())?;
    let h = problem.hierarchy()?;
    Ok((problem, h))
}

fn analysis_for<T: Real + 'static>(
    spec: &ProblemSpec<T>,
) -> Result<(
    Problem<T>,
    crate::discretization::SpaceHierarchy<T>,
    Analysis<T>,
)> {
    let (problem, h) = prepare(spec)?;
    let constants = compute_constants(&problem, &h)?;
    let analysis = analyze(&problem, &h, constants)?;
    Ok((problem, h, analysis))
}

/// Solves all levels; writes the JSON report and the per-level CSV.
pub fn cmd_solve<T: Real + 'static>(spec: &ProblemSpec<T>, out_dir: &Path) -> Result<i32> {
    let run = match analysis_for(spec).and_then(|(p, h, a)| run_with_analysis(&p, &h, a)) {
        Ok(r) => r,
        Err(e) => return exit_for_error(out_dir, e),
    };
    write_json(out_dir, SOLVE_JSON, &run.report)?;
    fs::write(out_dir.join(SOLVE_CSV), run.report.csv_string())?;
    Ok(match run.report.status {
        RunStatus::Ok => EXIT_OK,
        RunStatus::HypothesisRefused => EXIT_HYPOTHESIS,
        RunStatus::SolverFailed => EXIT_SOLVER,
    })
}

/// Evaluates every applicable smallness condition; exit 0 iff all pass.
pub fn cmd_check<T: Real + 'static>(spec: &ProblemSpec<T>, out_dir: &Path) -> Result<i32> {
    match analysis_for(spec) {
        Ok((_, _, a)) => {
            write_json(out_dir, CHECK_JSON, &a)?;
            Ok(if a.all_pass() {
                EXIT_OK
            } else {
                EXIT_HYPOTHESIS
            })
        }
        Err(e) => exit_for_error(out_dir, e),
    }
}

#[derive(Serialize)]
#[serde(bound = "T: Real")]
struct ConstantsReport<T> {
    lambda1p: Option<T>,
    #[serde(rename = "S")]
    s: BTreeMap<String, T>,
    #[serde(rename = "S_raw")]
    s_raw: BTreeMap<String, T>,
    safety: T,
    p: T,
    p_hat: T,
    dim: usize,
    detail: crate::constants::EmbeddingConstants<T>,
}

/// Estimates the embedding constants and `λ₁,ₚ`.
pub fn cmd_constants<T: Real + 'static>(spec: &ProblemSpec<T>, out_dir: &Path) -> Result<i32> {
    let constants = match prepare(spec).and_then(|(p, h)| compute_constants(&p, &h)) {
        Ok(c) => c,
        Err(e) => return exit_for_error(out_dir, e),
    };
    let report = ConstantsReport {
        lambda1p: constants.lambda1p.as_ref().map(|l| l.value),
        s: constants
            .entries
            .iter()
            .map(|e| (e.r.to_string(), e.value))
            .collect(),
        s_raw: constants
            .entries
            .iter()
            .map(|e| (e.r.to_string(), e.raw))
            .collect(),
        safety: constants.safety,
        p: constants.p,
        p_hat: constants.p_hat,
        dim: constants.dim,
        detail: constants,
    };
    write_json(out_dir, CONSTANTS_JSON, &report)?;
    Ok(EXIT_OK)
}

/// One line of a convergence study.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Real")]
pub struct StudyRow<T> {
    pub level: usize,
    pub dim: usize,
    pub mesh_size: T,
    pub error_w1p: T,
    pub error_l2: T,
    /// `log₂(eₙ₋₁/eₙ)` of the W^{1,p} error.
    pub rate: Option<T>,
}

/// Errors against the closed-form solution on every level, with rates
/// from successive ratios.
pub fn study_rows<T: Real + 'static>(
    spec: &ProblemSpec<T>,
) -> Result<(Vec<StudyRow<T>>, crate::solver::SolveReport<T>)> {
    let (problem, h, analysis) = analysis_for(spec)?;
    let Some(exact) = problem.exact else {
        return Err(ConfigError::new(
            crate::problem::ConfigCode::InvalidField,
            "study needs a manufactured convection term with a closed-form solution",
        )
        .into());
    };
    let run = run_with_analysis(&problem, &h, analysis)?;
    let mut rows: Vec<StudyRow<T>> = Vec::new();
    for s in &run.solves {
        let e = crate::solver::w1p_error(&h, &s.solution, |x| exact.gradient(x), problem.p());
        let e2 =
            crate::solver::lebesgue_error(&h, &s.solution, |x| exact.value(x), T::one() + T::one());
        let rate = rows
            .last()
            .filter(|prev| prev.error_w1p > T::zero() && e > T::zero())
            .map(|prev| (prev.error_w1p / e).log2());
        rows.push(StudyRow {
            level: s.level + 1,
            dim: s.solution.len(),
            mesh_size: h.level(s.level).mesh_size(),
            error_w1p: e,
            error_l2: e2,
            rate,
        });
    }
    Ok((rows, run.report))
}

/// Convergence study for manufactured problems: `study.csv` plus the
/// underlying solve report.
pub fn cmd_study<T: Real + 'static>(spec: &ProblemSpec<T>, out_dir: &Path) -> Result<i32> {
    let (rows, report) = match study_rows(spec) {
        Ok(x) => x,
        Err(e) => return exit_for_error(out_dir, e),
    };
    fs::create_dir_all(out_dir)?;
    let mut w = csv::Writer::from_path(out_dir.join(STUDY_CSV))?;
    w.write_record(["level", "dim", "mesh_size", "error_w1p", "error_l2", "rate"])?;
    for r in &rows {
        w.write_record([
            r.level.to_string(),
            r.dim.to_string(),
            r.mesh_size.to_string(),
            r.error_w1p.to_string(),
            r.error_l2.to_string(),
            r.rate.map(|x| x.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    write_json(out_dir, STUDY_JSON, &report)?;
    Ok(match report.status {
        RunStatus::Ok => EXIT_OK,
        RunStatus::HypothesisRefused => EXIT_HYPOTHESIS,
        RunStatus::SolverFailed => EXIT_SOLVER,
    })
}

/// Default artifact directory.
pub fn default_out_dir() -> PathBuf {
    PathBuf::from(".")
}
