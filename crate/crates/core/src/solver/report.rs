//! Serializable run reports.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::constants::{EmbeddingConstants, HypothesisReport};
use crate::error::Result;
use crate::intrinsic::IntrinsicCertificate;
use crate::scalar::Real;
use crate::solver::level::SphereCertificate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    HypothesisRefused,
    SolverFailed,
}

/// One level of a run; `level` counts from 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct LevelRow<T> {
    pub level: usize,
    pub dim: usize,
    pub grad_norm_p: T,
    pub residual_sup: T,
    #[serde(rename = "R")]
    pub radius: Option<T>,
    /// `R − ‖∇uₙ‖ₚ`
    pub apriori_margin: Option<T>,
    pub diag_a: Option<T>,
    pub diag_b: Option<T>,
    pub diag_c_strong: Option<T>,
    pub diag_c_full: Option<T>,
    pub newton_iters: usize,
    pub continuation_steps: usize,
    pub outer_iters: usize,
    pub energy_defect: T,
    /// `‖∇(uₙ − u*)‖ₚ` when a closed-form solution is known.
    pub error_w1p: Option<T>,
    pub sphere: Option<SphereCertificate<T>>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SolveReport<T> {
    pub status: RunStatus,
    pub message: Option<String>,
    pub p: T,
    pub q: T,
    pub dim: usize,
    pub p_hat: T,
    pub operator: String,
    pub seed: u64,
    pub constants: EmbeddingConstants<T>,
    pub certificate: IntrinsicCertificate<T>,
    pub hypotheses: Vec<HypothesisReport<T>>,
    pub kappa: T,
    pub c0: T,
    /// Coercivity radius; `None` when the ball is unbounded.
    #[serde(rename = "R")]
    pub radius: Option<T>,
    pub apriori_applicable: bool,
    pub levels: Vec<LevelRow<T>>,
    pub steps: Vec<T>,
    pub non_cauchy: bool,
    pub warnings: Vec<String>,
}

pub const CSV_COLUMNS: [&str; 11] = [
    "level",
    "dim",
    "grad_norm_p",
    "residual_sup",
    "R",
    "apriori_margin",
    "diag_a",
    "diag_b",
    "diag_c_strong",
    "diag_c_full",
    "newton_iters",
];

fn cell<T: Real>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

impl<T: Real> SolveReport<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-level table with the columns of [`CSV_COLUMNS`]; absent values
    /// are empty cells.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_COLUMNS)?;
        for r in &self.levels {
            w.write_record([
                r.level.to_string(),
                r.dim.to_string(),
                r.grad_norm_p.to_string(),
                r.residual_sup.to_string(),
                cell(r.radius),
                cell(r.apriori_margin),
                cell(r.diag_a),
                cell(r.diag_b),
                cell(r.diag_c_strong),
                cell(r.diag_c_full),
                r.newton_iters.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}
