//! Recovery schemes for `Y` from `(A, B)`:
//!
//! - [`three_stage`]: column-wise ℓ1, symmetric consistency check over
//!   subsets of size `n − K`, then a `K × K` solve for the rejected columns.
//! - [`heuristic`]: iterative dimension reduction that fixes the `s` most
//!   symmetric-consistent columns per round and eliminates them.
//! - [`vectorized_bp`]: basis pursuit over all columns, optionally with the
//!   symmetry of `Y` imposed through shared variables.

mod basis_pursuit;
mod columns;
mod heuristic;
mod three_stage;

pub use basis_pursuit::vectorized_bp;
pub use columns::{retrieve_columns, ColumnBatch};
pub use heuristic::{heuristic, score_columns};
pub use three_stage::{consistency_check, resolve_unknowns, three_stage};

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::measurement::MeasurementSet;
use crate::sparse_solver::{Cone, SolverOptions};
use crate::{CMatrix, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    ThreeStage,
    Heuristic,
    ColumnBp,
    VectorizedBp,
    VectorizedBpSym,
}

impl Scheme {
    pub const ALL: [Scheme; 5] =
        [Scheme::ThreeStage, Scheme::Heuristic, Scheme::ColumnBp, Scheme::VectorizedBp, Scheme::VectorizedBpSym];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::ThreeStage => "three-stage",
            Scheme::Heuristic => "heuristic",
            Scheme::ColumnBp => "column-bp",
            Scheme::VectorizedBp => "vectorized-bp",
            Scheme::VectorizedBpSym => "vectorized-bp-sym",
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sch| sch.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme `{s}`")))
    }
}

/// Sign restrictions applied to every recovered column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConePattern {
    #[default]
    Free,
    /// `Re ≥ 0` on the diagonal; `Re ≤ 0, Im ≥ 0` off it.
    Admittance,
}

impl ConePattern {
    /// Cones for the unknowns `rows` of column `col` (global indices).
    pub fn cones(self, col: usize, rows: &[usize]) -> Option<Vec<Cone>> {
        match self {
            ConePattern::Free => None,
            ConePattern::Admittance => Some(
                rows.iter()
                    .map(|&i| if i == col { Cone::DIAGONAL_ADMITTANCE } else { Cone::OFF_DIAGONAL_ADMITTANCE })
                    .collect(),
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecoveryConfig {
    pub scheme: Scheme,
    /// Residual radius `γ` of every column solve.
    pub gamma: f64,
    /// Number of columns the three-stage scheme may reject.
    #[serde(rename = "K")]
    pub k: usize,
    /// Columns fixed per heuristic round; `⌈n/2⌉` when absent.
    pub s: Option<usize>,
    pub mu_hint: Option<usize>,
    pub cones: ConePattern,
    pub solver: SolverOptions,
    pub seed: u64,
    /// Slack, relative to `max |X|`, added to the `2γ` consistency test.
    pub consistency_tol: f64,
    /// Cap on subsets examined by the consistency check.
    pub max_subsets: usize,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            scheme: Scheme::Heuristic,
            gamma: 0.0,
            k: 1,
            s: None,
            mu_hint: None,
            cones: ConePattern::Free,
            solver: SolverOptions::default(),
            seed: 0,
            consistency_tol: 1e-6,
            max_subsets: 1_000_000,
        }
    }
}

impl RecoveryConfig {
    pub fn new(scheme: Scheme) -> Self {
        RecoveryConfig { scheme, ..Default::default() }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be non-negative, got {}", self.gamma)));
        }
        if self.k > n {
            return Err(Error::Config(format!("K = {} exceeds n = {n}", self.k)));
        }
        if let Some(s) = self.s {
            if s == 0 || s > n {
                return Err(Error::Config(format!("s must satisfy 1 <= s <= n = {n}, got {s}")));
            }
        }
        if self.consistency_tol < 0.0 {
            return Err(Error::Config("consistency tolerance must be non-negative".into()));
        }
        Ok(())
    }

    /// Columns fixed per heuristic round.
    pub fn s_for(&self, n: usize) -> usize {
        self.s.unwrap_or(n.div_ceil(2)).clamp(1, n.max(1))
    }

    pub(crate) fn solver_options(&self) -> SolverOptions {
        SolverOptions { gamma: self.gamma, cones: None, seed: self.seed, ..self.solver.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RecoveryStatus {
    Success,
    ConsistencyFailed,
    SolverFailed,
}

/// Column scores of one heuristic round, `(column, score)` for every column
/// still in play.
pub type RoundScores = Vec<(usize, f64)>;

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub x: CMatrix,
    pub status: RecoveryStatus,
    pub scheme: Scheme,
    /// Columns accepted by the consistency check (three-stage only).
    pub accepted: Option<Vec<usize>>,
    /// Per-round column scores (heuristic only).
    pub scores: Vec<RoundScores>,
    /// Columns whose ℓ1 solve did not reach an optimal status.
    pub column_failures: Vec<usize>,
    pub solver_iterations: usize,
    pub elapsed: Duration,
}

impl RecoveryResult {
    pub fn is_success(&self) -> bool {
        self.status == RecoveryStatus::Success
    }
}

/// Runs the scheme selected in `cfg`.
pub fn recover(ms: &MeasurementSet, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    match cfg.scheme {
        Scheme::ThreeStage => three_stage(ms, cfg),
        Scheme::Heuristic => heuristic(ms, cfg),
        Scheme::ColumnBp | Scheme::VectorizedBp => vectorized_bp(ms, false, cfg),
        Scheme::VectorizedBpSym => vectorized_bp(ms, true, cfg),
    }
}
