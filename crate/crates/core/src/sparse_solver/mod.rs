//! Numerical engines: ℓ1 minimisation with a residual ball and optional sign
//! cones, its dual-certificate check, square solves, and brute-force matrix
//! diagnostics.

mod certify;
mod diagnostics;
mod l1;
mod linalg;

pub use certify::{certify_l1, certify_l1_with_dual};
pub use diagnostics::{ric, spark, xi, XiReport, DIAGNOSTIC_MAX_N, XI_MAX_K, XI_MAX_N};
pub use l1::{solve_l1, L1Solver};
pub use linalg::{
    condition_number, least_squares, min_norm_solution, singular_values, solve_square, spectral_norm,
    SquareSolution, RANK_TOL, SINGULAR_COND,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{CVector, Error, Result};

/// Sign restriction on one real component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    #[default]
    Free,
    NonNeg,
    NonPos,
}

impl Sign {
    fn project(self, v: f64) -> f64 {
        match self {
            Sign::Free => v,
            Sign::NonNeg => v.max(0.0),
            Sign::NonPos => v.min(0.0),
        }
    }

    fn violation(self, v: f64) -> f64 {
        match self {
            Sign::Free => 0.0,
            Sign::NonNeg => (-v).max(0.0),
            Sign::NonPos => v.max(0.0),
        }
    }

    /// Projection of `g` onto the normal cone of `{v : sign(v) ok}` at `v`.
    /// The normal cone is non-trivial only when the constraint is active.
    fn normal_clamp(self, v: f64, g: f64, active_tol: f64) -> f64 {
        let active = v.abs() <= active_tol;
        match self {
            Sign::NonNeg if active => g.min(0.0),
            Sign::NonPos if active => g.max(0.0),
            _ => 0.0,
        }
    }
}

/// Axis-aligned cone for one complex entry, e.g. `Re ≤ 0, Im ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Cone {
    #[serde(default)]
    pub re: Sign,
    #[serde(default)]
    pub im: Sign,
}

impl Cone {
    pub const FREE: Cone = Cone { re: Sign::Free, im: Sign::Free };
    /// Off-diagonal admittance entries: `Re ≤ 0, Im ≥ 0`.
    pub const OFF_DIAGONAL_ADMITTANCE: Cone = Cone { re: Sign::NonPos, im: Sign::NonNeg };
    /// Diagonal admittance entries: `Re ≥ 0`.
    pub const DIAGONAL_ADMITTANCE: Cone = Cone { re: Sign::NonNeg, im: Sign::Free };

    pub fn is_free(&self) -> bool {
        self.re == Sign::Free && self.im == Sign::Free
    }

    pub fn project(&self, z: Complex64) -> Complex64 {
        Complex64::new(self.re.project(z.re), self.im.project(z.im))
    }

    pub fn violation(&self, z: Complex64) -> f64 {
        self.re.violation(z.re).max(self.im.violation(z.im))
    }

    fn normal_clamp(&self, x: Complex64, g: Complex64, active_tol: f64) -> Complex64 {
        Complex64::new(self.re.normal_clamp(x.re, g.re, active_tol), self.im.normal_clamp(x.im, g.im, active_tol))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Residual radius `γ` of the constraint `‖Bx − a‖₂ ≤ γ`.
    pub gamma: f64,
    pub max_iters: usize,
    /// Relative primal/dual stopping tolerance.
    pub tol: f64,
    /// Slack allowed in the dual certificate.
    pub cert_tol: f64,
    /// Initial ADMM penalty; chosen from the data when absent.
    pub rho: Option<f64>,
    /// Per-entry sign cones; `None` leaves every entry free.
    pub cones: Option<Vec<Cone>>,
    /// Per-entry ℓ1 weights (all ones when absent).
    pub weights: Option<Vec<f64>>,
    /// Refine ADMM iterates by a least-squares solve on the detected support.
    pub polish: bool,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            gamma: 0.0,
            max_iters: 20_000,
            tol: 1e-9,
            cert_tol: 1e-6,
            rho: None,
            cones: None,
            weights: None,
            polish: true,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn with_gamma(gamma: f64) -> Self {
        SolverOptions { gamma, ..Default::default() }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!("gamma must be a finite non-negative number, got {}", self.gamma)));
        }
        if !(self.tol > 0.0 && self.cert_tol > 0.0) {
            return Err(Error::Config("solver tolerances must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        if let Some(c) = &self.cones {
            if c.len() != n {
                return Err(Error::Shape(format!("{} cones for {n} unknowns", c.len())));
            }
        }
        if let Some(w) = &self.weights {
            if w.len() != n {
                return Err(Error::Shape(format!("{} weights for {n} unknowns", w.len())));
            }
            if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
                return Err(Error::Config("ℓ1 weights must be positive".into()));
            }
        }
        Ok(())
    }

    pub(crate) fn cone(&self, j: usize) -> Cone {
        self.cones.as_ref().map_or(Cone::FREE, |c| c[j])
    }

    pub(crate) fn weight(&self, j: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[j])
    }

    /// Weighted ℓ1 norm under these options.
    pub fn objective(&self, x: &CVector) -> f64 {
        x.iter().enumerate().map(|(j, z)| self.weight(j) * z.norm()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    MaxIters,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub x: CVector,
    /// Largest block residual `‖Bx − a‖₂`.
    pub residual: f64,
    pub objective: f64,
    pub iterations: usize,
    pub status: SolveStatus,
    /// Whether a dual certificate of optimality was found.
    pub certified: bool,
    /// Dual estimate `ν` (before any correction onto the support equations).
    pub dual: Option<CVector>,
}

impl SolveReport {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    /// Converts a non-optimal status into the matching error.
    pub fn into_result(self) -> Result<Self> {
        match self.status {
            SolveStatus::Optimal => Ok(self),
            SolveStatus::MaxIters => Err(Error::MaxIters { iters: self.iterations }),
            SolveStatus::Infeasible => Err(Error::Infeasible(format!("residual {:.3e}", self.residual))),
        }
    }
}
