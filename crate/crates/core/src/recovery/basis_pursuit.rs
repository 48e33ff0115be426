use std::time::Instant;

use super::columns::retrieve_columns;
use super::{ConePattern, RecoveryConfig, RecoveryResult, RecoveryStatus, Scheme};
use crate::measurement::MeasurementSet;
use crate::sparse_solver::{Cone, L1Solver, SolveStatus, SolverOptions};
use crate::{CMatrix, CVector, Complex64, Result};

/// Position of `(i, j)`, `i ≤ j`, in the row-major upper triangle.
fn upper_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

/// Basis pursuit over all of `Y`. Without symmetry this is column-wise ℓ1.
/// With symmetry the unknowns are the upper triangle and the objective
/// counts each off-diagonal entry twice, so it equals `‖Y‖₁` over `n²`
/// entries; each column keeps its own residual ball of radius `γ`.
pub fn vectorized_bp(ms: &MeasurementSet, symmetric: bool, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    let start = Instant::now();
    let n = ms.n();
    cfg.validate(n)?;
    let scheme = match (symmetric, cfg.scheme) {
        (true, _) => Scheme::VectorizedBpSym,
        (false, Scheme::ColumnBp) => Scheme::ColumnBp,
        (false, _) => Scheme::VectorizedBp,
    };
    let opts = cfg.solver_options();
    let (mut x, status, failures, iterations) = if symmetric {
        symmetric_bp(ms, cfg.cones, &opts)?
    } else {
        let batch = retrieve_columns(ms, cfg.gamma, cfg.cones, &opts)?;
        let status =
            if batch.infeasible().is_empty() { RecoveryStatus::Success } else { RecoveryStatus::SolverFailed };
        let failures = batch.failures();
        (batch.x, status, failures, batch.iterations)
    };
    let mut status = status;
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        x.fill(Complex64::new(0.0, 0.0));
        status = RecoveryStatus::SolverFailed;
    }
    Ok(RecoveryResult {
        x,
        status,
        scheme,
        accepted: None,
        scores: Vec::new(),
        column_failures: failures,
        solver_iterations: iterations,
        elapsed: start.elapsed(),
    })
}

type BpOutcome = (CMatrix, RecoveryStatus, Vec<usize>, usize);

fn symmetric_bp(ms: &MeasurementSet, cones: ConePattern, opts: &SolverOptions) -> Result<BpOutcome> {
    let (m, n) = (ms.m(), ms.n());
    let p = n * (n + 1) / 2;
    let mut big = CMatrix::zeros(m * n, p);
    let mut rhs = CVector::zeros(m * n);
    for j in 0..n {
        rhs.rows_mut(j * m, m).copy_from(&ms.a.column(j));
        for i in 0..n {
            big.view_mut((j * m, upper_index(n, i, j)), (m, 1)).copy_from(&ms.b.column(i));
        }
    }
    let mut weights = vec![2.0; p];
    let mut var_cones = vec![Cone::OFF_DIAGONAL_ADMITTANCE; p];
    for i in 0..n {
        weights[upper_index(n, i, i)] = 1.0;
        var_cones[upper_index(n, i, i)] = Cone::DIAGONAL_ADMITTANCE;
    }
    let opts = SolverOptions {
        weights: Some(weights),
        cones: (cones == ConePattern::Admittance).then_some(var_cones),
        ..opts.clone()
    };
    let blocks = (0..n).map(|j| j * m..(j + 1) * m).collect();
    let report = L1Solver::with_blocks(&big, blocks, &opts)?.solve(&rhs)?;
    let mut x = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            x[(i, j)] = ms.field.coerce(report.x[upper_index(n, i, j)]);
        }
    }
    let failures = if report.status == SolveStatus::Optimal { Vec::new() } else { (0..n).collect() };
    let status =
        if report.status == SolveStatus::Infeasible { RecoveryStatus::SolverFailed } else { RecoveryStatus::Success };
    Ok((x, status, failures, report.iterations))
}
