use std::collections::BTreeSet;
use std::time::Instant;

use rand::seq::index;

use super::columns::solve_columns;
use super::{RecoveryConfig, RecoveryResult, RecoveryStatus, RoundScores, Scheme};
use crate::measurement::MeasurementSet;
use crate::rng::stream;
use crate::sparse_solver::SolveStatus;
use crate::{CMatrix, CVector, Complex64, Result};

const ROW_STREAM: u64 = 0x6865_7572;
const TIE_REL: f64 = 1e-10;

/// `score_q = Σ_p |X_pq − X_qp|` for every column of a square estimate.
pub fn score_columns(x: &CMatrix) -> Vec<f64> {
    let r = x.ncols();
    (0..r).map(|q| (0..r).map(|p| (x[(p, q)] - x[(q, p)]).norm()).sum()).collect()
}

/// Columns by ascending score, ties to the lower index. Scores at rounding
/// level count as exact ties.
pub(crate) fn fixing_order(xr: &CMatrix, round: &[f64]) -> Vec<usize> {
    let tie = TIE_REL * round.len() as f64 * xr.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let key = |q: usize| if round[q] <= tie { 0.0 } else { round[q] };
    let mut order: Vec<usize> = (0..round.len()).collect();
    order.sort_by(|&a, &b| key(a).total_cmp(&key(b)).then(a.cmp(&b)));
    order
}

/// Iterative dimension reduction. Each round solves every remaining column
/// on the reduced system, fixes the `s` columns with the smallest symmetry
/// score (ties to the lower index), writes their entries symmetrically and
/// removes their contribution from the other columns. Once fewer columns
/// than rows remain, the rows are cut down to a square system chosen
/// uniformly at random from the rows still in use.
pub fn heuristic(ms: &MeasurementSet, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    let start = Instant::now();
    let (m, n) = (ms.m(), ms.n());
    cfg.validate(n)?;
    let s = cfg.s_for(n);
    let opts = cfg.solver_options();
    let mut rng = stream(cfg.seed, ROW_STREAM);

    let mut x = CMatrix::zeros(n, n);
    let mut set = vec![false; n * n];
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut rows: Vec<usize> = (0..m).collect();
    let mut a_res = ms.a.clone();
    let mut scores: Vec<RoundScores> = Vec::new();
    let mut failures = BTreeSet::new();
    let mut infeasible = false;
    let mut iterations = 0;

    while !remaining.is_empty() {
        let r = remaining.len();
        if !scores.is_empty() && r < rows.len() {
            let mut pick = index::sample(&mut rng, rows.len(), r).into_vec();
            pick.sort_unstable();
            rows = pick.into_iter().map(|k| rows[k]).collect();
        }
        let b_r = ms.b.select_rows(rows.iter()).select_columns(remaining.iter());
        let rhs = a_res.select_rows(rows.iter()).select_columns(remaining.iter());
        let (reports, iters) = solve_columns(&b_r, &rhs, &remaining, &remaining, cfg.cones, &opts)?;
        iterations += iters;

        let mut xr = CMatrix::zeros(r, r);
        for (q, rep) in reports.iter().enumerate() {
            xr.set_column(q, &rep.x);
            if rep.status != SolveStatus::Optimal {
                failures.insert(remaining[q]);
                infeasible |= rep.status == SolveStatus::Infeasible;
            }
        }

        let round = score_columns(&xr);
        let fixed: Vec<usize> = fixing_order(&xr, &round).into_iter().take(s.min(r)).collect();
        scores.push(remaining.iter().copied().zip(round).collect());

        for &q in &fixed {
            let j = remaining[q];
            for (p, &i) in remaining.iter().enumerate() {
                if !set[i * n + j] {
                    let v = ms.field.coerce(xr[(p, q)]);
                    x[(i, j)] = v;
                    x[(j, i)] = v;
                    set[i * n + j] = true;
                    set[j * n + i] = true;
                }
            }
        }

        let fixed_cols: Vec<usize> = fixed.iter().map(|&q| remaining[q]).collect();
        remaining.retain(|j| !fixed_cols.contains(j));
        for &j in &remaining {
            let mut contrib = CVector::zeros(m);
            for &i in &fixed_cols {
                contrib.axpy(x[(i, j)], &ms.b.column(i), Complex64::new(1.0, 0.0));
            }
            let mut col = a_res.column_mut(j);
            col -= contrib;
        }
    }

    let mut status = if infeasible { RecoveryStatus::SolverFailed } else { RecoveryStatus::Success };
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        x.fill(Complex64::new(0.0, 0.0));
        status = RecoveryStatus::SolverFailed;
    }
    Ok(RecoveryResult {
        x,
        status,
        scheme: Scheme::Heuristic,
        accepted: None,
        scores,
        column_failures: failures.into_iter().collect(),
        solver_iterations: iterations,
        elapsed: start.elapsed(),
    })
}
