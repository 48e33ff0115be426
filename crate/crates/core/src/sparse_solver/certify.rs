//! Dual certificates for the ℓ1 problem.
//!
//! `x` is optimal for `min Σ w_j|x_j|` s.t. `‖B x − a‖ ≤ γ`, `x ∈ cones` iff
//! some `ν` gives `g = Bᴴν` with `g_j − w_j·x_j/|x_j|` in the normal cone at
//! `x_j` on the support, `dist(g_j, normal cone) ≤ w_j` off it, and (for
//! `γ > 0`) `ν` a non-negative multiple of the residual `a − Bx` on each
//! active block. Candidates for `ν` come from least squares on the support
//! and from an optional hint such as the ADMM dual.

use std::ops::Range;

use num_complex::Complex64;

use super::linalg::{least_squares, min_norm_solution};
use super::SolverOptions;
use crate::{CMatrix, CVector};

/// Relative size below which an entry of `x` counts as zero.
const ZERO_REL: f64 = 1e-12;
/// Blocks whose residual reaches this fraction of `γ` may carry dual weight.
const ACTIVE_REL: f64 = 0.5;

pub(crate) fn dual_from_admm(v: &CVector, rho: f64, scale: f64) -> CVector {
    v.scale(-rho / scale)
}

/// Checks optimality of `x` for a single residual ball. When the
/// least-squares dual fails, a dual estimate is taken from solving the
/// problem afresh; `x` itself is still what gets checked.
#[allow(clippy::single_range_in_vec_init)]
pub fn certify_l1(b: &CMatrix, a: &CVector, x: &CVector, opts: &SolverOptions) -> bool {
    let blocks = [0..b.nrows()];
    if certify_l1_blocks(b, a, x, &blocks, opts, None) {
        return true;
    }
    match super::solve_l1(b, a, opts) {
        Ok(rep) => rep.dual.is_some_and(|nu| certify_l1_blocks(b, a, x, &blocks, opts, Some(&nu))),
        Err(_) => false,
    }
}

/// As [`certify_l1`], additionally trying the supplied dual vector.
#[allow(clippy::single_range_in_vec_init)]
pub fn certify_l1_with_dual(b: &CMatrix, a: &CVector, x: &CVector, opts: &SolverOptions, nu: &CVector) -> bool {
    certify_l1_blocks(b, a, x, &[0..b.nrows()], opts, Some(nu))
}

pub(crate) fn certify_l1_blocks(
    b: &CMatrix,
    a: &CVector,
    x: &CVector,
    blocks: &[Range<usize>],
    opts: &SolverOptions,
    hint: Option<&CVector>,
) -> bool {
    let (m, n) = b.shape();
    if x.len() != n || a.len() != m {
        return false;
    }
    let gamma = opts.gamma;
    let x_peak = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let zero_tol = ZERO_REL * x_peak;

    // Feasibility.
    let r = a - b * x;
    let data_scale = a.norm().max(b.norm() * x.norm()).max(f64::MIN_POSITIVE);
    let feas_slack = 1e-8 * data_scale;
    let mut active = Vec::new();
    let mut tight = Vec::new();
    for (k, blk) in blocks.iter().enumerate() {
        let rn = r.rows(blk.start, blk.len()).norm();
        if rn > gamma * (1.0 + 1e-7) + feas_slack {
            return false;
        }
        if gamma > 0.0 && rn >= gamma * ACTIVE_REL {
            active.push(k);
            tight.push(rn >= gamma * (1.0 - 1e-6));
        }
    }
    if (0..n).any(|j| opts.cone(j).violation(x[j]) > 1e-9 * x_peak.max(f64::MIN_POSITIVE)) {
        return false;
    }

    let support: Vec<usize> = (0..n).filter(|&j| x[j].norm() > zero_tol).collect();
    let target = CVector::from_iterator(support.len(), support.iter().map(|&j| x[j].unscale(x[j].norm()) * opts.weight(j)));

    let mut candidates: Vec<CVector> = Vec::new();
    // ν matching the support equations; exact whenever the support and phases are.
    let bs_h = b.select_columns(support.iter()).adjoint();
    if let Ok(nu) = min_norm_solution(&bs_h, &target) {
        candidates.push(nu);
    }
    if let Some(h) = hint.filter(|h| h.len() == m) {
        candidates.push(h.clone());
        // closest point to the hint that matches the support equations
        if let Ok(corr) = min_norm_solution(&bs_h, &(&target - &bs_h * h)) {
            candidates.push(h + corr);
        }
    }
    // For γ > 0 only ν aligned with the residual of tight blocks certifies
    // entrywise; the rest enter through the duality gap.
    let mut aligned = None;
    if gamma > 0.0 {
        // ν = Σ_k c_k r_k over active blocks, c fitted on the support.
        if !active.is_empty() && !support.is_empty() {
            let mut g_cols = CMatrix::zeros(support.len(), active.len());
            for (col, &k) in active.iter().enumerate() {
                let blk = &blocks[k];
                let mut rk = CVector::zeros(m);
                rk.rows_mut(blk.start, blk.len()).copy_from(&r.rows(blk.start, blk.len()));
                let gk = b.adjoint() * rk;
                for (row, &j) in support.iter().enumerate() {
                    g_cols[(row, col)] = gk[j];
                }
            }
            // Real coefficients: stack real and imaginary parts.
            let s = support.len();
            let mut re_sys = CMatrix::zeros(2 * s, active.len());
            let mut re_rhs = CVector::zeros(2 * s);
            for row in 0..s {
                for col in 0..active.len() {
                    re_sys[(row, col)] = Complex64::new(g_cols[(row, col)].re, 0.0);
                    re_sys[(s + row, col)] = Complex64::new(g_cols[(row, col)].im, 0.0);
                }
                re_rhs[row] = Complex64::new(target[row].re, 0.0);
                re_rhs[s + row] = Complex64::new(target[row].im, 0.0);
            }
            if let Ok(coef) = least_squares(&re_sys, &re_rhs) {
                let mut nu = CVector::zeros(m);
                let mut slack_ok = true;
                for (col, &k) in active.iter().enumerate() {
                    let ck = coef[col].re.max(0.0);
                    slack_ok &= ck == 0.0 || tight[col];
                    let blk = &blocks[k];
                    let scaled = r.rows(blk.start, blk.len()).scale(ck);
                    nu.rows_mut(blk.start, blk.len()).copy_from(&scaled);
                }
                if slack_ok {
                    aligned = Some(nu.clone());
                }
                candidates.push(nu);
            }
        } else {
            aligned = Some(CVector::zeros(m));
        }
    }

    let entrywise = if gamma > 0.0 { aligned.as_slice() } else { candidates.as_slice() };
    entrywise.iter().any(|nu| dual_conditions_hold(b, x, nu, opts, zero_tol))
        || (gamma > 0.0 && candidates.iter().any(|nu| gap_closes(b, a, x, blocks, nu, opts)))
}

/// Duality-gap test. `ν` is scaled into the dual feasible set
/// (`dist(g_j, polar cone) ≤ w_j`); the dual value is then
/// `Re⟨ν, a⟩ − γ Σ_k ‖ν_k‖`.
fn gap_closes(b: &CMatrix, a: &CVector, x: &CVector, blocks: &[Range<usize>], nu: &CVector, opts: &SolverOptions) -> bool {
    let g = b.adjoint() * nu;
    let zero = Complex64::new(0.0, 0.0);
    let excess = (0..x.len())
        .map(|j| (g[j] - opts.cone(j).normal_clamp(zero, g[j], 0.0)).norm() / opts.weight(j))
        .fold(0.0, f64::max);
    let nu = if excess > 1.0 { nu.unscale(excess) } else { nu.clone() };
    let ball: f64 = blocks.iter().map(|blk| nu.rows(blk.start, blk.len()).norm()).sum();
    let dual = nu.dotc(a).re - opts.gamma * ball;
    let primal = opts.objective(x);
    primal - dual <= opts.cert_tol * primal.max(f64::MIN_POSITIVE)
}

fn dual_conditions_hold(b: &CMatrix, x: &CVector, nu: &CVector, opts: &SolverOptions, zero_tol: f64) -> bool {
    let g = b.adjoint() * nu;
    let tol = opts.cert_tol;
    (0..x.len()).all(|j| {
        let w = opts.weight(j);
        let cone = opts.cone(j);
        let xj = x[j];
        if xj.norm() > zero_tol {
            let d = g[j] - xj.unscale(xj.norm()) * w;
            (d - cone.normal_clamp(xj, d, zero_tol)).norm() <= tol * w
        } else {
            let zero = Complex64::new(0.0, 0.0);
            (g[j] - cone.normal_clamp(zero, g[j], 0.0)).norm() <= w * (1.0 + tol)
        }
    })
}
