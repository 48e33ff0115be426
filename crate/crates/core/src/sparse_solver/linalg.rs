use nalgebra::SVD;

use crate::{CMatrix, CVector, Complex64, Error, Result};

/// Singular values below `RANK_TOL · σ_max` count as zero.
pub const RANK_TOL: f64 = 1e-9;
/// Square systems with a larger condition number are treated as singular.
pub const SINGULAR_COND: f64 = 1e12;

pub fn singular_values(b: &CMatrix) -> Vec<f64> {
    if b.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = b.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn spectral_norm(b: &CMatrix) -> f64 {
    singular_values(b).first().copied().unwrap_or(0.0)
}

/// `σ_max / σ_min`; infinite for rank-deficient or non-square input.
pub fn condition_number(b: &CMatrix) -> f64 {
    if !b.is_square() || b.is_empty() {
        return f64::INFINITY;
    }
    let s = singular_values(b);
    let (hi, lo) = (s[0], s[s.len() - 1]);
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquareSolution {
    pub x: CVector,
    pub cond: f64,
}

/// Solves a square system by partially pivoted LU.
pub fn solve_square(bsq: &CMatrix, rhs: &CVector) -> Result<SquareSolution> {
    if !bsq.is_square() {
        return Err(Error::Shape(format!("expected a square matrix, got {}×{}", bsq.nrows(), bsq.ncols())));
    }
    if rhs.len() != bsq.nrows() {
        return Err(Error::Shape(format!("rhs has length {}, expected {}", rhs.len(), bsq.nrows())));
    }
    let cond = condition_number(bsq);
    if !(cond <= SINGULAR_COND) {
        return Err(Error::Singular { cond });
    }
    let x = bsq.clone().lu().solve(rhs).ok_or(Error::Singular { cond })?;
    Ok(SquareSolution { x, cond })
}

fn svd_solve(b: &CMatrix, rhs: &CVector) -> Option<CVector> {
    if b.is_empty() {
        return Some(CVector::zeros(b.ncols()));
    }
    let svd = SVD::new(b.clone(), true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let eps = (RANK_TOL * smax).max(f64::MIN_POSITIVE);
    svd.solve(rhs, eps).ok()
}

/// Least-squares solution of `b x ≈ rhs`; minimum-norm when rank deficient.
pub fn least_squares(b: &CMatrix, rhs: &CVector) -> Result<CVector> {
    if rhs.len() != b.nrows() {
        return Err(Error::Shape(format!("rhs has length {}, expected {}", rhs.len(), b.nrows())));
    }
    svd_solve(b, rhs).ok_or(Error::Singular { cond: f64::INFINITY })
}

/// Minimum-norm solution of an underdetermined system.
pub fn min_norm_solution(b: &CMatrix, rhs: &CVector) -> Result<CVector> {
    least_squares(b, rhs)
}

/// Orthonormal basis of the numerical range of `b`.
pub(crate) fn range_basis(b: &CMatrix) -> CMatrix {
    let svd = SVD::new(b.clone(), true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > RANK_TOL * smax && s > 0.0)
        .map(|(i, _)| i)
        .collect();
    u.select_columns(keep.iter())
}

/// Products with `B` and `Bᴴ`, stored column-compressed when `B` is
/// mostly zero.
#[derive(Debug, Clone)]
pub(crate) enum Operator {
    Dense(CMatrix),
    Sparse { nrows: usize, starts: Vec<usize>, rows: Vec<usize>, vals: Vec<Complex64> },
}

/// Fill fraction under which the compressed form is used.
const SPARSE_FILL: f64 = 0.25;

impl Operator {
    pub(crate) fn new(b: &CMatrix) -> Self {
        let nnz = b.iter().filter(|z| **z != Complex64::new(0.0, 0.0)).count();
        if (nnz as f64) >= SPARSE_FILL * b.len() as f64 {
            return Operator::Dense(b.clone());
        }
        let mut starts = Vec::with_capacity(b.ncols() + 1);
        let (mut rows, mut vals) = (Vec::with_capacity(nnz), Vec::with_capacity(nnz));
        for col in b.column_iter() {
            starts.push(rows.len());
            for (i, &z) in col.iter().enumerate().filter(|(_, z)| **z != Complex64::new(0.0, 0.0)) {
                rows.push(i);
                vals.push(z);
            }
        }
        starts.push(rows.len());
        Operator::Sparse { nrows: b.nrows(), starts, rows, vals }
    }

    pub(crate) fn mul(&self, x: &CVector) -> CVector {
        match self {
            Operator::Dense(b) => b * x,
            Operator::Sparse { nrows, starts, rows, vals } => {
                let mut out = CVector::zeros(*nrows);
                for (j, &xj) in x.iter().enumerate() {
                    for k in starts[j]..starts[j + 1] {
                        out[rows[k]] += vals[k] * xj;
                    }
                }
                out
            }
        }
    }

    pub(crate) fn adj_mul(&self, y: &CVector) -> CVector {
        match self {
            Operator::Dense(b) => b.ad_mul(y),
            Operator::Sparse { starts, rows, vals, .. } => CVector::from_iterator(
                starts.len() - 1,
                starts.windows(2).map(|w| (w[0]..w[1]).map(|k| vals[k].conj() * y[rows[k]]).sum()),
            ),
        }
    }
}
