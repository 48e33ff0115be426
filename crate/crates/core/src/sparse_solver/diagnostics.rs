//! Brute-force matrix diagnostics. All three are combinatorial and guarded by
//! size limits.

use itertools::Itertools;
use serde::Serialize;

use super::linalg::{singular_values, RANK_TOL, SINGULAR_COND};
use crate::{CMatrix, Error, Result};

pub const DIAGNOSTIC_MAX_N: usize = 20;
pub const XI_MAX_N: usize = 14;
pub const XI_MAX_K: usize = 3;

fn guard_n(b: &CMatrix, limit: usize, what: &str) -> Result<()> {
    if b.ncols() > limit {
        return Err(Error::SizeGuard(format!("{what} enumerates column subsets; n = {} exceeds {limit}", b.ncols())));
    }
    Ok(())
}

fn is_rank_deficient(sub: &CMatrix) -> bool {
    if sub.ncols() == 0 {
        return false;
    }
    let s = singular_values(sub);
    let (hi, lo) = (s[0], s[s.len() - 1]);
    sub.nrows() < sub.ncols() || hi == 0.0 || lo < RANK_TOL * hi
}

/// Smallest number of linearly dependent columns; `n + 1` when the columns
/// are independent.
pub fn spark(b: &CMatrix) -> Result<usize> {
    guard_n(b, DIAGNOSTIC_MAX_N, "spark")?;
    let (m, n) = b.shape();
    for k in 1..=n {
        if k > m {
            return Ok(k);
        }
        if (0..n).combinations(k).any(|cols| is_rank_deficient(&b.select_columns(cols.iter()))) {
            return Ok(k);
        }
    }
    Ok(n + 1)
}

/// Restricted isometry constant `δ_μ`. By singular-value interlacing only
/// subsets of size exactly `min(μ, n)` need to be examined.
pub fn ric(b: &CMatrix, mu: usize) -> Result<f64> {
    guard_n(b, DIAGNOSTIC_MAX_N, "ric")?;
    let (m, n) = b.shape();
    let k = mu.min(n);
    if k == 0 {
        return Ok(0.0);
    }
    let mut delta: f64 = 0.0;
    for cols in (0..n).combinations(k) {
        let s = singular_values(&b.select_columns(cols.iter()));
        let hi = s[0];
        let lo = if k > m { 0.0 } else { s[s.len() - 1] };
        delta = delta.max((hi * hi - 1.0).abs()).max((1.0 - lo * lo).abs());
    }
    Ok(delta)
}

/// `ξ(B) = max ‖B_S‖₂ ‖(B^𝒦_S̄)⁻¹‖₂` over column sets `|S̄| = K` (with
/// `S` the complement) and row sets `|𝒦| = K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XiReport {
    /// Maximum over the invertible `K × K` submatrices.
    pub value: f64,
    /// Number of `(S̄, 𝒦)` pairs whose submatrix is singular.
    pub singular_pairs: usize,
    pub pairs: usize,
}

impl XiReport {
    /// `+∞` when any submatrix is singular.
    pub fn strict(&self) -> f64 {
        if self.singular_pairs > 0 {
            f64::INFINITY
        } else {
            self.value
        }
    }
}

pub fn xi(b: &CMatrix, k: usize) -> Result<XiReport> {
    guard_n(b, XI_MAX_N, "xi")?;
    let (m, n) = b.shape();
    if k > XI_MAX_K {
        return Err(Error::SizeGuard(format!("xi supports K <= {XI_MAX_K}, got {k}")));
    }
    if k > m || k > n {
        return Err(Error::Config(format!("K = {k} exceeds the dimensions of a {m}×{n} matrix")));
    }
    if k == 0 {
        return Ok(XiReport { value: 0.0, singular_pairs: 0, pairs: 0 });
    }
    let mut report = XiReport { value: 0.0, singular_pairs: 0, pairs: 0 };
    for cols_bar in (0..n).combinations(k) {
        let rest: Vec<usize> = (0..n).filter(|j| !cols_bar.contains(j)).collect();
        let rest_norm = if rest.is_empty() { 0.0 } else { singular_values(&b.select_columns(rest.iter()))[0] };
        let b_bar = b.select_columns(cols_bar.iter());
        for rows in (0..m).combinations(k) {
            report.pairs += 1;
            let s = singular_values(&b_bar.select_rows(rows.iter()));
            let (hi, lo) = (s[0], s[s.len() - 1]);
            if lo == 0.0 || hi / lo > SINGULAR_COND {
                report.singular_pairs += 1;
                continue;
            }
            report.value = report.value.max(rest_norm / lo);
        }
    }
    Ok(report)
}
