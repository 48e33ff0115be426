use std::time::Instant;

use itertools::Itertools;
use rand::seq::index;

use super::columns::retrieve_columns;
use super::{RecoveryConfig, RecoveryResult, RecoveryStatus, Scheme};
use crate::measurement::MeasurementSet;
use crate::rng::stream;
use crate::sparse_solver::solve_square;
use crate::{CMatrix, CVector, Complex64, Error, Result};

const ROW_RETRIES: usize = 5;

fn enumeration_allowed(n: usize, k: usize) -> bool {
    (n <= 30 && k <= 3) || k <= 1
}

/// First column subset `S` of size `n − K`, in lexicographic order, whose
/// pairs all satisfy `|X_ij − X_ji| ≤ 2γ + tol·max|X|`. `None` when no subset
/// passes.
pub fn consistency_check(x: &CMatrix, k: usize, gamma: f64, tol: f64, max_subsets: usize) -> Result<Option<Vec<usize>>> {
    let n = x.ncols();
    if x.nrows() != n {
        return Err(Error::Shape(format!("candidate is {}×{n}, expected square", x.nrows())));
    }
    if k > n {
        return Err(Error::Config(format!("K = {k} exceeds n = {n}")));
    }
    if !enumeration_allowed(n, k) {
        return Err(Error::SizeGuard(format!("consistency check over C({n}, {k}) subsets is not supported")));
    }
    let threshold = 2.0 * gamma + tol * x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let bad: Vec<(usize, usize)> =
        (0..n).tuple_combinations().filter(|&(i, j)| (x[(i, j)] - x[(j, i)]).norm() > threshold).collect();
    let mut examined = 0usize;
    for s in (0..n).combinations(n - k) {
        examined += 1;
        if examined > max_subsets {
            return Err(Error::SizeGuard(format!("consistency check exceeded {max_subsets} subsets")));
        }
        let mut inside = vec![false; n];
        for &i in &s {
            inside[i] = true;
        }
        if bad.iter().all(|&(i, j)| !(inside[i] && inside[j])) {
            return Ok(Some(s));
        }
    }
    Ok(None)
}

/// Greedy row pivoting on `m`: repeatedly takes the row of largest residual
/// norm and projects it out of the others.
fn pivot_rows(m: &CMatrix, k: usize) -> Vec<usize> {
    let mut rows: Vec<CVector> = (0..m.nrows()).map(|i| m.row(i).transpose()).collect();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let best = (0..rows.len())
            .filter(|i| !chosen.contains(i))
            .max_by(|&a, &b| rows[a].norm().total_cmp(&rows[b].norm()).then(b.cmp(&a)));
        let Some(p) = best else { break };
        chosen.push(p);
        let norm = rows[p].norm();
        if norm == 0.0 {
            continue;
        }
        let q = rows[p].unscale(norm);
        for (i, r) in rows.iter_mut().enumerate() {
            if i != p {
                let c = q.dotc(r);
                *r -= &q * c;
            }
        }
    }
    chosen
}

/// Solves `B_rows x = rhs_rows` for every right-hand side, trying `first`
/// and then up to five seeded random row sets.
fn solve_rows(b_bar: &CMatrix, rhs: &[CVector], first: Vec<usize>, seed: u64) -> Result<Vec<CVector>> {
    let (m, k) = b_bar.shape();
    let mut rows = first;
    let mut rng = stream(seed, 0x7265_736f_6c76);
    let mut last = Error::Singular { cond: f64::INFINITY };
    for attempt in 0..=ROW_RETRIES {
        let sub = b_bar.select_rows(rows.iter());
        let solved: Result<Vec<CVector>> = rhs
            .iter()
            .map(|r| {
                let rr = CVector::from_iterator(k, rows.iter().map(|&i| r[i]));
                solve_square(&sub, &rr).map(|s| s.x)
            })
            .collect();
        match solved {
            Ok(x) => return Ok(x),
            Err(e @ Error::Singular { .. }) => {
                log::debug!("row set {rows:?} singular on attempt {attempt}");
                last = e;
            }
            Err(e) => return Err(e),
        }
        let mut r = index::sample(&mut rng, m, k).into_vec();
        r.sort_unstable();
        rows = r;
    }
    Err(last)
}

/// Completes the columns outside `s`: entries in rows `S` are copied by
/// symmetry, the remaining `K` entries come from a `K × K` row-subselected
/// system.
pub fn resolve_unknowns(ms: &MeasurementSet, x: &CMatrix, s: &[usize], cfg: &RecoveryConfig) -> Result<CMatrix> {
    let n = ms.n();
    if x.shape() != (n, n) {
        return Err(Error::Shape(format!("candidate is {:?}, expected {n}×{n}", x.shape())));
    }
    let mut in_s = vec![false; n];
    for &i in s {
        if i >= n {
            return Err(Error::Shape(format!("accepted column {i} out of range")));
        }
        in_s[i] = true;
    }
    let s_bar: Vec<usize> = (0..n).filter(|&j| !in_s[j]).collect();
    let k = s_bar.len();
    let mut out = x.clone();
    if k == 0 {
        return Ok(out);
    }
    if k > ms.m() {
        return Err(Error::Singular { cond: f64::INFINITY });
    }
    let s: Vec<usize> = (0..n).filter(|&j| in_s[j]).collect();
    for &j in &s_bar {
        for &i in &s {
            out[(i, j)] = x[(j, i)];
        }
    }
    let b_s = ms.b.select_columns(s.iter());
    let b_bar = ms.b.select_columns(s_bar.iter());
    let rhs: Vec<CVector> = s_bar
        .iter()
        .map(|&j| {
            let xs = CVector::from_iterator(s.len(), s.iter().map(|&i| out[(i, j)]));
            ms.a.column(j) - &b_s * xs
        })
        .collect();
    let solved = solve_rows(&b_bar, &rhs, pivot_rows(&b_bar, k), cfg.seed)?;
    for (c, &j) in s_bar.iter().enumerate() {
        for (r, &i) in s_bar.iter().enumerate() {
            out[(i, j)] = ms.field.coerce(solved[c][r]);
        }
    }
    Ok(out)
}

/// Column recovery, consistency check, then completion of the `K` rejected
/// columns.
pub fn three_stage(ms: &MeasurementSet, cfg: &RecoveryConfig) -> Result<RecoveryResult> {
    let start = Instant::now();
    let n = ms.n();
    cfg.validate(n)?;
    let batch = retrieve_columns(ms, cfg.gamma, cfg.cones, &cfg.solver_options())?;
    let column_failures = batch.failures();
    let mut result = RecoveryResult {
        x: batch.x.clone(),
        status: RecoveryStatus::ConsistencyFailed,
        scheme: Scheme::ThreeStage,
        accepted: None,
        scores: Vec::new(),
        column_failures,
        solver_iterations: batch.iterations,
        elapsed: Default::default(),
    };
    match consistency_check(&batch.x, cfg.k, cfg.gamma, cfg.consistency_tol, cfg.max_subsets)? {
        None => log::info!("no subset of {} columns is symmetric-consistent", n - cfg.k),
        Some(s) => {
            match resolve_unknowns(ms, &batch.x, &s, cfg) {
                Ok(x) => {
                    result.x = x;
                    result.status = RecoveryStatus::Success;
                }
                Err(Error::Singular { cond }) => {
                    log::warn!("completion system singular (cond {cond:.3e})");
                    result.status = RecoveryStatus::SolverFailed;
                }
                Err(e) => return Err(e),
            }
            result.accepted = Some(s);
        }
    }
    if result.x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        result.x.fill(Complex64::new(0.0, 0.0));
        result.status = RecoveryStatus::SolverFailed;
    }
    result.elapsed = start.elapsed();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{sample, EnsembleKind, EnsembleSpec};
    use crate::graph_model::{build_graph_matrix, Diagonal, Graph, WeightSampler};
    use crate::measurement::{sample_generator, synthesize, GeneratorSpec};
    use crate::recovery::recover;
    use crate::rng::seeded;
    use crate::{Field, GraphMatrix};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn setup(g: &Graph, m: usize, seed: u64) -> (GraphMatrix, MeasurementSet) {
        let mut rng = seeded(seed);
        let y = build_graph_matrix(g, Field::Complex, &WeightSampler::default(), &Diagonal::RowSum, &mut rng).unwrap();
        let spec = GeneratorSpec { field: Field::Complex, ..Default::default() };
        let b = sample_generator(m, g.n(), &spec, &mut rng).unwrap();
        let ms = synthesize(&b, &y, 0.0, &mut rng).unwrap();
        (y, ms)
    }

    fn symmetric(n: usize, seed: u64) -> CMatrix {
        let mut rng = seeded(seed);
        let mut x = CMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = c(rand::Rng::random_range(&mut rng, -5.0..5.0));
                x[(i, j)] = v;
                x[(j, i)] = v;
            }
        }
        x
    }

    #[test]
    fn symmetric_candidate_takes_first_subset() {
        let x = symmetric(6, 1);
        for k in 0..=3 {
            let s = consistency_check(&x, k, 0.0, 1e-9, usize::MAX).unwrap().unwrap();
            assert_eq!(s, (0..6 - k).collect::<Vec<_>>());
        }
    }

    #[test]
    fn corrupted_last_column_is_excluded() {
        let mut x = symmetric(6, 2);
        for i in 0..5 {
            x[(i, 5)] += c(1.0 + i as f64);
        }
        assert_eq!(consistency_check(&x, 1, 0.0, 1e-9, usize::MAX).unwrap().unwrap(), vec![0, 1, 2, 3, 4]);
        // γ wide enough to absorb the corruption accepts the first subset.
        assert_eq!(consistency_check(&x, 1, 3.0, 0.0, usize::MAX).unwrap().unwrap(), vec![0, 1, 2, 3, 4]);
        assert_eq!(consistency_check(&x, 0, 3.0, 0.0, usize::MAX).unwrap().unwrap(), (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn inconsistent_columns_rejected() {
        let x = CMatrix::from_fn(5, 5, |i, j| c((i * 5 + j) as f64));
        assert_eq!(consistency_check(&x, 1, 0.0, 1e-9, usize::MAX).unwrap(), None);
    }

    #[test]
    fn enumeration_guards() {
        let x = symmetric(31, 3);
        assert!(matches!(consistency_check(&x, 2, 0.0, 0.0, usize::MAX), Err(Error::SizeGuard(_))));
        assert!(consistency_check(&x, 1, 0.0, 0.0, usize::MAX).is_ok());
        let y = CMatrix::from_fn(8, 8, |i, j| c((i * 8 + j) as f64));
        assert!(matches!(consistency_check(&y, 2, 0.0, 0.0, 10), Err(Error::SizeGuard(_))));
    }

    #[test]
    fn k_zero_leaves_candidate() {
        let (y, ms) = setup(&Graph::chain(4), 4, 0);
        let cfg = RecoveryConfig::new(Scheme::ThreeStage);
        let out = resolve_unknowns(&ms, y.matrix(), &[0, 1, 2, 3], &cfg).unwrap();
        assert_eq!(&out, y.matrix());
    }

    #[test]
    fn star_hub_completed_from_leaves() {
        for seed in 0..5 {
            let (y, ms) = setup(&Graph::star(5), 4, seed);
            let mut planted = y.matrix().clone();
            planted.column_mut(0).fill(c(0.0));
            let cfg = RecoveryConfig { k: 1, ..RecoveryConfig::new(Scheme::ThreeStage) };
            let out = resolve_unknowns(&ms, &planted, &[1, 2, 3, 4], &cfg).unwrap();
            // With K = 1 the hub's diagonal is a scalar: (a_0 − B_S y_S)_r / B_{r,0}.
            let r = pivot_rows(&ms.b.columns(0, 1).into_owned(), 1)[0];
            let mut rest = ms.a[(r, 0)];
            for i in 1..5 {
                rest -= ms.b[(r, i)] * y.matrix()[(i, 0)];
            }
            let expect = rest / ms.b[(r, 0)];
            assert!((out[(0, 0)] - expect).norm() < 1e-8);
            assert!((&out - y.matrix()).norm() < 1e-8 * y.matrix().norm(), "seed {seed}");
        }
    }

    #[test]
    fn singular_row_set_is_retried() {
        let b_bar = CMatrix::from_column_slice(4, 1, &[c(0.0), c(2.0), c(3.0), c(-1.0)]);
        let rhs = vec![CVector::from_column_slice(&[c(0.0), c(4.0), c(6.0), c(-2.0)])];
        let x = solve_rows(&b_bar, &rhs, vec![0], 9).unwrap();
        assert!((x[0][0] - c(2.0)).norm() < 1e-12);
        let zero = CMatrix::zeros(3, 1);
        let rhs = vec![CVector::zeros(3)];
        assert!(matches!(solve_rows(&zero, &rhs, vec![0], 9), Err(Error::Singular { .. })));
    }

    #[test]
    fn pivoting_prefers_independent_rows() {
        let m = CMatrix::from_row_slice(3, 2, &[c(1.0), c(0.0), c(2.0), c(0.0), c(0.0), c(1.0)]);
        let rows = pivot_rows(&m, 2);
        assert_eq!(rows, vec![1, 2]);
    }

    #[test]
    fn identity_full_rank_returns_a() {
        let a = symmetric(5, 4);
        let ms = MeasurementSet::new(Field::Real, CMatrix::identity(5, 5), a.clone(), 1.0, 0.0).unwrap();
        let cfg = RecoveryConfig { k: 0, ..RecoveryConfig::new(Scheme::ThreeStage) };
        let r = three_stage(&ms, &cfg).unwrap();
        assert!(r.is_success());
        assert!((r.x - a).norm() < 1e-9);
    }

    #[test]
    fn star_three_stage_beats_column_bp() {
        let (mut ok, mut bp_fail) = (0, 0);
        for seed in 0..10 {
            let (y, ms) = setup(&Graph::star(8), 6, 100 + seed);
            let cfg = RecoveryConfig { k: 1, ..RecoveryConfig::new(Scheme::ThreeStage) };
            let r = three_stage(&ms, &cfg).unwrap();
            let bp = recover(&ms, &RecoveryConfig::new(Scheme::ColumnBp)).unwrap();
            if r.is_success() && (&r.x - y.matrix()).norm() / 64.0 < 1e-6 {
                assert_eq!(r.accepted.as_deref(), Some(&[1, 2, 3, 4, 5, 6, 7][..]));
                ok += 1;
            }
            if (&bp.x - y.matrix()).norm() / 64.0 > 1e-3 {
                bp_fail += 1;
            }
        }
        assert!(ok >= 8, "{ok}/10");
        assert_eq!(bp_fail, 10);
    }

    #[test]
    fn tree_three_stage_mostly_exact() {
        let mut ok = 0;
        for seed in 0..10 {
            let mut rng = seeded(seed);
            let g = sample(&EnsembleSpec::new(EnsembleKind::UniformTree, 10).unwrap(), &mut rng);
            let (y, ms) = setup(&g, 8, 1000 + seed);
            let r = three_stage(&ms, &RecoveryConfig { k: 1, ..RecoveryConfig::new(Scheme::ThreeStage) }).unwrap();
            if r.is_success() && (&r.x - y.matrix()).norm() / 100.0 < 1e-6 {
                ok += 1;
            }
        }
        assert!(ok >= 9, "{ok}/10");
    }
}
