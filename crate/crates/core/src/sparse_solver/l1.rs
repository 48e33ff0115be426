//! ADMM for `min Σ w_j |x_j|` subject to `‖B x − a‖₂ ≤ γ` (per row block) and
//! per-entry sign cones.
//!
//! Splitting: `x` free, `w = x` carries the ℓ1 term and cones, `z = Bx` lies
//! in the residual ball(s). The `x`-update solves `(I + BᴴB) x = q` through
//! a Cholesky factor computed once per matrix, so one [`L1Solver`] serves
//! every right-hand side that shares `B`. `B` is normalised to unit spectral
//! norm internally. Converged iterates are polished by a least-squares solve
//! on the detected support and accepted when a dual certificate confirms
//! optimality.

use std::collections::HashMap;
use std::ops::Range;

use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use super::certify::{certify_l1_blocks, dual_from_admm};
use super::linalg::{least_squares, range_basis, spectral_norm, Operator};
use super::{Cone, SolveReport, SolveStatus, SolverOptions};
use crate::{CMatrix, CVector, Error, Result};

/// Relative size under which polished entries are dropped from the support.
const PRUNE_REL: f64 = 1e-10;
/// Iterations between polishing attempts.
const POLISH_EVERY: usize = 20;
/// Cap on the global spacing of polishing attempts.
const MAX_POLISH_GAP: usize = 2_560;
/// Residual balancing stops after this many iterations so ADMM converges.
const ADAPT_UNTIL: usize = 5_000;
const RELAX: f64 = 1.6;

/// Factorised ℓ1 problem for a fixed matrix `B`.
pub struct L1Solver {
    b: CMatrix,
    op: Operator,
    scale: f64,
    blocks: Vec<Range<usize>>,
    factor: Factor,
    range: Option<CMatrix>,
    opts: SolverOptions,
}

enum Factor {
    /// Cholesky of `I + B̂ᴴB̂` (n × n).
    Normal(Cholesky<Complex64, nalgebra::Dyn>),
    /// Cholesky of `I + B̂B̂ᴴ` (m × m), applied through Woodbury.
    Woodbury(Cholesky<Complex64, nalgebra::Dyn>),
    Zero,
}

impl L1Solver {
    /// Single residual ball over all rows.
    #[allow(clippy::single_range_in_vec_init)]
    pub fn new(b: &CMatrix, opts: &SolverOptions) -> Result<Self> {
        Self::with_blocks(b, vec![0..b.nrows()], opts)
    }

    /// One residual ball of radius `γ` per row block.
    pub fn with_blocks(b: &CMatrix, blocks: Vec<Range<usize>>, opts: &SolverOptions) -> Result<Self> {
        let (m, n) = b.shape();
        if n == 0 {
            return Err(Error::Shape("ℓ1 problem has no unknowns".into()));
        }
        opts.validate(n)?;
        let mut covered = 0;
        for r in &blocks {
            if r.start != covered || r.end > m || r.is_empty() {
                return Err(Error::Shape("row blocks must tile the rows of B".into()));
            }
            covered = r.end;
        }
        if covered != m {
            return Err(Error::Shape("row blocks must tile the rows of B".into()));
        }
        let norm = if m == 0 { 0.0 } else { spectral_norm(b) };
        let (scale, b_hat, factor) = if norm > 0.0 {
            let b_hat = b.unscale(norm);
            let factor = if m < n {
                let g = CMatrix::identity(m, m) + &b_hat * b_hat.adjoint();
                Factor::Woodbury(Cholesky::new(g).ok_or(Error::Singular { cond: f64::INFINITY })?)
            } else {
                let g = CMatrix::identity(n, n) + b_hat.adjoint() * &b_hat;
                Factor::Normal(Cholesky::new(g).ok_or(Error::Singular { cond: f64::INFINITY })?)
            };
            (norm, b_hat, factor)
        } else {
            (1.0, b.clone(), Factor::Zero)
        };
        let range = if opts.gamma == 0.0 && m > 0 && norm > 0.0 { Some(range_basis(b)) } else { None };
        let op = Operator::new(&b_hat);
        Ok(L1Solver { b: b.clone(), op, scale, blocks, factor, range, opts: opts.clone() })
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn nrows(&self) -> usize {
        self.b.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.b.ncols()
    }

    fn apply_inverse(&self, q: &CVector) -> CVector {
        match &self.factor {
            Factor::Normal(ch) => ch.solve(q),
            Factor::Woodbury(ch) => {
                let t = ch.solve(&self.op.mul(q));
                q - self.op.adj_mul(&t)
            }
            Factor::Zero => q.clone(),
        }
    }

    fn block_residuals(&self, x: &CVector, a: &CVector) -> f64 {
        let r = &self.b * x - a;
        self.blocks.iter().map(|blk| r.rows(blk.start, blk.len()).norm()).fold(0.0, f64::max)
    }

    /// Largest block norm of `a` less the radius: positive means `x = 0` is infeasible.
    fn zero_is_feasible(&self, a: &CVector, opts: &SolverOptions) -> bool {
        self.blocks.iter().all(|blk| a.rows(blk.start, blk.len()).norm() <= opts.gamma)
    }

    #[allow(clippy::too_many_arguments)]
    fn report(
        &self,
        opts: &SolverOptions,
        x: CVector,
        a: &CVector,
        iterations: usize,
        status: SolveStatus,
        certified: bool,
        dual: Option<CVector>,
    ) -> SolveReport {
        let residual = self.block_residuals(&x, a);
        let objective = opts.objective(&x);
        SolveReport { x, residual, objective, iterations, status, certified, dual }
    }

    /// Infeasibility of the unconstrained residual ball, if detectable up front.
    fn infeasibility(&self, a: &CVector, opts: &SolverOptions) -> Option<f64> {
        let gamma = opts.gamma;
        if gamma == 0.0 {
            let range = self.range.as_ref()?;
            let resid = (a - range * (range.adjoint() * a)).norm();
            let slack = 1e-8 * a.norm().max(f64::MIN_POSITIVE);
            (resid > slack).then_some(resid)
        } else if self.blocks.len() == 1 {
            let x = least_squares(&self.b, a).ok()?;
            let resid = (&self.b * x - a).norm();
            (resid > gamma * (1.0 + 1e-9)).then_some(resid)
        } else {
            None
        }
    }

    pub fn solve(&self, a: &CVector) -> Result<SolveReport> {
        self.solve_opts(a, &self.opts)
    }

    /// Solves with per-entry cones replacing those given at construction.
    pub fn solve_with_cones(&self, a: &CVector, cones: Option<&[Cone]>) -> Result<SolveReport> {
        let opts = SolverOptions { cones: cones.map(<[Cone]>::to_vec), ..self.opts.clone() };
        opts.validate(self.b.ncols())?;
        self.solve_opts(a, &opts)
    }

    fn solve_opts(&self, a: &CVector, opts: &SolverOptions) -> Result<SolveReport> {
        let (m, n) = self.b.shape();
        if a.len() != m {
            return Err(Error::Shape(format!("right-hand side has length {}, expected {m}", a.len())));
        }
        if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Config("right-hand side contains non-finite values".into()));
        }
        if self.zero_is_feasible(a, opts) {
            let x = CVector::zeros(n);
            return Ok(self.report(opts, x, a, 0, SolveStatus::Optimal, true, Some(CVector::zeros(m))));
        }
        if let Some(resid) = self.infeasibility(a, opts) {
            log::debug!("ℓ1 problem infeasible: least-squares residual {resid:.3e}");
            return Ok(self.report(opts, CVector::zeros(n), a, 0, SolveStatus::Infeasible, false, None));
        }
        if matches!(self.factor, Factor::Zero) {
            // B = 0 and a outside the ball.
            return Ok(self.report(opts, CVector::zeros(n), a, 0, SolveStatus::Infeasible, false, None));
        }
        self.admm(a, opts)
    }

    fn admm(&self, a: &CVector, opts: &SolverOptions) -> Result<SolveReport> {
        let (m, n) = self.b.shape();
        let a_hat = a.unscale(self.scale);
        let gamma_hat = opts.gamma / self.scale;
        let a_scale = a_hat.norm().max(f64::MIN_POSITIVE);

        // The minimum-norm solution sets the magnitude of the unknowns.
        let x_scale = (a_scale / (n as f64).sqrt()).max(f64::MIN_POSITIVE);
        let mut rho = opts.rho.unwrap_or(1.0 / x_scale);

        let mut x: CVector;
        let mut w = CVector::zeros(n);
        let mut z = a_hat.clone();
        let mut u = CVector::zeros(n);
        let mut v = CVector::zeros(m);

        let eps_abs = opts.tol * a_scale / ((m + n) as f64).sqrt();
        let mut last_support: Option<Vec<usize>> = None;
        let (mut tried, mut certs) = (Backoff::default(), Backoff::default());
        let (mut next_polish, mut polish_gap) = (0, POLISH_EVERY / 2);
        let mut converged = false;
        let mut iters = 0;

        while iters < opts.max_iters {
            iters += 1;
            let q = (&w - &u) + self.op.adj_mul(&(&z - &v));
            x = self.apply_inverse(&q);
            let bx = self.op.mul(&x);

            let x_rel = x.scale(RELAX) + w.scale(1.0 - RELAX);
            let bx_rel = bx.scale(RELAX) + z.scale(1.0 - RELAX);

            let w_old = std::mem::replace(&mut w, self.prox(opts, &(&x_rel + &u), rho));
            let z_old = std::mem::replace(&mut z, self.project_balls(&(&bx_rel + &v), &a_hat, gamma_hat));

            u += &x_rel - &w;
            v += &bx_rel - &z;

            let r_pri = ((&x - &w).norm_squared() + (&bx - &z).norm_squared()).sqrt();
            let s_dual = if gamma_hat == 0.0 {
                rho * (&w - &w_old).norm()
            } else {
                rho * ((&w - &w_old) + self.op.adj_mul(&(&z - &z_old))).norm()
            };
            let primal_scale = (x.norm_squared() + bx.norm_squared()).sqrt().max((w.norm_squared() + z.norm_squared()).sqrt());
            let dual_scale = rho * (&u + self.op.adj_mul(&v)).norm();
            let eps_pri = eps_abs * ((m + n) as f64).sqrt() + opts.tol * primal_scale;
            let eps_dual = opts.tol * (dual_scale.max(1.0));

            if r_pri <= eps_pri && s_dual <= eps_dual {
                converged = true;
                break;
            }

            if self.can_polish(opts) && iters % POLISH_EVERY == 0 {
                let support: Vec<usize> = (0..n).filter(|&j| w[j] != Complex64::new(0.0, 0.0)).collect();
                let stable = last_support.as_ref() == Some(&support) && support.len() <= m;
                if stable && iters >= next_polish && tried.due(&support, iters) {
                    let nu = dual_from_admm(&v, rho, self.scale);
                    if let Some(report) = self.polish(opts, a, &w, &support, &nu, iters, &mut certs) {
                        return Ok(report);
                    }
                    tried.fail(support.clone(), iters);
                    // Every failure also spaces out later attempts on any support.
                    polish_gap = (2 * polish_gap).min(MAX_POLISH_GAP);
                    next_polish = iters + polish_gap;
                }
                last_support = Some(support);
            }

            if opts.rho.is_none() && iters < ADAPT_UNTIL && iters % 10 == 0 {
                let factor = if r_pri > 10.0 * s_dual {
                    2.0
                } else if s_dual > 10.0 * r_pri {
                    0.5
                } else {
                    1.0
                };
                if factor != 1.0 {
                    rho *= factor;
                    u.unscale_mut(factor);
                    v.unscale_mut(factor);
                }
            }
        }

        let nu = dual_from_admm(&v, rho, self.scale);
        if self.can_polish(opts) {
            let support: Vec<usize> = (0..n).filter(|&j| w[j] != Complex64::new(0.0, 0.0)).collect();
            if support.len() <= m {
                if let Some(report) = self.polish(opts, a, &w, &support, &nu, iters, &mut certs) {
                    return Ok(report);
                }
            }
        }

        // `w` satisfies the cones exactly; `x` satisfies B x ≈ a. Report `w`.
        let certified = certify_l1_blocks(&self.b, a, &w, &self.blocks, opts, Some(&nu));
        let status = if converged {
            SolveStatus::Optimal
        } else if self.cone_infeasible(a, opts) {
            SolveStatus::Infeasible
        } else {
            SolveStatus::MaxIters
        };
        Ok(self.report(opts, w, a, iters, status, certified, Some(nu)))
    }

    /// `prox` of `Σ w_j|x_j|/ρ + I_cone`: project onto the cone, then shrink
    /// radially. For axis-aligned cones this composition is the exact prox.
    fn prox(&self, opts: &SolverOptions, v: &CVector, rho: f64) -> CVector {
        CVector::from_iterator(
            v.len(),
            v.iter().enumerate().map(|(j, &vj)| {
                let p = opts.cone(j).project(vj);
                let mag = p.norm();
                let thr = opts.weight(j) / rho;
                if mag <= thr {
                    Complex64::new(0.0, 0.0)
                } else {
                    p * ((mag - thr) / mag)
                }
            }),
        )
    }

    fn project_balls(&self, v: &CVector, center: &CVector, radius: f64) -> CVector {
        if radius == 0.0 {
            return center.clone();
        }
        let mut out = v.clone();
        for blk in &self.blocks {
            let d = v.rows(blk.start, blk.len()) - center.rows(blk.start, blk.len());
            let norm = d.norm();
            if norm > radius {
                let proj = center.rows(blk.start, blk.len()) + d.scale(radius / norm);
                out.rows_mut(blk.start, blk.len()).copy_from(&proj);
            }
        }
        out
    }

    fn can_polish(&self, opts: &SolverOptions) -> bool {
        opts.polish && (opts.gamma == 0.0 || self.blocks.len() == 1)
    }

    #[allow(clippy::too_many_arguments)]
    fn polish(
        &self,
        opts: &SolverOptions,
        a: &CVector,
        w: &CVector,
        support: &[usize],
        nu: &CVector,
        iters: usize,
        certs: &mut Backoff,
    ) -> Option<SolveReport> {
        let x = if opts.gamma == 0.0 {
            self.polish_exact(opts, a, support)?
        } else {
            self.polish_ball(opts, a, w, support)?
        };
        let key: Vec<usize> = (0..x.len()).filter(|&j| x[j] != Complex64::new(0.0, 0.0)).collect();
        if !certs.due(&key, iters) {
            return None;
        }
        if certify_l1_blocks(&self.b, a, &x, &self.blocks, opts, Some(nu)) {
            Some(self.report(opts, x, a, iters, SolveStatus::Optimal, true, Some(nu.clone())))
        } else {
            certs.fail(key, iters);
            None
        }
    }

    /// Single ball on a fixed support: Newton on the stationarity system
    /// `w∘sign(x_S) = λ B_Sᴴ r`, `‖r‖ = γ`, `r = a − B_S x_S`, in real
    /// coordinates, started from the ADMM iterate.
    fn polish_ball(&self, opts: &SolverOptions, a: &CVector, w: &CVector, support: &[usize]) -> Option<CVector> {
        let (m, n, k) = (self.b.nrows(), self.b.ncols(), support.len());
        if k == 0 || support.iter().any(|&j| w[j].norm() == 0.0) {
            return None;
        }
        let bs = self.b.select_columns(support.iter());
        let mr = DMatrix::from_fn(2 * m, 2 * k, |i, j| {
            let z = bs[(i / 2, j / 2)];
            match (i % 2, j % 2) {
                (0, 0) | (1, 1) => z.re,
                (0, 1) => -z.im,
                _ => z.im,
            }
        });
        let ar = DVector::from_fn(2 * m, |i, _| if i % 2 == 0 { a[i / 2].re } else { a[i / 2].im });
        let mut u = DVector::from_fn(2 * k, |i, _| {
            let z = w[support[i / 2]];
            if i % 2 == 0 { z.re } else { z.im }
        });
        let grad = |u: &DVector<f64>| {
            DVector::from_fn(2 * k, |i, _| {
                let (re, im) = (u[i & !1], u[i | 1]);
                opts.weight(support[i / 2]) * u[i] / re.hypot(im)
            })
        };
        let r = &ar - &mr * &u;
        let mtr = mr.transpose() * &r;
        let mut lambda = grad(&u).dot(&mtr) / mtr.norm_squared().max(f64::MIN_POSITIVE);
        let gamma2 = opts.gamma * opts.gamma;
        let scale = ar.norm().max(f64::MIN_POSITIVE);
        let mut converged = false;
        for _ in 0..50 {
            let r = &ar - &mr * &u;
            let mtr = mr.transpose() * &r;
            let f1 = grad(&u) - mtr.scale(lambda);
            let f2 = 0.5 * (r.norm_squared() - gamma2);
            if f1.norm() < 1e-13 * (1.0 + lambda.abs() * scale) && f2.abs() < 1e-13 * scale * scale {
                converged = true;
                break;
            }
            let mut jac = DMatrix::zeros(2 * k + 1, 2 * k + 1);
            let mut hess = mr.transpose() * &mr * lambda;
            for j in 0..k {
                let (re, im) = (u[2 * j], u[2 * j + 1]);
                let mag = re.hypot(im);
                if mag == 0.0 {
                    return None;
                }
                let c = opts.weight(support[j]) / (mag * mag * mag);
                hess[(2 * j, 2 * j)] += c * im * im;
                hess[(2 * j + 1, 2 * j + 1)] += c * re * re;
                hess[(2 * j, 2 * j + 1)] -= c * re * im;
                hess[(2 * j + 1, 2 * j)] -= c * re * im;
            }
            jac.view_mut((0, 0), (2 * k, 2 * k)).copy_from(&hess);
            jac.view_mut((0, 2 * k), (2 * k, 1)).copy_from(&(-&mtr));
            jac.view_mut((2 * k, 0), (1, 2 * k)).copy_from(&(-&mtr).transpose());
            let mut rhs = DVector::zeros(2 * k + 1);
            rhs.rows_mut(0, 2 * k).copy_from(&(-f1));
            rhs[2 * k] = -f2;
            let step = jac.lu().solve(&rhs)?;
            u += step.rows(0, 2 * k);
            lambda += step[2 * k];
            if !lambda.is_finite() || u.iter().any(|v| !v.is_finite()) {
                return None;
            }
        }
        if !converged || lambda <= 0.0 {
            return None;
        }
        let mut x = CVector::zeros(n);
        for (i, &j) in support.iter().enumerate() {
            x[j] = Complex64::new(u[2 * i], u[2 * i + 1]);
        }
        let x_scale = x.norm().max(f64::MIN_POSITIVE);
        if (0..n).any(|j| opts.cone(j).violation(x[j]) > 1e-12 * x_scale) {
            return None;
        }
        Some(x)
    }

    /// Least squares on `support`, pruned of negligible entries, kept only
    /// if it is feasible and respects the cones.
    fn polish_exact(&self, opts: &SolverOptions, a: &CVector, support: &[usize]) -> Option<CVector> {
        let n = self.b.ncols();
        let mut support = support.to_vec();
        let mut x = CVector::zeros(n);
        for _ in 0..3 {
            if support.is_empty() {
                break;
            }
            let bs = self.b.select_columns(support.iter());
            let xs = fast_least_squares(&bs, a)?;
            let peak = xs.iter().map(|z| z.norm()).fold(0.0, f64::max);
            let keep: Vec<usize> =
                support.iter().zip(xs.iter()).filter(|(_, z)| z.norm() > PRUNE_REL * peak).map(|(&j, _)| j).collect();
            x.fill(Complex64::new(0.0, 0.0));
            if keep.len() == support.len() {
                for (&j, &val) in support.iter().zip(xs.iter()) {
                    x[j] = val;
                }
                break;
            }
            support = keep;
        }
        let scale = a.norm().max(f64::MIN_POSITIVE);
        let x_scale = x.norm().max(f64::MIN_POSITIVE);
        if (&self.b * &x - a).norm() > 1e-9 * scale {
            return None;
        }
        if (0..n).any(|j| opts.cone(j).violation(x[j]) > 1e-12 * x_scale) {
            return None;
        }
        for j in 0..n {
            x[j] = opts.cone(j).project(x[j]);
        }
        Some(x)
    }

    /// Whether the cones exclude every point of the residual ball(s): the
    /// cone-constrained least-squares residual, found by projected gradient,
    /// exceeds `γ`.
    fn cone_infeasible(&self, a: &CVector, opts: &SolverOptions) -> bool {
        if opts.cones.is_none() || self.blocks.len() != 1 {
            return false;
        }
        let a_hat = a.unscale(self.scale);
        let n = self.b.ncols();
        let mut x = CVector::zeros(n);
        let mut y = x.clone();
        let mut t = 1.0f64;
        for _ in 0..5_000 {
            let grad = self.op.adj_mul(&(self.op.mul(&y) - &a_hat));
            let step = &y - grad;
            let x_new = CVector::from_iterator(n, step.iter().enumerate().map(|(j, &s)| opts.cone(j).project(s)));
            let t_new = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
            y = &x_new + (&x_new - &x).scale((t - 1.0) / t_new);
            x = x_new;
            t = t_new;
        }
        let resid = (self.op.mul(&x) - &a_hat).norm() * self.scale;
        resid > opts.gamma * (1.0 + 1e-6) + 1e-9 * a.norm()
    }
}

/// Supports whose polishing failed, retried at doubling intervals.
#[derive(Default)]
struct Backoff(HashMap<Vec<usize>, (usize, usize)>);

impl Backoff {
    fn due(&self, key: &[usize], iters: usize) -> bool {
        self.0.get(key).is_none_or(|&(next, _)| iters >= next)
    }

    fn fail(&mut self, key: Vec<usize>, iters: usize) {
        let gap = self.0.get(&key).map_or(2 * POLISH_EVERY, |&(_, g)| 2 * g);
        self.0.insert(key, (iters + gap, gap));
    }
}

/// Normal equations first; the SVD only runs when that residual is already
/// close to zero, since a clearly non-zero residual rules the support out.
fn fast_least_squares(bs: &CMatrix, a: &CVector) -> Option<CVector> {
    let scale = a.norm().max(f64::MIN_POSITIVE);
    if let Some(ch) = (bs.adjoint() * bs).cholesky() {
        let x = ch.solve(&bs.ad_mul(a));
        let resid = (bs * &x - a).norm();
        if resid <= 1e-12 * scale {
            return Some(x);
        }
        if resid > 1e-6 * scale {
            return None;
        }
    }
    least_squares(bs, a).ok()
}

/// One-shot ℓ1 solve; see [`L1Solver`] to reuse a factorisation.
pub fn solve_l1(b: &CMatrix, a: &CVector, opts: &SolverOptions) -> Result<SolveReport> {
    L1Solver::new(b, opts)?.solve(a)
}
