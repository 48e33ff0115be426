//! Closed-form sample-complexity bounds.
//!
//! Entropies and the Fano-type floors are in nats. The achievability count
//! [`sufficient_m_noiseless`] uses the binary logarithm.

use serde::{Deserialize, Serialize};

use crate::ensembles::SparsityProfile;
use crate::sparse_solver::{ric, spectral_norm, xi, XiReport};
use crate::{CMatrix, Error, Result};

/// Binary entropy in nats, with `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.ln() - (1.0 - p) * (1.0 - p).ln()
}

/// `ln |T(n)| = (n − 2) ln n` by Cayley's formula.
pub fn entropy_uniform_trees(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::Config(format!("tree entropy needs n >= 2, got {n}")));
    }
    Ok((n as f64 - 2.0) * (n as f64).ln())
}

/// `h(p) · n(n−1)/2`.
pub fn entropy_er(n: usize, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("edge probability must lie in [0, 1], got {p}")));
    }
    Ok(binary_entropy(p) * (n * n.saturating_sub(1)) as f64 / 2.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub n: usize,
    pub m: usize,
    pub sigma_s: f64,
    pub sigma_n: f64,
    /// `max |Y_ij|`.
    pub y_bar: f64,
    /// Entropy of the graph distribution, in nats.
    pub entropy_nats: f64,
    #[serde(default)]
    pub mu: usize,
    #[serde(default, rename = "K")]
    pub k: usize,
}

impl BoundInputs {
    pub fn with_m(&self, m: usize) -> Self {
        BoundInputs { m, ..*self }
    }

    pub fn is_noisy(&self) -> bool {
        self.sigma_n > 0.0
    }
}

fn fano(n: usize, m: usize, log_term: f64, entropy: f64) -> f64 {
    if entropy <= 0.0 {
        return 0.0;
    }
    let v = 1.0 - (n * m) as f64 * log_term / (2.0 * entropy);
    if v.is_nan() {
        1.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// `ε_P ≥ 1 − n m ln(2πe Ȳ σ_S²) / (2 H)`, clamped to `[0, 1]`.
pub fn fano_floor_noiseless(inputs: &BoundInputs) -> f64 {
    let arg = 2.0 * std::f64::consts::PI * std::f64::consts::E * inputs.y_bar * inputs.sigma_s.powi(2);
    fano(inputs.n, inputs.m, arg.ln(), inputs.entropy_nats)
}

/// `ε_T ≥ 1 − n m ln(1 + Ȳ σ_S²/σ_N²) / (2 H)`, clamped to `[0, 1]`.
pub fn fano_floor_noisy(inputs: &BoundInputs) -> f64 {
    let snr = inputs.y_bar * inputs.sigma_s.powi(2) / inputs.sigma_n.powi(2);
    fano(inputs.n, inputs.m, snr.ln_1p(), inputs.entropy_nats)
}

/// The noisy floor when `σ_N > 0`, otherwise the noiseless one.
pub fn fano_floor(inputs: &BoundInputs) -> f64 {
    if inputs.is_noisy() {
        fano_floor_noisy(inputs)
    } else {
        fano_floor_noiseless(inputs)
    }
}

/// Smallest `m ≥ 1` whose applicable floor is at most `target`; `None` when
/// the floor never drops (non-positive information per measurement).
pub fn min_measurements(inputs: &BoundInputs, target: f64) -> Result<Option<usize>> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Config(format!("target error must lie in (0, 1), got {target}")));
    }
    if fano_floor(&inputs.with_m(1)) <= target {
        return Ok(Some(1));
    }
    // The floor is affine in m before clamping: 1 − m·slope.
    let slope = 1.0 - fano_floor(&inputs.with_m(1));
    if !(slope > 0.0) {
        return Ok(None);
    }
    let mut m = ((1.0 - target) / slope).ceil().max(1.0) as usize;
    while m > 1 && fano_floor(&inputs.with_m(m - 1)) <= target {
        m -= 1;
    }
    while fano_floor(&inputs.with_m(m)) > target {
        m += 1;
    }
    Ok(Some(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SufficientM {
    pub m: usize,
    /// False outside `n/μ > 2, μ ≥ 4`, where the constant 48 is not claimed.
    pub valid: bool,
}

/// `⌈48 μ (3 + 2 log₂(n/μ))⌉ + 2K`.
pub fn sufficient_m_noiseless(mu: usize, k: usize, n: usize) -> SufficientM {
    let valid = mu >= 4 && n > 2 * mu;
    if mu == 0 {
        return SufficientM { m: 2 * k, valid: false };
    }
    let ratio = n as f64 / mu as f64;
    let base = 48.0 * mu as f64 * (3.0 + 2.0 * ratio.log2());
    SufficientM { m: base.max(0.0).ceil() as usize + 2 * k, valid }
}

/// Uniform spanning trees are `(μ, K, 1/K)`-sparse.
pub fn tree_sparsity_profile(mu: usize, k: usize) -> Result<SparsityProfile> {
    if mu < 1 || k == 0 {
        return Err(Error::Config(format!("tree profile needs mu >= 1 and K > 0, got mu {mu}, K {k}")));
    }
    Ok(SparsityProfile { mu, k, rho: 1.0 / k as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErProfile {
    pub profile: SparsityProfile,
    /// `μ_min` exceeds `n − 2`, so the profile says nothing.
    pub degenerate: bool,
}

/// `μ_min = ⌈2n h(p) / ln(1/p)⌉`, `ρ = min(1, n e^{−n h(p)} / K)`.
pub fn er_sparsity_profile(n: usize, p: f64, k: usize) -> Result<ErProfile> {
    if !(p > 0.0 && p < 1.0) || k == 0 {
        return Err(Error::Config(format!("ER profile needs 0 < p < 1 and K > 0, got p {p}, K {k}")));
    }
    let h = binary_entropy(p);
    let nf = n as f64;
    let mu = (2.0 * nf * h / (1.0 / p).ln()).ceil() as usize;
    let rho = (nf * (-nf * h).exp() / k as f64).min(1.0);
    Ok(ErProfile { profile: SparsityProfile { mu, k, rho }, degenerate: mu + 2 > n })
}

/// `γ = √n σ_N`, also the default per-column radius `Γ`.
pub fn default_gamma(n: usize, sigma_n: f64) -> f64 {
    (n as f64).sqrt() * sigma_n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EtaBound {
    pub eta: f64,
    pub delta_2k: f64,
    pub xi: XiReport,
    pub spectral_norm: f64,
}

/// `η = 2 (nΓ + (Γ‖B‖₂ + γ)/(1 − δ_2K)) (2(n − K) + K ξ(B))` with `δ_2K` and
/// `ξ(B)` evaluated by enumeration. `ξ` is the maximum over the invertible
/// `K × K` submatrices; [`XiReport::singular_pairs`] records the rest.
pub fn eta_bound(b: &CMatrix, k: usize, gamma: f64, big_gamma: f64) -> Result<EtaBound> {
    let n = b.ncols();
    if k > n {
        return Err(Error::Config(format!("K = {k} exceeds n = {n}")));
    }
    let delta_2k = ric(b, 2 * k)?;
    if delta_2k >= 1.0 {
        return Err(Error::DegenerateRic { delta: delta_2k });
    }
    let xi = xi(b, k)?;
    let norm = spectral_norm(b);
    let nf = n as f64;
    let eta = 2.0 * (nf * big_gamma + (big_gamma * norm + gamma) / (1.0 - delta_2k))
        * (2.0 * (nf - k as f64) + k as f64 * xi.value);
    Ok(EtaBound { eta, delta_2k, xi, spectral_norm: norm })
}

/// Everything computable from `inputs`, for the CLI report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub inputs: BoundInputs,
    pub fano_floor_noiseless: f64,
    pub fano_floor_noisy: Option<f64>,
    pub target: f64,
    pub min_measurements: Option<usize>,
    pub sufficient_m_noiseless: SufficientM,
    pub gamma_default: f64,
}

pub fn report(inputs: &BoundInputs, target: f64) -> Result<BoundsReport> {
    Ok(BoundsReport {
        inputs: *inputs,
        fano_floor_noiseless: fano_floor_noiseless(inputs),
        fano_floor_noisy: inputs.is_noisy().then(|| fano_floor_noisy(inputs)),
        target,
        min_measurements: min_measurements(inputs, target)?,
        sufficient_m_noiseless: sufficient_m_noiseless(inputs.mu, inputs.k, inputs.n),
        gamma_default: default_gamma(inputs.n, inputs.sigma_n),
    })
}
