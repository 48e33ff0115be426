use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{metrics, Metrics, DEFAULT_PARAM_NOISELESS, DEFAULT_PARAM_NOISY, DEFAULT_TOPO_THRESHOLD};
use crate::bounds::default_gamma;
use crate::ensembles::{binomial_half_width, sample, EnsembleSpec};
use crate::graph_model::{build_graph_matrix, Diagonal, WeightSampler};
use crate::measurement::{sample_generator, synthesize, GeneratorSpec, MeasurementSet};
use crate::recovery::{recover, RecoveryConfig, RecoveryStatus};
use crate::rng::stream;
use crate::{CMatrix, Error, Field, GraphMatrix, Result};

/// How the generator matrix of each trial is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorPreset {
    /// IID Gaussian with standard deviation `σ_S`.
    #[default]
    Gaussian,
    /// `σ_S = 1/√m`.
    GaussianScaled,
    /// `B = I`; needs `m = n`.
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub ensemble: EnsembleSpec,
    pub m: usize,
    pub field: Field,
    pub generator: GeneratorPreset,
    pub sigma_s: f64,
    /// Mean of the generator's real parts (complex field only).
    pub mean_re: f64,
    pub sigma_n: f64,
    pub weights: WeightSampler,
    pub diagonal: Diagonal,
    /// `recovery.gamma` is replaced by this, or by `√n·σ_N` when absent.
    pub gamma: Option<f64>,
    pub recovery: RecoveryConfig,
    pub trials: usize,
    pub seed: u64,
    pub topo_threshold: f64,
    /// Defaults to `1e-6` without noise and `1e-4` with.
    pub param_threshold: Option<f64>,
    pub keep_logs: bool,
}

impl TrialSpec {
    pub fn new(ensemble: EnsembleSpec, m: usize, recovery: RecoveryConfig) -> Self {
        TrialSpec {
            ensemble,
            m,
            field: Field::Complex,
            generator: GeneratorPreset::Gaussian,
            sigma_s: 1.0,
            mean_re: 0.0,
            sigma_n: 0.0,
            weights: WeightSampler::default(),
            diagonal: Diagonal::RowSum,
            gamma: None,
            recovery,
            trials: 50,
            seed: 0,
            topo_threshold: DEFAULT_TOPO_THRESHOLD,
            param_threshold: None,
            keep_logs: false,
        }
    }

    pub fn n(&self) -> usize {
        self.ensemble.n
    }

    pub fn param_threshold(&self) -> f64 {
        self.param_threshold.unwrap_or(if self.sigma_n > 0.0 { DEFAULT_PARAM_NOISY } else { DEFAULT_PARAM_NOISELESS })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or_else(|| default_gamma(self.n(), self.sigma_n))
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        let n = self.n();
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.m == 0 {
            return Err(Error::Config("m must be at least 1".into()));
        }
        if self.generator == GeneratorPreset::Identity && self.m != n {
            return Err(Error::Config(format!("identity generator needs m = n = {n}, got m = {}", self.m)));
        }
        if !(self.topo_threshold > 0.0) || !(self.param_threshold() > 0.0) {
            return Err(Error::Config("success thresholds must be positive".into()));
        }
        if !(self.sigma_n >= 0.0) {
            return Err(Error::Config(format!("sigma_N must be non-negative, got {}", self.sigma_n)));
        }
        let gamma = self.gamma();
        RecoveryConfig { gamma, ..self.recovery.clone() }.validate(n)
    }

    fn generator_spec(&self) -> GeneratorSpec {
        let sigma_s = match self.generator {
            GeneratorPreset::GaussianScaled => 1.0 / (self.m as f64).sqrt(),
            _ => self.sigma_s,
        };
        GeneratorSpec { field: self.field, sigma_s, mean_re: self.mean_re }
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialLog {
    pub trial: usize,
    pub status: Option<RecoveryStatus>,
    pub metrics: Option<Metrics>,
    pub topo_ok: bool,
    pub param_ok: bool,
    pub runtime_ms: f64,
    /// Numerical error that aborted the trial, if any.
    pub error: Option<String>,
}

impl TrialLog {
    pub fn success(&self) -> bool {
        self.topo_ok && self.param_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialSummary {
    pub trials: usize,
    pub eps_t: f64,
    pub eps_p: f64,
    /// Fraction of trials meeting both criteria.
    pub success_rate: f64,
    /// Mean over trials that produced an estimate.
    pub mean_frob: f64,
    pub ci_t: f64,
    pub ci_p: f64,
    pub mean_runtime_ms: f64,
    pub logs: Vec<TrialLog>,
}

// Per-trial stream layout: graph and weights, generator, noise.
const STREAMS: u64 = 4;

/// Graph matrix and measurements of trial `t`. Streams depend on `(seed, t)`
/// only, so the generator of a smaller `m` is the leading rows of a larger one.
pub fn draw_instance(spec: &TrialSpec, t: usize) -> Result<(GraphMatrix, MeasurementSet)> {
    let n = spec.n();
    let base = t as u64 * STREAMS;
    let mut g_rng = stream(spec.seed, base);
    let graph = sample(&spec.ensemble, &mut g_rng);
    let y = build_graph_matrix(&graph, spec.field, &spec.weights, &spec.diagonal, &mut g_rng)?;
    let b = match spec.generator {
        GeneratorPreset::Identity => CMatrix::identity(n, n),
        _ => sample_generator(spec.m, n, &spec.generator_spec(), &mut stream(spec.seed, base + 1))?,
    };
    let ms = synthesize(&b, &y, spec.sigma_n, &mut stream(spec.seed, base + 2))?;
    Ok((y, ms))
}

pub fn run_trial(spec: &TrialSpec, t: usize) -> Result<TrialLog> {
    let start = Instant::now();
    let base = t as u64 * STREAMS;
    let (y, ms) = draw_instance(spec, t)?;
    let cfg = RecoveryConfig { gamma: spec.gamma(), seed: spec.recovery.seed ^ base, ..spec.recovery.clone() };
    let outcome = recover(&ms, &cfg);
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    match outcome {
        Ok(r) => {
            let m = metrics(&r.x, y.matrix(), spec.field, spec.topo_threshold)?;
            let ok = r.status == RecoveryStatus::Success;
            Ok(TrialLog {
                trial: t,
                status: Some(r.status),
                metrics: Some(m),
                topo_ok: ok && m.topo_ok,
                param_ok: ok && m.param_ok(spec.param_threshold()),
                runtime_ms,
                error: None,
            })
        }
        Err(e) if e.is_numerical() => Ok(TrialLog {
            trial: t,
            status: None,
            metrics: None,
            topo_ok: false,
            param_ok: false,
            runtime_ms,
            error: Some(e.to_string()),
        }),
        Err(e) => Err(e),
    }
}

/// Runs every trial on the current rayon pool. Only configuration errors
/// abort; numerical failures count as errors of both kinds.
pub fn run_trials(spec: &TrialSpec) -> Result<TrialSummary> {
    spec.validate()?;
    let logs = (0..spec.trials).into_par_iter().map(|t| run_trial(spec, t)).collect::<Result<Vec<_>>>()?;
    Ok(summarize(spec, logs))
}

fn summarize(spec: &TrialSpec, mut logs: Vec<TrialLog>) -> TrialSummary {
    logs.sort_by_key(|l| l.trial);
    let k = logs.len();
    let rate = |f: &dyn Fn(&TrialLog) -> bool| logs.iter().filter(|l| f(l)).count() as f64 / k as f64;
    let eps_t = rate(&|l| !l.topo_ok);
    let eps_p = rate(&|l| !l.param_ok);
    let success_rate = rate(&|l| l.success());
    let frobs: Vec<f64> = logs.iter().filter_map(|l| l.metrics.map(|m| m.frob_normalized)).collect();
    let mean_frob = if frobs.is_empty() { f64::NAN } else { frobs.iter().sum::<f64>() / frobs.len() as f64 };
    let mean_runtime_ms = logs.iter().map(|l| l.runtime_ms).sum::<f64>() / k as f64;
    TrialSummary {
        trials: k,
        eps_t,
        eps_p,
        success_rate,
        mean_frob,
        ci_t: binomial_half_width(eps_t, k),
        ci_p: binomial_half_width(eps_p, k),
        mean_runtime_ms,
        logs: if spec.keep_logs { logs } else { Vec::new() },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::EnsembleKind;
    use crate::recovery::Scheme;

    fn spec(kind: EnsembleKind, n: usize, m: usize, scheme: Scheme) -> TrialSpec {
        TrialSpec { trials: 6, ..TrialSpec::new(EnsembleSpec::new(kind, n).unwrap(), m, RecoveryConfig::new(scheme)) }
    }

    #[test]
    fn identity_generator_is_exact() {
        let kinds = [EnsembleKind::UniformTree, EnsembleKind::Star, EnsembleKind::ErdosRenyi { p: 0.3 }];
        for (kind, scheme) in kinds.into_iter().zip([Scheme::ColumnBp, Scheme::ThreeStage, Scheme::VectorizedBpSym]) {
            let s = TrialSpec { generator: GeneratorPreset::Identity, ..spec(kind, 6, 6, scheme) };
            let r = run_trials(&s).unwrap();
            assert_eq!(r.eps_p, 0.0);
            assert_eq!(r.eps_t, 0.0);
        }
    }

    #[test]
    fn single_trial_rate_is_binary() {
        let s = TrialSpec { trials: 1, ..spec(EnsembleKind::UniformTree, 8, 3, Scheme::ColumnBp) };
        let r = run_trials(&s).unwrap();
        assert!(r.eps_p == 0.0 || r.eps_p == 1.0);
        assert!(r.eps_t == 0.0 || r.eps_t == 1.0);
    }

    #[test]
    fn trials_are_order_independent() {
        let s = TrialSpec { keep_logs: true, ..spec(EnsembleKind::UniformTree, 8, 5, Scheme::ThreeStage) };
        let all = run_trials(&s).unwrap();
        for log in &all.logs {
            assert_eq!(&run_trial(&s, log.trial).unwrap().metrics, &log.metrics);
        }
    }

    #[test]
    fn config_errors_abort() {
        let s = TrialSpec { trials: 0, ..spec(EnsembleKind::Star, 6, 4, Scheme::Heuristic) };
        assert!(matches!(run_trials(&s), Err(Error::Config(_))));
        let s = TrialSpec { generator: GeneratorPreset::Identity, ..spec(EnsembleKind::Star, 6, 4, Scheme::Heuristic) };
        assert!(matches!(run_trials(&s), Err(Error::Config(_))));
    }

    #[test]
    fn default_gamma_follows_noise() {
        let s = TrialSpec { sigma_n: 0.01, ..spec(EnsembleKind::Star, 16, 4, Scheme::Heuristic) };
        assert!((s.gamma() - 0.04).abs() < 1e-15);
        assert_eq!(s.param_threshold(), DEFAULT_PARAM_NOISY);
        assert_eq!(TrialSpec { gamma: Some(0.5), ..s }.gamma(), 0.5);
    }
}
