use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::trials::{run_trials, TrialSpec, TrialSummary};
use crate::recovery::{RecoveryConfig, Scheme};
use crate::{Error, Result};

/// How `m` is chosen for each `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MStrategy {
    /// `m = start, start + step, …` until a fraction `q` of trials meets
    /// both criteria, or `m` reaches `n`.
    ScanUp { start: usize, step: usize, q: f64 },
    /// Every listed `m ≤ n`.
    Grid { ms: Vec<usize> },
}

impl Default for MStrategy {
    fn default() -> Self {
        MStrategy::ScanUp { start: 1, step: 1, q: 0.9 }
    }
}

/// How the minimal `m` of a scan is summarised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimalRule {
    /// Smallest `m` whose success fraction reaches `q`.
    #[default]
    Fraction,
    /// Mean over trials of the smallest `m` at which that trial succeeds;
    /// trials that never succeed count as `n`.
    PerTrialMean,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub m: usize,
    pub scheme: Scheme,
    pub topo_err: f64,
    pub param_err: f64,
    pub mean_frob: f64,
    pub runtime_ms: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalM {
    pub n: usize,
    pub scheme: Scheme,
    /// `None` when the scan saturated at `m = n` without success.
    pub m: Option<f64>,
    pub saturated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Filled by scan-up sweeps.
    pub minimal: Vec<MinimalM>,
}

pub const SWEEP_HEADER: &str = "n,m,scheme,topo_err,param_err,mean_frob,runtime_ms,trials";

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{:e},{},{}",
                r.n, r.m, r.scheme, r.topo_err, r.param_err, r.mean_frob, r.runtime_ms, r.trials
            );
        }
        out
    }

    pub fn minimal_for(&self, n: usize, scheme: Scheme) -> Option<&MinimalM> {
        self.minimal.iter().find(|x| x.n == n && x.scheme == scheme)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Template trial; its ensemble is resized to every `n`.
    pub base: TrialSpec,
    pub n_list: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub strategy: MStrategy,
    pub rule: MinimalRule,
    /// Record wall-clock runtimes; off by default so that output is
    /// reproducible byte for byte.
    pub timing: bool,
}

impl SweepSpec {
    pub fn new(base: TrialSpec, n_list: Vec<usize>, strategy: MStrategy) -> Self {
        let schemes = vec![base.recovery.scheme];
        SweepSpec { base, n_list, schemes, strategy, rule: MinimalRule::Fraction, timing: false }
    }
}

fn trial_at(spec: &SweepSpec, n: usize, m: usize, scheme: Scheme) -> Result<TrialSpec> {
    let ensemble = spec.base.ensemble.with_n(n)?;
    let keep_logs = spec.base.keep_logs || spec.rule == MinimalRule::PerTrialMean;
    Ok(TrialSpec { ensemble, m, keep_logs, recovery: RecoveryConfig { scheme, ..spec.base.recovery.clone() }, ..spec.base.clone() })
}

fn row(spec: &SweepSpec, n: usize, m: usize, scheme: Scheme, s: &TrialSummary) -> SweepRow {
    SweepRow {
        n,
        m,
        scheme,
        topo_err: s.eps_t,
        param_err: s.eps_p,
        mean_frob: s.mean_frob,
        runtime_ms: if spec.timing { s.mean_runtime_ms } else { 0.0 },
        trials: s.trials,
    }
}

pub fn sample_complexity_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    if spec.n_list.is_empty() {
        return Err(Error::Config("sweep needs at least one n".into()));
    }
    if spec.schemes.is_empty() {
        return Err(Error::Config("sweep needs at least one scheme".into()));
    }
    let mut result = SweepResult::default();
    for &n in &spec.n_list {
        for &scheme in &spec.schemes {
            match &spec.strategy {
                MStrategy::Grid { ms } => {
                    if ms.is_empty() {
                        return Err(Error::Config("grid needs at least one m".into()));
                    }
                    for &m in ms.iter().filter(|&&m| m <= n) {
                        let s = run_trials(&trial_at(spec, n, m, scheme)?)?;
                        result.rows.push(row(spec, n, m, scheme, &s));
                    }
                }
                MStrategy::ScanUp { start, step, q } => {
                    if *step == 0 || *start == 0 || !(*q > 0.0 && *q <= 1.0) {
                        return Err(Error::Config("scan-up needs start >= 1, step >= 1 and q in (0, 1]".into()));
                    }
                    let found = scan_up(spec, n, scheme, *start, *step, *q, &mut result.rows)?;
                    result.minimal.push(found);
                }
            }
        }
    }
    result.rows.sort_by_key(|r| (r.n, r.m, r.scheme));
    Ok(result)
}

#[allow(clippy::too_many_arguments)]
fn scan_up(
    spec: &SweepSpec,
    n: usize,
    scheme: Scheme,
    start: usize,
    step: usize,
    q: f64,
    rows: &mut Vec<SweepRow>,
) -> Result<MinimalM> {
    let trials = spec.base.trials;
    let mut first_success: Vec<Option<usize>> = vec![None; trials];
    let mut fraction_m = None;
    let mut m = start.min(n);
    loop {
        let s = run_trials(&trial_at(spec, n, m, scheme)?)?;
        rows.push(row(spec, n, m, scheme, &s));
        for log in &s.logs {
            if log.success() && first_success[log.trial].is_none() {
                first_success[log.trial] = Some(m);
            }
        }
        if fraction_m.is_none() && s.success_rate >= q {
            fraction_m = Some(m);
        }
        let done = match spec.rule {
            MinimalRule::Fraction => fraction_m.is_some(),
            MinimalRule::PerTrialMean => first_success.iter().all(Option::is_some),
        };
        if done || m >= n {
            break;
        }
        m = (m + step).min(n);
    }
    let (value, saturated) = match spec.rule {
        MinimalRule::Fraction => (fraction_m.map(|m| m as f64), fraction_m.is_none()),
        MinimalRule::PerTrialMean => {
            let total: usize = first_success.iter().map(|f| f.unwrap_or(n)).sum();
            (Some(total as f64 / trials as f64), first_success.iter().any(Option::is_none))
        }
    };
    if saturated {
        log::warn!("n = {n}, {scheme}: no success fraction {q} up to m = n");
    }
    Ok(MinimalM { n, scheme, m: value, saturated })
}
