use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::json;
use symrec_core::bounds::{self, BoundInputs};
use symrec_core::ensembles::{sample, EnsembleKind, EnsembleSpec};
use symrec_core::graph_model::{build_graph_matrix, degree_profile, support, Diagonal, WeightSampler};
use symrec_core::harness::io::{self, EdgeWeights, ResultStatus};
use symrec_core::harness::{
    draw_instance, metrics, sample_complexity_sweep, GeneratorPreset, MStrategy, MinimalRule, SweepSpec, TrialSpec,
    DEFAULT_PARAM_NOISELESS, DEFAULT_PARAM_NOISY, DEFAULT_TOPO_THRESHOLD,
};
use symrec_core::recovery::{self, RecoveryConfig, RecoveryStatus, Scheme};
use symrec_core::rng::stream;
use symrec_core::sparse_solver::{ric, singular_values, spark, xi};
use symrec_core::{Error, Field, Result};

use crate::args::*;
use crate::config::merge;

fn required<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Config(format!("--{flag} is required")))
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| Error::Config(format!("stdout: {e}")))
}

fn field_of(w: &WeightArgs) -> Field {
    w.field.unwrap_or(Field::Complex)
}

fn sampler(w: &WeightArgs) -> WeightSampler {
    let WeightSampler::Uniform { half_width, floor } = WeightSampler::default() else { unreachable!() };
    WeightSampler::Uniform { half_width: w.weight_half_width.unwrap_or(half_width), floor: w.weight_floor.unwrap_or(floor) }
}

fn ensemble(a: &EnsembleArgs, field: Field) -> Result<EnsembleSpec> {
    if let Some(path) = &a.graph {
        let (g, _) = io::read_graph_csv(path, field)?;
        if let Some(n) = a.n.filter(|&n| n != g.n()) {
            return Err(Error::Config(format!("--n {n} disagrees with the {} nodes of {}", g.n(), path.display())));
        }
        let n = g.n();
        return EnsembleSpec::new(EnsembleKind::Fixed(g), n);
    }
    let kind = match required(a.ensemble, "ensemble (or --graph)")? {
        EnsembleName::Tree => EnsembleKind::UniformTree,
        EnsembleName::Er => EnsembleKind::ErdosRenyi { p: required(a.p, "p")? },
        EnsembleName::Star => EnsembleKind::Star,
        EnsembleName::Chain => EnsembleKind::Chain,
    };
    EnsembleSpec::new(kind, required(a.n, "n")?)
}

fn recovery_config(a: &RecoveryArgs, seed: u64) -> RecoveryConfig {
    let mut cfg = RecoveryConfig::new(a.scheme.unwrap_or(Scheme::Heuristic));
    cfg.k = a.k.unwrap_or(cfg.k);
    cfg.s = a.s;
    cfg.cones = a.cones.unwrap_or(cfg.cones);
    cfg.solver.max_iters = a.max_iters.unwrap_or(cfg.solver.max_iters);
    cfg.solver.tol = a.tol.unwrap_or(cfg.solver.tol);
    cfg.seed = seed;
    cfg
}

pub fn gen_graph(cli: &GenGraphArgs, config: Option<&Path>) -> Result<u8> {
    let a = merge(cli, config)?;
    let seed = required(a.seed, "seed")?;
    let out = required(a.out, "out")?;
    let field = field_of(&a.weights);
    let spec = ensemble(&a.ensemble, field)?;
    let mut rng = stream(seed, 0);
    let g = sample(&spec, &mut rng);
    let y = build_graph_matrix(&g, field, &sampler(&a.weights), &Diagonal::RowSum, &mut rng)?;
    let weights: EdgeWeights = g.edges().map(|(i, j)| ((i, j), y.matrix()[(i, j)])).collect();
    io::write_graph_csv(&out, &g, &weights)?;
    if let Some(path) = &a.matrix_out {
        io::write_matrix_csv(path, y.matrix())?;
    }
    let degrees = g.degrees();
    let profile = a.mu.map(|mu| degree_profile(&g, mu));
    print_json(&json!({
        "n": g.n(),
        "edges": g.edge_count(),
        "max_degree": degrees.iter().max(),
        "connected": g.is_connected(),
        "mu": a.mu,
        "large_count": profile.map(|p| p.large_count),
    }))?;
    Ok(0)
}

fn trial_spec(
    ens: &EnsembleArgs,
    w: &WeightArgs,
    gen: &GeneratorArgs,
    rec: &RecoveryArgs,
    m: usize,
    seed: u64,
) -> Result<TrialSpec> {
    let field = field_of(w);
    let mut spec = TrialSpec::new(ensemble(ens, field)?, m, recovery_config(rec, seed));
    spec.field = field;
    spec.weights = sampler(w);
    spec.generator = gen.generator.unwrap_or_default();
    spec.sigma_s = gen.sigma_s.unwrap_or(1.0);
    spec.mean_re = gen.mean_re.unwrap_or(0.0);
    spec.sigma_n = gen.sigma_n.unwrap_or(0.0);
    spec.gamma = rec.gamma;
    spec.seed = seed;
    Ok(spec)
}

pub fn gen_data(cli: &GenDataArgs, config: Option<&Path>) -> Result<u8> {
    let a = merge(cli, config)?;
    let seed = required(a.seed, "seed")?;
    let out = required(a.out, "out")?;
    let spec = trial_spec(&a.ensemble, &a.weights, &a.generator, &RecoveryArgs::default(), required(a.m, "m")?, seed)?;
    spec.validate()?;
    let (y, ms) = draw_instance(&spec, 0)?;
    let manifest = io::emit_measurements(&out, &ms, Some(seed), Some(y.matrix()))?;
    print_json(&json!({ "manifest": manifest, "m": ms.m(), "n": ms.n(), "edges": y.graph().edge_count() }))?;
    Ok(0)
}

pub fn recover(cli: &RecoverArgs, config: Option<&Path>) -> Result<u8> {
    let a = merge(cli, config)?;
    let manifest = required(a.manifest, "manifest")?;
    let ms = io::ingest(&manifest)?;
    let scheme = a.recovery.scheme.unwrap_or(Scheme::Heuristic);
    let seed = match scheme {
        Scheme::Heuristic => required(a.seed, "seed")?,
        _ => a.seed.unwrap_or(0),
    };
    let mut cfg = recovery_config(&a.recovery, seed);
    cfg.gamma = a.recovery.gamma.unwrap_or_else(|| bounds::default_gamma(ms.n(), ms.sigma_n));
    let r = recovery::recover(&ms, &cfg)?;
    if let Some(dir) = &a.out {
        io::emit_result(dir, &r)?;
    }
    let truth = io::ingest_truth(&manifest)?;
    let scored = match &truth {
        Some(y) => {
            let topo = a.topo_threshold.unwrap_or(DEFAULT_TOPO_THRESHOLD);
            let default_param = if ms.sigma_n > 0.0 { DEFAULT_PARAM_NOISY } else { DEFAULT_PARAM_NOISELESS };
            let m = metrics(&r.x, y, ms.field, topo)?;
            Some(json!({
                "topo_ok": m.topo_ok,
                "sign_ok": m.sign_ok,
                "param_ok": m.param_ok(a.param_threshold.unwrap_or(default_param)),
                "frob": m.frob,
                "frob_normalized": m.frob_normalized,
                "recovered_edges": support(&r.x, topo).edge_count(),
            }))
        }
        None => None,
    };
    print_json(&json!({ "gamma": cfg.gamma, "result": ResultStatus::of(&r), "metrics": scored }))?;
    Ok(if r.status == RecoveryStatus::SolverFailed { 3 } else { 0 })
}

pub fn sweep(cli: &SweepArgs, config: Option<&Path>) -> Result<u8> {
    let a = merge(cli, config)?;
    let seed = required(a.seed, "seed")?;
    let mut ens = a.ensemble.clone();
    let n_list = match (&a.n_list, a.ensemble.n) {
        (Some(list), _) => list.clone(),
        (None, Some(n)) => vec![n],
        (None, None) if a.ensemble.graph.is_some() => Vec::new(),
        (None, None) => return Err(Error::Config("--n-list (or --n) is required".into())),
    };
    if ens.graph.is_none() {
        ens.n = Some(n_list.first().copied().ok_or_else(|| Error::Config("--n-list is empty".into()))?);
    }
    let mut base = trial_spec(&ens, &a.weights, &a.generator, &a.recovery, 1, seed)?;
    base.trials = a.trials.unwrap_or(base.trials);
    base.topo_threshold = a.topo_threshold.unwrap_or(base.topo_threshold);
    base.param_threshold = a.param_threshold;
    let n_list = if n_list.is_empty() { vec![base.n()] } else { n_list };
    let strategy = match &a.m_grid {
        Some(ms) => MStrategy::Grid { ms: ms.clone() },
        None => {
            let MStrategy::ScanUp { start, step, q } = MStrategy::default() else { unreachable!() };
            MStrategy::ScanUp {
                start: a.scan_start.unwrap_or(start),
                step: a.scan_step.unwrap_or(step),
                q: a.q.unwrap_or(q),
            }
        }
    };
    let mut spec = SweepSpec::new(base, n_list, strategy);
    if let Some(schemes) = &a.schemes {
        spec.schemes = schemes.clone();
    }
    spec.rule = a.rule.unwrap_or(MinimalRule::Fraction);
    spec.timing = a.timing;
    if spec.base.generator == GeneratorPreset::Identity && spec.n_list.len() > 1 {
        log::info!("identity generator: rows with m != n are skipped");
    }
    let result = sample_complexity_sweep(&spec)?;
    match &a.out {
        Some(path) => io::write_sweep_csv(path, &result)?,
        None => print!("{}", result.to_csv()),
    }
    if let Some(path) = &a.minimal_out {
        io::write_json(path, &result.minimal)?;
    }
    Ok(0)
}

pub fn bounds(cli: &BoundsArgs, config: Option<&Path>) -> Result<u8> {
    let a = merge(cli, config)?;
    let n = required(a.n, "n")?;
    let entropy = match (a.entropy, a.family) {
        (Some(h), _) => h,
        (None, Some(Family::Tree)) => bounds::entropy_uniform_trees(n)?,
        (None, Some(Family::Er)) => bounds::entropy_er(n, required(a.p, "p")?)?,
        (None, None) => return Err(Error::Config("--entropy or --family is required".into())),
    };
    let inputs = BoundInputs {
        n,
        m: a.m.unwrap_or(1),
        sigma_s: a.sigma_s.unwrap_or(1.0),
        sigma_n: a.sigma_n.unwrap_or(0.0),
        y_bar: a.y_bar.unwrap_or(1.0),
        entropy_nats: entropy,
        mu: a.mu.unwrap_or(0),
        k: a.k.unwrap_or(0),
    };
    let report = bounds::report(&inputs, a.target.unwrap_or(0.5))?;
    let profile = match (a.family, a.mu, a.k) {
        (Some(Family::Tree), Some(mu), Some(k)) => Some(serde_json::to_value(bounds::tree_sparsity_profile(mu, k)?)?),
        (Some(Family::Er), _, Some(k)) => Some(serde_json::to_value(bounds::er_sparsity_profile(n, required(a.p, "p")?, k)?)?),
        _ => None,
    };
    print_json(&json!({ "bounds": report, "sparsity_profile": profile }))?;
    Ok(0)
}

pub fn diagnose(cli: &DiagnoseArgs, config: Option<&Path>) -> Result<u8> {
    let a = merge(cli, config)?;
    let b = match (&a.matrix, &a.manifest) {
        (Some(path), _) => io::read_matrix_csv(path)?,
        (None, Some(manifest)) => io::ingest(manifest)?.b,
        (None, None) => return Err(Error::Config("--matrix or --manifest is required".into())),
    };
    let spark = spark(&b)?;
    let ric = a.mu.map(|mu| ric(&b, mu)).transpose()?;
    let xi = a.k.map(|k| xi(&b, k)).transpose()?;
    print_json(&json!({
        "m": b.nrows(),
        "n": b.ncols(),
        "singular_values": singular_values(&b),
        "spark": spark,
        "mu": a.mu,
        "ric": ric,
        "K": a.k,
        "xi": xi,
    }))?;
    Ok(0)
}

pub fn ingest_check(cli: &IngestCheckArgs, config: Option<&Path>) -> Result<u8> {
    let a = merge(cli, config)?;
    let manifest = required(a.manifest, "manifest")?;
    let ms = io::ingest(&manifest)?;
    let truth = io::ingest_truth(&manifest)?;
    if let Some(y) = &truth {
        if y.shape() != (ms.n(), ms.n()) {
            return Err(Error::Shape(format!("truth is {}×{}, expected {n}×{n}", y.nrows(), y.ncols(), n = ms.n())));
        }
    }
    let truth_report = truth.as_ref().map(|y| {
        let residual = (&ms.a - &ms.b * y).norm();
        json!({
            "symmetric": *y == y.transpose(),
            "edges": support(y, DEFAULT_TOPO_THRESHOLD).edge_count(),
            "residual": residual,
        })
    });
    print_json(&json!({
        "m": ms.m(),
        "n": ms.n(),
        "field": ms.field,
        "sigma_s": ms.sigma_s,
        "sigma_n": ms.sigma_n,
        "truth": truth_report,
    }))?;
    Ok(0)
}
