//! Random graph ensembles and the `(μ, K, ρ)` sparsity characterisation.
//!
//! A distribution over graphs on `n` nodes is `(μ, K, ρ)`-sparse when a
//! sampled graph has at most `K` nodes of degree greater than `μ` with
//! probability at least `1 - ρ`.

use std::collections::BinaryHeap;
use std::cmp::Reverse;
use std::path::PathBuf;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Graph, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityProfile {
    pub mu: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnsembleKind {
    /// Uniform over the `n^(n-2)` labelled spanning trees.
    UniformTree,
    ErdosRenyi { p: f64 },
    /// Hub at node 0.
    Star,
    Chain,
    Fixed(Graph),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub kind: EnsembleKind,
    pub n: usize,
    pub seed: Option<u64>,
}

impl EnsembleSpec {
    pub fn new(kind: EnsembleKind, n: usize) -> Result<Self> {
        let spec = EnsembleSpec { kind, n, seed: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("ensemble needs n >= 2, got {}", self.n)));
        }
        match &self.kind {
            EnsembleKind::ErdosRenyi { p } if !(*p > 0.0 && *p <= 1.0) => {
                Err(Error::Config(format!("Erdős–Rényi edge probability must lie in (0, 1], got {p}")))
            }
            EnsembleKind::Fixed(g) if g.n() != self.n => {
                Err(Error::Config(format!("fixed graph has {} nodes, spec says {}", g.n(), self.n)))
            }
            _ => Ok(()),
        }
    }

    /// Same ensemble on `n` nodes. Fixed graphs only accept their own size.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        let spec = EnsembleSpec { kind: self.kind.clone(), n, seed: self.seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self.kind, EnsembleKind::Star | EnsembleKind::Chain | EnsembleKind::Fixed(_))
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            EnsembleKind::UniformTree => "tree",
            EnsembleKind::ErdosRenyi { .. } => "er",
            EnsembleKind::Star => "star",
            EnsembleKind::Chain => "chain",
            EnsembleKind::Fixed(_) => "fixed",
        }
    }
}

/// Key-value form of [`EnsembleSpec`] used in JSON config files. A fixed
/// graph is referenced by the path of its edge-list CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleConfig {
    Tree { n: usize },
    ErdosRenyi { n: usize, p: f64 },
    Star { n: usize },
    Chain { n: usize },
    Fixed { path: PathBuf },
}

impl EnsembleConfig {
    pub fn resolve(&self) -> Result<EnsembleSpec> {
        let (kind, n) = match self {
            EnsembleConfig::Tree { n } => (EnsembleKind::UniformTree, *n),
            EnsembleConfig::ErdosRenyi { n, p } => (EnsembleKind::ErdosRenyi { p: *p }, *n),
            EnsembleConfig::Star { n } => (EnsembleKind::Star, *n),
            EnsembleConfig::Chain { n } => (EnsembleKind::Chain, *n),
            EnsembleConfig::Fixed { path } => {
                let (g, _) = crate::harness::io::read_graph_csv(path, crate::Field::Complex)?;
                let n = g.n();
                (EnsembleKind::Fixed(g), n)
            }
        };
        EnsembleSpec::new(kind, n)
    }

    /// Same ensemble at a different size; fixed graphs cannot be resized.
    pub fn with_n(&self, n: usize) -> Result<Self> {
        Ok(match self {
            EnsembleConfig::Tree { .. } => EnsembleConfig::Tree { n },
            EnsembleConfig::ErdosRenyi { p, .. } => EnsembleConfig::ErdosRenyi { n, p: *p },
            EnsembleConfig::Star { .. } => EnsembleConfig::Star { n },
            EnsembleConfig::Chain { .. } => EnsembleConfig::Chain { n },
            EnsembleConfig::Fixed { .. } => {
                return Err(Error::Config("a fixed-graph ensemble cannot be resized".into()))
            }
        })
    }

    pub fn n(&self) -> Option<usize> {
        match self {
            EnsembleConfig::Tree { n }
            | EnsembleConfig::ErdosRenyi { n, .. }
            | EnsembleConfig::Star { n }
            | EnsembleConfig::Chain { n } => Some(*n),
            EnsembleConfig::Fixed { .. } => None,
        }
    }
}

pub fn sample<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> Graph {
    let n = spec.n;
    match &spec.kind {
        EnsembleKind::UniformTree => {
            let seq: Vec<usize> = (0..n.saturating_sub(2)).map(|_| rng.random_range(0..n)).collect();
            prufer_decode(n, &seq).expect("uniform Prüfer sequence is always valid")
        }
        EnsembleKind::ErdosRenyi { p } => {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random_bool(*p) {
                        edges.push((i, j));
                    }
                }
            }
            Graph::new(n, edges).expect("sampled edges are distinct and in range")
        }
        EnsembleKind::Star => Graph::star(n),
        EnsembleKind::Chain => Graph::chain(n),
        EnsembleKind::Fixed(g) => g.clone(),
    }
}

/// Decodes a Prüfer sequence over labels `0..n` into its labelled tree by
/// repeatedly joining the lowest-numbered leaf to the next sequence entry.
pub fn prufer_decode(n: usize, seq: &[usize]) -> Result<Graph> {
    if n < 2 {
        return Err(Error::InvalidGraph("a tree needs at least two nodes".into()));
    }
    if seq.len() != n - 2 {
        return Err(Error::InvalidGraph(format!("Prüfer sequence for n = {n} must have length {}", n - 2)));
    }
    if let Some(&bad) = seq.iter().find(|&&v| v >= n) {
        return Err(Error::InvalidGraph(format!("Prüfer label {bad} out of range")));
    }
    let mut degree = vec![1usize; n];
    for &v in seq {
        degree[v] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> = (0..n).filter(|&v| degree[v] == 1).map(Reverse).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &v in seq {
        let Reverse(leaf) = leaves.pop().expect("a leaf always exists");
        edges.push((leaf, v));
        degree[v] -= 1;
        if degree[v] == 1 {
            leaves.push(Reverse(v));
        }
    }
    let Reverse(a) = leaves.pop().expect("two leaves remain");
    let Reverse(b) = leaves.pop().expect("two leaves remain");
    edges.push((a, b));
    Graph::new(n, edges)
}

/// True iff at most `k` nodes have degree greater than `mu`.
pub fn in_sparsity_class(g: &Graph, mu: usize, k: usize) -> bool {
    g.degrees().iter().filter(|&&d| d > mu).count() <= k
}

/// Monte-Carlo estimate of `P(G ∉ C(n, μ, K))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoEstimate {
    pub estimate: f64,
    /// 95% normal-approximation half-width.
    pub half_width: f64,
    pub failures: usize,
    pub trials: usize,
}

pub fn estimate_rho<R: Rng + ?Sized>(
    spec: &EnsembleSpec,
    mu: usize,
    k: usize,
    trials: usize,
    rng: &mut R,
) -> Result<RhoEstimate> {
    if trials == 0 {
        return Err(Error::Config("estimate_rho needs at least one trial".into()));
    }
    spec.validate()?;
    let failures = (0..trials).filter(|_| !in_sparsity_class(&sample(spec, rng), mu, k)).count();
    let estimate = failures as f64 / trials as f64;
    Ok(RhoEstimate { estimate, half_width: binomial_half_width(estimate, trials), failures, trials })
}

/// 95% normal-approximation half-width of a binomial proportion.
pub fn binomial_half_width(p: f64, trials: usize) -> f64 {
    1.96 * (p * (1.0 - p) / trials.max(1) as f64).sqrt()
}
