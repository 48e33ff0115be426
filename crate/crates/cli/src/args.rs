use std::path::PathBuf;

use clap::{Args, Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use symrec_core::harness::{GeneratorPreset, MinimalRule};
use symrec_core::recovery::{ConePattern, Scheme};
use symrec_core::Field;

use crate::config::{is_false, serde_value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleName {
    Tree,
    Er,
    Star,
    Chain,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EnsembleArgs {
    /// Random graph family.
    #[arg(long, value_enum)]
    pub ensemble: Option<EnsembleName>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Erdős–Rényi edge probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Fixed graph (edge-list CSV) instead of a random ensemble.
    #[arg(long, conflicts_with = "ensemble")]
    pub graph: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct WeightArgs {
    #[arg(long, value_parser = serde_value::<Field>)]
    pub field: Option<Field>,
    /// Edge weights have real and imaginary parts uniform on `[-w, w]`.
    #[arg(long)]
    pub weight_half_width: Option<f64>,
    /// Weights below this modulus are redrawn.
    #[arg(long)]
    pub weight_floor: Option<f64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GeneratorArgs {
    /// `gaussian`, `gaussian-scaled` (σ_S = 1/√m) or `identity`.
    #[arg(long, value_parser = serde_value::<GeneratorPreset>)]
    pub generator: Option<GeneratorPreset>,
    #[arg(long)]
    pub sigma_s: Option<f64>,
    /// Mean of the generator's real parts (complex field).
    #[arg(long)]
    pub mean_re: Option<f64>,
    #[arg(long)]
    pub sigma_n: Option<f64>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RecoveryArgs {
    #[arg(long, value_parser = serde_value::<Scheme>)]
    pub scheme: Option<Scheme>,
    /// Residual radius; defaults to √n·σ_N.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Columns the three-stage scheme may reject.
    #[arg(long)]
    pub k: Option<usize>,
    /// Columns fixed per heuristic round; defaults to ⌈n/2⌉.
    #[arg(long)]
    pub s: Option<usize>,
    /// `free` or `admittance`.
    #[arg(long, value_parser = serde_value::<ConePattern>)]
    pub cones: Option<ConePattern>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Parser, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenGraphArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub weights: WeightArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Edge-list CSV to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the dense graph matrix (row-sum diagonal).
    #[arg(long)]
    pub matrix_out: Option<PathBuf>,
    /// Degree threshold for the printed degree profile.
    #[arg(long)]
    pub mu: Option<usize>,
}

#[derive(Parser, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GenDataArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving `B.csv`, `A.csv`, `Y.csv` and `manifest.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Parser, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct RecoverArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub recovery: RecoveryArgs,
    /// Required by the heuristic, which cuts rows at random.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving `X.csv` and `status.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub topo_threshold: Option<f64>,
    #[arg(long)]
    pub param_threshold: Option<f64>,
}

#[derive(Parser, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub ensemble: EnsembleArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub weights: WeightArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub generator: GeneratorArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub recovery: RecoveryArgs,
    /// Graph sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    /// Schemes to compare; overrides `--scheme`.
    #[arg(long, value_delimiter = ',', value_parser = serde_value::<Scheme>)]
    pub schemes: Option<Vec<Scheme>>,
    /// Explicit values of m; otherwise m is scanned upwards.
    #[arg(long, value_delimiter = ',')]
    pub m_grid: Option<Vec<usize>>,
    #[arg(long)]
    pub scan_start: Option<usize>,
    #[arg(long)]
    pub scan_step: Option<usize>,
    /// Success fraction that ends a scan.
    #[arg(long)]
    pub q: Option<f64>,
    /// `fraction` or `per-trial-mean`.
    #[arg(long, value_parser = serde_value::<MinimalRule>)]
    pub rule: Option<MinimalRule>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub topo_threshold: Option<f64>,
    #[arg(long)]
    pub param_threshold: Option<f64>,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file for the minimal m found by scans.
    #[arg(long)]
    pub minimal_out: Option<PathBuf>,
    /// Record wall-clock runtimes (output is then not reproducible).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "is_false")]
    pub timing: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Tree,
    Er,
}

#[derive(Parser, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub sigma_s: Option<f64>,
    #[arg(long)]
    pub sigma_n: Option<f64>,
    /// Largest entry modulus of the graph matrix.
    #[arg(long)]
    pub y_bar: Option<f64>,
    /// Entropy of the graph law in nats; derived from `--family` when absent.
    #[arg(long)]
    pub entropy: Option<f64>,
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub mu: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    /// Error probability for the minimal-measurements search.
    #[arg(long)]
    pub target: Option<f64>,
}

#[derive(Parser, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DiagnoseArgs {
    /// Dense matrix CSV.
    #[arg(long, conflicts_with = "manifest")]
    pub matrix: Option<PathBuf>,
    /// Diagnose the generator named by a manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Sparsity level for the restricted isometry constant.
    #[arg(long)]
    pub mu: Option<usize>,
    /// Size of the rejected set for ξ.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Parser, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct IngestCheckArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
}
