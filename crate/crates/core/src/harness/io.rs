//! File formats.
//!
//! - Graph files: CSV with header `i,j,re,im`, one edge per row, 1-indexed.
//! - Dense matrices: CSV without header, one matrix row per line, each entry
//!   written as `re:im` with 17 significant digits so that `f64` values
//!   round-trip exactly.
//! - Measurement manifests: JSON naming the `B` and `A` matrix files
//!   (relative to the manifest) plus `m`, `n`, field, noise levels and seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::harness::SweepResult;
use crate::measurement::MeasurementSet;
use crate::recovery::{RecoveryResult, RecoveryStatus, Scheme};
use crate::{CMatrix, Error, Field, Graph, Result};

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

pub fn format_entry(z: Complex64) -> String {
    format!("{:.16e}:{:.16e}", z.re, z.im)
}

pub fn parse_entry(s: &str) -> std::result::Result<Complex64, String> {
    let s = s.trim();
    let (re, im) = match s.split_once(':') {
        Some((re, im)) => (re, im),
        None => (s, "0"),
    };
    let re: f64 = re.trim().parse().map_err(|_| format!("bad real part `{re}`"))?;
    let im: f64 = im.trim().parse().map_err(|_| format!("bad imaginary part `{im}`"))?;
    Ok(Complex64::new(re, im))
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

pub fn matrix_to_csv(x: &CMatrix) -> String {
    let mut out = String::new();
    for row in x.row_iter() {
        let cells: Vec<String> = row.iter().map(|&z| format_entry(z)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_matrix_csv(path: &Path, x: &CMatrix) -> Result<()> {
    create_parent(path)?;
    fs::write(path, matrix_to_csv(x)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<CMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, f)| parse_entry(f).map_err(|msg| parse_err(path, line, format!("column {}: {msg}", col + 1))))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(path, line, format!("expected {} entries, found {}", first.len(), row.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(path, 1, "matrix file is empty"));
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(CMatrix::from_row_iterator(m, n, rows.into_iter().flatten()))
}

/// Edge weights keyed by 0-based `(i, j)` with `i < j`.
pub type EdgeWeights = BTreeMap<(usize, usize), Complex64>;

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    i: usize,
    j: usize,
    re: f64,
    #[serde(default)]
    im: Option<f64>,
}

/// Reads a graph file. The node count is the largest index present unless
/// the file starts with a `# n = <count>` comment.
pub fn read_graph_csv(path: &Path, field: Field) -> Result<(Graph, EdgeWeights)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut declared_n = None;
    if let Some(first) = text.lines().next() {
        if let Some(rest) = first.trim().strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("n =").or_else(|| rest.trim().strip_prefix("n=")) {
                declared_n = Some(v.trim().parse::<usize>().map_err(|_| parse_err(path, 1, "bad node count"))?);
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let expected = ["i", "j", "re", "im"];
    if headers.iter().take(4).ne(expected.iter().copied().take(headers.len().min(4))) || headers.len() < 3 {
        return Err(parse_err(path, 1, format!("expected header `i,j,re,im`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut weights = EdgeWeights::new();
    let mut max_node = 0;
    for rec in reader.deserialize::<EdgeRow>() {
        let row = rec.map_err(|e| csv_error(path, e))?;
        if row.i == 0 || row.j == 0 {
            return Err(parse_err(path, 0, format!("node indices are 1-based, found ({}, {})", row.i, row.j)));
        }
        let (i, j) = (row.i - 1, row.j - 1);
        if i == j {
            return Err(parse_err(path, 0, format!("self-loop at node {}", row.i)));
        }
        let key = (i.min(j), i.max(j));
        let w = field.coerce(Complex64::new(row.re, row.im.unwrap_or(0.0)));
        if weights.insert(key, w).is_some() {
            return Err(parse_err(path, 0, format!("duplicate edge ({}, {})", row.i, row.j)));
        }
        max_node = max_node.max(i.max(j) + 1);
    }
    let n = declared_n.unwrap_or(max_node.max(1));
    let graph = Graph::new(n, weights.keys().copied())?;
    Ok((graph, weights))
}

pub fn write_graph_csv(path: &Path, graph: &Graph, weights: &EdgeWeights) -> Result<()> {
    create_parent(path)?;
    let mut out = format!("# n = {}\ni,j,re,im\n", graph.n());
    for (i, j) in graph.edges() {
        let w = weights.get(&(i, j)).copied().unwrap_or(Complex64::new(1.0, 0.0));
        out.push_str(&format!("{},{},{:.16e},{:.16e}\n", i + 1, j + 1, w.re, w.im));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub m: usize,
    pub n: usize,
    pub field: Field,
    pub sigma_s: f64,
    pub sigma_n: f64,
    #[serde(default)]
    pub seed: Option<u64>,
    pub b: PathBuf,
    pub a: PathBuf,
    /// Ground-truth graph matrix, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))
}

/// Loads and validates the measurement set a manifest describes.
pub fn ingest(manifest_path: &Path) -> Result<MeasurementSet> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let b_path = resolve(base, &manifest.b);
    let a_path = resolve(base, &manifest.a);
    let b = read_matrix_csv(&b_path)?;
    let a = read_matrix_csv(&a_path)?;
    for (name, path, mat) in [("B", &b_path, &b), ("A", &a_path, &a)] {
        if mat.shape() != (manifest.m, manifest.n) {
            return Err(parse_err(
                path,
                0,
                format!("{name} is {}×{}, manifest declares {}×{}", mat.nrows(), mat.ncols(), manifest.m, manifest.n),
            ));
        }
        if manifest.field == Field::Real && mat.iter().any(|z| z.im != 0.0) {
            return Err(parse_err(path, 0, format!("{name} has imaginary parts but the manifest says field = real")));
        }
    }
    MeasurementSet::new(manifest.field, b, a, manifest.sigma_s, manifest.sigma_n)
}

/// Ground truth named by a manifest, if any.
pub fn ingest_truth(manifest_path: &Path) -> Result<Option<CMatrix>> {
    let manifest = read_manifest(manifest_path)?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    manifest.truth.map(|t| read_matrix_csv(&resolve(base, &t))).transpose()
}

/// Writes `B.csv`, `A.csv` (and `Y.csv` when given) plus `manifest.json`
/// into `dir`; returns the manifest path.
pub fn emit_measurements(dir: &Path, ms: &MeasurementSet, seed: Option<u64>, truth: Option<&CMatrix>) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_matrix_csv(&dir.join("B.csv"), &ms.b)?;
    write_matrix_csv(&dir.join("A.csv"), &ms.a)?;
    if let Some(y) = truth {
        write_matrix_csv(&dir.join("Y.csv"), y)?;
    }
    let manifest = Manifest {
        m: ms.m(),
        n: ms.n(),
        field: ms.field,
        sigma_s: ms.sigma_s,
        sigma_n: ms.sigma_n,
        seed,
        b: "B.csv".into(),
        a: "A.csv".into(),
        truth: truth.map(|_| "Y.csv".into()),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Status record written next to a recovered matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultStatus {
    pub status: RecoveryStatus,
    pub scheme: Scheme,
    #[serde(default)]
    pub accepted: Option<Vec<usize>>,
    #[serde(default)]
    pub scores: Vec<Vec<(usize, f64)>>,
    #[serde(default)]
    pub column_failures: Vec<usize>,
    pub solver_iterations: usize,
    pub elapsed_ms: f64,
}

impl ResultStatus {
    pub fn of(r: &RecoveryResult) -> Self {
        ResultStatus {
            status: r.status,
            scheme: r.scheme,
            accepted: r.accepted.clone(),
            scores: r.scores.clone(),
            column_failures: r.column_failures.clone(),
            solver_iterations: r.solver_iterations,
            elapsed_ms: r.elapsed.as_secs_f64() * 1e3,
        }
    }
}

/// Writes `X.csv` and `status.json` into `dir`.
pub fn emit_result(dir: &Path, r: &RecoveryResult) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_matrix_csv(&dir.join("X.csv"), &r.x)?;
    write_json(&dir.join("status.json"), &ResultStatus::of(r))
}

pub fn write_sweep_csv(path: &Path, sweep: &SweepResult) -> Result<()> {
    create_parent(path)?;
    fs::write(path, sweep.to_csv()).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    create_parent(path)?;
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").map_err(|e| Error::io(path, e))
}
