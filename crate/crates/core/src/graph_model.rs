//! Undirected graphs and the symmetric matrices supported on them.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{CMatrix, Error, Result};

/// Scalar field of a graph matrix. Real-mode values always carry a zero
/// imaginary part; both modes share the `Complex64` representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    #[default]
    Real,
    Complex,
}

impl Field {
    /// Drops the imaginary part in real mode.
    pub fn coerce(self, z: Complex64) -> Complex64 {
        match self {
            Field::Real => Complex64::new(z.re, 0.0),
            Field::Complex => z,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Field::Real => "real",
            Field::Complex => "complex",
        }
    }
}

impl std::str::FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(Error::Config(format!("unknown field `{other}` (expected real|complex)"))),
        }
    }
}

/// Simple undirected graph on nodes `0..n`.
///
/// Edges are stored as `(i, j)` with `i < j`; self-loops and duplicates are
/// rejected at construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph must have at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
        }
        Ok(Graph { n, edges: set })
    }

    pub fn empty(n: usize) -> Self {
        Graph { n: n.max(1), edges: BTreeSet::new() }
    }

    /// Star centred at node 0.
    pub fn star(n: usize) -> Self {
        Graph { n: n.max(1), edges: (1..n).map(|j| (0, j)).collect() }
    }

    /// Path `0 – 1 – … – n-1`.
    pub fn chain(n: usize) -> Self {
        Graph { n: n.max(1), edges: (1..n).map(|j| (j - 1, j)).collect() }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Graph { n: n.max(1), edges }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n];
        for &(i, j) in &self.edges {
            d[i] += 1;
            d[j] += 1;
        }
        d
    }

    pub fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Symmetric `n × n` matrix whose off-diagonal support is an undirected graph.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphMatrix {
    field: Field,
    data: CMatrix,
}

impl GraphMatrix {
    /// Wraps a dense matrix after checking it is square and exactly symmetric.
    pub fn from_dense(field: Field, data: CMatrix) -> Result<Self> {
        if !data.is_square() {
            return Err(Error::Shape(format!("graph matrix must be square, got {}×{}", data.nrows(), data.ncols())));
        }
        let n = data.nrows();
        for j in 0..n {
            for i in (j + 1)..n {
                if data[(i, j)] != data[(j, i)] {
                    return Err(Error::InvalidGraph(format!("matrix not symmetric at ({i}, {j})")));
                }
            }
        }
        if field == Field::Real && data.iter().any(|z| z.im != 0.0) {
            return Err(Error::Config("real-mode matrix has non-zero imaginary parts".into()));
        }
        Ok(GraphMatrix { field, data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    /// Underlying graph (exact zero pattern).
    pub fn graph(&self) -> Graph {
        support(&self.data, 0.0)
    }

    /// `max |Y_ij|`.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Distribution of edge weights for synthetic graph matrices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSampler {
    /// Real and imaginary parts uniform on `[-half_width, half_width]`,
    /// redrawn until the modulus is at least `floor`.
    Uniform { half_width: f64, floor: f64 },
    Constant { re: f64, im: f64 },
}

impl Default for WeightSampler {
    fn default() -> Self {
        WeightSampler::Uniform { half_width: 100.0, floor: 1.0 }
    }
}

impl WeightSampler {
    fn validate(&self) -> Result<()> {
        match *self {
            WeightSampler::Uniform { half_width, floor } => {
                if !(floor > 0.0 && half_width >= floor) {
                    return Err(Error::Config(format!(
                        "weight sampler needs 0 < floor <= half_width, got floor {floor}, half_width {half_width}"
                    )));
                }
            }
            WeightSampler::Constant { re, im } => {
                if re == 0.0 && im == 0.0 {
                    return Err(Error::Config("constant edge weight must be non-zero".into()));
                }
            }
        }
        Ok(())
    }

    /// Smallest modulus this sampler can produce in `field`.
    pub fn magnitude_floor(&self, field: Field) -> f64 {
        match *self {
            WeightSampler::Uniform { floor, .. } => floor,
            WeightSampler::Constant { re, im } => field.coerce(Complex64::new(re, im)).norm(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, field: Field, rng: &mut R) -> Complex64 {
        match *self {
            WeightSampler::Uniform { half_width, floor } => loop {
                let re = rng.random_range(-half_width..=half_width);
                let im = match field {
                    Field::Real => 0.0,
                    Field::Complex => rng.random_range(-half_width..=half_width),
                };
                let z = Complex64::new(re, im);
                if z.norm() >= floor {
                    break z;
                }
            },
            WeightSampler::Constant { re, im } => field.coerce(Complex64::new(re, im)),
        }
    }
}

/// How the diagonal of a synthetic graph matrix is filled.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Diagonal {
    /// `Y_ii = -Σ_{k≠i} Y_ik`: zero row sums, as for an admittance matrix
    /// without shunt elements.
    #[default]
    RowSum,
    Zero,
    Explicit(Vec<Complex64>),
}

/// Graph matrix with off-diagonal entries `Y_ij = Y_ji = w_ij` drawn from
/// `sampler` on the edges of `g`.
pub fn build_graph_matrix<R: Rng + ?Sized>(
    g: &Graph,
    field: Field,
    sampler: &WeightSampler,
    diagonal: &Diagonal,
    rng: &mut R,
) -> Result<GraphMatrix> {
    sampler.validate()?;
    let n = g.n();
    let mut y = CMatrix::zeros(n, n);
    for (i, j) in g.edges() {
        let w = sampler.sample(field, rng);
        y[(i, j)] = w;
        y[(j, i)] = w;
    }
    match diagonal {
        Diagonal::RowSum => {
            for i in 0..n {
                let s: Complex64 = (0..n).filter(|&k| k != i).map(|k| y[(i, k)]).sum();
                y[(i, i)] = -s;
            }
        }
        Diagonal::Zero => {}
        Diagonal::Explicit(d) => {
            if d.len() != n {
                return Err(Error::Shape(format!("diagonal has length {}, expected {n}", d.len())));
            }
            for (i, &v) in d.iter().enumerate() {
                y[(i, i)] = field.coerce(v);
            }
        }
    }
    Ok(GraphMatrix { field, data: y })
}

/// Nodal admittance matrix: `Y_ij = -y_ij` on lines and
/// `Y_ii = y_i + Σ_k y_ik` on the diagonal.
pub fn build_admittance(
    g: &Graph,
    field: Field,
    line_admittances: &BTreeMap<(usize, usize), Complex64>,
    self_admittances: &[Complex64],
) -> Result<GraphMatrix> {
    let n = g.n();
    if self_admittances.len() != n {
        return Err(Error::Shape(format!(
            "self admittances have length {}, expected {n}",
            self_admittances.len()
        )));
    }
    for &(i, j) in line_admittances.keys() {
        if !g.has_edge(i, j) || i > j {
            return Err(Error::InvalidGraph(format!("line admittance for non-edge ({i}, {j})")));
        }
    }
    let mut y = CMatrix::zeros(n, n);
    for (i, &v) in self_admittances.iter().enumerate() {
        y[(i, i)] = field.coerce(v);
    }
    for (i, j) in g.edges() {
        let line = line_admittances
            .get(&(i, j))
            .ok_or_else(|| Error::InvalidGraph(format!("missing line admittance for edge ({i}, {j})")))?;
        let line = field.coerce(*line);
        if line == Complex64::new(0.0, 0.0) {
            return Err(Error::InvalidGraph(format!("zero line admittance on edge ({i}, {j})")));
        }
        y[(i, j)] = -line;
        y[(j, i)] = -line;
        y[(i, i)] += line;
        y[(j, j)] += line;
    }
    Ok(GraphMatrix { field, data: y })
}

/// Off-diagonal support of a square matrix: edge `(i, j)` is present when
/// `max(|X_ij|, |X_ji|) >= threshold`. A zero threshold keeps exact
/// non-zeros only.
pub fn support(x: &CMatrix, threshold: f64) -> Graph {
    let n = x.nrows().min(x.ncols());
    let mut edges = BTreeSet::new();
    for j in 0..n {
        for i in 0..j {
            let mag = x[(i, j)].norm().max(x[(j, i)].norm());
            let present = if threshold > 0.0 { mag >= threshold } else { mag > 0.0 };
            if present {
                edges.insert((i, j));
            }
        }
    }
    Graph { n: n.max(1), edges }
}

/// Degrees and the count of nodes whose degree exceeds `mu`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DegreeProfile {
    pub degrees: Vec<usize>,
    pub mu: usize,
    pub large_count: usize,
}

impl DegreeProfile {
    /// Nodes with degree above `mu`.
    pub fn large_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.degrees.iter().enumerate().filter(move |(_, &d)| d > self.mu).map(|(j, _)| j)
    }
}

/// `mu` outside `[0, n-2]` is clamped.
pub fn degree_profile(g: &Graph, mu: usize) -> DegreeProfile {
    let cap = g.n().saturating_sub(2);
    let mu = if mu > cap {
        log::warn!("degree threshold {mu} clamped to n-2 = {cap}");
        cap
    } else {
        mu
    };
    let degrees = g.degrees();
    let large_count = degrees.iter().filter(|&&d| d > mu).count();
    DegreeProfile { degrees, mu, large_count }
}
