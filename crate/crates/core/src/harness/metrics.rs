use serde::Serialize;

use crate::graph_model::support;
use crate::{CMatrix, Error, Field, Result};

/// Support threshold for topology comparisons.
pub const DEFAULT_TOPO_THRESHOLD: f64 = 1e-5;
/// `‖X − Y‖_F / n²` thresholds for parameter success.
pub const DEFAULT_PARAM_NOISELESS: f64 = 1e-6;
pub const DEFAULT_PARAM_NOISY: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    /// Off-diagonal supports agree at the topology threshold.
    pub topo_ok: bool,
    /// Real mode: real-part signs agree on the union support. Complex mode:
    /// same as `topo_ok`.
    pub sign_ok: bool,
    pub frob: f64,
    /// `‖X − Y‖_F / n²`.
    pub frob_normalized: f64,
}

impl Metrics {
    pub fn param_ok(&self, threshold: f64) -> bool {
        self.frob_normalized < threshold
    }
}

pub fn metrics(x: &CMatrix, y: &CMatrix, field: Field, topo_threshold: f64) -> Result<Metrics> {
    if x.shape() != y.shape() || x.nrows() != x.ncols() {
        return Err(Error::Shape(format!(
            "estimate is {}×{}, truth is {}×{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    if !(topo_threshold > 0.0) {
        return Err(Error::Config(format!("topology threshold must be positive, got {topo_threshold}")));
    }
    let n = x.nrows();
    let sx = support(x, topo_threshold);
    let sy = support(y, topo_threshold);
    let topo_ok = sx == sy;
    let sign_ok = match field {
        Field::Complex => topo_ok,
        Field::Real => sx.edges().chain(sy.edges()).all(|(i, j)| {
            let s = |m: &CMatrix| if m[(i, j)].norm() < topo_threshold { 0.0 } else { m[(i, j)].re.signum() };
            s(x) == s(y)
        }),
    };
    let frob = (x - y).norm();
    Ok(Metrics { topo_ok, sign_ok, frob, frob_normalized: frob / (n * n) as f64 })
}
