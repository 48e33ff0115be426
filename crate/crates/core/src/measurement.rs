//! Synthesis of generator and measurement matrices.
//!
//! All measurement sets follow `A = B·Y + Z` with `B` and `A` of shape
//! `m × n`; row `t` of `B` is the `t`-th measurement vector (for power
//! networks, the voltage snapshot `V_t`) and row `t` of `A` the response.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{CMatrix, CVector, Error, Field, GraphMatrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub field: Field,
    pub b: CMatrix,
    pub a: CMatrix,
    pub sigma_s: f64,
    pub sigma_n: f64,
}

impl MeasurementSet {
    pub fn new(field: Field, b: CMatrix, a: CMatrix, sigma_s: f64, sigma_n: f64) -> Result<Self> {
        if b.shape() != a.shape() {
            return Err(Error::Shape(format!(
                "B is {}×{} but A is {}×{}",
                b.nrows(),
                b.ncols(),
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() == 0 || b.ncols() == 0 {
            return Err(Error::Shape("measurement matrices must be non-empty".into()));
        }
        if field == Field::Real && b.iter().chain(a.iter()).any(|z| z.im != 0.0) {
            return Err(Error::Config("real-mode measurements contain imaginary parts".into()));
        }
        if b.nrows() > b.ncols() {
            log::warn!("more measurements ({}) than unknowns per column ({})", b.nrows(), b.ncols());
        }
        Ok(MeasurementSet { field, b, a, sigma_s, sigma_n })
    }

    pub fn m(&self) -> usize {
        self.b.nrows()
    }

    pub fn n(&self) -> usize {
        self.b.ncols()
    }

    /// The first `m` measurements.
    pub fn truncated(&self, m: usize) -> Result<Self> {
        if m == 0 || m > self.m() {
            return Err(Error::Shape(format!("cannot keep {m} of {} measurements", self.m())));
        }
        Ok(MeasurementSet {
            field: self.field,
            b: self.b.rows(0, m).into_owned(),
            a: self.a.rows(0, m).into_owned(),
            sigma_s: self.sigma_s,
            sigma_n: self.sigma_n,
        })
    }
}

/// Distribution of generator entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub field: Field,
    pub sigma_s: f64,
    /// Mean of the real parts in complex mode; real mode always has mean 0.
    #[serde(default)]
    pub mean_re: f64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec { field: Field::Real, sigma_s: 1.0, mean_re: 0.0 }
    }
}

impl GeneratorSpec {
    /// `σ_S = 1/√m`, the scaling used for the noisy regime.
    pub fn noisy_preset(field: Field, m: usize) -> Self {
        GeneratorSpec { field, sigma_s: 1.0 / (m.max(1) as f64).sqrt(), mean_re: 0.0 }
    }
}

fn complex_noise<R: Rng + ?Sized>(field: Field, sigma: f64, rng: &mut R) -> Complex64 {
    if sigma == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = match field {
        Field::Real => 0.0,
        Field::Complex => rng.sample(StandardNormal),
    };
    Complex64::new(sigma * re, sigma * im)
}

fn noise_matrix<R: Rng + ?Sized>(field: Field, m: usize, n: usize, sigma: f64, rng: &mut R) -> CMatrix {
    // Row-major draw order so that the first rows of a taller draw agree.
    let mut z = CMatrix::zeros(m, n);
    for t in 0..m {
        for j in 0..n {
            z[(t, j)] = complex_noise(field, sigma, rng);
        }
    }
    z
}

/// IID Gaussian generator matrix.
pub fn sample_generator<R: Rng + ?Sized>(m: usize, n: usize, spec: &GeneratorSpec, rng: &mut R) -> Result<CMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::Shape(format!("generator must be non-empty, got {m}×{n}")));
    }
    if !(spec.sigma_s > 0.0 && spec.sigma_s.is_finite()) {
        return Err(Error::Config(format!("sigma_S must be positive, got {}", spec.sigma_s)));
    }
    let re = Normal::new(
        if spec.field == Field::Complex { spec.mean_re } else { 0.0 },
        spec.sigma_s,
    )
    .map_err(|e| Error::Config(e.to_string()))?;
    let mut b = CMatrix::zeros(m, n);
    for t in 0..m {
        for j in 0..n {
            let r = re.sample(rng);
            let i = match spec.field {
                Field::Real => 0.0,
                Field::Complex => spec.sigma_s * rng.sample::<f64, _>(StandardNormal),
            };
            b[(t, j)] = Complex64::new(r, i);
        }
    }
    Ok(b)
}

/// `A = B·Y + Z` with `Z` IID `N(0, σ_N²)` per real component.
pub fn synthesize<R: Rng + ?Sized>(b: &CMatrix, y: &GraphMatrix, sigma_n: f64, rng: &mut R) -> Result<MeasurementSet> {
    if b.ncols() != y.n() {
        return Err(Error::Shape(format!("B has {} columns but Y is {}×{}", b.ncols(), y.n(), y.n())));
    }
    if !(sigma_n >= 0.0 && sigma_n.is_finite()) {
        return Err(Error::Config(format!("sigma_N must be non-negative, got {sigma_n}")));
    }
    let field = y.field();
    let mut a = b * y.matrix();
    if sigma_n > 0.0 {
        a += noise_matrix(field, b.nrows(), b.ncols(), sigma_n, rng);
    }
    let sigma_s = column_std(b);
    MeasurementSet::new(field, b.clone(), a, sigma_s, sigma_n)
}

fn column_std(b: &CMatrix) -> f64 {
    let count = b.len() as f64;
    let mean: Complex64 = b.iter().sum::<Complex64>() / count;
    (b.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / count).sqrt()
}

/// Where measurement noise enters a power-flow style data set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoisePlacement {
    /// Noise on the currents, `A = B·Y + Z` (the model analysed by the bounds).
    #[default]
    NoiseOnA,
    /// Noise on the recorded voltages; currents are computed from the clean
    /// voltages.
    NoiseOnB,
}

/// Snapshots `V_t = V̄ + δ_t` and currents `I_t = Y V_t`, stored as `B` and `A`.
pub fn power_flow_like<R: Rng + ?Sized>(
    y: &GraphMatrix,
    v_nominal: &CVector,
    fluct_sigma: f64,
    m: usize,
    sigma_n: f64,
    placement: NoisePlacement,
    rng: &mut R,
) -> Result<MeasurementSet> {
    let n = y.n();
    if v_nominal.len() != n {
        return Err(Error::Shape(format!("nominal voltage has length {}, expected {n}", v_nominal.len())));
    }
    if m == 0 {
        return Err(Error::Shape("need at least one snapshot".into()));
    }
    if fluct_sigma < 0.0 || sigma_n < 0.0 {
        return Err(Error::Config("standard deviations must be non-negative".into()));
    }
    let field = y.field();
    let mut v = CMatrix::zeros(m, n);
    for t in 0..m {
        for j in 0..n {
            v[(t, j)] = field.coerce(v_nominal[j]) + complex_noise(field, fluct_sigma, rng);
        }
    }
    let mut currents = &v * y.matrix();
    let mut recorded = v;
    match placement {
        NoisePlacement::NoiseOnA => currents += noise_matrix(field, m, n, sigma_n, rng),
        NoisePlacement::NoiseOnB => recorded += noise_matrix(field, m, n, sigma_n, rng),
    }
    MeasurementSet::new(field, recorded, currents, fluct_sigma, sigma_n)
}

/// Nominal operating point `Ā = B̄·Y` that measurements fluctuate around.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalModel {
    pub a_bar_row: CVector,
    pub b_bar_row: CVector,
}

impl NominalModel {
    pub fn from_graph_matrix(y: &GraphMatrix, b_bar_row: CVector) -> Result<Self> {
        if b_bar_row.len() != y.n() {
            return Err(Error::Shape(format!("nominal row has length {}, expected {}", b_bar_row.len(), y.n())));
        }
        let a_bar_row = (b_bar_row.transpose() * y.matrix()).transpose();
        Ok(NominalModel { a_bar_row, b_bar_row })
    }

    pub fn zero(n: usize) -> Self {
        NominalModel { a_bar_row: CVector::zeros(n), b_bar_row: CVector::zeros(n) }
    }
}

/// `(A − Ā, B − B̄)` with the nominal rows broadcast over all measurements.
pub fn extract_perturbation(ms: &MeasurementSet, nominal: &NominalModel) -> Result<MeasurementSet> {
    let n = ms.n();
    if nominal.a_bar_row.len() != n || nominal.b_bar_row.len() != n {
        return Err(Error::Shape("nominal rows do not match the measurement width".into()));
    }
    let mut a = ms.a.clone();
    let mut b = ms.b.clone();
    for mut row in a.row_iter_mut() {
        row -= nominal.a_bar_row.transpose();
    }
    for mut row in b.row_iter_mut() {
        row -= nominal.b_bar_row.transpose();
    }
    Ok(MeasurementSet { field: ms.field, b, a, sigma_s: ms.sigma_s, sigma_n: ms.sigma_n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph_model::{build_graph_matrix, Diagonal, WeightSampler};
    use crate::rng::seeded;
    use crate::Graph;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn edge_matrix() -> GraphMatrix {
        GraphMatrix::from_dense(Field::Real, CMatrix::from_row_slice(2, 2, &[c(1.0), c(-1.0), c(-1.0), c(1.0)]))
            .unwrap()
    }

    #[test]
    fn generator_moments() {
        let (m, n) = (200, 200);
        let b = sample_generator(m, n, &GeneratorSpec::default(), &mut seeded(1)).unwrap();
        let count = (m * n) as f64;
        let mean = b.iter().map(|z| z.re).sum::<f64>() / count;
        let var = b.iter().map(|z| (z.re - mean).powi(2)).sum::<f64>() / count;
        assert!(mean.abs() <= 3.0 / count.sqrt());
        assert!((var - 1.0).abs() <= 0.05);
        assert!(b.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn complex_generator_mean() {
        let spec = GeneratorSpec { field: Field::Complex, sigma_s: 1.0, mean_re: 1.0 };
        let b = sample_generator(100, 100, &spec, &mut seeded(2)).unwrap();
        let mean_re = b.iter().map(|z| z.re).sum::<f64>() / 1e4;
        let mean_im = b.iter().map(|z| z.im).sum::<f64>() / 1e4;
        assert!((mean_re - 1.0).abs() < 0.03);
        assert!(mean_im.abs() < 0.03);
    }

    #[test]
    fn zero_sigma_rejected() {
        let spec = GeneratorSpec { sigma_s: 0.0, ..Default::default() };
        assert!(matches!(sample_generator(2, 2, &spec, &mut seeded(0)), Err(Error::Config(_))));
    }

    #[test]
    fn identity_generator_reproduces_y() {
        let g = Graph::chain(5);
        let y = build_graph_matrix(&g, Field::Complex, &WeightSampler::default(), &Diagonal::RowSum, &mut seeded(3))
            .unwrap();
        let ms = synthesize(&CMatrix::identity(5, 5), &y, 0.0, &mut seeded(0)).unwrap();
        assert_eq!(&ms.a, y.matrix());
    }

    #[test]
    fn pure_noise_energy() {
        let n = 100;
        let y = GraphMatrix::from_dense(Field::Real, CMatrix::zeros(n, n)).unwrap();
        let b = sample_generator(n, n, &GeneratorSpec::default(), &mut seeded(4)).unwrap();
        let sigma = 0.3;
        let ms = synthesize(&b, &y, sigma, &mut seeded(5)).unwrap();
        let energy = ms.a.norm_squared() / (n * n) as f64;
        assert!((energy / (sigma * sigma) - 1.0).abs() < 0.05);
    }

    #[test]
    fn hand_multiplication() {
        let ms = synthesize(&CMatrix::from_row_slice(1, 2, &[c(1.0), c(0.0)]), &edge_matrix(), 0.0, &mut seeded(0))
            .unwrap();
        assert_eq!(ms.a, CMatrix::from_row_slice(1, 2, &[c(1.0), c(-1.0)]));
        assert!(synthesize(&CMatrix::zeros(1, 3), &edge_matrix(), 0.0, &mut seeded(0)).is_err());
    }

    #[test]
    fn noiseless_synthesis_is_exact() {
        let g = Graph::star(8);
        let y = build_graph_matrix(&g, Field::Complex, &WeightSampler::default(), &Diagonal::RowSum, &mut seeded(6))
            .unwrap();
        let spec = GeneratorSpec { field: Field::Complex, sigma_s: 1.0, mean_re: 1.0 };
        let b = sample_generator(5, 8, &spec, &mut seeded(7)).unwrap();
        let ms = synthesize(&b, &y, 0.0, &mut seeded(8)).unwrap();
        assert!((&ms.a - &b * y.matrix()).norm() <= 1e-12 * ms.a.norm());
    }

    #[test]
    fn seeds_are_bit_reproducible() {
        let y = edge_matrix();
        let run = |seed| {
            let mut rng = seeded(seed);
            let b = sample_generator(3, 2, &GeneratorSpec::default(), &mut rng).unwrap();
            synthesize(&b, &y, 0.1, &mut rng).unwrap()
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn power_flow_without_fluctuation_is_rank_one() {
        let y = edge_matrix();
        let v = CVector::from_row_slice(&[c(1.0), c(0.5)]);
        let ms = power_flow_like(&y, &v, 0.0, 4, 0.0, NoisePlacement::NoiseOnA, &mut seeded(1)).unwrap();
        let expected = v.transpose() * y.matrix();
        for row in ms.a.row_iter() {
            assert_eq!(row, expected);
        }
    }

    #[test]
    fn single_line_conserves_current() {
        let y = edge_matrix();
        let v = CVector::from_row_slice(&[c(1.0), c(1.0)]);
        let ms = power_flow_like(&y, &v, 0.1, 10, 0.0, NoisePlacement::NoiseOnA, &mut seeded(2)).unwrap();
        for t in 0..10 {
            assert!((ms.a[(t, 0)] + ms.a[(t, 1)]).norm() < 1e-14);
        }
    }

    #[test]
    fn noise_on_b_keeps_currents_clean() {
        let y = edge_matrix();
        let v = CVector::from_row_slice(&[c(1.0), c(0.9)]);
        let sigma = 0.001f64.sqrt();
        let clean = power_flow_like(&y, &v, 0.1, 6, 0.0, NoisePlacement::NoiseOnB, &mut seeded(3)).unwrap();
        let noisy = power_flow_like(&y, &v, 0.1, 6, sigma, NoisePlacement::NoiseOnB, &mut seeded(3)).unwrap();
        assert_eq!(clean.a, noisy.a);
        assert_ne!(clean.b, noisy.b);
    }

    #[test]
    fn perturbation_extraction() {
        let g = Graph::chain(6);
        let y = build_graph_matrix(&g, Field::Complex, &WeightSampler::default(), &Diagonal::RowSum, &mut seeded(9))
            .unwrap();
        let v_bar = CVector::from_fn(6, |j, _| Complex64::new(1.0, 0.1 * j as f64));
        let ms = power_flow_like(&y, &v_bar, 0.05, 4, 0.0, NoisePlacement::NoiseOnA, &mut seeded(10)).unwrap();

        let same = extract_perturbation(&ms, &NominalModel::zero(6)).unwrap();
        assert_eq!(same, ms);

        let nominal = NominalModel::from_graph_matrix(&y, v_bar).unwrap();
        let pert = extract_perturbation(&ms, &nominal).unwrap();
        let resid = (&pert.a - &pert.b * y.matrix()).norm();
        assert!(resid <= 1e-10 * ms.a.norm());
    }
}
