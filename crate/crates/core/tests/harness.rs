use std::fs;
use std::path::Path;

use proptest::prelude::*;
use symrec_core::ensembles::{binomial_half_width, EnsembleKind, EnsembleSpec};
use symrec_core::graph_model::{build_graph_matrix, Diagonal, WeightSampler};
use symrec_core::harness::io::{emit_measurements, ingest, ingest_truth};
use symrec_core::harness::{metrics, sample_complexity_sweep, MStrategy, SweepSpec, TrialSpec};
use symrec_core::measurement::MeasurementSet;
use symrec_core::recovery::{recover, RecoveryConfig, Scheme};
use symrec_core::rng::seeded;
use symrec_core::{CMatrix, Complex64, Error, Field, Graph};

fn sweep_spec(strategy: MStrategy, trials: usize, seed: u64) -> SweepSpec {
    let mut base = TrialSpec::new(
        EnsembleSpec::new(EnsembleKind::UniformTree, 8).unwrap(),
        1,
        RecoveryConfig::new(Scheme::ColumnBp),
    );
    base.mean_re = 1.0;
    base.trials = trials;
    base.seed = seed;
    SweepSpec::new(base, vec![6, 8], strategy)
}

#[test]
fn sweep_csv_is_seed_deterministic() {
    let spec = SweepSpec {
        schemes: vec![Scheme::ColumnBp, Scheme::Heuristic],
        ..sweep_spec(MStrategy::ScanUp { start: 2, step: 1, q: 0.9 }, 6, 77)
    };
    let first = sample_complexity_sweep(&spec).unwrap().to_csv();
    let second = sample_complexity_sweep(&spec).unwrap().to_csv();
    assert_eq!(first.as_bytes(), second.as_bytes());
    assert!(first.starts_with("n,m,scheme,topo_err,param_err,mean_frob,runtime_ms,trials\n"));
    let other = sample_complexity_sweep(&SweepSpec { base: TrialSpec { seed: 78, ..spec.base.clone() }, ..spec })
        .unwrap()
        .to_csv();
    assert_ne!(first, other);
}

#[test]
fn error_rates_are_softly_monotone_in_m() {
    let spec = sweep_spec(MStrategy::Grid { ms: vec![1, 2, 3, 4, 5, 6, 8] }, 30, 5);
    let result = sample_complexity_sweep(&spec).unwrap();
    for n in [6usize, 8] {
        let rows: Vec<_> = result.rows.iter().filter(|r| r.n == n).collect();
        for (i, lo) in rows.iter().enumerate() {
            for hi in &rows[i + 1..] {
                for (a, b) in [(lo.topo_err, hi.topo_err), (lo.param_err, hi.param_err)] {
                    let ci = binomial_half_width(a, lo.trials).max(binomial_half_width(b, hi.trials));
                    assert!(b <= a + 2.0 * ci, "n {n}: m {} → {}: {a} then {b}", lo.m, hi.m);
                }
            }
        }
    }
}

fn exact_support_truth(n: usize, seed: u64) -> CMatrix {
    let mut rng = seeded(seed);
    let g = symrec_core::ensembles::sample(&EnsembleSpec::new(EnsembleKind::ErdosRenyi { p: 0.4 }, n).unwrap(), &mut rng);
    build_graph_matrix(&g, Field::Complex, &WeightSampler::default(), &Diagonal::Zero, &mut rng)
        .unwrap()
        .into_matrix()
}

proptest! {
    // Supports of truth and estimate differ somewhere ⇒ one entry moved by at least the threshold.
    #[test]
    fn topology_mismatch_bounds_the_error(
        n in 3usize..10,
        seed in any::<u64>(),
        edits in proptest::collection::vec((0usize..10, 0usize..10, -3.0f64..3.0), 0..4),
        t in prop_oneof![Just(1e-5), 1e-6f64..0.5],
    ) {
        let y = exact_support_truth(n, seed);
        let floor = WeightSampler::default().magnitude_floor(Field::Complex);
        let mut x = y.clone();
        for (i, j, v) in edits {
            let (i, j) = (i % n, j % n);
            x[(i, j)] = if v.abs() < 1.0 { Complex64::new(0.0, 0.0) } else { x[(i, j)] + Complex64::new(v * t, 0.0) };
        }
        let met = metrics(&x, &y, Field::Complex, t).unwrap();
        if !met.topo_ok {
            prop_assert!(met.frob >= t * floor.min(1.0), "frob {}", met.frob);
        }
    }

    #[test]
    fn emit_then_ingest_is_bit_exact(
        m in 1usize..6,
        n in 1usize..6,
        vals in proptest::collection::vec(prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), Just(0.0), Just(-0.0), Just(f64::MIN_POSITIVE)], 72),
    ) {
        let at = |k: usize| vals[k % vals.len()];
        let b = CMatrix::from_fn(m, n, |i, j| Complex64::new(at(2 * (i * n + j)), at(2 * (i * n + j) + 1)));
        let a = CMatrix::from_fn(m, n, |i, j| Complex64::new(at(36 + i * n + j), at(i + j)));
        let truth = CMatrix::from_fn(n, n, |i, j| Complex64::new(at(i * 7 + j), 0.0));
        let ms = MeasurementSet::new(Field::Complex, b, a, 1.5, 0.25).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = emit_measurements(dir.path(), &ms, Some(9), Some(&truth)).unwrap();
        let back = ingest(&manifest).unwrap();
        let bits = |x: &CMatrix| x.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.a), bits(&ms.a));
        prop_assert_eq!(bits(&back.b), bits(&ms.b));
        prop_assert_eq!(bits(&ingest_truth(&manifest).unwrap().unwrap()), bits(&truth));
        prop_assert_eq!((back.sigma_s, back.sigma_n, back.field), (1.5, 0.25, Field::Complex));
    }
}

fn fixture() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/chain6/manifest.json"))
}

// B and A were written by an outside script from a known integer chain matrix.
#[test]
fn external_fixture_recovers_with_matching_frobenius() {
    let ms = ingest(fixture()).unwrap();
    assert_eq!((ms.m(), ms.n(), ms.field), (5, 6, Field::Real));
    let y = ingest_truth(fixture()).unwrap().unwrap();
    assert_eq!(
        symrec_core::graph_model::support(&y, 1e-5),
        Graph::new(6, [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap()
    );
    for scheme in [Scheme::ColumnBp, Scheme::ThreeStage] {
        let out = recover(&ms, &RecoveryConfig::new(scheme)).unwrap();
        let met = metrics(&out.x, &y, Field::Real, 1e-5).unwrap();
        let mut sq = 0.0;
        for i in 0..6 {
            for j in 0..6 {
                let (d_re, d_im) = (out.x[(i, j)].re - y[(i, j)].re, out.x[(i, j)].im - y[(i, j)].im);
                sq += d_re * d_re + d_im * d_im;
            }
        }
        assert!((met.frob - sq.sqrt()).abs() <= 1e-12 * (1.0 + sq.sqrt()), "{scheme}");
        assert!((met.frob_normalized - sq.sqrt() / 36.0).abs() <= 1e-12, "{scheme}");
        assert!(out.is_success() && met.topo_ok && met.sign_ok && met.param_ok(1e-6), "{scheme}: frob {}", met.frob);
    }
}

#[test]
fn mismatched_manifest_is_rejected_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let src = fixture().parent().unwrap();
    for f in ["A.csv", "B.csv", "Y.csv"] {
        fs::copy(src.join(f), dir.path().join(f)).unwrap();
    }
    let text = fs::read_to_string(fixture()).unwrap().replace("\"m\": 5", "\"m\": 4");
    let manifest = dir.path().join("manifest.json");
    fs::write(&manifest, text).unwrap();
    match ingest(&manifest) {
        Err(Error::Parse { path, msg, .. }) => {
            assert!(path.ends_with("B.csv"), "{}", path.display());
            assert!(msg.contains("5×6") && msg.contains("4×6"), "{msg}");
        }
        other => panic!("expected a parse error, got {other:?}"),
    }
    // A ragged row names its line.
    fs::write(dir.path().join("B.csv"), "1,2,3,4,5,6\n1,2,3\n").unwrap();
    match ingest(&manifest) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a parse error, got {other:?}"),
    }
}
