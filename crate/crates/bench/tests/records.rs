use std::path::Path;

use proptest::prelude::*;
use ts1_bench::record::{aggregate_success, read_csv, write_csv};
use ts1_bench::{emit_csv, run_suite, ExperimentRecord, ExperimentSpec, Suite};

fn record_strategy() -> impl Strategy<Value = ExperimentRecord> {
    let dims = (1usize..500, 1usize..500, 1usize..50, 0usize..100);
    let floats = (
        0.001f64..1.0,
        0.0f64..0.99,
        0.0f64..1.0,
        prop_oneof![Just(0.0), 1e-12f64..10.0, Just(f64::NAN)],
        prop_oneof![-50.0f64..200.0, Just(f64::INFINITY)],
        prop_oneof![Just(0.0), 1e-20f64..1.0],
        0.0f64..1000.0,
    );
    let rest = (
        any::<bool>(),
        0usize..5000,
        proptest::option::of(1usize..100),
        proptest::option::of("[a-z ,\"]{1,20}"),
        prop::sample::select(Suite::ALL.to_vec()),
        prop::sample::select(vec!["ts1-s1", "ts1-s2", "ts1-it", "nuclear"]),
    );
    (dims, floats, rest).prop_map(|((m, n, r, trial), (sr, cov, noise, rel, psnr, mse, secs), rest)| {
        let (success, iterations, rank_estimated, error, suite, solver) = rest;
        let r = 1 + r % m.min(n);
        let p = ((sr * (m * n) as f64).round() as usize).max(1);
        ExperimentRecord {
            suite,
            solver: solver.to_string(),
            m,
            n,
            r,
            sr,
            fr: ts1_core::freedom_ratio(m, n, r, p),
            cov,
            sigma_noise: noise,
            trial,
            rel_err: rel,
            psnr,
            mse,
            success,
            iterations,
            wall_time_seconds: secs,
            rank_estimated,
            error,
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn csv_round_trip(records in proptest::collection::vec(record_strategy(), 100)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/out.csv");
        emit_csv(&records, &path).unwrap();
        let back = read_csv(&path).unwrap();
        prop_assert_eq!(back.len(), records.len());
        for (a, b) in records.iter().zip(&back) {
            // Debug output compares NaN payloads as equal.
            prop_assert_eq!(format!("{:?}", a.normalized()), format!("{:?}", b));
            prop_assert_eq!(a.rel_err.to_bits(), b.rel_err.to_bits());
            prop_assert_eq!(a.fr.to_bits(), b.fr.to_bits());
        }
    }
}

const SMALL: &str = r#"
    [experiment]
    suite = "success-curve"
    seed = 99
    trials = 3
    [problem]
    m = 40
    n = 30
    ranks = [2, 4]
    sr = [0.5, 0.7]
    noise = [0.0, 0.01]
    [solver]
    names = ["ts1-s2", "ts1-s1"]
"#;

fn csv_without_wall_time(records: &[ExperimentRecord]) -> String {
    let zeroed: Vec<ExperimentRecord> = records
        .iter()
        .map(|r| ExperimentRecord {
            wall_time_seconds: 0.0,
            ..r.clone()
        })
        .collect();
    let mut out = Vec::new();
    write_csv(&zeroed, &mut out).unwrap();
    String::from_utf8(out).unwrap()
}

#[test]
fn suite_is_deterministic_and_schedule_independent() {
    let spec = ExperimentSpec::from_toml_str(SMALL).unwrap();
    let serial = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| run_suite(&spec).unwrap());
    let parallel = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| run_suite(&spec).unwrap());
    assert_eq!(serial.len(), 2 * 2 * 2 * 3 * 2);
    assert_eq!(csv_without_wall_time(&serial), csv_without_wall_time(&parallel));

    let other_seed = ExperimentSpec { seed: 100, ..spec };
    let different = run_suite(&other_seed).unwrap();
    assert_ne!(csv_without_wall_time(&serial), csv_without_wall_time(&different));
}

#[test]
fn fr_column_matches_independent_recomputation() {
    let records = run_suite(&ExperimentSpec::from_toml_str(SMALL).unwrap()).unwrap();
    for rec in &records {
        let p = (rec.sr * (rec.m * rec.n) as f64).round();
        let r = rec.r as f64;
        let expected = r * ((rec.m + rec.n) as f64 - r) / p;
        assert_eq!(rec.fr, expected, "{rec:?}");
        assert!(rec.error.is_none());
    }
    // The stored value survives the CSV round trip bit for bit.
    let mut out = Vec::new();
    write_csv(&records, &mut out).unwrap();
    let back = ts1_bench::parse_csv(out.as_slice()).unwrap();
    for (a, b) in records.iter().zip(&back) {
        assert_eq!(a.fr.to_bits(), b.fr.to_bits());
    }
}

#[test]
fn success_aggregate_is_mean_of_trials() {
    let records = run_suite(&ExperimentSpec::from_toml_str(SMALL).unwrap()).unwrap();
    let points = aggregate_success(&records);
    assert_eq!(points.len(), 2 * 2 * 2 * 2);
    for p in &points {
        let cell: Vec<&ExperimentRecord> = records
            .iter()
            .filter(|r| r.solver == p.solver && r.r == p.r && r.sr == p.sr && r.sigma_noise == p.sigma_noise)
            .collect();
        assert_eq!(cell.len(), p.trials);
        let mean = cell.iter().filter(|r| r.success).count() as f64 / cell.len() as f64;
        assert_eq!(p.rate, mean);
    }
}

#[test]
fn single_fully_observed_noiseless_is_exact() {
    let spec = ExperimentSpec::from_toml_str(
        r#"
        [experiment]
        suite = "single"
        [problem]
        m = 50
        n = 40
        ranks = 4
        sr = 1.0
        noise = 0.0
        [solver]
        names = ["ts1-s2", "ts1-s1", "nuclear"]
        "#,
    )
    .unwrap();
    for rec in run_suite(&spec).unwrap() {
        if rec.solver == "nuclear" {
            assert!(rec.rel_err < 1e-3, "{rec:?}");
        } else {
            assert!(rec.rel_err < 1e-12, "{rec:?}");
        }
    }
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let spec = ExperimentSpec::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            assert!((5..=10).contains(&spec.trials) || spec.suite == Suite::Inpaint);
            assert_eq!(spec.clone().with_full_trials().trials, 50);
            assert!(spec.output.is_some());
            count += 1;
        }
    }
    assert_eq!(count, 7);
}
