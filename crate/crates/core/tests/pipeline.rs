use std::path::PathBuf;

use sunqp::acf::WindowName;
use sunqp::harmonics::{collect_pairs, PairingRule};
use sunqp::output::{read_manifest, read_report, verify_manifest, RunStatus, MANIFEST, REPORT};
use sunqp::pipeline::{analyze_records, run_pipeline, RunConfig};
use sunqp::synth::{fixture_daily_records, fixture_daily_records_with, FixtureSpec};
use sunqp::{Error, ErrorClass, Execution, Hemisphere, SeriesKind};

fn fixture_config() -> RunConfig {
    RunConfig {
        fixture: true,
        ..RunConfig::default()
    }
}

#[test]
fn missing_input_leaves_failed_manifest_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        input_path: Some(PathBuf::from("/nonexistent/daily_area.txt")),
        output_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let err = run_pipeline(&cfg, Execution::Sequential).unwrap_err();
    assert_eq!(err.class(), ErrorClass::Data);
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 1);
    let m = read_manifest(dir.path()).unwrap();
    assert_eq!(m.status, RunStatus::Failed);
    assert!(m.files.is_empty());
    assert!(m.error.is_some());
}

#[test]
fn invalid_config_is_a_config_error() {
    let cfg = RunConfig {
        significance_level: 1.5,
        ..fixture_config()
    };
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        output_dir: dir.path().to_path_buf(),
        ..cfg
    };
    assert!(matches!(
        run_pipeline(&cfg, Execution::Sequential),
        Err(Error::Config(_))
    ));
}

#[test]
fn fixture_run_writes_verified_tree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        output_dir: dir.path().to_path_buf(),
        ..fixture_config()
    };
    let report = run_pipeline(&cfg, Execution::default()).unwrap();
    let m = read_manifest(dir.path()).unwrap();
    assert_eq!(m.status, RunStatus::Ok);
    assert!(verify_manifest(dir.path(), &m).is_empty());
    assert!(m.files.iter().any(|f| f.path == REPORT));
    assert!(m.files.iter().all(|f| f.path != MANIFEST));
    assert_eq!(read_report(dir.path()).unwrap(), report);
    for h in Hemisphere::ALL {
        assert!(dir.path().join(format!("fluctuations_{h}.csv")).is_file());
        assert!(dir.path().join(format!("plots/histogram_{h}.csv")).is_file());
    }
    assert_eq!(report.hemispheres.len(), 2);
    assert!(report.hemispheres.iter().all(|h| h.n == 1706));
}

#[cfg(feature = "parallel")]
#[test]
fn sequential_and_parallel_agree() {
    let recs = fixture_daily_records(3);
    let cfg = fixture_config();
    let a = analyze_records(&recs, &cfg, Execution::Sequential).unwrap();
    let b = analyze_records(&recs, &cfg, Execution::Parallel).unwrap();
    assert_eq!(a, b);
}

#[test]
fn pure_sinusoid_corpus_recovers_period() {
    let recs = fixture_daily_records_with(&FixtureSpec::pure_sinusoid(10.0), 5);
    let a = analyze_records(&recs, &fixture_config(), Execution::default()).unwrap();
    for kind in SeriesKind::ALL {
        let lags: Vec<usize> = a
            .acf
            .of_kind(kind)
            .map(|x| x.peak(WindowName::Short).unwrap().lag)
            .collect();
        assert_eq!(lags.len(), 24, "{kind}");
        assert!(lags.iter().all(|&l| l == 10), "{kind}: {lags:?}");
        let agreement = a.agreement(kind).unwrap();
        assert_eq!(agreement.fraction_within_one, Some(1.0), "{kind}");
    }
    let sym = a.symmetry.as_ref().unwrap();
    assert!(!sym.result.reject);
}

#[test]
fn varied_period_corpus_methods_agree() {
    let spec = FixtureSpec {
        period_range: (8.0, 12.0),
        ..FixtureSpec::pure_sinusoid(10.0)
    };
    let recs = fixture_daily_records_with(&spec, 11);
    let a = analyze_records(&recs, &fixture_config(), Execution::default()).unwrap();
    let ag = a.agreement(SeriesKind::Original).unwrap();
    assert!(ag.matched.len() >= 20, "{}", ag.matched.len());
    let r = ag.pearson_r.unwrap();
    assert!(r >= 0.95, "{r}");
}

#[test]
fn argmax_only_pairs_every_analysed_case() {
    let recs = fixture_daily_records(1);
    let a = analyze_records(&recs, &fixture_config(), Execution::default()).unwrap();
    for kind in SeriesKind::ALL {
        let analysed = a.acf.of_kind(kind).count();
        for k in [2, 3] {
            let c = collect_pairs(&a.acf, kind, k, PairingRule::ArgmaxOnly);
            assert_eq!(c.pairs.len(), analysed, "{kind} k={k}");
            assert_eq!(c.excluded, 0);
            let strict = collect_pairs(&a.acf, kind, k, PairingRule::TwoSe);
            let loose = collect_pairs(&a.acf, kind, k, PairingRule::OneSe);
            assert!(strict.pairs.len() <= loose.pairs.len());
            assert_eq!(loose.pairs.len() + loose.excluded, analysed);
        }
    }
}

#[test]
fn fixture_fluctuations_are_skewed_and_non_normal() {
    let recs = fixture_daily_records(1);
    let a = analyze_records(&recs, &fixture_config(), Execution::default()).unwrap();
    for h in &a.hemispheres {
        let d = &h.distribution;
        assert!(d.skewness > 0.0, "{}", d.skewness);
        assert!(d.tests.iter().all(|t| t.reject), "{:?}", d.tests);
    }
}
