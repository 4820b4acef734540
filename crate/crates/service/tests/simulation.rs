use std::time::Instant;

use winofusion::sim::{run, SimConfig};

#[test]
fn scripted_crowd_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig { store_dir: Some(dir.path().to_path_buf()), snapshot_every: 100, ..SimConfig::default() };
    let t = Instant::now();
    let (_, report) = run(&cfg).unwrap();
    let elapsed = t.elapsed();
    println!("{report:#?}\n{elapsed:?}");
    assert!(report.violations.is_empty(), "{:?}", report.violations);
    assert!(report.valid_finished >= 15, "{}", report.valid_finished);
    assert_eq!(report.restore_equal, Some(true));
    assert!(report.mean_response_ms.values().all(|m| m.is_finite()));
    assert!(elapsed.as_secs() < 60);
}

#[test]
fn same_seed_same_exports() {
    let (_, a) = run(&SimConfig::default()).unwrap();
    let (_, b) = run(&SimConfig::default()).unwrap();
    assert!(!a.exports.is_empty());
    assert_eq!(a.exports, b.exports);
    assert_eq!(a, b);
    assert!(a.expired_leases > 0);
}
