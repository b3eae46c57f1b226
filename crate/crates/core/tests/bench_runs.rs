use std::time::Duration;

use nexus_index::bench::{run_bench, write_rows_csv, BenchConfig, CacheMode};
use nexus_index::LoadMode;

#[test]
fn small_run_produces_rows_and_summaries() {
    let cfg = BenchConfig {
        profiles: vec!["nom".into(), "biosans".into()],
        repeats: 2,
        event_scale: 0.001,
        cache: CacheMode::Fresh,
        ..BenchConfig::default()
    };
    let report = run_bench(&cfg).unwrap();
    assert_eq!(report.rows.len(), 2 * 2 * 2);
    assert_eq!(report.summaries.len(), 2);
    for s in &report.summaries {
        assert!(s.call_reduction_ratio > 1.0, "{s:?}");
        assert!(s.legacy_wall_ms_median > 0.0 && s.indexed_wall_ms_median > 0.0);
    }
    // counts do not depend on timing
    let nom_indexed: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.profile == "nom" && r.mode == LoadMode::Indexed)
        .map(|r| (r.list_children_calls, r.read_attribute_calls, r.bytes_read))
        .collect();
    assert!(nom_indexed.windows(2).all(|w| w[0] == w[1]));

    let mut buf = Vec::new();
    write_rows_csv(&mut buf, &report.rows).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap().lines().count(),
        1 + report.rows.len()
    );
}

#[test]
fn speedup_grows_with_latency() {
    let mut speedups = Vec::new();
    for us in [2, 20, 80] {
        let cfg = BenchConfig {
            profiles: vec!["gpsans".into()],
            repeats: 3,
            event_scale: 0.001,
            meta_latency: Duration::from_micros(us),
            ..BenchConfig::default()
        };
        speedups.push(run_bench(&cfg).unwrap().summaries[0].relative_speedup);
    }
    assert!(speedups.windows(2).all(|w| w[0] < w[1]), "{speedups:?}");
}

#[test]
fn unknown_profile_is_rejected() {
    let cfg = BenchConfig {
        profiles: vec!["vulcan".into()],
        ..BenchConfig::default()
    };
    assert!(run_bench(&cfg).is_err());
}
