mod common;

use nexus_index::loader::{load_event_nexus_with, load_logs, LoadContext, LoadError, LoadOptions};
use nexus_index::schema::NxClass;
use nexus_index::store::TypedArray;
use nexus_index::synth::{generate, instrument_profile};
use nexus_index::{load_event_nexus, open_store, FileModel, LoadMode};

#[test]
fn fixture_loads_identically_in_both_modes() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write_temp(dir.path(), "f.nxb", &common::table_fixture());
    let legacy = load_event_nexus(&open_store(&path).unwrap(), LoadMode::Legacy).unwrap();
    let indexed = load_event_nexus(&open_store(&path).unwrap(), LoadMode::Indexed).unwrap();
    assert_eq!(legacy, indexed);

    let log = &indexed.logs["BL6:CS:DataType"];
    assert_eq!(log.average_value, 2.5);
    assert_eq!(log.average_value_error, 0.5);
    assert_eq!(log.values, [2.0, 3.0]);
    assert_eq!(indexed.monitors["monitor1"], [5, 6, 7]);
    assert_eq!(indexed.event_count(), 5);
    assert_eq!(indexed.bank_totals["bank1_events"], 4);

    // pixel 3 gets one event from each of the two pulses
    let p3 = &indexed.pixels[&3];
    assert_eq!(p3.len(), 2);
    assert_eq!((p3[0].tof, p3[0].pulse), (20.0, 0));
    assert_eq!((p3[1].tof, p3[1].pulse), (30.0, 1));
    assert_eq!(&*indexed.pixels[&7][0].bank, "bank91_events");
}

#[test]
fn logs_stage_alone() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write_temp(dir.path(), "f.nxb", &common::table_fixture());
    let h = open_store(&path).unwrap();
    let logs = load_logs(&LoadContext::indexed(&h).unwrap()).unwrap();
    assert_eq!(logs.keys().collect::<Vec<_>>(), ["BL6:CS:DataType"]);
    assert_eq!(logs, load_logs(&LoadContext::legacy(&h)).unwrap());
}

#[test]
fn generated_profiles_agree_across_modes() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["gpsans", "nom"] {
        let p = instrument_profile(name).unwrap();
        let model = generate(&p, 3, 0.002).unwrap();
        let path = common::write_temp(dir.path(), "g.nxb", &model);
        let lh = open_store(&path).unwrap();
        let ih = open_store(&path).unwrap();
        let legacy = load_event_nexus(&lh, LoadMode::Legacy).unwrap();
        let indexed = load_event_nexus(&ih, LoadMode::Indexed).unwrap();
        assert_eq!(legacy, indexed, "{name}");
        assert_eq!(legacy.logs.len(), p.n_logs);
        assert_eq!(legacy.bank_totals.len(), p.n_banks);

        let groups = model.group_count() as u64;
        let ic = ih.counters();
        assert_eq!(ic.list_children_calls, groups);
        assert_eq!(ic.read_attribute_calls, groups - 1);
        // both modes read exactly the same payloads
        assert_eq!(lh.counters().bytes_read, ic.bytes_read);
        assert_eq!(lh.counters().read_dataset_calls, ic.read_dataset_calls);
        assert!(lh.counters().metadata_calls() > ic.metadata_calls());

        let par = load_event_nexus_with(
            &open_store(&path).unwrap(),
            LoadMode::Indexed,
            LoadOptions {
                parallel_banks: true,
            },
        )
        .unwrap();
        assert_eq!(par, indexed);
    }
}

fn load_both(model: &FileModel) -> (Result<(), LoadError>, Result<(), LoadError>) {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write_temp(dir.path(), "bad.nxb", model);
    let h = open_store(&path).unwrap();
    (
        load_event_nexus(&h, LoadMode::Legacy).map(drop),
        load_event_nexus(&h, LoadMode::Indexed).map(drop),
    )
}

#[test]
fn missing_entry() {
    let mut m = FileModel::new();
    m.add_group("/other", Some(&NxClass::COLLECTION)).unwrap();
    let (l, i) = load_both(&m);
    assert!(matches!(l, Err(LoadError::MissingEntryGroup)));
    assert!(matches!(i, Err(LoadError::MissingEntryGroup)));
}

#[test]
fn pixel_outside_detector() {
    // same layout as the fixture, but bank91 reports a pixel owned by bank1
    let src = common::table_fixture();
    let mut m = FileModel::new();
    for rec in src.records().iter().filter(|r| !r.path.is_root()) {
        let path = rec.path.as_str();
        match src.payload(path) {
            _ if path == "/entry/bank91_events/event_id" => {
                m.add_dataset(path, TypedArray::U32(vec![2])).unwrap();
            }
            Some(data) => {
                m.add_dataset(path, data.clone()).unwrap();
            }
            None => {
                m.add_group(path, None).unwrap();
                for (k, v) in &rec.attributes {
                    m.set_attribute(path, k, v).unwrap();
                }
            }
        }
    }
    let (l, i) = load_both(&m);
    assert!(matches!(
        l,
        Err(LoadError::PixelOutOfRange { pixel: 2, .. })
    ));
    assert!(matches!(
        i,
        Err(LoadError::PixelOutOfRange { pixel: 2, .. })
    ));
}

#[test]
fn bank_without_detector() {
    let mut m = common::table_fixture();
    m.add_group("/entry/bank5_events", Some(&NxClass::EVENT_DATA))
        .unwrap();
    for (name, data) in [
        ("event_id", TypedArray::U32(vec![])),
        ("event_index", TypedArray::U64(vec![])),
        ("event_time_offset", TypedArray::F32(vec![])),
        ("event_time_zero", TypedArray::F64(vec![])),
        ("event_total_counts", TypedArray::U64(vec![0])),
    ] {
        m.add_dataset(&format!("/entry/bank5_events/{name}"), data)
            .unwrap();
    }
    let (l, i) = load_both(&m);
    assert!(matches!(l, Err(LoadError::UnmappedBank(ref b)) if b == "bank5_events"));
    assert!(matches!(i, Err(LoadError::UnmappedBank(ref b)) if b == "bank5_events"));
}

#[test]
fn malformed_groups() {
    let mut m = common::table_fixture();
    m.add_group("/entry/monitor2", Some(&NxClass::MONITOR))
        .unwrap();
    m.add_dataset("/entry/monitor2/data", TypedArray::F32(vec![1.0]))
        .unwrap();
    let (l, i) = load_both(&m);
    assert!(
        matches!(l, Err(LoadError::MalformedMonitor { .. })),
        "{l:?}"
    );
    assert!(
        matches!(i, Err(LoadError::MalformedMonitor { .. })),
        "{i:?}"
    );

    let mut m = common::table_fixture();
    m.add_group("/entry/instrument/bank7", Some(&NxClass::DETECTOR))
        .unwrap();
    m.add_dataset(
        "/entry/instrument/bank7/pixel_id_offset",
        TypedArray::U32(vec![100]),
    )
    .unwrap();
    m.add_dataset(
        "/entry/instrument/bank7/pixel_count",
        TypedArray::U64(vec![4]),
    )
    .unwrap();
    let (l, i) = load_both(&m);
    assert!(
        matches!(
            l,
            Err(LoadError::WrongType {
                expected: "u32",
                found: "u64",
                ..
            })
        ),
        "{l:?}"
    );
    assert!(
        matches!(
            i,
            Err(LoadError::WrongType {
                expected: "u32",
                found: "u64",
                ..
            })
        ),
        "{i:?}"
    );

    let mut m = common::table_fixture();
    m.add_group("/entry/DASlogs/empty", Some(&NxClass::LOG))
        .unwrap();
    let (l, i) = load_both(&m);
    assert!(matches!(l, Err(LoadError::MissingDataset { .. })), "{l:?}");
    assert!(matches!(i, Err(LoadError::MissingDataset { .. })), "{i:?}");
}
