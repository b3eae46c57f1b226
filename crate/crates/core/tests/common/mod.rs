#![allow(dead_code)]

use std::path::{Path, PathBuf};

use nexus_index::schema::NxClass;
use nexus_index::store::TypedArray;
use nexus_index::FileModel;

/// Small hand-built file: one run-level log, two event banks and their
/// detector banks, one monitor.
pub fn table_fixture() -> FileModel {
    let mut m = FileModel::new();
    m.add_group("/entry", Some(&NxClass::ENTRY)).unwrap();
    m.add_group("/entry/DASlogs", Some(&NxClass::COLLECTION))
        .unwrap();
    let log = "/entry/DASlogs/BL6:CS:DataType";
    m.add_group(log, Some(&NxClass::LOG)).unwrap();
    m.add_dataset(&format!("{log}/average_value"), TypedArray::F64(vec![2.5]))
        .unwrap();
    m.add_dataset(
        &format!("{log}/average_value_error"),
        TypedArray::F64(vec![0.5]),
    )
    .unwrap();
    m.add_dataset(&format!("{log}/time"), TypedArray::F64(vec![0.0, 1.0]))
        .unwrap();
    m.add_dataset(&format!("{log}/value"), TypedArray::F64(vec![2.0, 3.0]))
        .unwrap();

    m.add_group("/entry/instrument", Some(&NxClass::INSTRUMENT))
        .unwrap();
    for (bank, offset) in [("bank1", 0u32), ("bank91", 4)] {
        let det = format!("/entry/instrument/{bank}");
        m.add_group(&det, Some(&NxClass::DETECTOR)).unwrap();
        m.add_dataset(
            &format!("{det}/pixel_id_offset"),
            TypedArray::U32(vec![offset]),
        )
        .unwrap();
        m.add_dataset(&format!("{det}/pixel_count"), TypedArray::U32(vec![4]))
            .unwrap();
    }

    m.add_group("/entry/monitor1", Some(&NxClass::MONITOR))
        .unwrap();
    m.add_dataset("/entry/monitor1/data", TypedArray::U64(vec![5, 6, 7]))
        .unwrap();

    let bank = "/entry/bank1_events";
    m.add_group(bank, Some(&NxClass::EVENT_DATA)).unwrap();
    m.add_dataset(
        &format!("{bank}/event_id"),
        TypedArray::U32(vec![0, 3, 3, 1]),
    )
    .unwrap();
    m.add_dataset(&format!("{bank}/event_index"), TypedArray::U64(vec![0, 2]))
        .unwrap();
    m.add_dataset(
        &format!("{bank}/event_time_offset"),
        TypedArray::F32(vec![10.0, 20.0, 30.0, 40.0]),
    )
    .unwrap();
    m.add_dataset(
        &format!("{bank}/event_time_zero"),
        TypedArray::F64(vec![0.0, 1.0 / 60.0]),
    )
    .unwrap();
    m.add_dataset(
        &format!("{bank}/event_total_counts"),
        TypedArray::U64(vec![4]),
    )
    .unwrap();

    let bank = "/entry/bank91_events";
    m.add_group(bank, Some(&NxClass::EVENT_DATA)).unwrap();
    m.add_dataset(&format!("{bank}/event_id"), TypedArray::U32(vec![7]))
        .unwrap();
    m.add_dataset(&format!("{bank}/event_index"), TypedArray::U64(vec![0]))
        .unwrap();
    m.add_dataset(
        &format!("{bank}/event_time_offset"),
        TypedArray::F32(vec![99.0]),
    )
    .unwrap();
    m.add_dataset(
        &format!("{bank}/event_time_zero"),
        TypedArray::F64(vec![0.0]),
    )
    .unwrap();
    m.add_dataset(
        &format!("{bank}/event_total_counts"),
        TypedArray::U64(vec![1]),
    )
    .unwrap();
    m
}

pub fn write_temp(dir: &Path, name: &str, model: &FileModel) -> PathBuf {
    let path = dir.join(name);
    nexus_index::write_store(model, &path).unwrap();
    path
}
