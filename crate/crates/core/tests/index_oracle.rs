mod common;

use std::collections::{BTreeMap, BTreeSet};

use nexus_index::index::Comparisons;
use nexus_index::schema::{NxClass, NxPath, NX_CLASS_ATTR};
use nexus_index::synth::random_model;
use nexus_index::{build_index, open_store, FileModel, MetadataIndex};

/// Classifies every non-root record directly from the model.
fn oracle(model: &FileModel) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for rec in model.records().iter().filter(|r| !r.path.is_root()) {
        let class = if rec.is_group() {
            rec.attributes
                .get(NX_CLASS_ATTR)
                .cloned()
                .unwrap_or_else(|| "NXunknown".to_owned())
        } else {
            "SDS".to_owned()
        };
        out.entry(class)
            .or_default()
            .insert(rec.path.as_str().to_owned());
    }
    out
}

fn as_map(ix: &MetadataIndex) -> BTreeMap<String, BTreeSet<String>> {
    ix.buckets()
        .map(|(c, ps)| {
            (
                c.as_str().to_owned(),
                ps.iter().map(|p| p.as_str().to_owned()).collect(),
            )
        })
        .collect()
}

#[test]
fn fixture_buckets() {
    let dir = tempfile::tempdir().unwrap();
    let path = common::write_temp(dir.path(), "f.nxb", &common::table_fixture());
    let h = open_store(&path).unwrap();
    let ix = build_index(&h).unwrap();
    let events: Vec<&str> = ix
        .entries_of_class(&NxClass::EVENT_DATA)
        .iter()
        .map(|p| p.as_str())
        .collect();
    assert_eq!(events, ["/entry/bank1_events", "/entry/bank91_events"]);
    let logs: Vec<&str> = ix
        .entries_of_class(&NxClass::LOG)
        .iter()
        .map(|p| p.as_str())
        .collect();
    assert_eq!(logs, ["/entry/DASlogs/BL6:CS:DataType"]);
    assert!(ix.contains(
        &NxClass::SDS,
        &NxPath::parse("/entry/DASlogs/BL6:CS:DataType/average_value").unwrap()
    ));
    assert!(ix.entries_of_class(&NxClass::GEOMETRY).is_empty());

    let c = h.counters();
    let groups = h.records().filter(|r| r.is_group()).count() as u64;
    assert_eq!(c.list_children_calls, groups);
    assert_eq!(c.read_attribute_calls, groups - 1);
    assert_eq!(c.read_dataset_calls, 0);
}

#[test]
fn matches_brute_force_on_random_trees() {
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..60u64 {
        let model = random_model(seed, 10 + (seed as usize * 37) % 600);
        let path = common::write_temp(dir.path(), "r.nxb", &model);
        let h = open_store(&path).unwrap();
        let ix = build_index(&h).unwrap();
        assert_eq!(as_map(&ix), oracle(&model), "seed {seed}");
        assert_eq!(ix.len(), model.entry_count());
    }
}

#[test]
fn datasets_under_matches_filter() {
    for seed in 0..30u64 {
        let model = random_model(seed, 300);
        let ix = MetadataIndex::from_entries(
            model
                .records()
                .iter()
                .filter(|r| !r.path.is_root())
                .map(|r| (nexus_index::schema::classify_entry(r), r.path.clone())),
        )
        .unwrap();
        for g in model.records().iter().filter(|r| r.is_group()) {
            let expect: Vec<&NxPath> = model
                .records()
                .iter()
                .filter(|r| !r.is_group() && r.path.parent().ok().as_ref() == Some(&g.path))
                .map(|r| &r.path)
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            assert_eq!(
                ix.datasets_under(&g.path),
                expect,
                "seed {seed} group {}",
                g.path
            );
        }
    }
}

#[test]
fn lookup_cost_is_logarithmic() {
    let classes = 8usize;
    for exp in 4..=14 {
        let e = 1usize << exp;
        let ix = MetadataIndex::from_entries((0..classes).flat_map(|c| {
            (0..e).map(move |i| {
                (
                    NxClass::new(format!("NXc{c}")),
                    NxPath::parse(&format!("/c{c}/e{i:06}")).unwrap(),
                )
            })
        }))
        .unwrap();
        let bound = 2
            * ((classes + 1).next_power_of_two().trailing_zeros() as usize
                + (e + 1).next_power_of_two().trailing_zeros() as usize)
            + 4;
        for i in [0, e / 3, e - 1] {
            let mut cmp = Comparisons::default();
            let path = NxPath::parse(&format!("/c3/e{i:06}")).unwrap();
            assert!(ix.contains_counted(&NxClass::new("NXc3"), &path, &mut cmp));
            assert!(cmp.0 <= bound, "E={e}: {} > {bound}", cmp.0);
        }
    }
}
