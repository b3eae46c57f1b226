use nexus_index::schema::NxClass;
use nexus_index::store::encode;
use nexus_index::synth::{all_profiles, generate, instrument_profile, PIXELS_PER_BANK, TOF_MAX_US};

#[test]
fn same_seed_same_bytes() {
    let p = instrument_profile("corelli").unwrap();
    let a = encode(&generate(&p, 11, 0.001).unwrap()).unwrap();
    let b = encode(&generate(&p, 11, 0.001).unwrap()).unwrap();
    let c = encode(&generate(&p, 12, 0.001).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn every_profile_hits_its_entry_target() {
    for p in all_profiles() {
        for seed in [0, 1, 99] {
            let m = generate(&p, seed, 0.001).unwrap();
            assert_eq!(m.entry_count(), p.target_entries, "{} seed {seed}", p.name);
        }
    }
}

#[test]
fn event_payloads_are_plausible() {
    let p = instrument_profile("eqsans").unwrap();
    let m = generate(&p, 5, 0.001).unwrap();
    for b in 0..p.n_banks {
        let bank = format!("/entry/bank{}_events", b + 1);
        let ids = m
            .payload(&format!("{bank}/event_id"))
            .unwrap()
            .as_u32()
            .unwrap();
        let lo = b as u32 * PIXELS_PER_BANK;
        assert!(ids.iter().all(|&i| (lo..lo + PIXELS_PER_BANK).contains(&i)));
        let tof = m
            .payload(&format!("{bank}/event_time_offset"))
            .unwrap()
            .as_f32()
            .unwrap();
        assert!(tof.iter().all(|&t| (0.0..TOF_MAX_US as f32).contains(&t)));
        let index = m
            .payload(&format!("{bank}/event_index"))
            .unwrap()
            .as_u64()
            .unwrap();
        assert_eq!(index.len(), p.pulses_at(0.001));
        assert!(index.windows(2).all(|w| w[0] <= w[1]));
        assert!(*index.last().unwrap() <= ids.len() as u64);
        let total = m
            .payload(&format!("{bank}/event_total_counts"))
            .unwrap()
            .as_u64()
            .unwrap();
        assert_eq!(total, [ids.len() as u64]);
    }
}

#[test]
fn class_mix() {
    let p = instrument_profile("gpsans").unwrap();
    let m = generate(&p, 1, 0.001).unwrap();
    let count = |class: &NxClass| {
        m.records()
            .iter()
            .filter(|r| r.attributes.get("NX_class").map(String::as_str) == Some(class.as_str()))
            .count()
    };
    assert_eq!(count(&NxClass::EVENT_DATA), p.n_banks);
    assert_eq!(count(&NxClass::DETECTOR), p.n_banks);
    assert_eq!(count(&NxClass::LOG), p.n_logs);
    assert_eq!(count(&NxClass::MONITOR), p.n_monitors);
    assert_eq!(count(&NxClass::ENTRY), 1);
}
