//! Seeded synthetic instrument files.
//!
//! Each built-in profile fixes a bank count, a monitor count and a target
//! number of metadata entries. The number of logs is solved from
//!
//! ```text
//! entries = 3 + 2 * monitors + 9 * banks + 5 * logs + padding
//! ```
//!
//! where the 3 fixed groups are `/entry`, `/entry/DASlogs` and
//! `/entry/instrument`, a monitor is a group plus its `data`, a bank is an
//! event group with five datasets plus a detector group with two, and a log
//! is a group with four datasets. The remainder (at most 4) is padded with
//! run-level text datasets under `/entry`, so every file hits its target
//! exactly.

use std::fmt::Write as _;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;
use thiserror::Error;

use crate::loader::names;
use crate::schema::{NxClass, NX_CLASS_ATTR};
use crate::store::{FileModel, StoreError, TypedArray};

pub const PIXELS_PER_BANK: u32 = 1024;
/// Upper bound of generated time-of-flight values, microseconds (one 60 Hz
/// frame).
pub const TOF_MAX_US: f64 = 16_667.0;
const TOF_MEAN_US: f64 = 3_000.0;
const PULSE_HZ: f64 = 60.0;
const MONITOR_BINS: usize = 64;
const PADDING_NAMES: [&str; 4] = ["duration", "end_time", "run_number", "start_time"];

pub const PROFILE_NAMES: [&str; 5] = ["gpsans", "biosans", "eqsans", "corelli", "nom"];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("unknown profile {0:?} (expected one of gpsans, biosans, eqsans, corelli, nom)")]
    UnknownProfile(String),
    #[error("event scale {0} outside (0, 1]")]
    InvalidScale(f64),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    Small,
    Medium,
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstrumentProfile {
    pub name: String,
    /// Prefix of generated log names, e.g. `CG2:PV0001`.
    pub beamline: String,
    pub n_banks: usize,
    pub n_logs: usize,
    pub n_monitors: usize,
    /// Pulses at scale 1.
    pub pulses: usize,
    /// Mean events per bank at scale 1.
    pub mean_events_per_bank: u64,
    pub target_entries: usize,
    pub size_class: SizeClass,
}

/// Entry budget of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Composition {
    pub fixed_groups: usize,
    pub logs: usize,
    pub banks: usize,
    pub monitors: usize,
    pub padding: usize,
    pub total_entries: usize,
}

impl InstrumentProfile {
    #[allow(clippy::too_many_arguments)]
    fn calibrated(
        name: &str,
        beamline: &str,
        n_banks: usize,
        n_monitors: usize,
        target_entries: usize,
        size_mb: u64,
        pulses: usize,
        size_class: SizeClass,
    ) -> Self {
        let budget = target_entries - 3 - 2 * n_monitors - 9 * n_banks;
        InstrumentProfile {
            name: name.to_owned(),
            beamline: beamline.to_owned(),
            n_banks,
            n_logs: budget / 5,
            n_monitors,
            pulses,
            // 8 payload bytes per event (u32 pixel + f32 tof)
            mean_events_per_bank: size_mb * 1_000_000 / (n_banks as u64 * 8),
            target_entries,
            size_class,
        }
    }

    pub fn composition(&self) -> Composition {
        let structural = 3 + 2 * self.n_monitors + 9 * self.n_banks + 5 * self.n_logs;
        let padding = self
            .target_entries
            .saturating_sub(structural)
            .min(PADDING_NAMES.len());
        Composition {
            fixed_groups: 3,
            logs: self.n_logs,
            banks: self.n_banks,
            monitors: self.n_monitors,
            padding,
            total_entries: structural + padding,
        }
    }

    pub fn pulses_at(&self, scale: f64) -> usize {
        ((self.pulses as f64 * scale).round() as usize).max(1)
    }
}

/// Built-in profiles, anchored to representative runs: entry totals are the
/// files' metadata entry counts, and event rates are sized so that scale 1
/// roughly matches each file's size on disk.
pub fn instrument_profile(name: &str) -> Result<InstrumentProfile, SynthError> {
    use SizeClass::*;
    Ok(match name {
        "gpsans" => InstrumentProfile::calibrated("gpsans", "CG2", 48, 2, 3683, 62, 36_000, Small),
        "biosans" => {
            InstrumentProfile::calibrated("biosans", "CG3", 88, 2, 3203, 71, 36_000, Small)
        }
        "eqsans" => {
            InstrumentProfile::calibrated("eqsans", "BL6", 48, 1, 2529, 461, 72_000, Medium)
        }
        "corelli" => {
            InstrumentProfile::calibrated("corelli", "BL9", 91, 2, 2660, 297, 108_000, Medium)
        }
        "nom" => InstrumentProfile::calibrated("nom", "BL1B", 99, 1, 1572, 1100, 90_000, Large),
        other => return Err(SynthError::UnknownProfile(other.to_owned())),
    })
}

pub fn all_profiles() -> Vec<InstrumentProfile> {
    PROFILE_NAMES
        .iter()
        .map(|n| instrument_profile(n).expect("built-in"))
        .collect()
}

fn check_scale(scale: f64) -> Result<(), SynthError> {
    if scale.is_finite() && scale > 0.0 && scale <= 1.0 {
        Ok(())
    } else {
        Err(SynthError::InvalidScale(scale))
    }
}

pub fn log_name(profile: &InstrumentProfile, i: usize) -> String {
    format!("{}:PV{:04}", profile.beamline, i + 1)
}

/// Generates a file for `profile`. Identical arguments give identical models.
pub fn generate(
    profile: &InstrumentProfile,
    seed: u64,
    event_scale: f64,
) -> Result<FileModel, SynthError> {
    check_scale(event_scale)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let comp = profile.composition();
    let mut m = FileModel::new();

    m.add_group("/entry", Some(&NxClass::ENTRY))?;
    let pulses = profile.pulses_at(event_scale);
    let duration = pulses as f64 / PULSE_HZ;
    for name in &PADDING_NAMES[..comp.padding] {
        let text = match *name {
            "duration" => format!("{duration:.3}"),
            "end_time" => format!("+{duration:.3}s"),
            "run_number" => seed.to_string(),
            _ => "0.000".to_owned(),
        };
        m.add_dataset(&format!("/entry/{name}"), TypedArray::Utf8(text))?;
    }

    m.add_group("/entry/DASlogs", Some(&NxClass::COLLECTION))?;
    for i in 0..profile.n_logs {
        let log = format!("/entry/DASlogs/{}", log_name(profile, i));
        m.add_group(&log, Some(&NxClass::LOG))?;
        let n = rng.random_range(1..=16usize);
        let mut t = rng.random_range(0.0..1.0);
        let mut times = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            times.push(t);
            values.push(rng.random_range(0.0..100.0));
            t += rng.random_range(0.1..5.0);
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        m.add_dataset(
            &format!("{log}/{}", names::LOG_TIME),
            TypedArray::F64(times),
        )?;
        m.add_dataset(
            &format!("{log}/{}", names::LOG_VALUE),
            TypedArray::F64(values),
        )?;
        m.add_dataset(
            &format!("{log}/{}", names::LOG_AVERAGE),
            TypedArray::F64(vec![mean]),
        )?;
        m.add_dataset(
            &format!("{log}/{}", names::LOG_AVERAGE_ERROR),
            TypedArray::F64(vec![var.sqrt()]),
        )?;
    }

    m.add_group("/entry/instrument", Some(&NxClass::INSTRUMENT))?;
    for b in 0..profile.n_banks {
        let det = format!("/entry/instrument/bank{}", b + 1);
        m.add_group(&det, Some(&NxClass::DETECTOR))?;
        m.add_dataset(
            &format!("{det}/{}", names::PIXEL_ID_OFFSET),
            TypedArray::U32(vec![b as u32 * PIXELS_PER_BANK]),
        )?;
        m.add_dataset(
            &format!("{det}/{}", names::PIXEL_COUNT),
            TypedArray::U32(vec![PIXELS_PER_BANK]),
        )?;
    }

    for i in 0..profile.n_monitors {
        let mon = format!("/entry/monitor{}", i + 1);
        m.add_group(&mon, Some(&NxClass::MONITOR))?;
        let counts = (0..MONITOR_BINS)
            .map(|_| rng.random_range(0..1000u64))
            .collect();
        m.add_dataset(
            &format!("{mon}/{}", names::MONITOR_DATA),
            TypedArray::U64(counts),
        )?;
    }

    let tof_dist = Exp::new(1.0 / TOF_MEAN_US).expect("positive rate");
    let mean_events = profile.mean_events_per_bank as f64 * event_scale;
    for b in 0..profile.n_banks {
        let bank = format!("/entry/bank{}_events", b + 1);
        m.add_group(&bank, Some(&NxClass::EVENT_DATA))?;
        let n = ((mean_events * rng.random_range(0.8..1.2)).round() as usize).max(1);
        let offset = b as u32 * PIXELS_PER_BANK;

        let mut per_pulse = vec![0u64; pulses];
        let mut ids = Vec::with_capacity(n);
        let mut tofs = Vec::with_capacity(n);
        for _ in 0..n {
            ids.push(offset + rng.random_range(0..PIXELS_PER_BANK));
            let tof = loop {
                let t: f64 = tof_dist.sample(&mut rng);
                if t < TOF_MAX_US {
                    break t as f32;
                }
            };
            tofs.push(tof);
            per_pulse[rng.random_range(0..pulses)] += 1;
        }
        let mut index = Vec::with_capacity(pulses);
        let mut acc = 0u64;
        for c in per_pulse {
            index.push(acc);
            acc += c;
        }
        let time_zero = (0..pulses).map(|p| p as f64 / PULSE_HZ).collect();

        m.add_dataset(&format!("{bank}/{}", names::EVENT_ID), TypedArray::U32(ids))?;
        m.add_dataset(
            &format!("{bank}/{}", names::EVENT_INDEX),
            TypedArray::U64(index),
        )?;
        m.add_dataset(
            &format!("{bank}/{}", names::EVENT_TIME_OFFSET),
            TypedArray::F32(tofs),
        )?;
        m.add_dataset(
            &format!("{bank}/{}", names::EVENT_TIME_ZERO),
            TypedArray::F64(time_zero),
        )?;
        m.add_dataset(
            &format!("{bank}/{}", names::EVENT_TOTAL_COUNTS),
            TypedArray::U64(vec![n as u64]),
        )?;
    }
    Ok(m)
}

/// Sidecar text describing how a file was generated.
pub fn provenance(
    profile: &InstrumentProfile,
    seed: u64,
    event_scale: f64,
    model: &FileModel,
) -> String {
    let comp = profile.composition();
    let mut out = String::new();
    let _ = writeln!(out, "profile: {}", profile.name);
    let _ = writeln!(out, "seed: {seed}");
    let _ = writeln!(out, "event_scale: {event_scale}");
    let _ = writeln!(out, "size_class: {:?}", profile.size_class);
    let _ = writeln!(out, "target_entries: {}", profile.target_entries);
    let _ = writeln!(out, "composition.fixed_groups: {}", comp.fixed_groups);
    let _ = writeln!(out, "composition.logs: {}", comp.logs);
    let _ = writeln!(out, "composition.banks: {}", comp.banks);
    let _ = writeln!(out, "composition.monitors: {}", comp.monitors);
    let _ = writeln!(out, "composition.padding: {}", comp.padding);
    let _ = writeln!(out, "pulses: {}", profile.pulses_at(event_scale));
    let _ = writeln!(out, "total_entries: {}", model.entry_count());
    let _ = writeln!(out, "groups: {}", model.group_count());
    out
}

/// Random well-formed model with exactly `n_entries` non-root entries, used
/// as a fuzzing fixture. Names are drawn from a small pool so siblings share
/// prefixes (`a`, `a.b`, `a_1`, ...), and group classes mix well-known tags,
/// open tags and missing annotations.
pub fn random_model(seed: u64, n_entries: usize) -> FileModel {
    const STEMS: [&str; 8] = ["a", "a.b", "a_1", "bank", "bank1", "bank10", "x:y", "Z"];
    let group_classes = [
        NxClass::ENTRY,
        NxClass::COLLECTION,
        NxClass::LOG,
        NxClass::EVENT_DATA,
        NxClass::MONITOR,
        NxClass::INSTRUMENT,
        NxClass::DETECTOR,
        NxClass::GEOMETRY,
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = FileModel::new();
    let mut groups = vec!["/".to_owned()];
    let mut made = 0;
    while made < n_entries {
        // favour recent groups so trees get some depth
        let pick = if rng.random_bool(0.5) {
            groups.len() - 1 - rng.random_range(0..groups.len().min(4))
        } else {
            rng.random_range(0..groups.len())
        };
        let parent = groups[pick].clone();
        let stem = STEMS.choose(&mut rng).expect("non-empty");
        let name = if rng.random_bool(0.3) {
            stem.to_string()
        } else {
            format!("{stem}{}", rng.random_range(0..50))
        };
        let path = if parent == "/" {
            format!("/{name}")
        } else {
            format!("{parent}/{name}")
        };
        if m.record(&path).is_some() {
            continue;
        }
        if rng.random_bool(0.3) {
            let class = match rng.random_range(0..10) {
                0..=1 => None,
                2 => Some(NxClass::new(format!("NXcustom{}", rng.random_range(0..5)))),
                _ => Some(group_classes.choose(&mut rng).expect("non-empty").clone()),
            };
            m.add_group(&path, class.as_ref())
                .expect("fresh path under a group");
            groups.push(path.clone());
        } else {
            let len = rng.random_range(0..8);
            let data = match rng.random_range(0..5) {
                0 => TypedArray::U32((0..len).map(|_| rng.random()).collect()),
                1 => TypedArray::U64((0..len).map(|_| rng.random()).collect()),
                2 => TypedArray::F32((0..len).map(|_| rng.random_range(-1e6..1e6)).collect()),
                3 => TypedArray::F64((0..len).map(|_| rng.random_range(-1e9..1e9)).collect()),
                _ => TypedArray::Utf8((0..len).map(|_| rng.random_range('a'..='z')).collect()),
            };
            m.add_dataset(&path, data)
                .expect("fresh path under a group");
            if rng.random_bool(0.1) {
                // dataset annotations never change classification
                m.set_attribute(&path, NX_CLASS_ATTR, "NXlog")
                    .expect("exists");
            }
        }
        if rng.random_bool(0.15) {
            m.set_attribute(
                &path,
                "units",
                ["us", "s", "counts"].choose(&mut rng).expect("non-empty"),
            )
            .expect("exists");
        }
        made += 1;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_targets() {
        let g = instrument_profile("gpsans").unwrap();
        assert_eq!(g.target_entries, 3683);
        assert_eq!(g.n_banks, 48);
        assert_eq!(instrument_profile("nom").unwrap().target_entries, 1572);
        assert!(matches!(
            instrument_profile("vulcan"),
            Err(SynthError::UnknownProfile(_))
        ));
    }

    #[test]
    fn compositions_hit_targets_exactly() {
        for p in all_profiles() {
            let c = p.composition();
            assert_eq!(c.total_entries, p.target_entries, "{}", p.name);
            assert!(c.padding <= 4);
            assert!(p.n_logs > 0 && p.n_banks > 0 && p.pulses > 0 && p.mean_events_per_bank > 0);
        }
    }

    #[test]
    fn scale_is_checked() {
        let p = instrument_profile("nom").unwrap();
        for bad in [0.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(
                generate(&p, 1, bad),
                Err(SynthError::InvalidScale(_))
            ));
        }
    }

    #[test]
    fn generated_entry_count_matches() {
        let p = instrument_profile("nom").unwrap();
        let m = generate(&p, 7, 0.001).unwrap();
        assert_eq!(m.entry_count(), 1572);
        m.validate().unwrap();
    }

    #[test]
    fn random_models_have_requested_size() {
        for (seed, n) in [(1, 0), (2, 1), (3, 200)] {
            let m = random_model(seed, n);
            assert_eq!(m.entry_count(), n);
            m.validate().unwrap();
        }
    }
}
