//! Legacy-vs-indexed load timing and call accounting.

use std::io;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::loader::{load_event_nexus, LoadError, LoadMode};
use crate::store::{open_store, write_store, CallCounters, FileModel, StoreError};
use crate::synth::{generate, instrument_profile, SynthError};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("baseline time {0} must be positive")]
    NonPositiveBaseline(f64),
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl BenchError {
    pub fn is_io(&self) -> bool {
        match self {
            BenchError::Io(_) => true,
            BenchError::Csv(e) => e.is_io_error(),
            BenchError::Store(e) => e.is_io(),
            BenchError::Synth(SynthError::Store(e)) => e.is_io(),
            BenchError::Load(e) => e.is_io(),
            _ => false,
        }
    }
}

/// Fractional time saved by `new` relative to `old`: `(old - new) / old`.
pub fn relative_speedup(old: f64, new: f64) -> Result<f64, BenchError> {
    if !(old.is_finite() && old > 0.0) {
        return Err(BenchError::NonPositiveBaseline(old));
    }
    Ok((old - new) / old)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CacheMode {
    /// Each load reads a freshly written copy of the file.
    Fresh,
    /// All loads of a profile reuse one file.
    Repeated,
}

impl std::str::FromStr for CacheMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fresh" => Ok(CacheMode::Fresh),
            "repeated" => Ok(CacheMode::Repeated),
            other => Err(format!(
                "unknown cache mode {other:?} (expected fresh or repeated)"
            )),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub profiles: Vec<String>,
    pub repeats: usize,
    pub event_scale: f64,
    pub meta_latency: Duration,
    pub cache: CacheMode,
    pub seed: u64,
    /// Where generated files go; a temporary directory when `None`.
    pub work_dir: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            profiles: crate::synth::PROFILE_NAMES
                .iter()
                .map(|s| s.to_string())
                .collect(),
            repeats: 3,
            event_scale: 0.01,
            meta_latency: Duration::ZERO,
            cache: CacheMode::Repeated,
            seed: 42,
            work_dir: None,
        }
    }
}

/// One timed load. Field names double as CSV headers.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub profile: String,
    pub mode: LoadMode,
    pub run: usize,
    pub wall_ms: f64,
    pub list_children_calls: u64,
    pub read_attribute_calls: u64,
    pub read_dataset_calls: u64,
    pub bytes_read: u64,
}

impl BenchRow {
    pub fn metadata_calls(&self) -> u64 {
        self.list_children_calls + self.read_attribute_calls
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchSummary {
    pub profile: String,
    pub legacy_wall_ms_median: f64,
    pub indexed_wall_ms_median: f64,
    pub relative_speedup: f64,
    pub call_reduction_ratio: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub summaries: Vec<BenchSummary>,
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    })
}

/// Opens `path`, loads it in `mode` and reports the wall time of both steps.
pub fn time_load(
    path: &Path,
    mode: LoadMode,
    meta_latency: Duration,
) -> Result<(Duration, CallCounters), BenchError> {
    let start = Instant::now();
    let handle = open_store(path)?.with_meta_latency(meta_latency);
    let ws = load_event_nexus(&handle, mode)?;
    let elapsed = start.elapsed();
    drop(ws);
    Ok((elapsed, handle.counters()))
}

fn row(profile: &str, mode: LoadMode, run: usize, wall: Duration, c: CallCounters) -> BenchRow {
    BenchRow {
        profile: profile.to_owned(),
        mode,
        run,
        wall_ms: wall.as_secs_f64() * 1e3,
        list_children_calls: c.list_children_calls,
        read_attribute_calls: c.read_attribute_calls,
        read_dataset_calls: c.read_dataset_calls,
        bytes_read: c.bytes_read,
    }
}

fn bench_profile(
    cfg: &BenchConfig,
    dir: &Path,
    model: &FileModel,
    profile: &str,
) -> Result<Vec<BenchRow>, BenchError> {
    let shared = dir.join(format!("{profile}.nxb"));
    if cfg.cache == CacheMode::Repeated {
        write_store(model, &shared)?;
    }
    let mut rows = Vec::with_capacity(2 * cfg.repeats);
    for run in 0..cfg.repeats {
        // alternate which mode goes first so neither always sees a warmer cache
        let order = if run % 2 == 0 {
            [LoadMode::Legacy, LoadMode::Indexed]
        } else {
            [LoadMode::Indexed, LoadMode::Legacy]
        };
        for mode in order {
            let path = match cfg.cache {
                CacheMode::Repeated => shared.clone(),
                CacheMode::Fresh => {
                    let p = dir.join(format!("{profile}-{run}-{}.nxb", mode.as_str()));
                    write_store(model, &p)?;
                    p
                }
            };
            let (wall, counters) = time_load(&path, mode, cfg.meta_latency)?;
            rows.push(row(profile, mode, run, wall, counters));
            if cfg.cache == CacheMode::Fresh {
                std::fs::remove_file(&path)?;
            }
        }
    }
    Ok(rows)
}

pub fn summarize(profile: &str, rows: &[BenchRow]) -> Result<BenchSummary, BenchError> {
    let of = |mode: LoadMode| {
        rows.iter()
            .filter(move |r| r.profile == profile && r.mode == mode)
    };
    let mut legacy: Vec<f64> = of(LoadMode::Legacy).map(|r| r.wall_ms).collect();
    let mut indexed: Vec<f64> = of(LoadMode::Indexed).map(|r| r.wall_ms).collect();
    let missing = || BenchError::InvalidConfig(format!("no rows for both modes of {profile}"));
    let legacy_ms = median(&mut legacy).ok_or_else(missing)?;
    let indexed_ms = median(&mut indexed).ok_or_else(missing)?;
    let mut legacy_calls: Vec<f64> = of(LoadMode::Legacy)
        .map(|r| r.metadata_calls() as f64)
        .collect();
    let mut indexed_calls: Vec<f64> = of(LoadMode::Indexed)
        .map(|r| r.metadata_calls() as f64)
        .collect();
    let legacy_calls = median(&mut legacy_calls).ok_or_else(missing)?;
    let indexed_calls = median(&mut indexed_calls).ok_or_else(missing)?;
    Ok(BenchSummary {
        profile: profile.to_owned(),
        legacy_wall_ms_median: legacy_ms,
        indexed_wall_ms_median: indexed_ms,
        relative_speedup: relative_speedup(legacy_ms, indexed_ms)?,
        call_reduction_ratio: if indexed_calls > 0.0 {
            legacy_calls / indexed_calls
        } else {
            f64::INFINITY
        },
    })
}

/// Generates each profile once, then times `repeats` loads in both modes.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if cfg.repeats == 0 {
        return Err(BenchError::InvalidConfig(
            "repeats must be at least 1".into(),
        ));
    }
    if cfg.profiles.is_empty() {
        return Err(BenchError::InvalidConfig("no profiles given".into()));
    }
    let profiles = cfg
        .profiles
        .iter()
        .map(|p| instrument_profile(p))
        .collect::<Result<Vec<_>, _>>()?;

    let tmp;
    let dir = match &cfg.work_dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            d.as_path()
        }
        None => {
            tmp = tempfile::tempdir()?;
            tmp.path()
        }
    };

    let mut report = BenchReport::default();
    for p in &profiles {
        let model = generate(p, cfg.seed, cfg.event_scale)?;
        let rows = bench_profile(cfg, dir, &model, &p.name)?;
        report.summaries.push(summarize(&p.name, &rows)?);
        report.rows.extend(rows);
    }
    Ok(report)
}

pub const ROW_HEADERS: [&str; 8] = [
    "profile",
    "mode",
    "run",
    "wall_ms",
    "list_children_calls",
    "read_attribute_calls",
    "read_dataset_calls",
    "bytes_read",
];

pub const SUMMARY_HEADERS: [&str; 5] = [
    "profile",
    "legacy_wall_ms_median",
    "indexed_wall_ms_median",
    "relative_speedup",
    "call_reduction_ratio",
];

fn csv_writer<W: io::Write>(out: W, headers: &[&str]) -> Result<csv::Writer<W>, BenchError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(headers)?;
    Ok(w)
}

pub fn write_rows_csv<W: io::Write>(out: W, rows: &[BenchRow]) -> Result<(), BenchError> {
    let mut w = csv_writer(out, &ROW_HEADERS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: io::Write>(
    out: W,
    summaries: &[BenchSummary],
) -> Result<(), BenchError> {
    let mut w = csv_writer(out, &SUMMARY_HEADERS)?;
    for s in summaries {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}
