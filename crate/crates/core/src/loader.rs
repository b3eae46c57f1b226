//! Four-stage event loader: logs, monitors, geometry, then bank event data.
//!
//! Two metadata strategies are supported:
//!
//! * [`LoadMode::Legacy`] shares nothing between stages. Each stage finds the
//!   entry group and classifies the children of every container it cares
//!   about, then opens each group it reads with a relative walk from the root
//!   that lists and classifies every level on the way down, and finally lists
//!   the group to resolve its datasets.
//! * [`LoadMode::Indexed`] builds one [`MetadataIndex`] up front and answers
//!   every stage's lookups from it with no further metadata calls.
//!
//! Both modes read the same payloads and produce the same workspace.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::index::{build_index, MetadataIndex};
use crate::schema::{classify, EntryKind, NxClass, NxPath, NX_CLASS_ATTR};
use crate::store::{StoreError, StoreHandle, TypedArray};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("file has no NXentry group")]
    MissingEntryGroup,
    #[error("malformed log {path}: {reason}")]
    MalformedLog { path: NxPath, reason: String },
    #[error("malformed monitor {path}: {reason}")]
    MalformedMonitor { path: NxPath, reason: String },
    #[error("malformed bank {path}: {reason}")]
    MalformedBank { path: NxPath, reason: String },
    #[error("{group} has no dataset {name:?}")]
    MissingDataset { group: NxPath, name: String },
    #[error("{path} holds {found}, expected {expected}")]
    WrongType {
        path: NxPath,
        expected: &'static str,
        found: &'static str,
    },
    #[error("detector {path}: {reason}")]
    MalformedDetector { path: NxPath, reason: String },
    #[error("pixel ranges of banks {first} and {second} overlap")]
    OverlappingPixelRanges { first: String, second: String },
    #[error("event bank {0} has no matching detector bank")]
    UnmappedBank(String),
    #[error("pixel {pixel} of {bank} lies outside its detector range")]
    PixelOutOfRange { bank: String, pixel: u32 },
    #[error(transparent)]
    Schema(#[from] crate::schema::SchemaError),
}

impl LoadError {
    pub fn is_io(&self) -> bool {
        matches!(self, LoadError::Store(e) if e.is_io())
    }
}

pub type Result<T, E = LoadError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LoadMode {
    Legacy,
    Indexed,
}

impl LoadMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LoadMode::Legacy => "legacy",
            LoadMode::Indexed => "indexed",
        }
    }
}

impl std::str::FromStr for LoadMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "legacy" => Ok(LoadMode::Legacy),
            "indexed" => Ok(LoadMode::Indexed),
            other => Err(format!(
                "unknown mode {other:?} (expected legacy or indexed)"
            )),
        }
    }
}

/// Dataset names read from each group class.
pub mod names {
    pub const LOG_TIME: &str = "time";
    pub const LOG_VALUE: &str = "value";
    pub const LOG_AVERAGE: &str = "average_value";
    pub const LOG_AVERAGE_ERROR: &str = "average_value_error";
    pub const MONITOR_DATA: &str = "data";
    pub const PIXEL_ID_OFFSET: &str = "pixel_id_offset";
    pub const PIXEL_COUNT: &str = "pixel_count";
    pub const EVENT_ID: &str = "event_id";
    pub const EVENT_INDEX: &str = "event_index";
    pub const EVENT_TIME_OFFSET: &str = "event_time_offset";
    pub const EVENT_TIME_ZERO: &str = "event_time_zero";
    pub const EVENT_TOTAL_COUNTS: &str = "event_total_counts";
    /// Event group `bankN_events` maps to detector group `bankN`.
    pub const EVENTS_SUFFIX: &str = "_events";
}

/// Time series of one process variable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogSeries {
    pub name: String,
    /// Seconds since run start, strictly increasing.
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub average_value: f64,
    pub average_value_error: f64,
}

/// Raw event arrays of one `NXevent_data` group.
#[derive(Debug, Clone, PartialEq)]
pub struct BankEvents {
    pub bank_path: NxPath,
    /// Detector pixel of each event.
    pub event_id: Vec<u32>,
    /// Time of flight, microseconds.
    pub event_time_offset: Vec<f32>,
    /// Pulse times, seconds since run start.
    pub event_time_zero: Vec<f64>,
    /// First event of each pulse.
    pub event_index: Vec<u64>,
    pub event_total_counts: u64,
}

impl BankEvents {
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| {
            Err(LoadError::MalformedBank {
                path: self.bank_path.clone(),
                reason,
            })
        };
        let total = self.event_total_counts;
        if self.event_id.len() as u64 != total || self.event_time_offset.len() as u64 != total {
            return bad(format!(
                "event_id has {} and event_time_offset {} entries, total is {total}",
                self.event_id.len(),
                self.event_time_offset.len()
            ));
        }
        if self.event_index.len() != self.event_time_zero.len() {
            return bad(format!(
                "{} pulse indices but {} pulse times",
                self.event_index.len(),
                self.event_time_zero.len()
            ));
        }
        match self.event_index.first() {
            None if total > 0 => return bad("events without pulses".into()),
            Some(&first) if first != 0 => return bad(format!("event_index starts at {first}")),
            _ => {}
        }
        if self.event_index.windows(2).any(|w| w[1] < w[0]) {
            return bad("event_index decreases".into());
        }
        if let Some(&last) = self.event_index.last() {
            if last > total {
                return bad(format!("event_index value {last} exceeds total {total}"));
            }
        }
        Ok(())
    }

    /// Bank name as used in the workspace: the group's last component.
    pub fn bank_name(&self) -> &str {
        self.bank_path.name().unwrap_or("/")
    }
}

/// Pulse index of every event: event `e` belongs to pulse `p` when
/// `event_index[p] <= e < event_index[p + 1]`, the last pulse running to
/// `event_total_counts`. `b` must be valid.
pub fn assign_pulses(b: &BankEvents) -> Vec<u64> {
    let total = b.event_total_counts as usize;
    let mut out = Vec::with_capacity(total);
    for (p, &start) in b.event_index.iter().enumerate() {
        let end = b
            .event_index
            .get(p + 1)
            .map_or(total, |&next| next as usize);
        debug_assert_eq!(out.len(), start as usize);
        out.resize(end.max(start as usize), p as u64);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PixelRange {
    pub pixel_id_offset: u32,
    pub pixel_count: u32,
}

impl PixelRange {
    pub fn end(&self) -> u64 {
        self.pixel_id_offset as u64 + self.pixel_count as u64
    }

    pub fn contains(&self, pixel: u32) -> bool {
        pixel >= self.pixel_id_offset && (pixel as u64) < self.end()
    }
}

/// Detector banks reduced to disjoint pixel-id ranges.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Geometry {
    pub banks: BTreeMap<String, PixelRange>,
}

impl Geometry {
    pub fn new(banks: BTreeMap<String, PixelRange>) -> Result<Self> {
        let mut spans: Vec<(&String, &PixelRange)> =
            banks.iter().filter(|(_, r)| r.pixel_count > 0).collect();
        spans.sort_by_key(|(_, r)| r.pixel_id_offset);
        for w in spans.windows(2) {
            if u64::from(w[1].1.pixel_id_offset) < w[0].1.end() {
                return Err(LoadError::OverlappingPixelRanges {
                    first: w[0].0.clone(),
                    second: w[1].0.clone(),
                });
            }
        }
        Ok(Geometry { banks })
    }

    pub fn pixel_total(&self) -> u64 {
        self.banks.values().map(|r| r.pixel_count as u64).sum()
    }
}

/// One neutron event as stored in a pixel's list.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    /// Time of flight, microseconds.
    pub tof: f32,
    /// Pulse index within the bank's pulse list.
    pub pulse: u64,
    pub bank: Arc<str>,
}

/// Loader output: per-pixel events plus logs, monitors and geometry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventWorkspace {
    pub pixels: BTreeMap<u32, Vec<Event>>,
    pub logs: BTreeMap<String, LogSeries>,
    pub monitors: BTreeMap<String, Vec<u64>>,
    pub geometry: Geometry,
    /// Events loaded per bank, keyed by bank name.
    pub bank_totals: BTreeMap<String, u64>,
}

impl EventWorkspace {
    pub fn event_count(&self) -> u64 {
        self.pixels.values().map(|v| v.len() as u64).sum()
    }

    /// Adds one bank's events. Banks must arrive in bank-name order so each
    /// pixel's list stays ordered by (bank, original position).
    fn add_bank(&mut self, bank: &BankEvents) -> Result<()> {
        let name = bank.bank_name();
        let detector = name.strip_suffix(names::EVENTS_SUFFIX).unwrap_or(name);
        let range = *self
            .geometry
            .banks
            .get(detector)
            .ok_or_else(|| LoadError::UnmappedBank(name.to_owned()))?;
        if let Some(&pixel) = bank.event_id.iter().find(|&&p| !range.contains(p)) {
            return Err(LoadError::PixelOutOfRange {
                bank: name.to_owned(),
                pixel,
            });
        }
        let label: Arc<str> = Arc::from(name);
        let pulses = assign_pulses(bank);
        let mut per_pixel: Vec<Vec<Event>> = vec![Vec::new(); range.pixel_count as usize];
        for ((&pixel, &tof), &pulse) in bank
            .event_id
            .iter()
            .zip(&bank.event_time_offset)
            .zip(&pulses)
        {
            per_pixel[(pixel - range.pixel_id_offset) as usize].push(Event {
                tof,
                pulse,
                bank: label.clone(),
            });
        }
        for (i, events) in per_pixel.into_iter().enumerate() {
            if !events.is_empty() {
                self.pixels
                    .entry(range.pixel_id_offset + i as u32)
                    .or_default()
                    .extend(events);
            }
        }
        self.bank_totals
            .insert(name.to_owned(), bank.event_total_counts);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Read banks on the rayon pool instead of one after another.
    pub parallel_banks: bool,
}

/// Stage state: the store handle plus, in indexed mode, the shared index.
pub struct LoadContext<'h> {
    handle: &'h StoreHandle,
    index: Option<MetadataIndex>,
}

impl<'h> LoadContext<'h> {
    pub fn legacy(handle: &'h StoreHandle) -> Self {
        LoadContext {
            handle,
            index: None,
        }
    }

    /// Builds the index from `handle` before any stage runs.
    pub fn indexed(handle: &'h StoreHandle) -> Result<Self> {
        let index = build_index(handle)?;
        Ok(Self::with_index(handle, index))
    }

    pub fn with_index(handle: &'h StoreHandle, index: MetadataIndex) -> Self {
        LoadContext {
            handle,
            index: Some(index),
        }
    }

    pub fn new(handle: &'h StoreHandle, mode: LoadMode) -> Result<Self> {
        match mode {
            LoadMode::Legacy => Ok(Self::legacy(handle)),
            LoadMode::Indexed => Self::indexed(handle),
        }
    }

    pub fn mode(&self) -> LoadMode {
        if self.index.is_some() {
            LoadMode::Indexed
        } else {
            LoadMode::Legacy
        }
    }

    pub fn handle(&self) -> &'h StoreHandle {
        self.handle
    }

    pub fn index(&self) -> Option<&MetadataIndex> {
        self.index.as_ref()
    }

    /// The first `NXentry` directly under the root.
    fn entry(&self) -> Result<NxPath> {
        match &self.index {
            Some(ix) => ix
                .entries_of_class(&NxClass::ENTRY)
                .iter()
                .find(|p| p.depth() == 1)
                .cloned()
                .ok_or(LoadError::MissingEntryGroup),
            None => legacy::classify_children(self.handle, &NxPath::root())?
                .into_iter()
                .find(|(_, c)| *c == NxClass::ENTRY)
                .map(|(p, _)| p)
                .ok_or(LoadError::MissingEntryGroup),
        }
    }

    /// Groups of `class` that are children of `entry`, or grandchildren
    /// through a container of class `via`. Sorted by path.
    fn groups_of(
        &self,
        entry: &NxPath,
        class: &NxClass,
        via: Option<&NxClass>,
    ) -> Result<Vec<NxPath>> {
        match &self.index {
            Some(ix) => Ok(ix
                .entries_of_class(class)
                .iter()
                .filter(|p| {
                    let Ok(parent) = p.parent() else { return false };
                    if parent == *entry {
                        return true;
                    }
                    match via {
                        Some(via) => {
                            parent.parent().ok().as_ref() == Some(entry)
                                && ix.contains(via, &parent)
                        }
                        None => false,
                    }
                })
                .cloned()
                .collect()),
            None => {
                let mut found = Vec::new();
                for (path, c) in legacy::classify_children(self.handle, entry)? {
                    if c == *class {
                        found.push(path);
                    } else if Some(&c) == via {
                        for (inner, ic) in legacy::classify_children(self.handle, &path)? {
                            if ic == *class {
                                found.push(inner);
                            }
                        }
                    }
                }
                found.sort();
                Ok(found)
            }
        }
    }

    /// Resolves the datasets directly under `group`, keyed by name.
    fn datasets(&self, group: &NxPath) -> Result<BTreeMap<String, NxPath>> {
        match &self.index {
            Some(ix) => Ok(ix
                .datasets_under(group)
                .into_iter()
                .map(|p| (p.name().expect("non-root").to_owned(), p.clone()))
                .collect()),
            None => {
                legacy::open_group(self.handle, group)?;
                let mut out = BTreeMap::new();
                for child in self.handle.list_children(group)? {
                    if child.kind() == EntryKind::Dataset {
                        out.insert(child.name().to_owned(), group.join(child.name())?);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Metadata walks used by legacy mode. Nothing here is cached: every call
/// goes back to the store.
mod legacy {
    use super::*;

    /// Lists `group` and reads the class of every child group.
    pub(super) fn classify_children(
        h: &StoreHandle,
        group: &NxPath,
    ) -> Result<Vec<(NxPath, NxClass)>> {
        let mut out = Vec::new();
        for child in h.list_children(group)? {
            if child.kind() == EntryKind::Group {
                let path = group.join(child.name())?;
                let class = read_class(h, &path)?;
                out.push((path, class));
            }
        }
        Ok(out)
    }

    pub(super) fn read_class(h: &StoreHandle, group: &NxPath) -> Result<NxClass> {
        let tag = match h.read_attribute(group, NX_CLASS_ATTR) {
            Ok(tag) => Some(tag),
            Err(StoreError::NoSuchAttribute { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        Ok(classify(EntryKind::Group, tag))
    }

    /// Relative-path open of `target`: from the root down, list each level,
    /// look up the next component and read its class.
    pub(super) fn open_group(h: &StoreHandle, target: &NxPath) -> Result<()> {
        let mut at = NxPath::root();
        for component in target.components() {
            let children = h.list_children(&at)?;
            let found = children
                .binary_search_by(|c| c.name().cmp(component))
                .ok()
                .map(|i| &children[i]);
            let next = at.join(component)?;
            match found {
                Some(c) if c.kind() == EntryKind::Group => {}
                Some(_) => return Err(StoreError::NotAGroup(next).into()),
                None => return Err(StoreError::NoSuchPath(next.to_string()).into()),
            }
            read_class(h, &next)?;
            at = next;
        }
        Ok(())
    }
}

fn read_named(
    ctx: &LoadContext<'_>,
    group: &NxPath,
    sets: &BTreeMap<String, NxPath>,
    name: &str,
) -> Result<TypedArray> {
    let path = sets.get(name).ok_or_else(|| LoadError::MissingDataset {
        group: group.clone(),
        name: name.to_owned(),
    })?;
    Ok(ctx.handle.read_dataset(path)?)
}

macro_rules! typed {
    ($array:expr, $path:expr, $variant:ident, $name:literal) => {
        match $array {
            TypedArray::$variant(v) => Ok(v),
            other => Err(LoadError::WrongType {
                path: $path,
                expected: $name,
                found: other.dtype().name(),
            }),
        }
    };
}

fn read_f64s(
    ctx: &LoadContext<'_>,
    group: &NxPath,
    sets: &BTreeMap<String, NxPath>,
    name: &str,
) -> Result<Vec<f64>> {
    typed!(
        read_named(ctx, group, sets, name)?,
        group.join(name)?,
        F64,
        "f64"
    )
}

fn read_u64s(
    ctx: &LoadContext<'_>,
    group: &NxPath,
    sets: &BTreeMap<String, NxPath>,
    name: &str,
) -> Result<Vec<u64>> {
    typed!(
        read_named(ctx, group, sets, name)?,
        group.join(name)?,
        U64,
        "u64"
    )
}

fn read_u32s(
    ctx: &LoadContext<'_>,
    group: &NxPath,
    sets: &BTreeMap<String, NxPath>,
    name: &str,
) -> Result<Vec<u32>> {
    typed!(
        read_named(ctx, group, sets, name)?,
        group.join(name)?,
        U32,
        "u32"
    )
}

fn read_f32s(
    ctx: &LoadContext<'_>,
    group: &NxPath,
    sets: &BTreeMap<String, NxPath>,
    name: &str,
) -> Result<Vec<f32>> {
    typed!(
        read_named(ctx, group, sets, name)?,
        group.join(name)?,
        F32,
        "f32"
    )
}

fn single<T: Copy>(
    values: &[T],
    mut err: impl FnMut(String) -> LoadError,
    name: &str,
) -> Result<T> {
    match values {
        [v] => Ok(*v),
        _ => Err(err(format!(
            "{name} holds {} values, expected 1",
            values.len()
        ))),
    }
}

fn load_log(ctx: &LoadContext<'_>, path: &NxPath) -> Result<LogSeries> {
    let malformed = |reason: String| LoadError::MalformedLog {
        path: path.clone(),
        reason,
    };
    let sets = ctx.datasets(path)?;
    let (times, values) = match (
        sets.contains_key(names::LOG_TIME),
        sets.contains_key(names::LOG_VALUE),
    ) {
        (true, true) => (
            read_f64s(ctx, path, &sets, names::LOG_TIME)?,
            read_f64s(ctx, path, &sets, names::LOG_VALUE)?,
        ),
        (false, false) => (Vec::new(), Vec::new()),
        _ => return Err(malformed("time and value must both be present".into())),
    };
    if times.len() != values.len() {
        return Err(malformed(format!(
            "{} times but {} values",
            times.len(),
            values.len()
        )));
    }
    if times
        .windows(2)
        .any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(malformed("times are not strictly increasing".into()));
    }
    let average_value = single(
        &read_f64s(ctx, path, &sets, names::LOG_AVERAGE)?,
        malformed,
        names::LOG_AVERAGE,
    )?;
    let average_value_error = single(
        &read_f64s(ctx, path, &sets, names::LOG_AVERAGE_ERROR)?,
        malformed,
        names::LOG_AVERAGE_ERROR,
    )?;
    Ok(LogSeries {
        name: path.name().expect("non-root").to_owned(),
        times,
        values,
        average_value,
        average_value_error,
    })
}

/// LoadLogs stage: one series per `NXlog` group directly under the entry or
/// inside one of its `NXcollection` containers.
pub fn load_logs(ctx: &LoadContext<'_>) -> Result<BTreeMap<String, LogSeries>> {
    let entry = ctx.entry()?;
    let mut logs = BTreeMap::new();
    for path in ctx.groups_of(&entry, &NxClass::LOG, Some(&NxClass::COLLECTION))? {
        let series = load_log(ctx, &path)?;
        logs.insert(series.name.clone(), series);
    }
    Ok(logs)
}

/// LoadMonitors stage. Files without monitors give an empty map.
pub fn load_monitors(ctx: &LoadContext<'_>) -> Result<BTreeMap<String, Vec<u64>>> {
    let entry = ctx.entry()?;
    let mut monitors = BTreeMap::new();
    for path in ctx.groups_of(&entry, &NxClass::MONITOR, None)? {
        let sets = ctx.datasets(&path)?;
        let counts = match read_u64s(ctx, &path, &sets, names::MONITOR_DATA) {
            Ok(v) => v,
            Err(LoadError::MissingDataset { .. }) => {
                return Err(LoadError::MalformedMonitor {
                    path,
                    reason: format!("no {:?} dataset", names::MONITOR_DATA),
                })
            }
            Err(LoadError::WrongType { found, .. }) => {
                return Err(LoadError::MalformedMonitor {
                    path,
                    reason: format!("{:?} holds {found}, expected u64", names::MONITOR_DATA),
                })
            }
            Err(e) => return Err(e),
        };
        monitors.insert(path.name().expect("non-root").to_owned(), counts);
    }
    Ok(monitors)
}

/// LoadGeometry stage: pixel range of every `NXdetector` bank, directly
/// under the entry or inside an `NXinstrument`.
pub fn load_geometry(ctx: &LoadContext<'_>) -> Result<Geometry> {
    let entry = ctx.entry()?;
    let mut banks = BTreeMap::new();
    for path in ctx.groups_of(&entry, &NxClass::DETECTOR, Some(&NxClass::INSTRUMENT))? {
        let sets = ctx.datasets(&path)?;
        let malformed = |reason: String| LoadError::MalformedDetector {
            path: path.clone(),
            reason,
        };
        let offset = single(
            &read_u32s(ctx, &path, &sets, names::PIXEL_ID_OFFSET)?,
            malformed,
            names::PIXEL_ID_OFFSET,
        )?;
        let count = single(
            &read_u32s(ctx, &path, &sets, names::PIXEL_COUNT)?,
            malformed,
            names::PIXEL_COUNT,
        )?;
        if offset as u64 + count as u64 > u32::MAX as u64 + 1 {
            return Err(malformed("pixel range exceeds u32 ids".into()));
        }
        banks.insert(
            path.name().expect("non-root").to_owned(),
            PixelRange {
                pixel_id_offset: offset,
                pixel_count: count,
            },
        );
    }
    Geometry::new(banks)
}

/// LoadBankData for one `NXevent_data` group: reads the five event datasets
/// by name and validates them.
pub fn load_bank_data(ctx: &LoadContext<'_>, bank: &NxPath) -> Result<BankEvents> {
    let sets = ctx.datasets(bank)?;
    let total = read_u64s(ctx, bank, &sets, names::EVENT_TOTAL_COUNTS)?;
    let event_total_counts = single(
        &total,
        |reason| LoadError::MalformedBank {
            path: bank.clone(),
            reason,
        },
        names::EVENT_TOTAL_COUNTS,
    )?;
    let events = BankEvents {
        bank_path: bank.clone(),
        event_id: read_u32s(ctx, bank, &sets, names::EVENT_ID)?,
        event_time_offset: read_f32s(ctx, bank, &sets, names::EVENT_TIME_OFFSET)?,
        event_time_zero: read_f64s(ctx, bank, &sets, names::EVENT_TIME_ZERO)?,
        event_index: read_u64s(ctx, bank, &sets, names::EVENT_INDEX)?,
        event_total_counts,
    };
    events.validate()?;
    Ok(events)
}

/// Event banks directly under the entry, sorted by path.
pub fn event_banks(ctx: &LoadContext<'_>) -> Result<Vec<NxPath>> {
    let entry = ctx.entry()?;
    ctx.groups_of(&entry, &NxClass::EVENT_DATA, None)
}

pub fn load_event_nexus(handle: &StoreHandle, mode: LoadMode) -> Result<EventWorkspace> {
    load_event_nexus_with(handle, mode, LoadOptions::default())
}

/// Runs the four stages in order. Indexed mode builds the index once first.
pub fn load_event_nexus_with(
    handle: &StoreHandle,
    mode: LoadMode,
    opts: LoadOptions,
) -> Result<EventWorkspace> {
    let ctx = LoadContext::new(handle, mode)?;
    load_with_context(&ctx, opts)
}

pub fn load_with_context(ctx: &LoadContext<'_>, opts: LoadOptions) -> Result<EventWorkspace> {
    let logs = load_logs(ctx)?;
    let monitors = load_monitors(ctx)?;
    let geometry = load_geometry(ctx)?;

    let banks = event_banks(ctx)?;
    let loaded: Vec<BankEvents> = if opts.parallel_banks {
        banks
            .par_iter()
            .map(|b| load_bank_data(ctx, b))
            .collect::<Result<_>>()?
    } else {
        banks
            .iter()
            .map(|b| load_bank_data(ctx, b))
            .collect::<Result<_>>()?
    };

    let mut ws = EventWorkspace {
        logs,
        monitors,
        geometry,
        ..EventWorkspace::default()
    };
    for bank in &loaded {
        ws.add_bank(bank)?;
    }
    Ok(ws)
}

/// Machine-readable summary of a load, used by the CLI's `--json` output.
#[derive(Debug, Clone, Serialize)]
pub struct LoadSummary {
    pub mode: LoadMode,
    pub banks: BTreeMap<String, u64>,
    pub total_events: u64,
    pub pixels_with_events: usize,
    pub log_count: usize,
    pub monitor_count: usize,
    pub detector_banks: usize,
    pub counters: crate::store::CallCounters,
}

impl LoadSummary {
    pub fn new(ws: &EventWorkspace, mode: LoadMode, counters: crate::store::CallCounters) -> Self {
        LoadSummary {
            mode,
            banks: ws.bank_totals.clone(),
            total_events: ws.event_count(),
            pixels_with_events: ws.pixels.len(),
            log_count: ws.logs.len(),
            monitor_count: ws.monitors.len(),
            detector_banks: ws.geometry.banks.len(),
            counters,
        }
    }
}
