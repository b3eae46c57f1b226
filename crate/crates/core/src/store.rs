//! NXB single-file container and its instrumented read interface.
//!
//! Layout (version 1, all integers little-endian):
//!
//! ```text
//! "NXB1" | version u8 = 1 | record_count u64
//! record_count x record:
//!     kind u8 (0 = group, 1 = dataset)
//!     path_len u16 | path bytes (UTF-8)
//!     attr_count u16 | attr_count x (key_len u16 | key | value_len u16 | value)
//!     datasets only: dtype u8 | element_count u64 | data_offset u64 | byte_length u64
//! data region: payloads at their absolute data_offset, after the last record
//! ```
//!
//! Record headers are parsed eagerly by [`open_store`]; payloads are read on
//! demand. Every metadata call on a [`StoreHandle`] bumps its own counter so
//! metadata traffic can be measured exactly.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::schema::{
    DType, DatasetInfo, EntryKind, EntryRecord, NxClass, NxPath, RecordKind, SchemaError,
    NX_CLASS_ATTR,
};

pub const MAGIC: &[u8; 4] = b"NXB1";
pub const FORMAT_VERSION: u8 = 1;
/// magic + version + record_count
pub const PREAMBLE_LEN: u64 = 4 + 1 + 8;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("I/O failure: {0}")]
    Io(#[from] io::Error),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("bad magic {0:?}, expected \"NXB1\"")]
    BadMagic([u8; 4]),
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u8),
    #[error("truncated record: {0}")]
    TruncatedRecord(String),
    #[error("duplicate path {0}")]
    DuplicatePath(NxPath),
    #[error("record {0} has no preceding parent group")]
    OrphanRecord(NxPath),
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("no such path {0}")]
    NoSuchPath(String),
    #[error("{0} is not a group")]
    NotAGroup(NxPath),
    #[error("{0} is not a dataset")]
    NotADataset(NxPath),
    #[error("{path} has no attribute {key:?}")]
    NoSuchAttribute { path: NxPath, key: String },
    #[error("corrupt payload for {path}: {reason}")]
    CorruptPayload { path: NxPath, reason: String },
    #[error(transparent)]
    Schema(#[from] SchemaError),
}

impl StoreError {
    pub fn is_io(&self) -> bool {
        matches!(self, StoreError::Io(_))
    }
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// Decoded dataset payload.
#[derive(Debug, Clone, PartialEq)]
pub enum TypedArray {
    U32(Vec<u32>),
    U64(Vec<u64>),
    F32(Vec<f32>),
    F64(Vec<f64>),
    Utf8(String),
}

impl TypedArray {
    pub fn dtype(&self) -> DType {
        match self {
            TypedArray::U32(_) => DType::U32,
            TypedArray::U64(_) => DType::U64,
            TypedArray::F32(_) => DType::F32,
            TypedArray::F64(_) => DType::F64,
            TypedArray::Utf8(_) => DType::Utf8,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            TypedArray::U32(v) => v.len(),
            TypedArray::U64(v) => v.len(),
            TypedArray::F32(v) => v.len(),
            TypedArray::F64(v) => v.len(),
            TypedArray::Utf8(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn info(&self) -> DatasetInfo {
        DatasetInfo::new(self.dtype(), self.len() as u64)
    }

    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            TypedArray::U32(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TypedArray::U64(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TypedArray::F32(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TypedArray::F64(v) => v
                .iter()
                .for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
            TypedArray::Utf8(s) => out.extend_from_slice(s.as_bytes()),
        }
    }

    fn decode(dtype: DType, bytes: Vec<u8>) -> std::result::Result<Self, String> {
        fn words<const N: usize, T>(bytes: &[u8], f: fn([u8; N]) -> T) -> Vec<T> {
            bytes
                .chunks_exact(N)
                .map(|c| f(c.try_into().expect("chunk size")))
                .collect()
        }
        if !(bytes.len() as u64).is_multiple_of(dtype.element_size()) {
            return Err(format!(
                "{} bytes is not a whole number of {dtype}",
                bytes.len()
            ));
        }
        Ok(match dtype {
            DType::U32 => TypedArray::U32(words(&bytes, u32::from_le_bytes)),
            DType::U64 => TypedArray::U64(words(&bytes, u64::from_le_bytes)),
            DType::F32 => TypedArray::F32(words(&bytes, f32::from_le_bytes)),
            DType::F64 => TypedArray::F64(words(&bytes, f64::from_le_bytes)),
            DType::Utf8 => TypedArray::Utf8(String::from_utf8(bytes).map_err(|e| e.to_string())?),
        })
    }

    pub fn as_u32(&self) -> Option<&[u32]> {
        match self {
            TypedArray::U32(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_u64(&self) -> Option<&[u64]> {
        match self {
            TypedArray::U64(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_f32(&self) -> Option<&[f32]> {
        match self {
            TypedArray::F32(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_f64(&self) -> Option<&[f64]> {
        match self {
            TypedArray::F64(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            TypedArray::Utf8(s) => Some(s),
            _ => None,
        }
    }
}

/// In-memory file: records in parent-before-child order plus one payload per
/// dataset record.
#[derive(Debug, Clone)]
pub struct FileModel {
    records: Vec<EntryRecord>,
    payloads: BTreeMap<NxPath, TypedArray>,
    positions: HashMap<NxPath, usize>,
}

impl PartialEq for FileModel {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records && self.payloads == other.payloads
    }
}

impl Default for FileModel {
    fn default() -> Self {
        Self::new()
    }
}

impl FileModel {
    /// A model holding only the root group.
    pub fn new() -> Self {
        let root = EntryRecord::group(NxPath::root());
        FileModel {
            positions: HashMap::from([(root.path.clone(), 0)]),
            records: vec![root],
            payloads: BTreeMap::new(),
        }
    }

    /// Builds and validates a model from raw parts.
    pub fn from_parts(
        records: Vec<EntryRecord>,
        payloads: BTreeMap<NxPath, TypedArray>,
    ) -> Result<Self> {
        let positions = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.path.clone(), i))
            .collect();
        let model = FileModel {
            records,
            payloads,
            positions,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn records(&self) -> &[EntryRecord] {
        &self.records
    }

    pub fn payloads(&self) -> &BTreeMap<NxPath, TypedArray> {
        &self.payloads
    }

    pub fn record(&self, path: &str) -> Option<&EntryRecord> {
        self.positions.get(path).map(|&i| &self.records[i])
    }

    pub fn payload(&self, path: &str) -> Option<&TypedArray> {
        self.payloads.get(path)
    }

    /// Number of non-root entries.
    pub fn entry_count(&self) -> usize {
        self.records.iter().filter(|r| !r.path.is_root()).count()
    }

    /// Number of group records, root included.
    pub fn group_count(&self) -> usize {
        self.records.iter().filter(|r| r.is_group()).count()
    }

    fn check_new_path(&self, path: &NxPath) -> Result<()> {
        if self.positions.contains_key(path) {
            return Err(StoreError::DuplicatePath(path.clone()));
        }
        let parent = path.parent()?;
        match self.record(parent.as_str()) {
            Some(rec) if rec.is_group() => Ok(()),
            _ => Err(StoreError::OrphanRecord(path.clone())),
        }
    }

    fn push(&mut self, rec: EntryRecord) -> NxPath {
        let path = rec.path.clone();
        self.positions.insert(path.clone(), self.records.len());
        self.records.push(rec);
        path
    }

    /// Appends a group, tagged with `class` when given. The parent group
    /// must already exist.
    pub fn add_group(&mut self, path: &str, class: Option<&NxClass>) -> Result<NxPath> {
        let path = NxPath::parse(path)?;
        self.check_new_path(&path)?;
        let rec = match class {
            Some(c) => {
                check_group_class(&path, c.as_str()).map_err(StoreError::InvalidModel)?;
                EntryRecord::group_of_class(path, c)
            }
            None => EntryRecord::group(path),
        };
        Ok(self.push(rec))
    }

    pub fn add_dataset(&mut self, path: &str, data: TypedArray) -> Result<NxPath> {
        let path = NxPath::parse(path)?;
        self.check_new_path(&path)?;
        let rec = EntryRecord::dataset(path.clone(), data.info());
        self.payloads.insert(path, data);
        Ok(self.push(rec))
    }

    pub fn set_attribute(&mut self, path: &str, key: &str, value: &str) -> Result<()> {
        let i = *self
            .positions
            .get(path)
            .ok_or_else(|| StoreError::NoSuchPath(path.to_owned()))?;
        let rec = &mut self.records[i];
        if rec.is_group() && key == NX_CLASS_ATTR {
            check_group_class(&rec.path, value).map_err(StoreError::InvalidModel)?;
        }
        rec.attributes.insert(key.to_owned(), value.to_owned());
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: String| Err(StoreError::InvalidModel(msg));
        match self.records.first() {
            Some(r) if r.path.is_root() && r.is_group() => {}
            _ => return invalid("first record must be the root group".into()),
        }
        let mut seen: HashMap<&str, bool> = HashMap::with_capacity(self.records.len());
        for rec in &self.records {
            if seen.contains_key(rec.path.as_str()) {
                return Err(StoreError::DuplicatePath(rec.path.clone()));
            }
            if !rec.path.is_root() {
                let parent = rec.path.parent()?;
                if seen.get(parent.as_str()) != Some(&true) {
                    return Err(StoreError::OrphanRecord(rec.path.clone()));
                }
            }
            if rec.path.as_str().len() > u16::MAX as usize {
                return invalid(format!("path {} too long", rec.path));
            }
            if rec.attributes.len() > u16::MAX as usize {
                return invalid(format!("{} has too many attributes", rec.path));
            }
            for (k, v) in &rec.attributes {
                if k.len() > u16::MAX as usize || v.len() > u16::MAX as usize {
                    return invalid(format!("attribute {k:?} on {} too long", rec.path));
                }
            }
            match &rec.kind {
                RecordKind::Group => {
                    if let Some(tag) = rec.attributes.get(NX_CLASS_ATTR) {
                        check_group_class(&rec.path, tag).map_err(StoreError::InvalidModel)?;
                    }
                }
                RecordKind::Dataset(info) => {
                    let Some(data) = self.payloads.get(&rec.path) else {
                        return invalid(format!("dataset {} has no payload", rec.path));
                    };
                    if data.info() != *info {
                        return invalid(format!(
                            "payload of {} does not match its record ({:?} vs {:?})",
                            rec.path,
                            data.info(),
                            info
                        ));
                    }
                }
            }
            seen.insert(rec.path.as_str(), rec.is_group());
        }
        if let Some(extra) = self
            .payloads
            .keys()
            .find(|p| seen.get(p.as_str()) != Some(&false))
        {
            return invalid(format!("payload {extra} has no dataset record"));
        }
        Ok(())
    }
}

fn check_group_class(path: &NxPath, tag: &str) -> std::result::Result<(), String> {
    if tag.is_empty() {
        Err(format!("group {path} has an empty NX_class"))
    } else if tag == NxClass::SDS.as_str() {
        Err(format!("group {path} uses the reserved class SDS"))
    } else {
        Ok(())
    }
}

fn put_u16_len(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend_from_slice(&(bytes.len() as u16).to_le_bytes());
    out.extend_from_slice(bytes);
}

fn record_header_len(rec: &EntryRecord) -> u64 {
    let mut len = 1 + 2 + rec.path.as_str().len() as u64 + 2;
    for (k, v) in &rec.attributes {
        len += 2 + k.len() as u64 + 2 + v.len() as u64;
    }
    if !rec.is_group() {
        len += 1 + 8 + 8 + 8;
    }
    len
}

/// Serializes a model to NXB bytes. Output depends only on the model.
pub fn encode(model: &FileModel) -> Result<Vec<u8>> {
    model.validate()?;
    let header_len: u64 = PREAMBLE_LEN + model.records.iter().map(record_header_len).sum::<u64>();
    let data_len: u64 = model
        .records
        .iter()
        .filter_map(|r| r.dataset_info().map(|i| i.byte_length))
        .sum();
    let mut out = Vec::with_capacity((header_len + data_len) as usize);
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(model.records.len() as u64).to_le_bytes());

    let mut offset = header_len;
    for rec in &model.records {
        out.push(match rec.kind {
            RecordKind::Group => 0,
            RecordKind::Dataset(_) => 1,
        });
        put_u16_len(&mut out, rec.path.as_str().as_bytes());
        out.extend_from_slice(&(rec.attributes.len() as u16).to_le_bytes());
        for (k, v) in &rec.attributes {
            put_u16_len(&mut out, k.as_bytes());
            put_u16_len(&mut out, v.as_bytes());
        }
        if let RecordKind::Dataset(info) = rec.kind {
            out.push(info.dtype.code());
            out.extend_from_slice(&info.element_count.to_le_bytes());
            out.extend_from_slice(&offset.to_le_bytes());
            out.extend_from_slice(&info.byte_length.to_le_bytes());
            offset += info.byte_length;
        }
    }
    debug_assert_eq!(out.len() as u64, header_len);
    for rec in &model.records {
        if !rec.is_group() {
            model.payloads[&rec.path].encode_into(&mut out);
        }
    }
    Ok(out)
}

pub fn write_store(model: &FileModel, destination: impl AsRef<Path>) -> Result<()> {
    let bytes = encode(model)?;
    std::fs::write(destination, bytes)?;
    Ok(())
}

/// Snapshot of a handle's call counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CallCounters {
    pub list_children_calls: u64,
    pub read_attribute_calls: u64,
    pub dataset_info_calls: u64,
    pub read_dataset_calls: u64,
    pub bytes_read: u64,
}

impl CallCounters {
    /// Calls that touch only metadata: `list_children` plus `read_attribute`.
    pub fn metadata_calls(&self) -> u64 {
        self.list_children_calls + self.read_attribute_calls
    }

    /// Counter growth since `earlier`.
    pub fn since(&self, earlier: &CallCounters) -> CallCounters {
        CallCounters {
            list_children_calls: self.list_children_calls - earlier.list_children_calls,
            read_attribute_calls: self.read_attribute_calls - earlier.read_attribute_calls,
            dataset_info_calls: self.dataset_info_calls - earlier.dataset_info_calls,
            read_dataset_calls: self.read_dataset_calls - earlier.read_dataset_calls,
            bytes_read: self.bytes_read - earlier.bytes_read,
        }
    }
}

#[derive(Default)]
struct AtomicCounters {
    list_children: AtomicU64,
    read_attribute: AtomicU64,
    dataset_info: AtomicU64,
    read_dataset: AtomicU64,
    bytes_read: AtomicU64,
}

/// One immediate child of a group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChildEntry {
    name: Box<str>,
    kind: EntryKind,
}

impl ChildEntry {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> EntryKind {
        self.kind
    }
}

struct Node {
    record: EntryRecord,
    data_offset: u64,
    children: Vec<ChildEntry>,
}

/// Open NXB file with resident record headers and lazily read payloads.
///
/// Safe to share between threads; counters are updated atomically.
pub struct StoreHandle {
    file: File,
    file_len: u64,
    nodes: Vec<Node>,
    lookup: HashMap<NxPath, usize>,
    counters: AtomicCounters,
    meta_latency: Duration,
}

impl std::fmt::Debug for StoreHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StoreHandle")
            .field("records", &self.nodes.len())
            .field("file_len", &self.file_len)
            .field("meta_latency", &self.meta_latency)
            .field("counters", &self.counters())
            .finish()
    }
}

struct HeaderReader<R> {
    inner: R,
    pos: u64,
}

impl<R: Read> HeaderReader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.fill(&mut buf, what)?;
        Ok(buf)
    }

    fn fill(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.pos += buf.len() as u64;
                Ok(())
            }
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Err(StoreError::TruncatedRecord(
                format!("end of file while reading {what} at offset {}", self.pos),
            )),
            Err(e) => Err(e.into()),
        }
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.bytes::<1>(what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes(what)?))
    }

    fn text(&mut self, what: &str) -> Result<String> {
        let len = self.u16(what)? as usize;
        let mut buf = vec![0u8; len];
        self.fill(&mut buf, what)?;
        String::from_utf8(buf)
            .map_err(|_| StoreError::InvalidRecord(format!("{what} is not UTF-8")))
    }
}

pub fn open_store(source: impl AsRef<Path>) -> Result<StoreHandle> {
    let file = File::open(source.as_ref())?;
    let file_len = file.metadata()?.len();
    let mut rd = HeaderReader {
        inner: BufReader::new(&file),
        pos: 0,
    };

    let magic: [u8; 4] = rd.bytes("magic").map_err(|e| match e {
        StoreError::TruncatedRecord(_) => StoreError::BadMagic([0; 4]),
        other => other,
    })?;
    if &magic != MAGIC {
        return Err(StoreError::BadMagic(magic));
    }
    let version = rd.u8("version")?;
    if version != FORMAT_VERSION {
        return Err(StoreError::UnsupportedVersion(version));
    }
    let count = rd.u64("record count")?;
    if count == 0 {
        return Err(StoreError::InvalidRecord("file holds no root group".into()));
    }

    let mut nodes: Vec<Node> = Vec::with_capacity(count.min(1 << 16) as usize);
    let mut lookup: HashMap<NxPath, usize> = HashMap::with_capacity(count.min(1 << 16) as usize);
    for _ in 0..count {
        let kind = rd.u8("record kind")?;
        let path = NxPath::parse(&rd.text("path")?)?;
        let attr_count = rd.u16("attribute count")?;
        let mut attributes = BTreeMap::new();
        for _ in 0..attr_count {
            let key = rd.text("attribute key")?;
            let value = rd.text("attribute value")?;
            attributes.insert(key, value);
        }
        let (kind, data_offset) = match kind {
            0 => {
                if let Some(tag) = attributes.get(NX_CLASS_ATTR) {
                    check_group_class(&path, tag).map_err(StoreError::InvalidRecord)?;
                }
                (RecordKind::Group, 0)
            }
            1 => {
                let code = rd.u8("dtype")?;
                let dtype = DType::from_code(code).ok_or_else(|| {
                    StoreError::InvalidRecord(format!("{path}: unknown dtype code {code}"))
                })?;
                let element_count = rd.u64("element count")?;
                let data_offset = rd.u64("data offset")?;
                let byte_length = rd.u64("byte length")?;
                let info = DatasetInfo {
                    dtype,
                    element_count,
                    byte_length,
                };
                if !info.is_consistent() {
                    return Err(StoreError::InvalidRecord(format!(
                        "{path}: {element_count} x {dtype} does not span {byte_length} bytes"
                    )));
                }
                match data_offset.checked_add(byte_length) {
                    Some(end) if end <= file_len => {}
                    _ => {
                        return Err(StoreError::TruncatedRecord(format!(
                            "{path}: payload [{data_offset}, +{byte_length}) past end of file ({file_len} bytes)"
                        )))
                    }
                }
                (RecordKind::Dataset(info), data_offset)
            }
            other => {
                return Err(StoreError::InvalidRecord(format!(
                    "{path}: unknown record kind {other}"
                )))
            }
        };

        if lookup.contains_key(&path) {
            return Err(StoreError::DuplicatePath(path));
        }
        if nodes.is_empty() {
            if !path.is_root() || kind != RecordKind::Group {
                return Err(StoreError::OrphanRecord(path));
            }
        } else {
            let parent = path.parent()?;
            match lookup.get(&parent) {
                Some(&pi) if nodes[pi].record.is_group() => {
                    let name = path.name().expect("non-root").into();
                    nodes[pi].children.push(ChildEntry {
                        name,
                        kind: kind.entry_kind(),
                    });
                }
                _ => return Err(StoreError::OrphanRecord(path)),
            }
        }
        lookup.insert(path.clone(), nodes.len());
        nodes.push(Node {
            record: EntryRecord {
                path,
                kind,
                attributes,
            },
            data_offset,
            children: Vec::new(),
        });
    }

    let header_end = rd.pos;
    for node in &mut nodes {
        if matches!(node.record.kind, RecordKind::Dataset(i) if i.byte_length > 0)
            && node.data_offset < header_end
        {
            return Err(StoreError::InvalidRecord(format!(
                "{}: payload offset {} overlaps the record table",
                node.record.path, node.data_offset
            )));
        }
        node.children.sort_by(|a, b| a.name.cmp(&b.name));
    }

    Ok(StoreHandle {
        file,
        file_len,
        nodes,
        lookup,
        counters: AtomicCounters::default(),
        meta_latency: Duration::ZERO,
    })
}

impl StoreHandle {
    pub fn meta_latency(&self) -> Duration {
        self.meta_latency
    }

    /// Delay injected into every `list_children` and `read_attribute` call.
    pub fn set_meta_latency(&mut self, latency: Duration) {
        self.meta_latency = latency;
    }

    pub fn with_meta_latency(mut self, latency: Duration) -> Self {
        self.meta_latency = latency;
        self
    }

    pub fn file_len(&self) -> u64 {
        self.file_len
    }

    /// Busy-waits: sleeping would overshoot microsecond latencies.
    fn pause(&self) {
        if self.meta_latency.is_zero() {
            return;
        }
        let start = Instant::now();
        while start.elapsed() < self.meta_latency {
            std::hint::spin_loop();
        }
    }

    fn node(&self, path: &NxPath) -> Result<&Node> {
        self.lookup
            .get(path)
            .map(|&i| &self.nodes[i])
            .ok_or_else(|| StoreError::NoSuchPath(path.to_string()))
    }

    /// Immediate children of `group` in byte-lexicographic name order.
    pub fn list_children(&self, group: &NxPath) -> Result<&[ChildEntry]> {
        self.counters.list_children.fetch_add(1, Ordering::Relaxed);
        self.pause();
        let node = self.node(group)?;
        if !node.record.is_group() {
            return Err(StoreError::NotAGroup(group.clone()));
        }
        Ok(&node.children)
    }

    pub fn read_attribute(&self, entry: &NxPath, key: &str) -> Result<&str> {
        self.counters.read_attribute.fetch_add(1, Ordering::Relaxed);
        self.pause();
        let node = self.node(entry)?;
        node.record
            .attributes
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| StoreError::NoSuchAttribute {
                path: entry.clone(),
                key: key.to_owned(),
            })
    }

    pub fn dataset_info(&self, entry: &NxPath) -> Result<DatasetInfo> {
        self.counters.dataset_info.fetch_add(1, Ordering::Relaxed);
        let node = self.node(entry)?;
        node.record
            .dataset_info()
            .copied()
            .ok_or_else(|| StoreError::NotADataset(entry.clone()))
    }

    pub fn read_dataset(&self, entry: &NxPath) -> Result<TypedArray> {
        self.counters.read_dataset.fetch_add(1, Ordering::Relaxed);
        let node = self.node(entry)?;
        let info = *node
            .record
            .dataset_info()
            .ok_or_else(|| StoreError::NotADataset(entry.clone()))?;
        let mut buf = vec![0u8; info.byte_length as usize];
        read_exact_at(&self.file, &mut buf, node.data_offset).map_err(|e| {
            if e.kind() == io::ErrorKind::UnexpectedEof {
                StoreError::CorruptPayload {
                    path: entry.clone(),
                    reason: "payload extends past end of file".into(),
                }
            } else {
                StoreError::Io(e)
            }
        })?;
        self.counters
            .bytes_read
            .fetch_add(info.byte_length, Ordering::Relaxed);
        TypedArray::decode(info.dtype, buf).map_err(|reason| StoreError::CorruptPayload {
            path: entry.clone(),
            reason,
        })
    }

    pub fn counters(&self) -> CallCounters {
        CallCounters {
            list_children_calls: self.counters.list_children.load(Ordering::Relaxed),
            read_attribute_calls: self.counters.read_attribute.load(Ordering::Relaxed),
            dataset_info_calls: self.counters.dataset_info.load(Ordering::Relaxed),
            read_dataset_calls: self.counters.read_dataset.load(Ordering::Relaxed),
            bytes_read: self.counters.bytes_read.load(Ordering::Relaxed),
        }
    }

    /// Record headers in file order. Uninstrumented.
    pub fn records(&self) -> impl ExactSizeIterator<Item = &EntryRecord> {
        self.nodes.iter().map(|n| &n.record)
    }

    /// Reads every payload and rebuilds the full model.
    pub fn read_model(&self) -> Result<FileModel> {
        let mut payloads = BTreeMap::new();
        for node in &self.nodes {
            if !node.record.is_group() {
                payloads.insert(
                    node.record.path.clone(),
                    self.read_dataset(&node.record.path)?,
                );
            }
        }
        FileModel::from_parts(self.records().cloned().collect(), payloads)
    }
}

pub fn list_children<'h>(h: &'h StoreHandle, group: &NxPath) -> Result<&'h [ChildEntry]> {
    h.list_children(group)
}

pub fn read_attribute<'h>(h: &'h StoreHandle, entry: &NxPath, key: &str) -> Result<&'h str> {
    h.read_attribute(entry, key)
}

pub fn read_dataset(h: &StoreHandle, entry: &NxPath) -> Result<TypedArray> {
    h.read_dataset(entry)
}

pub fn counters(h: &StoreHandle) -> CallCounters {
    h.counters()
}

#[cfg(unix)]
fn read_exact_at(file: &File, buf: &mut [u8], offset: u64) -> io::Result<()> {
    use std::os::unix::fs::FileExt;
    file.read_exact_at(buf, offset)
}

#[cfg(windows)]
fn read_exact_at(file: &File, mut buf: &mut [u8], mut offset: u64) -> io::Result<()> {
    use std::os::windows::fs::FileExt;
    while !buf.is_empty() {
        match file.seek_read(buf, offset)? {
            0 => return Err(io::ErrorKind::UnexpectedEof.into()),
            n => {
                buf = &mut buf[n..];
                offset += n as u64;
            }
        }
    }
    Ok(())
}
