//! Domain types for NeXus-style hierarchical entries: absolute paths, group
//! class tags and the per-entry records stored in a file.

use std::borrow::{Borrow, Cow};
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Attribute key carrying a group's class tag.
pub const NX_CLASS_ATTR: &str = "NX_class";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchemaError {
    #[error("malformed path {raw:?}: {reason}")]
    MalformedPath { raw: String, reason: &'static str },
    #[error("the root path has no parent")]
    RootHasNoParent,
}

/// Absolute, slash-separated path of an entry inside a file.
///
/// Ordering is byte-wise lexicographic on the full text, so
/// `/entry/bank10_events` sorts before `/entry/bank2_events`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NxPath(String);

impl NxPath {
    pub fn root() -> Self {
        NxPath("/".to_owned())
    }

    /// Validates `raw` without rewriting it.
    pub fn parse(raw: &str) -> Result<Self, SchemaError> {
        let malformed = |reason| SchemaError::MalformedPath {
            raw: raw.to_owned(),
            reason,
        };
        if raw.is_empty() {
            return Err(malformed("empty path"));
        }
        if !raw.starts_with('/') {
            return Err(malformed("missing leading '/'"));
        }
        if raw == "/" {
            return Ok(Self::root());
        }
        if raw.ends_with('/') {
            return Err(malformed("trailing '/'"));
        }
        if raw[1..].split('/').any(str::is_empty) {
            return Err(malformed("empty component"));
        }
        Ok(NxPath(raw.to_owned()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0 == "/"
    }

    /// Number of components; the root has depth 0.
    pub fn depth(&self) -> usize {
        if self.is_root() {
            0
        } else {
            self.0.matches('/').count()
        }
    }

    /// Last component, or `None` for the root.
    pub fn name(&self) -> Option<&str> {
        if self.is_root() {
            None
        } else {
            self.0.rsplit('/').next()
        }
    }

    pub fn parent(&self) -> Result<NxPath, SchemaError> {
        if self.is_root() {
            return Err(SchemaError::RootHasNoParent);
        }
        let cut = self.0.rfind('/').expect("absolute path");
        if cut == 0 {
            Ok(Self::root())
        } else {
            Ok(NxPath(self.0[..cut].to_owned()))
        }
    }

    /// Appends one component. `name` must be non-empty and free of `/`.
    pub fn join(&self, name: &str) -> Result<NxPath, SchemaError> {
        if name.is_empty() || name.contains('/') {
            return Err(SchemaError::MalformedPath {
                raw: format!("{}/{}", self.0.trim_end_matches('/'), name),
                reason: "invalid component",
            });
        }
        let mut text = String::with_capacity(self.0.len() + name.len() + 1);
        text.push_str(&self.0);
        if !self.is_root() {
            text.push('/');
        }
        text.push_str(name);
        Ok(NxPath(text))
    }

    /// Path components from the root down.
    pub fn components(&self) -> impl Iterator<Item = &str> {
        self.0.split('/').filter(|c| !c.is_empty())
    }

    /// Text every strict descendant path starts with.
    pub fn child_prefix(&self) -> Cow<'_, str> {
        if self.is_root() {
            Cow::Borrowed("/")
        } else {
            Cow::Owned(format!("{}/", self.0))
        }
    }

    pub fn is_ancestor_of(&self, other: &NxPath) -> bool {
        other.0.len() > self.0.len() && other.0.starts_with(self.child_prefix().as_ref())
    }
}

pub fn parse_path(raw: &str) -> Result<NxPath, SchemaError> {
    NxPath::parse(raw)
}

pub fn parent(p: &NxPath) -> Result<NxPath, SchemaError> {
    p.parent()
}

impl fmt::Display for NxPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for NxPath {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for NxPath {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl std::str::FromStr for NxPath {
    type Err = SchemaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        NxPath::parse(s)
    }
}

/// Class tag of an entry: the first level of the metadata index.
///
/// Well-known tags are available as associated constants; any other text is
/// an open tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NxClass(Cow<'static, str>);

impl NxClass {
    pub const ENTRY: NxClass = NxClass(Cow::Borrowed("NXentry"));
    pub const COLLECTION: NxClass = NxClass(Cow::Borrowed("NXcollection"));
    pub const LOG: NxClass = NxClass(Cow::Borrowed("NXlog"));
    pub const EVENT_DATA: NxClass = NxClass(Cow::Borrowed("NXevent_data"));
    pub const MONITOR: NxClass = NxClass(Cow::Borrowed("NXmonitor"));
    pub const INSTRUMENT: NxClass = NxClass(Cow::Borrowed("NXinstrument"));
    pub const DETECTOR: NxClass = NxClass(Cow::Borrowed("NXdetector"));
    pub const GEOMETRY: NxClass = NxClass(Cow::Borrowed("NXgeometry"));
    /// Scientific dataset. Reserved for dataset entries.
    pub const SDS: NxClass = NxClass(Cow::Borrowed("SDS"));
    /// Groups without an `NX_class` attribute.
    pub const UNKNOWN: NxClass = NxClass(Cow::Borrowed("NXunknown"));

    pub fn new(tag: impl Into<String>) -> Self {
        let tag = tag.into();
        for known in Self::well_known() {
            if known.as_str() == tag {
                return known.clone();
            }
        }
        NxClass(Cow::Owned(tag))
    }

    pub fn well_known() -> &'static [NxClass] {
        &[
            NxClass::ENTRY,
            NxClass::COLLECTION,
            NxClass::LOG,
            NxClass::EVENT_DATA,
            NxClass::MONITOR,
            NxClass::INSTRUMENT,
            NxClass::DETECTOR,
            NxClass::GEOMETRY,
            NxClass::SDS,
        ]
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NxClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NxClass {
    fn from(tag: &str) -> Self {
        NxClass::new(tag)
    }
}

/// Element type of a dataset payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DType {
    U32,
    U64,
    F32,
    F64,
    /// UTF-8 text; one element per byte.
    Utf8,
}

impl DType {
    pub fn code(self) -> u8 {
        match self {
            DType::U32 => 0,
            DType::U64 => 1,
            DType::F32 => 2,
            DType::F64 => 3,
            DType::Utf8 => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            0 => DType::U32,
            1 => DType::U64,
            2 => DType::F32,
            3 => DType::F64,
            4 => DType::Utf8,
            _ => return None,
        })
    }

    pub fn element_size(self) -> u64 {
        match self {
            DType::U32 | DType::F32 => 4,
            DType::U64 | DType::F64 => 8,
            DType::Utf8 => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DType::U32 => "u32",
            DType::U64 => "u64",
            DType::F32 => "f32",
            DType::F64 => "f64",
            DType::Utf8 => "utf8",
        }
    }
}

impl fmt::Display for DType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape metadata of a dataset record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DatasetInfo {
    pub dtype: DType,
    pub element_count: u64,
    pub byte_length: u64,
}

impl DatasetInfo {
    pub fn new(dtype: DType, element_count: u64) -> Self {
        DatasetInfo {
            dtype,
            element_count,
            byte_length: element_count * dtype.element_size(),
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.element_count.checked_mul(self.dtype.element_size()) == Some(self.byte_length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EntryKind {
    Group,
    Dataset,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecordKind {
    Group,
    Dataset(DatasetInfo),
}

impl RecordKind {
    pub fn entry_kind(&self) -> EntryKind {
        match self {
            RecordKind::Group => EntryKind::Group,
            RecordKind::Dataset(_) => EntryKind::Dataset,
        }
    }
}

/// One entry of a file's metadata: a group or a dataset with its attributes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntryRecord {
    pub path: NxPath,
    pub kind: RecordKind,
    pub attributes: BTreeMap<String, String>,
}

impl EntryRecord {
    pub fn group(path: NxPath) -> Self {
        EntryRecord {
            path,
            kind: RecordKind::Group,
            attributes: BTreeMap::new(),
        }
    }

    pub fn group_of_class(path: NxPath, class: &NxClass) -> Self {
        let mut rec = Self::group(path);
        rec.attributes
            .insert(NX_CLASS_ATTR.to_owned(), class.as_str().to_owned());
        rec
    }

    pub fn dataset(path: NxPath, info: DatasetInfo) -> Self {
        EntryRecord {
            path,
            kind: RecordKind::Dataset(info),
            attributes: BTreeMap::new(),
        }
    }

    pub fn is_group(&self) -> bool {
        matches!(self.kind, RecordKind::Group)
    }

    pub fn dataset_info(&self) -> Option<&DatasetInfo> {
        match &self.kind {
            RecordKind::Dataset(info) => Some(info),
            RecordKind::Group => None,
        }
    }
}

/// Classification rule shared by record-based and store-based callers:
/// datasets are SDS, groups take their `NX_class` value or `NXunknown`.
pub fn classify(kind: EntryKind, nx_class: Option<&str>) -> NxClass {
    match kind {
        EntryKind::Dataset => NxClass::SDS,
        EntryKind::Group => match nx_class {
            Some(tag) if !tag.is_empty() => NxClass::new(tag),
            _ => NxClass::UNKNOWN,
        },
    }
}

pub fn classify_entry(rec: &EntryRecord) -> NxClass {
    classify(
        rec.kind.entry_kind(),
        rec.attributes.get(NX_CLASS_ATTR).map(String::as_str),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_canonical_paths() {
        let p = parse_path("/entry/bank1_events/event_id").unwrap();
        assert_eq!(p.as_str(), "/entry/bank1_events/event_id");
        assert_eq!(p.depth(), 3);
        assert_eq!(p.name(), Some("event_id"));
        assert!(parse_path("/").unwrap().is_root());
    }

    #[test]
    fn rejects_non_canonical_paths() {
        for raw in ["", "entry/DASlogs", "/entry/", "/entry//x", "//"] {
            assert!(
                matches!(parse_path(raw), Err(SchemaError::MalformedPath { .. })),
                "{raw:?} accepted"
            );
        }
    }

    #[test]
    fn parent_walks_up() {
        let p = parse_path("/entry/DASlogs/BL6:CS:DataType").unwrap();
        assert_eq!(parent(&p).unwrap().as_str(), "/entry/DASlogs");
        assert_eq!(
            parent(&parse_path("/entry").unwrap()).unwrap(),
            NxPath::root()
        );
        assert_eq!(parent(&NxPath::root()), Err(SchemaError::RootHasNoParent));
    }

    #[test]
    fn byte_order_puts_bank10_before_bank2() {
        let b10 = parse_path("/entry/bank10_events").unwrap();
        let b2 = parse_path("/entry/bank2_events").unwrap();
        assert!(b10 < b2);
    }

    #[test]
    fn classification_rules() {
        let log = EntryRecord::group_of_class(
            parse_path("/entry/DASlogs/BL6:CS:DataType").unwrap(),
            &NxClass::LOG,
        );
        assert_eq!(classify_entry(&log), NxClass::LOG);

        let mut ds = EntryRecord::dataset(
            parse_path("/entry/bank1_events/event_id").unwrap(),
            DatasetInfo::new(DType::U32, 3),
        );
        assert_eq!(classify_entry(&ds), NxClass::SDS);
        // datasets stay SDS even when annotated
        ds.attributes.insert(NX_CLASS_ATTR.into(), "NXlog".into());
        assert_eq!(classify_entry(&ds), NxClass::SDS);

        let bare = EntryRecord::group(parse_path("/entry/misc").unwrap());
        assert_eq!(classify_entry(&bare), NxClass::UNKNOWN);
        assert_eq!(NxClass::UNKNOWN.as_str(), "NXunknown");
    }

    #[test]
    fn open_tags_compare_equal_to_constants() {
        assert_eq!(NxClass::new("NXlog"), NxClass::LOG);
        assert_eq!(NxClass::new("NXsample").as_str(), "NXsample");
        assert!(NxClass::COLLECTION < NxClass::DETECTOR);
    }

    #[test]
    fn join_and_prefix() {
        let root = NxPath::root();
        let entry = root.join("entry").unwrap();
        assert_eq!(entry.as_str(), "/entry");
        assert_eq!(entry.child_prefix(), "/entry/");
        assert!(entry.is_ancestor_of(&entry.join("x").unwrap()));
        assert!(!entry.is_ancestor_of(&parse_path("/entry2").unwrap()));
        assert!(root.join("a/b").is_err());
    }

    fn component() -> impl Strategy<Value = String> {
        "[A-Za-z0-9_:.]{1,8}"
    }

    proptest! {
        #[test]
        fn parse_render_identity(parts in prop::collection::vec(component(), 0..6)) {
            let raw = if parts.is_empty() { "/".to_owned() } else { format!("/{}", parts.join("/")) };
            let p = parse_path(&raw).unwrap();
            prop_assert_eq!(p.to_string(), raw.clone());
            prop_assert_eq!(parse_path(p.as_str()).unwrap(), p);
        }

        #[test]
        fn parent_is_strict_prefix(parts in prop::collection::vec(component(), 1..6)) {
            let p = parse_path(&format!("/{}", parts.join("/"))).unwrap();
            let up = parent(&p).unwrap();
            prop_assert!(p.as_str().len() > up.as_str().len());
            prop_assert!(p.as_str().starts_with(up.as_str()));
            let cut = p.as_str().rfind('/').unwrap();
            prop_assert_eq!(up.as_str(), if cut == 0 { "/" } else { &p.as_str()[..cut] });
            prop_assert_eq!(up.depth() + 1, p.depth());
        }
    }
}
