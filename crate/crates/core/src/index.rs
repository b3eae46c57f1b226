//! Two-level in-memory metadata index.
//!
//! The first level maps each class tag to a bucket; the second level is the
//! bucket itself, a strictly increasing run of absolute paths. Both levels are
//! sorted arrays searched by bisection, i.e. perfectly balanced binary search
//! trees flattened into contiguous memory, so a lookup costs at most
//! `ceil(log2(classes + 1)) + ceil(log2(entries + 1))` key comparisons.
//!
//! The index is built once per open file and is immutable afterwards.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::schema::{classify, EntryKind, NxClass, NxPath, NX_CLASS_ATTR};
use crate::store::{StoreError, StoreHandle};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("{path} listed under both {first} and {second}")]
    ConflictingClass {
        path: NxPath,
        first: NxClass,
        second: NxClass,
    },
}

/// Counts key comparisons made by an instrumented query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Comparisons(pub usize);

impl Comparisons {
    fn tick(&mut self) {
        self.0 += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Bucket {
    class: NxClass,
    paths: Vec<NxPath>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MetadataIndex {
    buckets: Vec<Bucket>,
}

/// Bisection over a sorted slice; `probe` orders an element against the
/// target. One comparison per halving step.
fn bisect<T>(
    items: &[T],
    cmp: &mut Comparisons,
    mut probe: impl FnMut(&T) -> Ordering,
) -> Result<usize, usize> {
    let (mut lo, mut hi) = (0, items.len());
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        cmp.tick();
        match probe(&items[mid]) {
            Ordering::Less => lo = mid + 1,
            Ordering::Greater => hi = mid,
            Ordering::Equal => return Ok(mid),
        }
    }
    Err(lo)
}

/// First position in `paths[from..]` whose path is `>= key`, found by
/// exponential probing from `from` followed by bisection.
fn gallop(paths: &[NxPath], from: usize, key: &str, cmp: &mut Comparisons) -> usize {
    let mut lo = from;
    let mut step = 1;
    let hi = loop {
        let probe = lo + step - 1;
        if probe >= paths.len() {
            break paths.len();
        }
        cmp.tick();
        if paths[probe].as_str() >= key {
            break probe;
        }
        lo = probe + 1;
        step *= 2;
    };
    lo + lower_bound(&paths[lo..hi], key, cmp)
}

fn lower_bound(paths: &[NxPath], key: &str, cmp: &mut Comparisons) -> usize {
    match bisect(paths, cmp, |p| p.as_str().cmp(key)) {
        Ok(i) | Err(i) => i,
    }
}

impl MetadataIndex {
    /// Builds an index from `(class, path)` pairs. Duplicates under the same
    /// class collapse; a path under two classes is rejected.
    pub fn from_entries(
        entries: impl IntoIterator<Item = (NxClass, NxPath)>,
    ) -> Result<Self, IndexError> {
        let mut owner: HashMap<NxPath, NxClass> = HashMap::new();
        let mut grouped: BTreeMap<NxClass, Vec<NxPath>> = BTreeMap::new();
        for (class, path) in entries {
            if let Some(prev) = owner.get(&path) {
                if *prev != class {
                    return Err(IndexError::ConflictingClass {
                        path,
                        first: prev.clone(),
                        second: class,
                    });
                }
                continue;
            }
            owner.insert(path.clone(), class.clone());
            grouped.entry(class).or_default().push(path);
        }
        Ok(Self::from_grouped(grouped))
    }

    fn from_grouped(grouped: BTreeMap<NxClass, Vec<NxPath>>) -> Self {
        let buckets = grouped
            .into_iter()
            .map(|(class, mut paths)| {
                paths.sort_unstable();
                paths.dedup();
                Bucket { class, paths }
            })
            .filter(|b| !b.paths.is_empty())
            .collect();
        MetadataIndex { buckets }
    }

    /// Number of distinct classes (first-level keys).
    pub fn class_count(&self) -> usize {
        self.buckets.len()
    }

    /// Size of the largest bucket.
    pub fn max_entries_per_class(&self) -> usize {
        self.buckets
            .iter()
            .map(|b| b.paths.len())
            .max()
            .unwrap_or(0)
    }

    /// Total number of indexed paths.
    pub fn len(&self) -> usize {
        self.buckets.iter().map(|b| b.paths.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn classes(&self) -> impl Iterator<Item = &NxClass> {
        self.buckets.iter().map(|b| &b.class)
    }

    /// Buckets in class order.
    pub fn buckets(&self) -> impl Iterator<Item = (&NxClass, &[NxPath])> {
        self.buckets.iter().map(|b| (&b.class, b.paths.as_slice()))
    }

    fn bucket(&self, class: &NxClass, cmp: &mut Comparisons) -> Option<&[NxPath]> {
        bisect(&self.buckets, cmp, |b| b.class.cmp(class))
            .ok()
            .map(|i| self.buckets[i].paths.as_slice())
    }

    pub fn entries_of_class(&self, class: &NxClass) -> &[NxPath] {
        self.bucket(class, &mut Comparisons::default())
            .unwrap_or(&[])
    }

    pub fn first_entry_of_class(&self, class: &NxClass) -> Option<&NxPath> {
        self.entries_of_class(class).first()
    }

    pub fn contains(&self, class: &NxClass, path: &NxPath) -> bool {
        self.contains_counted(class, path, &mut Comparisons::default())
    }

    /// `contains` that reports every key comparison to `cmp`.
    pub fn contains_counted(&self, class: &NxClass, path: &NxPath, cmp: &mut Comparisons) -> bool {
        match self.bucket(class, cmp) {
            Some(paths) => bisect(paths, cmp, |p| p.cmp(path)).is_ok(),
            None => false,
        }
    }

    /// Datasets that are direct children of `group`, in path order.
    pub fn datasets_under(&self, group: &NxPath) -> Vec<&NxPath> {
        self.datasets_under_counted(group, &mut Comparisons::default())
    }

    /// Range scan over the SDS bucket bounded by `group`'s child prefix.
    /// Deeper descendants are skipped a whole subtree at a time by galloping
    /// past `prefix + child + '0'` ('0' is the byte after '/').
    pub fn datasets_under_counted(&self, group: &NxPath, cmp: &mut Comparisons) -> Vec<&NxPath> {
        let Some(paths) = self.bucket(&NxClass::SDS, cmp) else {
            return Vec::new();
        };
        let prefix = group.child_prefix();
        let prefix = prefix.as_ref();
        let mut out = Vec::new();
        let mut i = lower_bound(paths, prefix, cmp);
        while i < paths.len() {
            cmp.tick();
            let Some(rest) = paths[i].as_str().strip_prefix(prefix) else {
                break;
            };
            match rest.find('/') {
                None => {
                    out.push(&paths[i]);
                    i += 1;
                }
                Some(cut) => {
                    let skip_to = format!("{prefix}{}0", &rest[..cut]);
                    i = gallop(paths, i + 1, &skip_to, cmp);
                }
            }
        }
        out
    }

    /// Two-column listing: class key, then its sorted paths, one per line.
    pub fn dump_table(&self) -> String {
        let width = self
            .buckets
            .iter()
            .map(|b| b.class.as_str().len())
            .max()
            .unwrap_or(0)
            .max("Key: NX_class".len());
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  Value: sorted absolute-path entries",
            "Key: NX_class"
        );
        for (n, b) in self.buckets.iter().enumerate() {
            if n > 0 {
                out.push('\n');
            }
            for (i, p) in b.paths.iter().enumerate() {
                let key = if i == 0 { b.class.as_str() } else { "" };
                let _ = writeln!(out, "{key:<width$}  {p}");
            }
        }
        out
    }
}

/// Walks the whole metadata tree of `h` once, depth first: one
/// `list_children` per group and one `NX_class` read per non-root group.
/// No payload is read.
pub fn build_index(h: &StoreHandle) -> Result<MetadataIndex, StoreError> {
    let mut grouped: BTreeMap<NxClass, Vec<NxPath>> = BTreeMap::new();
    let mut pending = vec![NxPath::root()];
    while let Some(group) = pending.pop() {
        for child in h.list_children(&group)? {
            let path = group.join(child.name())?;
            let class = match child.kind() {
                EntryKind::Dataset => classify(EntryKind::Dataset, None),
                EntryKind::Group => {
                    let tag = match h.read_attribute(&path, NX_CLASS_ATTR) {
                        Ok(tag) => Some(tag),
                        Err(StoreError::NoSuchAttribute { .. }) => None,
                        Err(e) => return Err(e),
                    };
                    let class = classify(EntryKind::Group, tag);
                    pending.push(path.clone());
                    class
                }
            };
            grouped.entry(class).or_default().push(path);
        }
    }
    Ok(MetadataIndex::from_grouped(grouped))
}
