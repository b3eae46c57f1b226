//! Metadata indexing for NeXus-style hierarchical event files.
//!
//! * [`schema`]: paths, class tags and entry records.
//! * [`store`]: the NXB container format and an instrumented read handle.
//! * [`index`]: the two-level class → path index built once per open file.
//! * [`loader`]: the four-stage event loader, in legacy and indexed modes.
//! * [`synth`]: seeded synthetic instrument files.
//! * [`bench`]: legacy-vs-indexed timing and call accounting.
//! * [`cli`]: the `nxindex` command line.

pub mod bench;
pub mod cli;
pub mod index;
pub mod loader;
pub mod schema;
pub mod store;
pub mod synth;

pub use index::{build_index, MetadataIndex};
pub use loader::{load_event_nexus, EventWorkspace, LoadMode};
pub use schema::{NxClass, NxPath};
pub use store::{open_store, write_store, CallCounters, FileModel, StoreHandle};
