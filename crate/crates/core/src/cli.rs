//! The `nxindex` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid data, 3 I/O failure.

use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand};

use crate::bench::{
    run_bench, write_rows_csv, write_summary_csv, BenchConfig, BenchError, CacheMode,
};
use crate::index::build_index;
use crate::loader::{load_event_nexus_with, LoadError, LoadMode, LoadOptions, LoadSummary};
use crate::schema::{classify_entry, EntryKind};
use crate::store::{open_store, write_store, StoreError};
use crate::synth::{generate, instrument_profile, provenance, SynthError, PROFILE_NAMES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "nxindex", version, about = "Index and load NXB event files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic instrument file.
    Gen {
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Fraction of the profile's full event volume, in (0, 1].
        #[arg(long, default_value_t = 0.01)]
        scale: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Summarise a file's records.
    Inspect {
        path: PathBuf,
        /// Print the whole hierarchy.
        #[arg(long)]
        tree: bool,
    },
    /// Build the class index and print bucket sizes.
    Index {
        path: PathBuf,
        /// Print the full class → path table.
        #[arg(long)]
        dump: bool,
    },
    /// Load a file into an event workspace.
    Load {
        path: PathBuf,
        #[arg(long, default_value = "indexed")]
        mode: LoadMode,
        #[arg(long)]
        json: bool,
        /// Injected latency per metadata call, microseconds.
        #[arg(long, default_value_t = 0)]
        meta_latency_us: u64,
        /// Read banks in parallel.
        #[arg(long)]
        parallel: bool,
    },
    /// Time legacy and indexed loads over generated files.
    Bench {
        /// Comma-separated profile names.
        #[arg(long, value_delimiter = ',', default_values_t = PROFILE_NAMES.map(String::from))]
        profiles: Vec<String>,
        #[arg(long, default_value_t = 3)]
        repeat: usize,
        #[arg(long, default_value_t = 0.01)]
        scale: f64,
        #[arg(long, default_value_t = 0)]
        meta_latency_us: u64,
        #[arg(long, default_value = "repeated")]
        cache: CacheMode,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Per-run rows go here; medians go to `<stem>.summary.csv` beside it.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Display) -> Self {
        Failure {
            code,
            message: message.to_string(),
        }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        Failure::new(if e.is_io() { EXIT_IO } else { EXIT_DATA }, e)
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::new(if e.is_io() { EXIT_IO } else { EXIT_DATA }, e)
    }
}

impl From<SynthError> for Failure {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Store(e) => e.into(),
            e => Failure::new(EXIT_USAGE, e),
        }
    }
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        let code = match &e {
            _ if e.is_io() => EXIT_IO,
            BenchError::InvalidConfig(_) | BenchError::Synth(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure::new(code, e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        // a closed pipe (e.g. `| head`) ends output early but is not a failure
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            return Failure::new(EXIT_OK, "");
        }
        Failure::new(EXIT_IO, e)
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(f) if f.code == EXIT_OK => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "nxindex: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match cmd {
        Command::Gen {
            profile,
            seed,
            scale,
            output,
        } => cmd_gen(&profile, seed, scale, &output, out),
        Command::Inspect { path, tree } => cmd_inspect(&path, tree, out),
        Command::Index { path, dump } => cmd_index(&path, dump, out),
        Command::Load {
            path,
            mode,
            json,
            meta_latency_us,
            parallel,
        } => cmd_load(&path, mode, json, meta_latency_us, parallel, out),
        Command::Bench {
            profiles,
            repeat,
            scale,
            meta_latency_us,
            cache,
            seed,
            csv,
        } => {
            let cfg = BenchConfig {
                profiles,
                repeats: repeat,
                event_scale: scale,
                meta_latency: Duration::from_micros(meta_latency_us),
                cache,
                seed,
                work_dir: None,
            };
            cmd_bench(&cfg, csv.as_deref(), out)
        }
    }
}

pub fn provenance_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".provenance.txt");
    PathBuf::from(name)
}

pub fn summary_csv_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    csv.with_file_name(format!("{stem}.summary.csv"))
}

fn cmd_gen(
    profile: &str,
    seed: u64,
    scale: f64,
    output: &Path,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let p = instrument_profile(profile)?;
    let model = generate(&p, seed, scale)?;
    write_store(&model, output)?;
    std::fs::write(provenance_path(output), provenance(&p, seed, scale, &model))?;
    writeln!(
        out,
        "wrote {} ({} entries, {} groups)",
        output.display(),
        model.entry_count(),
        model.group_count()
    )?;
    Ok(())
}

fn cmd_inspect(path: &Path, tree: bool, out: &mut dyn Write) -> Result<(), Failure> {
    let h = open_store(path)?;
    let groups = h.records().filter(|r| r.is_group()).count();
    let datasets = h.records().len() - groups;
    writeln!(out, "file: {}", path.display())?;
    writeln!(out, "bytes: {}", h.file_len())?;
    writeln!(out, "entries: {}", h.records().len() - 1)?;
    writeln!(out, "groups: {groups}")?;
    writeln!(out, "datasets: {datasets}")?;
    if tree {
        for rec in h.records() {
            let indent = "  ".repeat(rec.path.depth());
            let name = rec.path.name().unwrap_or("/");
            match rec.dataset_info() {
                Some(info) => writeln!(
                    out,
                    "{indent}{name}: {}[{}]",
                    info.dtype.name(),
                    info.element_count
                )?,
                None => match rec.kind.entry_kind() {
                    EntryKind::Group if rec.path.is_root() => writeln!(out, "/")?,
                    _ => writeln!(out, "{indent}{name} [{}]", classify_entry(rec).as_str())?,
                },
            }
        }
    }
    Ok(())
}

fn cmd_index(path: &Path, dump: bool, out: &mut dyn Write) -> Result<(), Failure> {
    let h = open_store(path)?;
    let index = build_index(&h)?;
    if dump {
        write!(out, "{}", index.dump_table())?;
        return Ok(());
    }
    for (class, paths) in index.buckets() {
        writeln!(out, "{}\t{}", class.as_str(), paths.len())?;
    }
    let c = h.counters();
    writeln!(
        out,
        "classes: {}  entries: {}  list_children: {}  read_attribute: {}",
        index.class_count(),
        index.len(),
        c.list_children_calls,
        c.read_attribute_calls
    )?;
    Ok(())
}

fn cmd_load(
    path: &Path,
    mode: LoadMode,
    json: bool,
    meta_latency_us: u64,
    parallel: bool,
    out: &mut dyn Write,
) -> Result<(), Failure> {
    let h = open_store(path)?.with_meta_latency(Duration::from_micros(meta_latency_us));
    let ws = load_event_nexus_with(
        &h,
        mode,
        LoadOptions {
            parallel_banks: parallel,
        },
    )?;
    let summary = LoadSummary::new(&ws, mode, h.counters());
    if json {
        let text =
            serde_json::to_string_pretty(&summary).map_err(|e| Failure::new(EXIT_DATA, e))?;
        writeln!(out, "{text}")?;
    } else {
        writeln!(out, "mode: {}", mode.as_str())?;
        writeln!(out, "banks: {}", summary.banks.len())?;
        writeln!(out, "events: {}", summary.total_events)?;
        writeln!(out, "pixels with events: {}", summary.pixels_with_events)?;
        writeln!(out, "logs: {}", summary.log_count)?;
        writeln!(out, "monitors: {}", summary.monitor_count)?;
        writeln!(out, "detector banks: {}", summary.detector_banks)?;
        writeln!(
            out,
            "metadata calls: {} (list_children {}, read_attribute {})",
            summary.counters.metadata_calls(),
            summary.counters.list_children_calls,
            summary.counters.read_attribute_calls
        )?;
        writeln!(out, "bytes read: {}", summary.counters.bytes_read)?;
    }
    Ok(())
}

fn cmd_bench(cfg: &BenchConfig, csv: Option<&Path>, out: &mut dyn Write) -> Result<(), Failure> {
    let report = run_bench(cfg)?;
    if let Some(csv) = csv {
        write_rows_csv(std::fs::File::create(csv)?, &report.rows)?;
        write_summary_csv(
            std::fs::File::create(summary_csv_path(csv))?,
            &report.summaries,
        )?;
    }
    write_summary_csv(out, &report.summaries)?;
    Ok(())
}
