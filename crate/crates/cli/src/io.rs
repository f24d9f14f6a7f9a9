//! Configuration CSV, JSON envelopes and atomic file output.
//!
//! CSV layout: one observation per row, groups laid out contiguously in
//! model order, every entry exactly `-1` or `1`. An optional first line
//! `# sizes=5,7` declares the group sizes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use curie_weiss::{GroupSpec, SufficientSummary};
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::CliError;

/// Metadata wrapped around every JSON output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub tool: String,
    pub version: String,
    pub sampler_version: u32,
    pub command: String,
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<Vec<GroupSpec>>,
    pub result: T,
}

impl<T> Envelope<T> {
    pub fn new(command: &str, seed: Option<u64>, result: T) -> Self {
        Self {
            tool: "cw".into(),
            version: curie_weiss::VERSION.into(),
            sampler_version: curie_weiss::SAMPLER_VERSION,
            command: command.into(),
            seed,
            model: None,
            result,
        }
    }
}

/// Summary JSON as read from disk, before validation.
#[derive(Debug, Deserialize)]
pub struct SummaryRecord {
    pub n: u64,
    pub groups: Vec<GroupRecord>,
}

#[derive(Debug, Deserialize)]
pub struct GroupRecord {
    #[serde(rename = "N")]
    pub n_voters: usize,
    #[serde(rename = "T")]
    pub t: f64,
}

impl SummaryRecord {
    pub fn into_summary(self) -> curie_weiss::Result<SufficientSummary> {
        SufficientSummary::new(
            self.n,
            self.groups.into_iter().map(|g| (g.n_voters, g.t)).collect(),
        )
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| CliError::io(format!("{}: {e}", path.display()));
    let mut tmp = NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// Writes to `out` atomically, or to stdout when `out` is `None`.
pub fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::io(format!("stdout: {e}"))),
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("outputs serialize");
    bytes.push(b'\n');
    bytes
}

/// `votes.csv` → `votes.summary.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let stem = csv
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sample".into());
    csv.with_file_name(format!("{stem}.summary.json"))
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// Reads a JSON document that is either a bare `T` or an [`Envelope`] around one.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = read_text(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    let inner = match value.get("result") {
        Some(r) if value.get("tool").is_some() => r.clone(),
        _ => value,
    };
    serde_json::from_value(inner).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

pub fn write_configurations(rows: &[Vec<i8>], sizes: &[usize]) -> Vec<u8> {
    let mut out = Vec::new();
    let header: Vec<String> = sizes.iter().map(usize::to_string).collect();
    writeln!(out, "# sizes={}", header.join(",")).expect("write to memory");
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for row in rows {
        w.serialize(row).expect("write to memory");
    }
    w.into_inner().expect("flush to memory")
}

/// Parsed configuration file.
pub struct Configurations {
    pub declared_sizes: Option<Vec<usize>>,
    pub rows: Vec<Vec<i8>>,
}

fn parse_header(line: &str) -> Result<Option<Vec<usize>>, CliError> {
    let Some(rest) = line.trim_end().strip_prefix("# sizes=") else {
        return Ok(None);
    };
    rest.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::data(format!("line 1: bad size {s:?} in header")))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

pub fn read_configurations(path: &Path) -> Result<Configurations, CliError> {
    let text = read_text(path)?;
    let declared_sizes = match text.lines().next() {
        Some(first) => parse_header(first)?,
        None => None,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    let mut width = None;
    for record in reader.records() {
        let record = record.map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
        let line = record.position().map_or(0, |p| p.line());
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(CliError::data(format!(
                "line {line}: expected {expected} columns, found {}",
                record.len()
            )));
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(c, field)| match field {
                "1" => Ok(1i8),
                "-1" => Ok(-1i8),
                other => Err(CliError::data(format!(
                    "line {line}, column {}: expected -1 or 1, found {other:?}",
                    c + 1
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Configurations {
        declared_sizes,
        rows,
    })
}
