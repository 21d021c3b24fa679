//! JSONL datasets, scene-context sidecars and manifests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::record::{EpisodeRecord, SceneContext};
use super::sampling::{Dimension, Stratify};
use super::CurationError;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes one record per line. Every record is validated first; nothing is
/// written if any record is invalid.
pub fn write_jsonl(path: &Path, records: &[EpisodeRecord]) -> Result<(), CurationError> {
    for (i, r) in records.iter().enumerate() {
        r.validate().map_err(|e| with_line(e, i + 1))?;
    }
    write_lines(path, records)
}

/// Reads a dataset, reporting the 1-based line of the first bad record.
pub fn read_jsonl(path: &Path) -> Result<Vec<EpisodeRecord>, CurationError> {
    let out: Vec<EpisodeRecord> = read_lines(path)?;
    for (i, r) in out.iter().enumerate() {
        r.validate().map_err(|e| with_line(e, i + 1))?;
    }
    Ok(out)
}

pub fn write_contexts(path: &Path, contexts: &[SceneContext]) -> Result<(), CurationError> {
    write_lines(path, contexts)
}

pub fn read_contexts(path: &Path) -> Result<Vec<SceneContext>, CurationError> {
    read_lines(path)
}

fn with_line(e: CurationError, line: usize) -> CurationError {
    match e {
        CurationError::Validation { field, message, .. } => CurationError::Validation {
            line: Some(line),
            field,
            message,
        },
        other => other,
    }
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> Result<(), CurationError> {
    let mut w = BufWriter::new(File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| CurationError::Io(e.into()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CurationError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| CurationError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Summary written next to a dataset. Contains no timestamps so identical
/// runs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub toolkit_version: String,
    pub total: usize,
    /// Joint time/weather/maneuver/provenance strata, keyed `day/sunny/turn/sim`.
    pub strata: BTreeMap<String, usize>,
    /// Marginal counts per dimension.
    pub dimensions: BTreeMap<String, BTreeMap<String, usize>>,
    pub provenance: BTreeMap<String, usize>,
    pub categories: BTreeMap<String, usize>,
    pub seeds: Vec<u64>,
}

impl DatasetManifest {
    pub fn from_records(records: &[EpisodeRecord], seeds: Vec<u64>) -> Self {
        let mut strata = BTreeMap::new();
        let mut dimensions: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        let mut provenance = BTreeMap::new();
        let mut categories = BTreeMap::new();
        let joint = [Dimension::Time, Dimension::Weather, Dimension::Maneuver, Dimension::Provenance];
        for r in records {
            let key: Vec<&str> = joint.iter().map(|d| r.label(*d)).collect();
            *strata.entry(key.join("/")).or_insert(0) += 1;
            for dim in [
                Dimension::Time,
                Dimension::Weather,
                Dimension::Maneuver,
                Dimension::Difficulty,
            ] {
                *dimensions
                    .entry(dim.name().to_string())
                    .or_default()
                    .entry(r.label(dim).to_string())
                    .or_insert(0) += 1;
            }
            *provenance.entry(r.provenance.as_str().to_string()).or_insert(0) += 1;
            *categories.entry(r.scenario.to_string()).or_insert(0) += 1;
        }
        DatasetManifest {
            toolkit_version: TOOLKIT_VERSION.to_string(),
            total: records.len(),
            strata,
            dimensions,
            provenance,
            categories,
            seeds,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), CurationError> {
        let s = serde_json::to_string_pretty(self).map_err(|e| CurationError::Io(e.into()))?;
        std::fs::write(path, s + "\n")?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, CurationError> {
        let s = std::fs::read_to_string(path)?;
        serde_json::from_str(&s).map_err(|e| CurationError::Parse {
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Conventional sibling path: `data.jsonl` -> `data.manifest.json`.
    pub fn sibling_path(dataset: &Path) -> PathBuf {
        dataset.with_extension("manifest.json")
    }
}

/// Hook for bringing external records into the toolkit. Records must
/// already follow the `EpisodeRecord` schema; they are validated on import.
pub trait RecordImporter {
    fn import(&self, source: &Path) -> Result<Vec<EpisodeRecord>, CurationError>;
}

/// Reads records written in the toolkit's own JSONL format.
#[derive(Debug, Clone, Copy, Default)]
pub struct JsonlImporter;

impl RecordImporter for JsonlImporter {
    fn import(&self, source: &Path) -> Result<Vec<EpisodeRecord>, CurationError> {
        read_jsonl(source)
    }
}

pub fn import_records<I: RecordImporter + ?Sized>(
    importer: &I,
    source: &Path,
) -> Result<Vec<EpisodeRecord>, CurationError> {
    importer.import(source)
}
