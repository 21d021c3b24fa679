//! Dataset records: construction from episodes, whole-record frame alignment,
//! stratified balancing and JSONL serialization.

mod io;
mod record;
mod rig;
mod sampling;

use thiserror::Error;

use crate::geometry::GeometryError;
use crate::simworld::SimError;

pub use io::{
    import_records, read_contexts, read_jsonl, write_contexts, write_jsonl, DatasetManifest,
    JsonlImporter, RecordImporter, TOOLKIT_VERSION,
};
pub use record::{
    align_record, align_scene_context, command_for_yaw_change, naive_relabel, record_from_episode,
    Command, EpisodeRecord, HistoryFrame, NoiseModel, Provenance, RecordOptions, SceneContext,
    CONTEXT_WINDOW,
};
pub use rig::{CameraRig, RigJitter};
pub use sampling::{
    balance_report, format_count_pct, max_feasible_size, stratified_sample, BalanceReport, BalanceRow, Dimension,
    SampleResult, Shortfall, StratumAllocation, StratumLabels, StratumQuota, Stratify,
};

#[derive(Debug, Error)]
pub enum CurationError {
    #[error("line {line}: parse error: {message}")]
    Parse { line: usize, message: String },
    #[error("{}{field}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Validation {
        line: Option<usize>,
        field: String,
        message: String,
    },
    #[error("invalid quota: {0}")]
    InvalidQuota(String),
    #[error("unknown quota preset {0:?}")]
    UnknownPreset(String),
    #[error("requested {requested} records from a pool of {available}")]
    PoolTooSmall { requested: usize, available: usize },
    #[error("episode unusable: {0}")]
    Episode(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CurationError {
    pub(crate) fn field(field: &str, message: impl Into<String>) -> Self {
        CurationError::Validation {
            line: None,
            field: field.to_string(),
            message: message.into(),
        }
    }
}
