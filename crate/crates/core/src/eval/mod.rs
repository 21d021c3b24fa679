//! Open-loop planning metrics.

mod footprint;
mod metrics;
mod report;

use thiserror::Error;

use crate::simworld::SimError;

pub use footprint::{obb_overlap, ObbFootprint};
pub use metrics::{
    boundary_rate, collision_rate, context_grid, evaluate, evaluate_record, first_collision,
    first_violation, footprint_on_road, l2_metric, slice_labels, CellCheck, EvalSettings,
    EventRate, HorizonValues, MetricsReport, RecordOutcome, SliceMetrics, StepCounters,
    HORIZON_NAMES, HORIZON_POINTS, SLICES,
};
pub use report::{format_report, format_table, svg_overlay};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}
