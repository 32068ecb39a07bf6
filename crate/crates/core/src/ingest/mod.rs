//! Parsing, validation, compliance filtering and calendar alignment of raw
//! cohort files.

mod compliance;
mod ema;
mod load;
mod phase;
mod resample;
mod types;

pub use compliance::{hr_compliance_filter, ComplianceReport, SubjectCompliance, DEFAULT_MIN_HR_READINGS};
pub use ema::{daily_ema_average, daily_ema_table};
pub use load::{
    format_timestamp, load_dataset, parse_timestamp, write_dataset, LoadOptions, BOX_SCORE_HEADER,
    SCHEMA_VERSION,
};
pub use phase::{assign_phase, Phase, PhaseConfig, PhaseId, PhaseSet};
pub use resample::{resample_samples, resample_stages, Aggregation};
pub use types::*;
