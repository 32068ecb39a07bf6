//! Day-level feature extraction.

mod extract;
mod matrix;
pub mod schema;

pub use extract::{
    build_matrix, cardio_features, extract_day, movement_features, respiratory_features,
    sedentary_bouts, sleep_features, stage_series, CardioDaily, FeatureConfig, PartialRow,
    SedentaryBout, StageCoding, MINUTES_PER_DAY,
};
pub use matrix::{DayFeatureRow, FeatureMatrix};
pub use schema::{display_name, feature_names};
