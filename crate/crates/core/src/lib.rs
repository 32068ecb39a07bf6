//! Wearable-stream feature engineering and season-performance modelling for
//! volleyball cohorts.
//!
//! The crate is organised as a pipeline:
//!
//! - [`ingest`]: parse per-subject files, filter non-compliant days, assign
//!   season phases.
//! - [`signal`]: DFA, Hurst exponent, entropies, co-occurrence statistics and
//!   moments on minute series.
//! - [`features`]: one subject-day of streams to a fixed-schema feature row.
//! - [`labels`]: hit percentage, season averages and the good/poor class.
//! - [`select`], [`preprocess`], [`models`], [`eval`]: fold-local feature
//!   selection, imputation/scaling/SMOTE, the classifier families and
//!   bootstrapped leave-one-subject-out evaluation.
//! - [`stats`]: Spearman tables, OLS trends and the special functions they need.
//! - [`synth`]: synthetic cohorts with planted effects.

pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod labels;
pub mod models;
pub mod preprocess;
pub mod rng;
pub mod select;
pub mod signal;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
