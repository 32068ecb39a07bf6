//! Numerical algorithms on uniformly sampled series.
//!
//! Every function takes the present samples only; callers drop missing
//! minutes (concatenating the remaining values) via [`MinuteSeries::present`].

mod cooccurrence;
mod dfa;
mod entropy;
mod moments;

pub use cooccurrence::{cooccurrence_matrix, cooccurrence_stats, quantize, CooccurrenceStats};
pub use dfa::{dfa, dfa_fluctuation, hurst_from_dfa, DfaResult, InsufficientData, DFA_WINDOWS};
pub use entropy::{approximate_entropy, sample_entropy};
pub use moments::{moment_stats, MomentStats};

/// A one-minute grid with a missingness mask.
#[derive(Debug, Clone, PartialEq)]
pub struct MinuteSeries {
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
    pub step_minutes: u32,
}

impl MinuteSeries {
    pub fn new(values: Vec<f64>, missing: Vec<bool>) -> Self {
        assert_eq!(values.len(), missing.len(), "mask length must equal values length");
        MinuteSeries {
            values,
            missing,
            step_minutes: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn all_missing(&self) -> bool {
        self.missing.iter().all(|&m| m)
    }

    /// Present values in time order, gaps removed.
    pub fn present(&self) -> Vec<f64> {
        self.values
            .iter()
            .zip(&self.missing)
            .filter(|(_, &m)| !m)
            .map(|(&v, _)| v)
            .collect()
    }

    pub fn get(&self, i: usize) -> Option<f64> {
        (!self.missing[i]).then_some(self.values[i])
    }
}

/// Population standard deviation.
pub(crate) fn population_std(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt()
}
