use super::types::{Sample, SleepSegment, SleepStage};
use crate::signal::MinuteSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Mean,
    Sum,
}

/// Bucket samples in `[start, start + 60 * minutes)` into one-minute cells.
/// Cells without a sample are flagged missing.
pub fn resample_samples(
    samples: &[Sample],
    start: i64,
    minutes: usize,
    aggregation: Aggregation,
) -> MinuteSeries {
    let mut sums = vec![0.0; minutes];
    let mut counts = vec![0usize; minutes];
    let end = start + 60 * minutes as i64;
    for s in samples.iter().filter(|s| s.timestamp >= start && s.timestamp < end) {
        let i = ((s.timestamp - start) / 60) as usize;
        sums[i] += s.value;
        counts[i] += 1;
    }
    let values = sums
        .iter()
        .zip(&counts)
        .map(|(&sum, &n)| match (n, aggregation) {
            (0, _) => 0.0,
            (_, Aggregation::Sum) => sum,
            (n, Aggregation::Mean) => sum / n as f64,
        })
        .collect();
    let missing = counts.iter().map(|&n| n == 0).collect();
    MinuteSeries::new(values, missing)
}

/// Stage occupying each minute of `[start, start + 60 * minutes)`, decided by
/// which segment covers the minute's midpoint.
pub fn resample_stages(
    segments: &[SleepSegment],
    start: i64,
    minutes: usize,
) -> Vec<Option<SleepStage>> {
    let mut out = vec![None; minutes];
    for seg in segments {
        // first minute whose midpoint is >= seg.start
        let first = ((seg.start - start - 30) as f64 / 60.0).ceil().max(0.0) as i64;
        let mut i = first;
        while i < minutes as i64 {
            let mid = start + 60 * i + 30;
            if mid >= seg.end {
                break;
            }
            if mid >= seg.start {
                out[i as usize] = Some(seg.stage);
            }
            i += 1;
        }
    }
    out
}
