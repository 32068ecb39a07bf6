use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::types::{DayClock, Metric, SubjectData, SubjectDataset};

/// 70% of 1440 minutes at 8.5 heart-rate readings per minute.
pub const DEFAULT_MIN_HR_READINGS: usize = 8768;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubjectCompliance {
    pub original_days: usize,
    pub retained_days: usize,
    pub excluded: Vec<NaiveDate>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplianceReport {
    pub min_readings: usize,
    pub subjects: BTreeMap<String, SubjectCompliance>,
}

impl ComplianceReport {
    pub fn total_original(&self) -> usize {
        self.subjects.values().map(|s| s.original_days).sum()
    }

    pub fn total_retained(&self) -> usize {
        self.subjects.values().map(|s| s.retained_days).sum()
    }
}

/// Drop every wearable subject-day with fewer than `min_readings` heart-rate
/// samples. Samples, daily summaries and sleep events of an excluded day are
/// all removed; survey responses and box scores are left untouched.
pub fn hr_compliance_filter(
    dataset: &SubjectDataset,
    min_readings: usize,
) -> (SubjectDataset, ComplianceReport) {
    let clock = dataset.clock;
    let mut filtered = SubjectDataset {
        clock,
        subjects: BTreeMap::new(),
        diagnostics: dataset.diagnostics.clone(),
    };
    let mut report = ComplianceReport {
        min_readings,
        subjects: BTreeMap::new(),
    };

    for (id, data) in &dataset.subjects {
        let days = data.wearable_days(&clock);
        let mut hr_counts: BTreeMap<NaiveDate, usize> = BTreeMap::new();
        for s in data.samples(Metric::HeartRate) {
            *hr_counts.entry(clock.date_of(s.timestamp)).or_default() += 1;
        }
        let keep: BTreeSet<NaiveDate> = days
            .iter()
            .copied()
            .filter(|d| hr_counts.get(d).copied().unwrap_or(0) >= min_readings)
            .collect();
        let excluded: Vec<NaiveDate> = days.difference(&keep).copied().collect();

        report.subjects.insert(
            id.clone(),
            SubjectCompliance {
                original_days: days.len(),
                retained_days: keep.len(),
                excluded,
            },
        );
        filtered
            .subjects
            .insert(id.clone(), retain_days(data, &keep, &clock));
    }
    (filtered, report)
}

fn retain_days(data: &SubjectData, keep: &BTreeSet<NaiveDate>, clock: &DayClock) -> SubjectData {
    SubjectData {
        streams: data
            .streams
            .iter()
            .map(|(metric, samples)| {
                let kept = samples
                    .iter()
                    .filter(|s| keep.contains(&clock.date_of(s.timestamp)))
                    .copied()
                    .collect();
                (*metric, kept)
            })
            .collect(),
        daily: data
            .daily
            .iter()
            .filter(|d| keep.contains(&d.date))
            .copied()
            .collect(),
        sleep: data
            .sleep
            .iter()
            .filter(|e| keep.contains(&clock.sleep_date(e)))
            .cloned()
            .collect(),
        ema: data.ema.clone(),
        box_scores: data.box_scores.clone(),
    }
}
