use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{DayFeatureRow, FeatureMatrix};
use super::schema::{self, *};
use crate::ingest::{
    resample_samples, resample_stages, Aggregation, DailyKind, DayClock, Metric, PhaseConfig,
    PhaseSet, Sample, SleepEvent, SleepStage, SubjectData, SubjectDataset,
};
use crate::signal::{
    approximate_entropy, cooccurrence_stats, dfa, dfa_fluctuation, moment_stats, sample_entropy,
    MinuteSeries, DFA_WINDOWS,
};

pub const MINUTES_PER_DAY: usize = 1440;

/// Numeric value of each sleep stage in the DFA input series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StageCoding {
    pub wake: f64,
    pub rem: f64,
    pub light: f64,
    pub deep: f64,
}

impl Default for StageCoding {
    fn default() -> Self {
        StageCoding {
            wake: 0.0,
            rem: 1.0,
            light: 2.0,
            deep: 3.0,
        }
    }
}

impl StageCoding {
    pub fn code(&self, stage: SleepStage) -> f64 {
        match stage {
            SleepStage::Wake => self.wake,
            SleepStage::Rem => self.rem,
            SleepStage::Light => self.light,
            SleepStage::Deep => self.deep,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Minimum run of zero-step minutes that counts as a sedentary bout.
    pub bout_min: usize,
    /// Lower step bounds of activity levels 1 and 2 (level 0 is below the first).
    pub level_bounds: [f64; 2],
    pub entropy_m: usize,
    pub entropy_r: f64,
    pub cooccurrence_levels: usize,
    pub cooccurrence_lag: usize,
    pub stage_coding: StageCoding,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            bout_min: 30,
            level_bounds: [34.0, 68.0],
            entropy_m: 2,
            entropy_r: 0.2,
            cooccurrence_levels: 8,
            cooccurrence_lag: 1,
            stage_coding: StageCoding::default(),
        }
    }
}

impl FeatureConfig {
    pub fn activity_level(&self, steps: f64) -> u8 {
        if steps < self.level_bounds[0] {
            0
        } else if steps < self.level_bounds[1] {
            1
        } else {
            2
        }
    }
}

/// Named values produced by one feature family; absent names are missing.
pub type PartialRow = BTreeMap<&'static str, f64>;

fn put(row: &mut PartialRow, name: &'static str, value: Option<f64>) {
    if let Some(v) = value.filter(|v| v.is_finite()) {
        row.insert(name, v);
    }
}

fn population_std(x: &[f64]) -> Option<f64> {
    if x.is_empty() {
        return None;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    Some((x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt())
}

fn mean(x: &[f64]) -> Option<f64> {
    (!x.is_empty()).then(|| x.iter().sum::<f64>() / x.len() as f64)
}

/// A maximal run of zero-step minutes and the activity level that ended it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SedentaryBout {
    pub start: usize,
    pub len: usize,
    /// Level of the first present non-zero minute right after the bout.
    pub break_level: Option<u8>,
}

pub fn sedentary_bouts(steps: &MinuteSeries, cfg: &FeatureConfig) -> Vec<SedentaryBout> {
    let n = steps.len();
    let mut bouts = Vec::new();
    let mut i = 0;
    while i < n {
        if steps.get(i) == Some(0.0) {
            let start = i;
            while i < n && steps.get(i) == Some(0.0) {
                i += 1;
            }
            let len = i - start;
            if len >= cfg.bout_min {
                let break_level = (i < n)
                    .then(|| steps.get(i))
                    .flatten()
                    .map(|v| cfg.activity_level(v));
                bouts.push(SedentaryBout {
                    start,
                    len,
                    break_level,
                });
            }
        } else {
            i += 1;
        }
    }
    bouts
}

pub fn movement_features(
    steps: &MinuteSeries,
    distance: &MinuteSeries,
    calories: &MinuteSeries,
    cfg: &FeatureConfig,
) -> PartialRow {
    let mut row = PartialRow::new();
    if !distance.all_missing() {
        put(&mut row, DISTANCE_TOTAL, Some(distance.present().iter().sum()));
    }
    if !calories.all_missing() {
        put(&mut row, CALORIES_TOTAL, Some(calories.present().iter().sum()));
    }
    if steps.all_missing() {
        return row;
    }
    let present = steps.present();
    put(&mut row, STEPS_TOTAL, Some(present.iter().sum()));

    let minutes = f64::from(steps.step_minutes);
    let mut levels = [0usize; 3];
    for &v in &present {
        levels[usize::from(cfg.activity_level(v))] += 1;
    }
    put(&mut row, TOTAL_SEDENTARY_TIME, Some(levels[0] as f64 * minutes));
    put(&mut row, LEVEL1_MINUTES, Some(levels[1] as f64 * minutes));
    put(&mut row, LEVEL2_MINUTES, Some(levels[2] as f64 * minutes));

    let bouts = sedentary_bouts(steps, cfg);
    let lengths: Vec<f64> = bouts.iter().map(|b| b.len as f64 * minutes).collect();
    let normalized: Vec<f64> = bouts
        .iter()
        .map(|b| b.len as f64 / steps.len() as f64)
        .collect();
    let breaks: Vec<f64> = bouts
        .iter()
        .filter_map(|b| b.break_level.map(f64::from))
        .collect();
    put(&mut row, SEDENTARY_BOUT_COUNT, Some(bouts.len() as f64));
    put(&mut row, SEDENTARY_BOUT_MEAN, mean(&lengths));
    put(&mut row, SEDENTARY_BOUT_STD, population_std(&normalized));
    put(&mut row, SEDENTARY_BREAK_TOTAL, Some(breaks.len() as f64));
    put(&mut row, SEDENTARY_BREAK_MEAN, mean(&breaks));
    put(&mut row, SEDENTARY_BREAK_STD, population_std(&breaks));
    row
}

/// Stage series of a sleep event on a one-minute grid starting at the event.
pub fn stage_series(event: &SleepEvent, coding: &StageCoding) -> MinuteSeries {
    let minutes = ((event.duration_secs() + 59) / 60) as usize;
    let stages = resample_stages(&event.segments, event.start, minutes);
    let values = stages
        .iter()
        .map(|s| s.map(|s| coding.code(s)).unwrap_or(0.0))
        .collect();
    let missing = stages.iter().map(Option::is_none).collect();
    MinuteSeries::new(values, missing)
}

/// `ln F(n)` for each named window, missing when F(n) is zero or undefined.
fn log_dfa(row: &mut PartialRow, names: &[&'static str; 6], series: &[f64]) {
    for (name, &n) in names.iter().zip(DFA_WINDOWS.iter()) {
        let value = dfa_fluctuation(series, n)
            .ok()
            .filter(|f| *f > 0.0)
            .map(f64::ln);
        put(row, name, value);
    }
}

pub fn sleep_features(event: Option<&SleepEvent>, cfg: &FeatureConfig) -> PartialRow {
    let mut row = PartialRow::new();
    let Some(event) = event else {
        return row;
    };
    let minutes = |secs: i64| secs as f64 / 60.0;
    let wake = minutes(event.stage_secs(SleepStage::Wake));
    let in_bed = minutes(event.duration_secs());
    put(&mut row, DEEP_SLEEP_MINUTES, Some(minutes(event.stage_secs(SleepStage::Deep))));
    put(&mut row, LIGHT_SLEEP_MINUTES, Some(minutes(event.stage_secs(SleepStage::Light))));
    put(&mut row, REM_SLEEP_MINUTES, Some(minutes(event.stage_secs(SleepStage::Rem))));
    put(&mut row, WAKE_MINUTES, Some(wake));
    put(&mut row, TOTAL_SLEEP_TIME, Some(in_bed - wake));
    put(&mut row, TIME_IN_BED, Some(in_bed));
    put(&mut row, SLEEP_EFFICIENCY, Some(100.0 * (in_bed - wake) / in_bed));

    let series = stage_series(event, &cfg.stage_coding).present();
    log_dfa(&mut row, &DFA_SLEEP, &series);
    put(&mut row, SLEEP_HURST, dfa(&series, &DFA_WINDOWS).map(|r| r.hurst));
    row
}

/// Daily summaries used by the cardiovascular family, including the previous
/// calendar day's values for day-over-day changes.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CardioDaily {
    pub hrv: Option<f64>,
    pub rhr: Option<f64>,
    pub hrv_prev: Option<f64>,
    pub rhr_prev: Option<f64>,
}

pub fn cardio_features(
    hr_samples: &[Sample],
    hr_minutes: &MinuteSeries,
    daily: &CardioDaily,
    cfg: &FeatureConfig,
) -> PartialRow {
    let mut row = PartialRow::new();
    put(&mut row, HRV, daily.hrv);
    put(&mut row, RHR, daily.rhr);
    put(&mut row, HRV_CHANGE, daily.hrv.zip(daily.hrv_prev).map(|(a, b)| a - b));
    put(&mut row, RHR_CHANGE, daily.rhr.zip(daily.rhr_prev).map(|(a, b)| a - b));

    let raw: Vec<f64> = hr_samples.iter().map(|s| s.value).collect();
    if let Some(m) = moment_stats(&raw) {
        put(&mut row, HR_MEAN, Some(m.mean));
        put(&mut row, HR_STD, Some(m.std));
        put(&mut row, HR_MIN, Some(m.min));
        put(&mut row, HR_MAX, Some(m.max));
        put(&mut row, HR_MEDIAN, Some(m.median));
        put(&mut row, HR_SKEWNESS, m.skewness);
        put(&mut row, HR_KURTOSIS, m.kurtosis);
    }

    let series = hr_minutes.present();
    log_dfa(&mut row, &DFA_HR, &series);
    put(&mut row, HR_HURST, dfa(&series, &DFA_WINDOWS).map(|r| r.hurst));
    if let Some(c) = cooccurrence_stats(&series, cfg.cooccurrence_levels, cfg.cooccurrence_lag) {
        put(&mut row, HR_INERTIA, Some(c.inertia));
        put(&mut row, HR_LOCAL_HOMOGENEITY, Some(c.local_homogeneity));
        put(&mut row, HR_CORRELATION, c.correlation);
        put(&mut row, HR_ENERGY, Some(c.energy));
    }
    put(&mut row, HR_SAMPLE_ENTROPY, sample_entropy(&series, cfg.entropy_m, cfg.entropy_r));
    put(
        &mut row,
        HR_APPROXIMATE_ENTROPY,
        approximate_entropy(&series, cfg.entropy_m, cfg.entropy_r),
    );
    row
}

pub fn respiratory_features(
    spo2_minutes: &MinuteSeries,
    breathing_rate: Option<f64>,
    vo2max: Option<f64>,
) -> PartialRow {
    let mut row = PartialRow::new();
    put(&mut row, BREATHING_RATE, breathing_rate);
    put(&mut row, VO2MAX, vo2max);
    let series = spo2_minutes.present();
    if let Some(m) = moment_stats(&series) {
        put(&mut row, SPO2_MEAN, Some(m.mean));
        put(&mut row, SPO2_STD, Some(m.std));
        put(&mut row, SPO2_MIN, Some(m.min));
        put(&mut row, SPO2_MAX, Some(m.max));
        put(&mut row, SPO2_MEDIAN, Some(m.median));
        put(&mut row, SPO2_SKEWNESS, m.skewness);
        put(&mut row, SPO2_KURTOSIS, m.kurtosis);
    }
    log_dfa(&mut row, &DFA_SPO2, &series);
    put(&mut row, SPO2_HURST, dfa(&series, &DFA_WINDOWS).map(|r| r.hurst));
    row
}

/// All features of one subject-day, aligned with [`schema::feature_names`].
pub fn extract_day(
    data: &SubjectData,
    date: NaiveDate,
    clock: &DayClock,
    cfg: &FeatureConfig,
) -> Vec<Option<f64>> {
    let start = clock.day_start(date);
    let grid = |metric: Metric| {
        let aggregation = if metric.is_cumulative() {
            Aggregation::Sum
        } else {
            Aggregation::Mean
        };
        resample_samples(
            data.samples_on(metric, date, clock),
            start,
            MINUTES_PER_DAY,
            aggregation,
        )
    };

    let mut row = movement_features(
        &grid(Metric::Steps),
        &grid(Metric::Distance),
        &grid(Metric::Calories),
        cfg,
    );
    row.extend(sleep_features(data.main_sleep_on(date, clock), cfg));

    let prev = date.pred_opt();
    let daily = CardioDaily {
        hrv: data.daily_value(date, DailyKind::HrvRmssdMs),
        rhr: data.daily_value(date, DailyKind::RhrBpm),
        hrv_prev: prev.and_then(|d| data.daily_value(d, DailyKind::HrvRmssdMs)),
        rhr_prev: prev.and_then(|d| data.daily_value(d, DailyKind::RhrBpm)),
    };
    row.extend(cardio_features(
        data.samples_on(Metric::HeartRate, date, clock),
        &grid(Metric::HeartRate),
        &daily,
        cfg,
    ));
    row.extend(respiratory_features(
        &grid(Metric::Spo2),
        data.daily_value(date, DailyKind::BreathingRateRpm),
        data.daily_value(date, DailyKind::Vo2max),
    ));

    schema::feature_names()
        .into_iter()
        .map(|name| row.get(name).copied())
        .collect()
}

/// One row per wearable subject-day whose phase is in `phases`, ordered by
/// subject then date.
pub fn build_matrix(
    dataset: &SubjectDataset,
    phase_config: &PhaseConfig,
    phases: &PhaseSet,
    cfg: &FeatureConfig,
) -> FeatureMatrix {
    let names: Vec<String> = schema::feature_names().into_iter().map(String::from).collect();
    let clock = dataset.clock;
    let per_subject: Vec<Vec<DayFeatureRow>> = dataset
        .subjects
        .par_iter()
        .map(|(id, data)| {
            data.wearable_days(&clock)
                .into_iter()
                .filter_map(|date| {
                    let phase = phase_config.assign(date).filter(|p| phases.contains(*p))?;
                    Some((date, phase))
                })
                .collect::<Vec<_>>()
                .into_par_iter()
                .map(|(date, phase)| DayFeatureRow {
                    subject_id: id.clone(),
                    date,
                    phase,
                    values: extract_day(data, date, &clock, cfg),
                })
                .collect()
        })
        .collect();
    FeatureMatrix {
        feature_names: names,
        rows: per_subject.into_iter().flatten().collect(),
    }
}
