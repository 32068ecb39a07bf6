use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{Duration, NaiveDate, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::labels::BoxScore;

/// Minute-level wearable metrics delivered as timestamped samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Steps,
    Distance,
    Calories,
    HeartRate,
    Spo2,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Steps,
        Metric::Distance,
        Metric::Calories,
        Metric::HeartRate,
        Metric::Spo2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Steps => "steps",
            Metric::Distance => "distance",
            Metric::Calories => "calories",
            Metric::HeartRate => "heart_rate",
            Metric::Spo2 => "spo2",
        }
    }

    /// Range check applied to every parsed value.
    pub fn accepts(self, value: f64) -> bool {
        if !value.is_finite() {
            return false;
        }
        match self {
            Metric::HeartRate => (20.0..=250.0).contains(&value),
            Metric::Spo2 => (50.0..=100.0).contains(&value),
            Metric::Steps | Metric::Distance | Metric::Calories => value >= 0.0,
        }
    }

    /// Cumulative metrics are summed inside a minute, physiological ones averaged.
    pub fn is_cumulative(self) -> bool {
        matches!(self, Metric::Steps | Metric::Distance | Metric::Calories)
    }

    fn range_text(self) -> &'static str {
        match self {
            Metric::HeartRate => "[20, 250]",
            Metric::Spo2 => "[50, 100]",
            _ => ">= 0",
        }
    }

    pub(crate) fn range_message(self, value: f64) -> String {
        format!("{} value {value} outside {}", self.as_str(), self.range_text())
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Metric::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown metric '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// UTC seconds.
    pub timestamp: i64,
    pub value: f64,
}

/// One metric's samples for one subject, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleStream {
    pub subject_id: String,
    pub metric: Metric,
    pub samples: Vec<Sample>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DailyKind {
    HrvRmssdMs,
    RhrBpm,
    BreathingRateRpm,
    Vo2max,
}

impl DailyKind {
    pub const ALL: [DailyKind; 4] = [
        DailyKind::HrvRmssdMs,
        DailyKind::RhrBpm,
        DailyKind::BreathingRateRpm,
        DailyKind::Vo2max,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DailyKind::HrvRmssdMs => "hrv_rmssd_ms",
            DailyKind::RhrBpm => "rhr_bpm",
            DailyKind::BreathingRateRpm => "breathing_rate_rpm",
            DailyKind::Vo2max => "vo2max",
        }
    }
}

impl FromStr for DailyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DailyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown daily kind '{s}'")))
    }
}

/// Vendor daily summary value (one per subject, date and kind).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DailyScalar {
    pub date: NaiveDate,
    pub kind: DailyKind,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SleepStage {
    Deep,
    Light,
    Rem,
    Wake,
}

impl SleepStage {
    pub const ALL: [SleepStage; 4] = [
        SleepStage::Deep,
        SleepStage::Light,
        SleepStage::Rem,
        SleepStage::Wake,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SleepSegment {
    pub stage: SleepStage,
    pub start: i64,
    pub end: i64,
}

impl SleepSegment {
    pub fn duration_secs(&self) -> i64 {
        self.end - self.start
    }
}

/// A sleep session whose segments tile `[start, end)` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SleepEvent {
    pub start: i64,
    pub end: i64,
    pub segments: Vec<SleepSegment>,
}

impl SleepEvent {
    pub fn validate(&self) -> Result<(), String> {
        if self.end <= self.start {
            return Err("sleep event end must be after start".into());
        }
        let Some(first) = self.segments.first() else {
            return Err("sleep event has no segments".into());
        };
        if first.start != self.start {
            return Err("first segment does not begin at event start".into());
        }
        for seg in &self.segments {
            if seg.end <= seg.start {
                return Err("segment with non-positive duration".into());
            }
        }
        for pair in self.segments.windows(2) {
            if pair[0].end != pair[1].start {
                return Err("segments are not contiguous".into());
            }
        }
        if self.segments.last().map(|s| s.end) != Some(self.end) {
            return Err("last segment does not end at event end".into());
        }
        Ok(())
    }

    pub fn duration_secs(&self) -> i64 {
        self.end - self.start
    }

    pub fn stage_secs(&self, stage: SleepStage) -> i64 {
        self.segments
            .iter()
            .filter(|s| s.stage == stage)
            .map(SleepSegment::duration_secs)
            .sum()
    }
}

/// The ten fixed survey items, each scored 1-7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmaItem {
    InjuryRisk,
    Readiness,
    Recovery,
    Soreness,
    Tiredness,
    Mood,
    Stress,
    SleepQuality,
    Performance,
    Productivity,
}

impl EmaItem {
    pub const ALL: [EmaItem; 10] = [
        EmaItem::InjuryRisk,
        EmaItem::Readiness,
        EmaItem::Recovery,
        EmaItem::Soreness,
        EmaItem::Tiredness,
        EmaItem::Mood,
        EmaItem::Stress,
        EmaItem::SleepQuality,
        EmaItem::Performance,
        EmaItem::Productivity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EmaItem::InjuryRisk => "injury_risk",
            EmaItem::Readiness => "readiness",
            EmaItem::Recovery => "recovery",
            EmaItem::Soreness => "soreness",
            EmaItem::Tiredness => "tiredness",
            EmaItem::Mood => "mood",
            EmaItem::Stress => "stress",
            EmaItem::SleepQuality => "sleep_quality",
            EmaItem::Performance => "performance",
            EmaItem::Productivity => "productivity",
        }
    }

    /// Human-readable label used in correlation tables.
    pub fn label(self) -> &'static str {
        match self {
            EmaItem::InjuryRisk => "Perceived Injury Risk",
            EmaItem::Readiness => "Perceived Readiness",
            EmaItem::Recovery => "Perceived Recovery",
            EmaItem::Soreness => "Perceived Soreness",
            EmaItem::Tiredness => "Perceived Tiredness",
            EmaItem::Mood => "Perceived Mood",
            EmaItem::Stress => "Perceived Stress",
            EmaItem::SleepQuality => "Perceived Sleep Quality",
            EmaItem::Performance => "Perceived Performance",
            EmaItem::Productivity => "Perceived Productivity",
        }
    }
}

impl FromStr for EmaItem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        EmaItem::ALL
            .into_iter()
            .find(|i| i.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown EMA item '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmaResponse {
    pub timestamp: i64,
    pub item: EmaItem,
    pub score: u8,
}

/// A rejected row or unreadable file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: PathBuf,
    /// 1-based line number; 0 when the problem concerns the whole file.
    pub line: u64,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.file.display(), self.line, self.message)
    }
}

/// Everything known about one subject.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubjectData {
    pub streams: BTreeMap<Metric, Vec<Sample>>,
    pub daily: Vec<DailyScalar>,
    pub sleep: Vec<SleepEvent>,
    pub ema: Vec<EmaResponse>,
    pub box_scores: Vec<BoxScore>,
}

impl SubjectData {
    pub fn samples(&self, metric: Metric) -> &[Sample] {
        self.streams.get(&metric).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn daily_value(&self, date: NaiveDate, kind: DailyKind) -> Option<f64> {
        self.daily
            .iter()
            .find(|d| d.date == date && d.kind == kind)
            .map(|d| d.value)
    }

    /// Calendar days carrying any wearable data (samples, daily summaries or
    /// a sleep event attributed to that day).
    pub fn wearable_days(&self, clock: &DayClock) -> BTreeSet<NaiveDate> {
        let mut days = BTreeSet::new();
        for samples in self.streams.values() {
            for s in samples {
                days.insert(clock.date_of(s.timestamp));
            }
        }
        days.extend(self.daily.iter().map(|d| d.date));
        days.extend(self.sleep.iter().map(|e| clock.sleep_date(e)));
        days
    }

    /// Samples of `metric` that fall inside the local calendar day.
    pub fn samples_on(&self, metric: Metric, date: NaiveDate, clock: &DayClock) -> &[Sample] {
        let samples = self.samples(metric);
        let (lo, hi) = clock.day_bounds(date);
        let a = samples.partition_point(|s| s.timestamp < lo);
        let b = samples.partition_point(|s| s.timestamp < hi);
        &samples[a..b]
    }

    /// The main (longest) sleep event attributed to `date`.
    pub fn main_sleep_on(&self, date: NaiveDate, clock: &DayClock) -> Option<&SleepEvent> {
        self.sleep
            .iter()
            .filter(|e| clock.sleep_date(e) == date)
            .max_by(|a, b| {
                a.duration_secs()
                    .cmp(&b.duration_secs())
                    // earlier event wins ties
                    .then(b.start.cmp(&a.start))
            })
    }
}

/// Maps UTC timestamps to local calendar days using one fixed offset for the
/// whole cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DayClock {
    pub utc_offset_secs: i32,
}

impl DayClock {
    pub fn new(utc_offset_secs: i32) -> Self {
        DayClock { utc_offset_secs }
    }

    pub fn date_of(&self, timestamp: i64) -> NaiveDate {
        let local = timestamp + i64::from(self.utc_offset_secs);
        let days = local.div_euclid(86_400);
        NaiveDate::from_ymd_opt(1970, 1, 1).unwrap() + Duration::days(days)
    }

    /// UTC timestamp of local midnight starting `date`.
    pub fn day_start(&self, date: NaiveDate) -> i64 {
        let midnight = Utc.from_utc_datetime(&date.and_hms_opt(0, 0, 0).unwrap());
        midnight.timestamp() - i64::from(self.utc_offset_secs)
    }

    pub fn day_bounds(&self, date: NaiveDate) -> (i64, i64) {
        let start = self.day_start(date);
        (start, start + 86_400)
    }

    /// Sleep is attributed to the local date on which it ends.
    pub fn sleep_date(&self, event: &SleepEvent) -> NaiveDate {
        // `end` is exclusive; a session ending exactly at midnight belongs to
        // the day it covered.
        self.date_of(event.end - 1)
    }
}

/// All subjects of a cohort plus the diagnostics collected while loading.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SubjectDataset {
    pub clock: DayClock,
    pub subjects: BTreeMap<String, SubjectData>,
    pub diagnostics: Vec<Diagnostic>,
}

impl SubjectDataset {
    pub fn new(clock: DayClock) -> Self {
        SubjectDataset {
            clock,
            ..Default::default()
        }
    }

    pub fn subject(&self, id: &str) -> Option<&SubjectData> {
        self.subjects.get(id)
    }

    /// Total number of wearable subject-days.
    pub fn wearable_day_count(&self) -> usize {
        self.subjects
            .values()
            .map(|s| s.wearable_days(&self.clock).len())
            .sum()
    }
}
