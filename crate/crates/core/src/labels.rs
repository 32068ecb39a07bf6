//! Hit percentage, season averages and the binary performance class.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::ingest::SubjectDataset;

pub const DEFAULT_HIT_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Outside,
    Middle,
    Setter,
    Libero,
    Other,
}

impl Position {
    pub const ALL: [Position; 5] = [
        Position::Outside,
        Position::Middle,
        Position::Setter,
        Position::Libero,
        Position::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Position::Outside => "outside",
            Position::Middle => "middle",
            Position::Setter => "setter",
            Position::Libero => "libero",
            Position::Other => "other",
        }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Position {
    type Err = Error;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "outside" => Ok(Position::Outside),
            "middle" => Ok(Position::Middle),
            "setter" => Ok(Position::Setter),
            "libero" => Ok(Position::Libero),
            "other" | "opposite" => Ok(Position::Other),
            other => Err(Error::Parse(format!("unknown position '{other}'"))),
        }
    }
}

/// Official statistics of one subject in one match.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxScore {
    pub date: NaiveDate,
    pub kills: u32,
    pub errors: u32,
    pub attempts: u32,
    pub points: u32,
    pub digs: u32,
    pub assists: u32,
    pub service_aces: u32,
    pub service_errors: u32,
    pub reception_errors: u32,
    pub block_solos: u32,
    pub block_errors: u32,
    pub ball_handling_errors: u32,
    pub total_attempts: u32,
    pub position: Position,
}

impl BoxScore {
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.kills > self.attempts {
            return Err(format!("kills {} exceed attempts {}", self.kills, self.attempts));
        }
        if self.errors > self.attempts {
            return Err(format!(
                "errors {} exceed attempts {}",
                self.errors, self.attempts
            ));
        }
        Ok(())
    }

    pub fn hit_percentage(&self) -> Option<f64> {
        hit_percentage(self.kills, self.errors, self.attempts)
    }

    /// The non-hitting box-score metrics, by column name.
    pub fn metric(&self, name: &str) -> Option<f64> {
        let v = match name {
            "kills" => self.kills,
            "errors" => self.errors,
            "attempts" => self.attempts,
            "points" => self.points,
            "digs" => self.digs,
            "assists" => self.assists,
            "service_aces" => self.service_aces,
            "service_errors" => self.service_errors,
            "reception_errors" => self.reception_errors,
            "block_solos" => self.block_solos,
            "block_errors" => self.block_errors,
            "ball_handling_errors" => self.ball_handling_errors,
            "total_attempts" => self.total_attempts,
            _ => return None,
        };
        Some(f64::from(v))
    }
}

pub const BOX_SCORE_METRICS: [&str; 13] = [
    "kills",
    "errors",
    "attempts",
    "points",
    "digs",
    "assists",
    "service_aces",
    "service_errors",
    "reception_errors",
    "block_solos",
    "block_errors",
    "ball_handling_errors",
    "total_attempts",
];

/// `(kills - errors) / attempts`; `None` when there were no attempts.
pub fn hit_percentage(kills: u32, errors: u32, attempts: u32) -> Option<f64> {
    if attempts == 0 {
        return None;
    }
    Some((f64::from(kills) - f64::from(errors)) / f64::from(attempts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchWeighting {
    /// Every match with at least one attempt counts once.
    #[default]
    PerMatch,
    /// Pooled `(sum kills - sum errors) / sum attempts`.
    PerAttempt,
}

pub fn season_average(scores: &[BoxScore], weighting: MatchWeighting) -> Option<f64> {
    match weighting {
        MatchWeighting::PerMatch => {
            let hits: Vec<f64> = scores.iter().filter_map(BoxScore::hit_percentage).collect();
            if hits.is_empty() {
                None
            } else {
                Some(hits.iter().sum::<f64>() / hits.len() as f64)
            }
        }
        MatchWeighting::PerAttempt => {
            let (k, e, a) = scores.iter().fold((0u64, 0u64, 0u64), |acc, s| {
                (
                    acc.0 + u64::from(s.kills),
                    acc.1 + u64::from(s.errors),
                    acc.2 + u64::from(s.attempts),
                )
            });
            (a > 0).then(|| (k as f64 - e as f64) / a as f64)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerformanceClass {
    Good = 0,
    Poor = 1,
}

impl PerformanceClass {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(PerformanceClass::Good),
            1 => Some(PerformanceClass::Poor),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelConfig {
    pub threshold: f64,
    /// Class given to an average exactly at the threshold.
    pub tie_class: PerformanceClass,
    pub weighting: MatchWeighting,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            threshold: DEFAULT_HIT_THRESHOLD,
            tie_class: PerformanceClass::Poor,
            weighting: MatchWeighting::PerMatch,
        }
    }
}

/// Above the threshold is good, below is poor, a tie is poor.
pub fn binarize(season_avg: f64, threshold: f64) -> PerformanceClass {
    binarize_with(season_avg, threshold, PerformanceClass::Poor)
}

pub fn binarize_with(season_avg: f64, threshold: f64, tie: PerformanceClass) -> PerformanceClass {
    if season_avg > threshold {
        PerformanceClass::Good
    } else if season_avg < threshold {
        PerformanceClass::Poor
    } else {
        tie
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonLabel {
    pub subject_id: String,
    pub season_hit_avg: f64,
    pub class: PerformanceClass,
}

/// Season labels for every subject with at least one valid match.
pub fn season_labels(dataset: &SubjectDataset, config: &LabelConfig) -> BTreeMap<String, SeasonLabel> {
    dataset
        .subjects
        .iter()
        .filter_map(|(id, data)| {
            let avg = season_average(&data.box_scores, config.weighting)?;
            Some((
                id.clone(),
                SeasonLabel {
                    subject_id: id.clone(),
                    season_hit_avg: avg,
                    class: binarize_with(avg, config.threshold, config.tie_class),
                },
            ))
        })
        .collect()
}

pub fn write_labels_csv<W: Write>(labels: &BTreeMap<String, SeasonLabel>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subject", "season_hit_avg", "class"])?;
    for label in labels.values() {
        w.write_record([
            label.subject_id.clone(),
            label.season_hit_avg.to_string(),
            label.class.code().to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<labels>", e))?;
    Ok(())
}

pub fn read_labels_csv<R: Read>(input: R) -> Result<BTreeMap<String, SeasonLabel>> {
    let mut r = csv::Reader::from_reader(input);
    let mut labels = BTreeMap::new();
    for record in r.records() {
        let record = record?;
        let parse_err = |what: &str| Error::Parse(format!("labels: bad {what} in {record:?}"));
        let subject = record.get(0).ok_or_else(|| parse_err("subject"))?.to_string();
        let avg: f64 = record
            .get(1)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| parse_err("season_hit_avg"))?;
        let class = record
            .get(2)
            .and_then(|v| v.parse::<u8>().ok())
            .and_then(PerformanceClass::from_code)
            .ok_or_else(|| parse_err("class"))?;
        labels.insert(
            subject.clone(),
            SeasonLabel {
                subject_id: subject,
                season_hit_avg: avg,
                class,
            },
        );
    }
    Ok(labels)
}

/// Feature rows joined with their subject's class (0 good, 1 poor).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub matrix: FeatureMatrix,
    pub classes: Vec<u8>,
}

impl LabeledMatrix {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn subjects(&self) -> Vec<&str> {
        self.matrix.rows.iter().map(|r| r.subject_id.as_str()).collect()
    }

    /// Row counts per class code.
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0usize; 2];
        for &c in &self.classes {
            counts[usize::from(c)] += 1;
        }
        counts
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelReport {
    /// Unlabelled subjects and how many rows each lost.
    pub dropped: Vec<(String, usize)>,
}

pub fn label_matrix(
    matrix: &FeatureMatrix,
    labels: &BTreeMap<String, SeasonLabel>,
) -> (LabeledMatrix, LabelReport) {
    let mut kept = FeatureMatrix::empty(matrix.feature_names.clone());
    let mut classes = Vec::new();
    let mut dropped: BTreeMap<String, usize> = BTreeMap::new();
    for row in &matrix.rows {
        match labels.get(&row.subject_id) {
            Some(label) => {
                kept.rows.push(row.clone());
                classes.push(label.class.code());
            }
            None => *dropped.entry(row.subject_id.clone()).or_default() += 1,
        }
    }
    (
        LabeledMatrix {
            matrix: kept,
            classes,
        },
        LabelReport {
            dropped: dropped.into_iter().collect(),
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::DayFeatureRow;

    fn score(kills: u32, errors: u32, attempts: u32) -> BoxScore {
        BoxScore {
            date: NaiveDate::from_ymd_opt(2023, 2, 1).unwrap(),
            kills,
            errors,
            attempts,
            points: 0,
            digs: 0,
            assists: 0,
            service_aces: 0,
            service_errors: 0,
            reception_errors: 0,
            block_solos: 0,
            block_errors: 0,
            ball_handling_errors: 0,
            total_attempts: attempts,
            position: Position::Outside,
        }
    }

    #[test]
    fn hit_percentage_examples() {
        assert_eq!(hit_percentage(10, 2, 20), Some(0.4));
        assert_eq!(hit_percentage(0, 0, 5), Some(0.0));
        assert_eq!(hit_percentage(0, 4, 4), Some(-1.0));
        assert_eq!(hit_percentage(3, 1, 0), None);
    }

    #[test]
    fn season_average_examples() {
        // 0.2 and 0.4
        let s = [score(3, 1, 10), score(5, 1, 10)];
        assert!((season_average(&s, MatchWeighting::PerMatch).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(season_average(&[score(1, 0, 4)], MatchWeighting::PerMatch), Some(0.25));
        assert_eq!(season_average(&[score(0, 0, 0)], MatchWeighting::PerMatch), None);
        assert_eq!(season_average(&[], MatchWeighting::PerMatch), None);
    }

    #[test]
    fn per_attempt_weighting_pools_counts() {
        let s = [score(2, 0, 4), score(0, 0, 16)];
        assert_eq!(season_average(&s, MatchWeighting::PerAttempt), Some(0.1));
        assert_eq!(season_average(&s, MatchWeighting::PerMatch), Some(0.25));
    }

    #[test]
    fn binarize_boundary() {
        assert_eq!(binarize(0.25, 0.2), PerformanceClass::Good);
        assert_eq!(binarize(0.15, 0.2), PerformanceClass::Poor);
        assert_eq!(binarize(0.2, 0.2), PerformanceClass::Poor);
        assert_eq!(
            binarize_with(0.2, 0.2, PerformanceClass::Good),
            PerformanceClass::Good
        );
    }

    #[test]
    fn validate_rejects_kills_over_attempts() {
        assert!(score(5, 0, 4).validate().is_err());
        assert!(score(0, 5, 4).validate().is_err());
        assert!(score(4, 0, 4).validate().is_ok());
    }

    fn row(subject: &str, day: u32, v: f64) -> DayFeatureRow {
        DayFeatureRow {
            subject_id: subject.into(),
            date: NaiveDate::from_ymd_opt(2022, 12, day).unwrap(),
            phase: 2,
            values: vec![Some(v), None],
        }
    }

    #[test]
    fn label_matrix_drops_unlabelled_and_keeps_values() {
        let mut m = FeatureMatrix::empty(vec!["a".into(), "b".into()]);
        m.rows = vec![row("s1", 1, 1.0), row("s2", 1, 2.0), row("s2", 2, 3.0), row("s3", 1, 4.0)];
        let mut labels = BTreeMap::new();
        for (id, avg) in [("s1", 0.3), ("s3", 0.1)] {
            labels.insert(
                id.to_string(),
                SeasonLabel {
                    subject_id: id.into(),
                    season_hit_avg: avg,
                    class: binarize(avg, 0.2),
                },
            );
        }
        let (lm, report) = label_matrix(&m, &labels);
        assert_eq!(lm.classes, vec![0, 1]);
        assert_eq!(lm.matrix.rows[0], m.rows[0]);
        assert_eq!(lm.matrix.rows[1], m.rows[3]);
        assert_eq!(report.dropped, vec![("s2".to_string(), 2)]);

        let (empty, report) = label_matrix(&FeatureMatrix::empty(vec![]), &labels);
        assert!(empty.is_empty());
        assert!(report.dropped.is_empty());
    }

    #[test]
    fn labels_csv_round_trip() {
        let mut labels = BTreeMap::new();
        labels.insert(
            "p01".to_string(),
            SeasonLabel {
                subject_id: "p01".into(),
                season_hit_avg: 0.123456789,
                class: PerformanceClass::Poor,
            },
        );
        let mut buf = Vec::new();
        write_labels_csv(&labels, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("subject,season_hit_avg,class\n"));
        assert_eq!(read_labels_csv(buf.as_slice()).unwrap(), labels);
    }

    proptest::proptest! {
        #[test]
        fn hit_percentage_scale_free_and_bounded(
            attempts in 1u32..200, kf in 0.0f64..1.0, ef in 0.0f64..1.0, k in 1u32..20
        ) {
            let kills = (kf * f64::from(attempts)) as u32;
            let errors = (ef * f64::from(attempts)) as u32;
            let h = hit_percentage(kills, errors, attempts).unwrap();
            proptest::prop_assert!((-1.0..=1.0).contains(&h));
            let scaled = hit_percentage(kills * k, errors * k, attempts * k).unwrap();
            proptest::prop_assert!((h - scaled).abs() < 1e-12);
        }

        #[test]
        fn binarize_monotone(a in -1.0f64..1.0, b in -1.0f64..1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            proptest::prop_assert!(binarize(hi, 0.2).code() <= binarize(lo, 0.2).code());
        }
    }
}
