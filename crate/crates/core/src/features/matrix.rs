use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PhaseId;

/// One subject-day. `values` is aligned with the owning matrix's
/// `feature_names`; `None` marks a missing feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayFeatureRow {
    pub subject_id: String,
    pub date: NaiveDate,
    pub phase: PhaseId,
    pub values: Vec<Option<f64>>,
}

impl DayFeatureRow {
    pub fn is_present(&self, feature: usize) -> bool {
        self.values[feature].is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub feature_names: Vec<String>,
    pub rows: Vec<DayFeatureRow>,
}

impl FeatureMatrix {
    pub fn empty(feature_names: Vec<String>) -> Self {
        FeatureMatrix {
            feature_names,
            rows: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn index_of(&self, feature: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == feature)
    }

    pub fn column(&self, feature: usize) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.values[feature]).collect()
    }

    /// Values of `feature` for the given rows only.
    pub fn column_rows(&self, feature: usize, rows: &[usize]) -> Vec<Option<f64>> {
        rows.iter().map(|&i| self.rows[i].values[feature]).collect()
    }

    pub fn value(&self, row: usize, feature: &str) -> Option<f64> {
        self.index_of(feature).and_then(|j| self.rows[row].values[j])
    }

    /// `subject,date,phase,<feature...>` with empty cells for missing values.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["subject".to_string(), "date".into(), "phase".into()];
        header.extend(self.feature_names.iter().cloned());
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = Vec::with_capacity(header.len());
            rec.push(row.subject_id.clone());
            rec.push(row.date.format("%Y-%m-%d").to_string());
            rec.push(row.phase.to_string());
            rec.extend(row.values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<feature matrix>", e))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.len() < 3 || &header[0] != "subject" || &header[1] != "date" || &header[2] != "phase" {
            return Err(Error::Parse("feature matrix header must start with subject,date,phase".into()));
        }
        let feature_names: Vec<String> = header.iter().skip(3).map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in r.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let bad = |what: &str| Error::Parse(format!("feature matrix line {line}: bad {what}"));
            let date = NaiveDate::parse_from_str(&record[1], "%Y-%m-%d").map_err(|_| bad("date"))?;
            let phase: PhaseId = record[2].parse().map_err(|_| bad("phase"))?;
            let values = record
                .iter()
                .skip(3)
                .map(|cell| {
                    if cell.is_empty() {
                        Ok(None)
                    } else {
                        cell.parse::<f64>().map(Some).map_err(|_| bad("value"))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            if values.len() != feature_names.len() {
                return Err(bad("row width"));
            }
            rows.push(DayFeatureRow {
                subject_id: record[0].to_string(),
                date,
                phase,
                values,
            });
        }
        Ok(FeatureMatrix {
            feature_names,
            rows,
        })
    }
}
