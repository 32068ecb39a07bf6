use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{LosoRun, Metrics, PipelineConfig, Prediction};
use crate::error::Result;
use crate::models::ModelSpec;

/// `0.7925 (0.004)`: mean to four decimals, standard deviation to three.
pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{mean:.4} ({std:.3})")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub iteration: usize,
    pub seed: u64,
    pub metrics: Metrics,
    pub n_predictions: usize,
    pub skipped_subjects: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub formatted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub spec: ModelSpec,
    pub pipeline: PipelineConfig,
    pub seed: u64,
    pub iterations: Vec<IterationResult>,
    pub mean: Metrics,
    /// Population standard deviation across iterations.
    pub std: Metrics,
    /// Pooled predictions of the first iteration.
    pub predictions: Vec<Prediction>,
}

impl EvalReport {
    pub fn from_runs(spec: &ModelSpec, cfg: &PipelineConfig, seed: u64, runs: &[LosoRun]) -> Self {
        let iterations: Vec<IterationResult> = runs
            .iter()
            .enumerate()
            .map(|(i, run)| IterationResult {
                iteration: i,
                seed: run.seed,
                metrics: run.metrics(),
                n_predictions: run.predictions.len(),
                skipped_subjects: run.skipped().into_iter().map(|(s, _)| s.to_string()).collect(),
            })
            .collect();
        let n = iterations.len() as f64;
        let mut mean = [0.0; 6];
        for it in &iterations {
            for (m, v) in mean.iter_mut().zip(it.metrics.values()) {
                *m += v / n;
            }
        }
        let mut var = [0.0; 6];
        for it in &iterations {
            for ((s, v), m) in var.iter_mut().zip(it.metrics.values()).zip(mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        EvalReport {
            spec: spec.clone(),
            pipeline: cfg.clone(),
            seed,
            iterations,
            mean: Metrics::from_values(mean),
            std: Metrics::from_values(var.map(f64::sqrt)),
            predictions: runs.first().map(|r| r.predictions.clone()).unwrap_or_default(),
        }
    }

    pub fn summary(&self) -> Vec<SummaryRow> {
        Metrics::NAMES
            .iter()
            .zip(self.mean.values().into_iter().zip(self.std.values()))
            .map(|(name, (mean, std))| SummaryRow {
                metric: name.to_string(),
                mean,
                std,
                formatted: format_mean_std(mean, std),
            })
            .collect()
    }

    /// Subjects skipped in any iteration.
    pub fn skipped_subjects(&self) -> Vec<String> {
        let mut all: Vec<String> = self.iterations.iter().flat_map(|it| it.skipped_subjects.clone()).collect();
        all.sort();
        all.dedup();
        all
    }
}

pub fn write_iterations_csv<W: Write>(report: &EvalReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["iteration".to_string(), "seed".into(), "n".into()];
    header.extend(Metrics::NAMES.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for it in &report.iterations {
        let mut rec = vec![it.iteration.to_string(), it.seed.to_string(), it.n_predictions.to_string()];
        rec.extend(it.metrics.values().iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(report: &EvalReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "mean", "std", "formatted"])?;
    for row in report.summary() {
        w.write_record([row.metric, row.mean.to_string(), row.std.to_string(), row.formatted])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_predictions_csv<W: Write>(predictions: &[Prediction], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["subject", "date", "score", "predicted", "truth"])?;
    for p in predictions {
        w.write_record([
            p.subject.clone(),
            p.date.to_string(),
            p.score.to_string(),
            p.predicted.to_string(),
            p.truth.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_std_format() {
        assert_eq!(format_mean_std(0.79251, 0.0041), "0.7925 (0.004)");
        assert_eq!(format_mean_std(1.0, 0.0), "1.0000 (0.000)");
    }
}
