//! Leave-one-subject-out evaluation with seed-repeated bootstrap.

mod metrics;
mod report;

use std::collections::BTreeSet;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::labels::LabeledMatrix;
use crate::models::{self, ModelSpec, SearchSpace, TrainedModel};
use crate::preprocess::{fit_transform, smote, FittedTransform};
use crate::rng::derive_seed;
use crate::select::{select_features, SelectConfig};

pub use metrics::{auroc, average_precision, metrics, Confusion, Metrics};
pub use report::{
    format_mean_std, write_iterations_csv, write_predictions_csv, write_summary_csv, EvalReport,
    IterationResult, SummaryRow,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub subject: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per subject, in subject order; the test split is every row of
/// that subject.
pub fn loso_splits(data: &LabeledMatrix) -> Result<Vec<Fold>> {
    let subjects: BTreeSet<&str> = data.matrix.rows.iter().map(|r| r.subject_id.as_str()).collect();
    if subjects.len() < 2 {
        return Err(Error::TooFewSubjects(subjects.len()));
    }
    Ok(subjects
        .into_iter()
        .map(|s| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..data.len()).partition(|&i| data.matrix.rows[i].subject_id == s);
            Fold {
                subject: s.to_string(),
                train,
                test,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig {
    pub budget: usize,
    /// Overrides the kind's default search space when present.
    pub space: Option<SearchSpace>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub select: SelectConfig,
    /// SMOTE neighbour count; `None` disables oversampling.
    pub smote_k: Option<usize>,
    pub tuning: Option<TuningConfig>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            select: SelectConfig::default(),
            smote_k: Some(5),
            tuning: None,
        }
    }
}

/// Everything fitted on one training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedPipeline {
    pub kept: Vec<String>,
    pub kept_indices: Vec<usize>,
    pub transform: FittedTransform,
    pub spec: ModelSpec,
    pub model: TrainedModel,
}

impl FittedPipeline {
    pub fn score_rows(&self, matrix: &FeatureMatrix, rows: &[usize]) -> Result<Vec<f64>> {
        let raw = gather(matrix, rows, &self.kept_indices);
        let x = self.transform.apply(&raw);
        self.model.score(&self.kept, &x)
    }
}

fn gather(matrix: &FeatureMatrix, rows: &[usize], columns: &[usize]) -> Vec<Vec<Option<f64>>> {
    rows.iter()
        .map(|&i| columns.iter().map(|&j| matrix.rows[i].values[j]).collect())
        .collect()
}

/// Selection, imputation, scaling, optional SMOTE and training on `train`
/// rows only. `spec` is used as given; tuning happens in [`fit_fold`].
pub fn fit_pipeline(data: &LabeledMatrix, train: &[usize], cfg: &PipelineConfig, spec: &ModelSpec, seed: u64) -> Result<FittedPipeline> {
    let y: Vec<u8> = train.iter().map(|&i| data.classes[i]).collect();
    if !y.contains(&0) || !y.contains(&1) {
        return Err(Error::DegenerateLabels);
    }
    let selection = select_features(data, train, &cfg.select)?;
    let raw = gather(&data.matrix, train, &selection.kept_indices);
    let width = selection.kept_indices.len();
    let (x, _, transform) = fit_transform(&raw, &[], width, train.to_vec());
    let (x, y) = match cfg.smote_k {
        Some(k) => smote(&x, &y, k, derive_seed(seed, 1))?,
        None => (x, y),
    };
    let spec = ModelSpec {
        seed: derive_seed(seed, 2),
        ..spec.clone()
    };
    let model = models::train(&spec, &selection.kept, &x, &y)?;
    Ok(FittedPipeline {
        kept: selection.kept,
        kept_indices: selection.kept_indices,
        transform,
        spec,
        model,
    })
}

/// Rows `rows` of `data` as a standalone labeled matrix.
pub fn subset(data: &LabeledMatrix, rows: &[usize]) -> LabeledMatrix {
    let mut matrix = FeatureMatrix::empty(data.matrix.feature_names.clone());
    matrix.rows = rows.iter().map(|&i| data.matrix.rows[i].clone()).collect();
    LabeledMatrix {
        matrix,
        classes: rows.iter().map(|&i| data.classes[i]).collect(),
    }
}

/// Pooled F1 of an untuned LOSO over `train` rows only.
pub fn inner_loso_f1(data: &LabeledMatrix, train: &[usize], cfg: &PipelineConfig, spec: &ModelSpec, seed: u64) -> Result<f64> {
    let inner = subset(data, train);
    let cfg = PipelineConfig {
        tuning: None,
        ..cfg.clone()
    };
    let run = run_loso(&inner, spec, &cfg, seed)?;
    if run.predictions.is_empty() {
        return Err(Error::NoRows);
    }
    let scores: Vec<f64> = run.predictions.iter().map(|p| p.score).collect();
    let truth: Vec<u8> = run.predictions.iter().map(|p| p.truth).collect();
    Ok(metrics(&scores, &truth).f1)
}

/// Tunes `spec` by inner LOSO on the training rows when configured, then
/// fits the pipeline.
pub fn fit_fold(data: &LabeledMatrix, train: &[usize], cfg: &PipelineConfig, spec: &ModelSpec, seed: u64) -> Result<FittedPipeline> {
    let spec = match &cfg.tuning {
        Some(t) => {
            let space = t.space.clone().unwrap_or_else(|| SearchSpace::default_for(spec));
            let inner_seed = derive_seed(seed, 3);
            models::tune(spec, &space, t.budget, inner_seed, |candidate| {
                inner_loso_f1(data, train, cfg, candidate, inner_seed)
            })?
            .best
        }
        None => spec.clone(),
    };
    fit_pipeline(data, train, cfg, &spec, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub subject: String,
    pub date: NaiveDate,
    pub score: f64,
    pub predicted: u8,
    pub truth: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub subject: String,
    pub seed: u64,
    pub fitted: Option<FittedPipeline>,
    /// Why the fold produced no predictions.
    pub skipped: Option<String>,
}

pub fn run_fold(data: &LabeledMatrix, fold: &Fold, spec: &ModelSpec, cfg: &PipelineConfig, seed: u64) -> (FoldRecord, Vec<Prediction>) {
    let outcome = fit_fold(data, &fold.train, cfg, spec, seed).and_then(|fitted| {
        let scores = fitted.score_rows(&data.matrix, &fold.test)?;
        Ok((fitted, scores))
    });
    match outcome {
        Ok((fitted, scores)) => {
            let predictions = fold
                .test
                .iter()
                .zip(scores)
                .map(|(&i, score)| Prediction {
                    subject: fold.subject.clone(),
                    date: data.matrix.rows[i].date,
                    score,
                    predicted: u8::from(score >= 0.5),
                    truth: data.classes[i],
                })
                .collect();
            (
                FoldRecord {
                    subject: fold.subject.clone(),
                    seed,
                    fitted: Some(fitted),
                    skipped: None,
                },
                predictions,
            )
        }
        Err(e) => (
            FoldRecord {
                subject: fold.subject.clone(),
                seed,
                fitted: None,
                skipped: Some(e.to_string()),
            },
            Vec::new(),
        ),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LosoRun {
    pub seed: u64,
    pub folds: Vec<FoldRecord>,
    /// Pooled over folds, in fold then row order.
    pub predictions: Vec<Prediction>,
}

impl LosoRun {
    pub fn metrics(&self) -> Metrics {
        let scores: Vec<f64> = self.predictions.iter().map(|p| p.score).collect();
        let truth: Vec<u8> = self.predictions.iter().map(|p| p.truth).collect();
        metrics(&scores, &truth)
    }

    pub fn skipped(&self) -> Vec<(&str, &str)> {
        self.folds
            .iter()
            .filter_map(|f| f.skipped.as_deref().map(|why| (f.subject.as_str(), why)))
            .collect()
    }
}

/// Fold seed for fold `k` of a run seeded with `seed`.
pub fn fold_seed(seed: u64, k: usize) -> u64 {
    derive_seed(seed, k as u64)
}

/// One full LOSO pass; folds run in parallel and are merged in fold order.
pub fn run_loso(data: &LabeledMatrix, spec: &ModelSpec, cfg: &PipelineConfig, seed: u64) -> Result<LosoRun> {
    let folds = loso_splits(data)?;
    let results: Vec<(FoldRecord, Vec<Prediction>)> = folds
        .par_iter()
        .enumerate()
        .map(|(k, fold)| run_fold(data, fold, spec, cfg, fold_seed(seed, k)))
        .collect();
    let mut run = LosoRun {
        seed,
        folds: Vec::with_capacity(results.len()),
        predictions: Vec::new(),
    };
    for (record, preds) in results {
        run.folds.push(record);
        run.predictions.extend(preds);
    }
    Ok(run)
}

/// `iterations` LOSO passes seeded `seed + i`, with metrics on each pass's
/// pooled predictions.
pub fn bootstrap_loso(data: &LabeledMatrix, spec: &ModelSpec, cfg: &PipelineConfig, seed: u64, iterations: usize) -> Result<EvalReport> {
    if iterations == 0 {
        return Err(Error::InvalidSpec("at least one iteration is required".into()));
    }
    let runs: Vec<LosoRun> = (0..iterations)
        .into_par_iter()
        .map(|i| run_loso(data, spec, cfg, seed.wrapping_add(i as u64)))
        .collect::<Result<_>>()?;
    Ok(EvalReport::from_runs(spec, cfg, seed, &runs))
}
