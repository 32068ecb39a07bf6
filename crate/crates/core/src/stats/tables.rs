use std::collections::BTreeMap;
use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correlation::{spearman, spearman_permutation, Correlation};
use super::ols::TrendObservation;
use crate::error::{Error, Result};
use crate::features::{display_name, FeatureMatrix};
use crate::ingest::{daily_ema_table, EmaItem, PhaseConfig, PhaseSet, SubjectDataset};
use crate::labels::{hit_percentage, SeasonLabel};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEntry {
    pub variable: String,
    pub n: usize,
    /// `None` when fewer than three pairs or either side is constant.
    pub rho: Option<f64>,
    pub p: Option<f64>,
}

impl CorrelationEntry {
    fn new(variable: String, x: &[f64], y: &[f64], mode: PValueMode) -> Self {
        let c: Option<Correlation> = match mode {
            PValueMode::TApprox => spearman(x, y),
            PValueMode::Permutation { permutations, seed } => {
                let stream = variable.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(u64::from(b)));
                spearman_permutation(x, y, permutations, rng::derive_seed(seed, stream))
            }
        };
        CorrelationEntry {
            variable,
            n: x.len(),
            rho: c.map(|c| c.rho),
            p: c.map(|c| c.p),
        }
    }

    pub fn is_significant(&self, alpha: f64) -> bool {
        self.p.is_some_and(|p| p < alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PValueMode {
    #[default]
    TApprox,
    Permutation { permutations: usize, seed: u64 },
}

/// Entries with `p < alpha`, strongest first.
pub fn significant(entries: &[CorrelationEntry], alpha: f64) -> Vec<CorrelationEntry> {
    let mut out: Vec<CorrelationEntry> = entries.iter().filter(|e| e.is_significant(alpha)).cloned().collect();
    sort_by_abs_rho(&mut out);
    out
}

pub fn sort_by_abs_rho(entries: &mut [CorrelationEntry]) {
    entries.sort_by(|a, b| {
        let key = |e: &CorrelationEntry| e.rho.map(f64::abs).unwrap_or(-1.0);
        key(b).total_cmp(&key(a)).then_with(|| a.variable.cmp(&b.variable))
    });
}

/// Each subject-day with a survey response in the selected phases paired with
/// that subject's season hit average, one correlation per item.
pub fn ema_vs_season(
    dataset: &SubjectDataset,
    labels: &BTreeMap<String, SeasonLabel>,
    phase_config: &PhaseConfig,
    phases: &PhaseSet,
    mode: PValueMode,
) -> Vec<CorrelationEntry> {
    let mut pairs: BTreeMap<EmaItem, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (id, data) in &dataset.subjects {
        let Some(label) = labels.get(id) else {
            continue;
        };
        for (date, items) in daily_ema_table(&data.ema, &dataset.clock) {
            if !phase_config.assign(date).is_some_and(|p| phases.contains(p)) {
                continue;
            }
            for (item, avg) in items {
                let e = pairs.entry(item).or_default();
                e.0.push(avg);
                e.1.push(label.season_hit_avg);
            }
        }
    }
    EmaItem::ALL
        .par_iter()
        .map(|item| {
            let (x, y) = pairs.get(item).cloned().unwrap_or_default();
            CorrelationEntry::new(item.label().to_string(), &x, &y, mode)
        })
        .collect()
}

/// Match-day hit percentage per subject and date; several matches on one day
/// are averaged.
pub fn match_day_hits(
    dataset: &SubjectDataset,
    phase_config: &PhaseConfig,
    phases: &PhaseSet,
) -> BTreeMap<(String, NaiveDate), f64> {
    let mut acc: BTreeMap<(String, NaiveDate), (f64, usize)> = BTreeMap::new();
    for (id, data) in &dataset.subjects {
        for b in &data.box_scores {
            if !phase_config.assign(b.date).is_some_and(|p| phases.contains(p)) {
                continue;
            }
            if let Some(h) = hit_percentage(b.kills, b.errors, b.attempts) {
                let e = acc.entry((id.clone(), b.date)).or_default();
                e.0 += h;
                e.1 += 1;
            }
        }
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Match-day hits against same-day survey item averages.
pub fn daily_hits_vs_ema(
    dataset: &SubjectDataset,
    phase_config: &PhaseConfig,
    phases: &PhaseSet,
    mode: PValueMode,
) -> Vec<CorrelationEntry> {
    let hits = match_day_hits(dataset, phase_config, phases);
    let tables: BTreeMap<&str, _> = dataset
        .subjects
        .iter()
        .map(|(id, d)| (id.as_str(), daily_ema_table(&d.ema, &dataset.clock)))
        .collect();
    EmaItem::ALL
        .par_iter()
        .map(|item| {
            let (x, y): (Vec<f64>, Vec<f64>) = hits
                .iter()
                .filter_map(|((id, date), h)| {
                    let v = tables.get(id.as_str())?.get(date)?.get(item)?;
                    Some((*v, *h))
                })
                .unzip();
            CorrelationEntry::new(item.label().to_string(), &x, &y, mode)
        })
        .collect()
}

/// Match-day hits against same-day feature values.
pub fn daily_hits_vs_features(
    dataset: &SubjectDataset,
    matrix: &FeatureMatrix,
    phase_config: &PhaseConfig,
    phases: &PhaseSet,
    mode: PValueMode,
) -> Vec<CorrelationEntry> {
    let hits = match_day_hits(dataset, phase_config, phases);
    let matched: Vec<(usize, f64)> = matrix
        .rows
        .iter()
        .enumerate()
        .filter_map(|(i, r)| hits.get(&(r.subject_id.clone(), r.date)).map(|h| (i, *h)))
        .collect();
    (0..matrix.feature_names.len())
        .into_par_iter()
        .map(|j| {
            let (x, y): (Vec<f64>, Vec<f64>) = matched
                .iter()
                .filter_map(|&(i, h)| matrix.rows[i].values[j].map(|v| (v, h)))
                .unzip();
            CorrelationEntry::new(display_name(&matrix.feature_names[j]), &x, &y, mode)
        })
        .collect()
}

/// Every valid match in the selected phases as a trend observation.
pub fn trend_observations(
    dataset: &SubjectDataset,
    phase_config: &PhaseConfig,
    phases: &PhaseSet,
) -> Vec<TrendObservation> {
    let mut out = Vec::new();
    for (id, data) in &dataset.subjects {
        for b in &data.box_scores {
            if !phase_config.assign(b.date).is_some_and(|p| phases.contains(p)) {
                continue;
            }
            if let Some(hit) = b.hit_percentage() {
                out.push(TrendObservation {
                    subject_id: id.clone(),
                    date: b.date,
                    position: b.position,
                    hit,
                });
            }
        }
    }
    out
}

/// `variable,p,rho,n`; undefined entries leave p and rho empty.
pub fn write_correlation_csv<W: Write>(entries: &[CorrelationEntry], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["variable", "p", "rho", "n"])?;
    for e in entries {
        w.write_record([
            e.variable.clone(),
            e.p.map(format_p).unwrap_or_default(),
            e.rho.map(|r| format!("{r:.3}")).unwrap_or_default(),
            e.n.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<correlation table>", e))?;
    Ok(())
}

/// Three decimals, with `<0.001` below that.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        format!("{p:.3}")
    }
}
