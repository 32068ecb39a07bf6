use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ModelKind, ModelSpec};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum ParamRange {
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
    /// Inclusive integer range.
    Int { lo: i64, hi: i64 },
    Choice { values: Vec<f64> },
}

impl ParamRange {
    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            ParamRange::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ParamRange::LogUniform { lo, hi } => (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp(),
            ParamRange::Int { lo, hi } => rng.random_range(*lo..=*hi) as f64,
            ParamRange::Choice { values } => values[rng.random_range(0..values.len())],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: BTreeMap<String, ParamRange>,
}

impl SearchSpace {
    pub fn default_for(spec: &ModelSpec) -> Self {
        use ParamRange::*;
        let entries: Vec<(&str, ParamRange)> = match spec.kind {
            ModelKind::GradientBoostedTrees => {
                let mut v = vec![
                    ("rounds", Int { lo: 50, hi: 300 }),
                    ("max_depth", Int { lo: 2, hi: 6 }),
                    ("learning_rate", LogUniform { lo: 0.01, hi: 0.3 }),
                    ("lambda", LogUniform { lo: 0.1, hi: 10.0 }),
                    ("min_child_weight", LogUniform { lo: 0.5, hi: 10.0 }),
                ];
                if spec.param("leaf_wise") >= 0.5 {
                    v.push(("max_leaves", Int { lo: 4, hi: 32 }));
                }
                v
            }
            ModelKind::BaggedTrees => vec![
                ("trees", Int { lo: 50, hi: 300 }),
                ("max_depth", Choice { values: vec![0.0, 3.0, 5.0, 8.0, 12.0] }),
                ("min_samples_leaf", Int { lo: 1, hi: 10 }),
                ("max_features", Choice { values: vec![0.0, 1.0, 2.0, 4.0] }),
            ],
            ModelKind::GaussianNb => vec![("var_floor", LogUniform { lo: 1e-12, hi: 1e-3 })],
            ModelKind::LinearSvm => vec![
                ("c", LogUniform { lo: 0.01, hi: 100.0 }),
                ("learning_rate", LogUniform { lo: 0.01, hi: 1.0 }),
            ],
        };
        SearchSpace {
            params: entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub spec: ModelSpec,
    /// `None` when the objective failed.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: ModelSpec,
    pub best_index: usize,
    pub trials: Vec<Trial>,
}

/// Random search: `budget` specs are drawn from `space` on top of `base`,
/// scored by `objective` (higher is better) and the best returned; ties go
/// to the earlier trial. Candidates depend only on `(base, space, budget, seed)`.
pub fn tune<F>(base: &ModelSpec, space: &SearchSpace, budget: usize, seed: u64, objective: F) -> Result<TuneResult>
where
    F: Fn(&ModelSpec) -> Result<f64> + Sync,
{
    if budget == 0 {
        return Err(Error::InvalidSpec("tuning budget must be at least 1".into()));
    }
    let mut rng = rng::seeded(seed);
    let candidates: Vec<ModelSpec> = (0..budget)
        .map(|_| {
            let mut spec = base.clone();
            for (name, range) in &space.params {
                spec.params.insert(name.clone(), range.sample(&mut rng));
            }
            spec
        })
        .collect();
    for spec in &candidates {
        spec.validate()?;
    }
    let trials: Vec<Trial> = candidates
        .into_par_iter()
        .enumerate()
        .map(|(index, spec)| {
            let score = objective(&spec).ok().filter(|s| !s.is_nan());
            Trial { index, spec, score }
        })
        .collect();
    let mut best_index = 0;
    for t in &trials {
        let better = match (t.score, trials[best_index].score) {
            (Some(s), Some(b)) => s > b,
            (Some(_), None) => true,
            _ => false,
        };
        if better {
            best_index = t.index;
        }
    }
    Ok(TuneResult {
        best: trials[best_index].spec.clone(),
        best_index,
        trials,
    })
}
