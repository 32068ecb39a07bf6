//! The classifier families, a common training/scoring interface and
//! budgeted random-search tuning.

mod forest;
mod gbt;
mod nb;
mod svm;
mod tree;
mod tune;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use forest::{fit_forest, ForestModel, ForestParams};
pub use gbt::{fit_gbt, GbtModel, GbtParams, Growth};
pub use nb::{fit_nb, NbModel, DEFAULT_VAR_FLOOR};
pub use svm::{fit_svm, platt, SvmModel, SvmParams};
pub use tree::{Node, Tree};
pub use tune::{tune, ParamRange, SearchSpace, Trial, TuneResult};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    GradientBoostedTrees,
    BaggedTrees,
    GaussianNb,
    LinearSvm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::GradientBoostedTrees => "gradient_boosted_trees",
            ModelKind::BaggedTrees => "bagged_trees",
            ModelKind::GaussianNb => "gaussian_nb",
            ModelKind::LinearSvm => "linear_svm",
        }
    }

    /// Hyperparameter names with their legal closed ranges.
    pub fn bounds(self) -> &'static [(&'static str, f64, f64)] {
        match self {
            ModelKind::GradientBoostedTrees => &[
                ("rounds", 1.0, 5000.0),
                ("max_depth", 1.0, 16.0),
                ("learning_rate", 1e-6, 1.0),
                ("lambda", 0.0, 1e3),
                ("min_child_weight", 0.0, 1e3),
                ("leaf_wise", 0.0, 1.0),
                ("max_leaves", 2.0, 4096.0),
            ],
            ModelKind::BaggedTrees => &[
                ("trees", 1.0, 5000.0),
                ("max_depth", 0.0, 64.0),
                ("min_samples_leaf", 1.0, 1000.0),
                ("max_features", 0.0, 10_000.0),
                ("bootstrap", 0.0, 1.0),
            ],
            ModelKind::GaussianNb => &[("var_floor", 1e-300, 1.0)],
            ModelKind::LinearSvm => &[
                ("c", 1e-9, 1e9),
                ("epochs", 1.0, 1e6),
                ("learning_rate", 1e-9, 1e3),
            ],
        }
    }

    pub fn defaults(self) -> BTreeMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match self {
            ModelKind::GradientBoostedTrees => {
                let p = GbtParams::default();
                vec![
                    ("rounds", p.rounds as f64),
                    ("max_depth", p.max_depth as f64),
                    ("learning_rate", p.learning_rate),
                    ("lambda", p.lambda),
                    ("min_child_weight", p.min_child_weight),
                    ("leaf_wise", 0.0),
                    ("max_leaves", p.max_leaves as f64),
                ]
            }
            ModelKind::BaggedTrees => {
                let p = ForestParams::default();
                vec![
                    ("trees", p.trees as f64),
                    ("max_depth", p.max_depth as f64),
                    ("min_samples_leaf", p.min_samples_leaf as f64),
                    ("max_features", p.max_features as f64),
                    ("bootstrap", 1.0),
                ]
            }
            ModelKind::GaussianNb => vec![("var_floor", DEFAULT_VAR_FLOOR)],
            ModelKind::LinearSvm => {
                let p = SvmParams::default();
                vec![
                    ("c", p.c),
                    ("epochs", p.epochs as f64),
                    ("learning_rate", p.learning_rate),
                ]
            }
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        ModelSpec {
            kind,
            params: kind.defaults(),
            seed,
        }
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    /// Named profiles: `gbt`/`xgb` (level-wise boosting), `lgbm` (leaf-wise
    /// boosting), `rf`, `gnb`, `svm`.
    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        let spec = match name {
            "gbt" | "xgb" => ModelSpec::new(ModelKind::GradientBoostedTrees, seed),
            "lgbm" => ModelSpec::new(ModelKind::GradientBoostedTrees, seed)
                .with("leaf_wise", 1.0)
                .with("max_leaves", 8.0)
                .with("max_depth", 5.0),
            "rf" => ModelSpec::new(ModelKind::BaggedTrees, seed),
            "gnb" => ModelSpec::new(ModelKind::GaussianNb, seed),
            "svm" => ModelSpec::new(ModelKind::LinearSvm, seed),
            other => return Err(Error::InvalidSpec(format!("unknown model '{other}'"))),
        };
        Ok(spec)
    }

    pub const PRESETS: [&'static str; 6] = ["gbt", "xgb", "lgbm", "rf", "gnb", "svm"];

    /// Short display name of the profile.
    pub fn profile(&self) -> &'static str {
        match self.kind {
            ModelKind::GradientBoostedTrees if self.param("leaf_wise") >= 0.5 => "lgbm",
            ModelKind::GradientBoostedTrees => "xgb",
            ModelKind::BaggedTrees => "rf",
            ModelKind::GaussianNb => "gnb",
            ModelKind::LinearSvm => "svm",
        }
    }

    pub fn param(&self, name: &str) -> f64 {
        self.params
            .get(name)
            .copied()
            .or_else(|| self.kind.defaults().get(name).copied())
            .unwrap_or(f64::NAN)
    }

    pub fn validate(&self) -> Result<()> {
        let bounds = self.kind.bounds();
        for (name, value) in &self.params {
            let Some(&(_, lo, hi)) = bounds.iter().find(|(n, _, _)| n == name) else {
                return Err(Error::InvalidSpec(format!("{} has no parameter '{name}'", self.kind)));
            };
            if !(value.is_finite() && (lo..=hi).contains(value)) {
                return Err(Error::InvalidSpec(format!("{name} = {value} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    fn gbt_params(&self) -> GbtParams {
        GbtParams {
            rounds: self.param("rounds") as usize,
            max_depth: self.param("max_depth") as usize,
            learning_rate: self.param("learning_rate"),
            lambda: self.param("lambda"),
            min_child_weight: self.param("min_child_weight"),
            growth: if self.param("leaf_wise") >= 0.5 {
                Growth::LeafWise
            } else {
                Growth::LevelWise
            },
            max_leaves: self.param("max_leaves") as usize,
        }
    }

    fn forest_params(&self) -> ForestParams {
        ForestParams {
            trees: self.param("trees") as usize,
            max_depth: self.param("max_depth") as usize,
            min_samples_leaf: self.param("min_samples_leaf") as usize,
            max_features: self.param("max_features") as usize,
            bootstrap: self.param("bootstrap") >= 0.5,
        }
    }

    fn svm_params(&self) -> SvmParams {
        SvmParams {
            c: self.param("c"),
            epochs: self.param("epochs") as usize,
            learning_rate: self.param("learning_rate"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// A preset name with the default seed 0.
    fn from_str(s: &str) -> Result<Self> {
        ModelSpec::preset(s.trim(), 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FittedModel {
    Boosted(GbtModel),
    Forest(ForestModel),
    Bayes(NbModel),
    Svm(SvmModel),
}

impl FittedModel {
    pub fn score_row(&self, x: &[f64]) -> f64 {
        match self {
            FittedModel::Boosted(m) => m.score(x),
            FittedModel::Forest(m) => m.score(x),
            FittedModel::Bayes(m) => m.score(x),
            FittedModel::Svm(m) => m.score(x),
        }
    }
}

/// Hex SHA-256 of the newline-joined feature names.
pub fn schema_fingerprint<S: AsRef<str>>(feature_names: &[S]) -> String {
    let mut h = Sha256::new();
    for name in feature_names {
        h.update(name.as_ref().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub spec: ModelSpec,
    pub feature_names: Vec<String>,
    pub fingerprint: String,
    pub model: FittedModel,
    /// Training log loss per boosting round; empty for other families.
    pub loss_history: Vec<f64>,
}

/// Fits `spec` on rows `x` (values in `[0, 1]`) with labels `y` (1 = poor).
pub fn train(spec: &ModelSpec, feature_names: &[String], x: &[Vec<f64>], y: &[u8]) -> Result<TrainedModel> {
    spec.validate()?;
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::NoRows);
    }
    if x.iter().any(|r| r.len() != feature_names.len()) {
        return Err(Error::InvalidSpec("row width differs from feature list".into()));
    }
    if y.iter().any(|&c| c > 1) || !y.contains(&0) || !y.contains(&1) {
        return Err(Error::DegenerateLabels);
    }
    let mut loss_history = Vec::new();
    let model = match spec.kind {
        ModelKind::GradientBoostedTrees => {
            let (m, history) = fit_gbt(x, y, &spec.gbt_params());
            loss_history = history;
            FittedModel::Boosted(m)
        }
        ModelKind::BaggedTrees => FittedModel::Forest(fit_forest(x, y, &spec.forest_params(), spec.seed)),
        ModelKind::GaussianNb => FittedModel::Bayes(fit_nb(x, y, spec.param("var_floor"))),
        ModelKind::LinearSvm => FittedModel::Svm(fit_svm(x, y, &spec.svm_params())),
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        spec: spec.clone(),
        feature_names: feature_names.to_vec(),
        fingerprint: schema_fingerprint(feature_names),
        model,
        loss_history,
    })
}

impl TrainedModel {
    /// Class-1 scores in `[0, 1]`; rejects inputs with a different feature schema.
    pub fn score<S: AsRef<str>>(&self, feature_names: &[S], x: &[Vec<f64>]) -> Result<Vec<f64>> {
        let found = schema_fingerprint(feature_names);
        if found != self.fingerprint {
            return Err(Error::SchemaMismatch {
                expected: self.fingerprint.clone(),
                found,
            });
        }
        Ok(x.iter().map(|r| self.model.score_row(r)).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("format_version").and_then(serde_json::Value::as_u64).unwrap_or(0) as u32;
        if version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(version));
        }
        Ok(serde_json::from_value(value)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Vec<String>, Vec<Vec<f64>>, Vec<u8>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..30 {
            let t = i as f64 / 30.0;
            x.push(vec![t, 0.1 + 0.2 * t]);
            y.push(0);
            x.push(vec![t, 0.7 + 0.2 * t]);
            y.push(1);
        }
        (vec!["a".into(), "b".into()], x, y)
    }

    #[test]
    fn every_kind_fits_separable_data() {
        let (names, x, y) = separable();
        for preset in ModelSpec::PRESETS {
            let model = train(&ModelSpec::preset(preset, 3).unwrap(), &names, &x, &y).unwrap();
            let scores = model.score(&names, &x).unwrap();
            let acc = scores.iter().zip(&y).filter(|(s, &c)| u8::from(**s >= 0.5) == c).count();
            assert_eq!(acc, x.len(), "{preset}");
            assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
            let far = model.score(&names, &[vec![0.5, 1.0]]).unwrap()[0];
            assert!(far > 0.9, "{preset}: {far}");
        }
    }

    #[test]
    fn far_side_point_is_confident_for_margin_models() {
        let (names, x, y) = separable();
        for preset in ["gnb", "svm"] {
            let model = train(&ModelSpec::preset(preset, 0).unwrap(), &names, &x, &y).unwrap();
            assert!(model.score(&names, &[vec![0.5, 3.0]]).unwrap()[0] > 0.99, "{preset}");
        }
    }

    #[test]
    fn single_class_rejected() {
        let (names, x, _) = separable();
        let y = vec![0; x.len()];
        assert!(matches!(
            train(&ModelSpec::preset("gnb", 0).unwrap(), &names, &x, &y),
            Err(Error::DegenerateLabels)
        ));
    }

    #[test]
    fn schema_mismatch_rejected() {
        let (names, x, y) = separable();
        let model = train(&ModelSpec::preset("gnb", 0).unwrap(), &names, &x, &y).unwrap();
        let other = vec!["b".to_string(), "a".to_string()];
        assert!(matches!(model.score(&other, &x), Err(Error::SchemaMismatch { .. })));
    }

    #[test]
    fn json_round_trip_and_version_check() {
        let (names, x, y) = separable();
        for preset in ModelSpec::PRESETS {
            let model = train(&ModelSpec::preset(preset, 5).unwrap().with_small_budget(), &names, &x, &y).unwrap();
            let back = TrainedModel::from_json(&model.to_json().unwrap()).unwrap();
            assert_eq!(back, model);
        }
        let model = train(&ModelSpec::preset("gnb", 0).unwrap(), &names, &x, &y).unwrap();
        let text = model.to_json().unwrap().replace("\"format_version\":1", "\"format_version\":9");
        assert!(matches!(TrainedModel::from_json(&text), Err(Error::ModelFormat(9))));
    }

    #[test]
    fn invalid_params_rejected() {
        let spec = ModelSpec::preset("gbt", 0).unwrap().with("max_depth", 0.0);
        assert!(spec.validate().is_err());
        let spec = ModelSpec::preset("gnb", 0).unwrap().with("rounds", 3.0);
        assert!(spec.validate().is_err());
        assert!(ModelSpec::preset("mlp", 0).is_err());
    }

    #[test]
    fn deterministic_training() {
        let (names, x, y) = separable();
        for preset in ModelSpec::PRESETS {
            let spec = ModelSpec::preset(preset, 42).unwrap();
            let a = train(&spec, &names, &x, &y).unwrap();
            let b = train(&spec, &names, &x, &y).unwrap();
            assert_eq!(a, b);
        }
    }

    impl ModelSpec {
        fn with_small_budget(self) -> Self {
            match self.kind {
                ModelKind::GradientBoostedTrees => self.with("rounds", 5.0),
                ModelKind::BaggedTrees => self.with("trees", 5.0),
                _ => self,
            }
        }
    }
}
