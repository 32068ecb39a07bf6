use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use courtside::ingest::{PhaseConfig, PhaseSet, DEFAULT_MIN_HR_READINGS};
use courtside::labels::DEFAULT_HIT_THRESHOLD;
use courtside::models::ModelSpec;

use crate::UsageError;

/// Everything a run depends on. Read from a TOML file, then overridden by
/// command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data_root: PathBuf,
    /// Phase calendar file; `phases.toml` under the data root or the built-in
    /// season calendar when absent.
    pub phase_config: Option<PathBuf>,
    /// Comma-joined phase ids, or `all` for the seven pre-season combinations.
    pub phases: String,
    /// Phases whose match days feed the daily-hit correlation tables.
    pub match_phases: String,
    /// Comma-joined model presets.
    pub models: String,
    pub min_hr_readings: usize,
    pub hit_threshold: f64,
    pub collinearity_cutoff: f64,
    pub alpha: f64,
    pub smote: bool,
    pub smote_k: usize,
    pub tuning_budget: usize,
    pub iterations: usize,
    /// Spearman p-values by permutation when non-zero.
    pub permutations: usize,
    pub seed: u64,
    pub utc_offset_secs: i32,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data_root: PathBuf::from("data"),
            phase_config: None,
            phases: "2,3".into(),
            match_phases: "4".into(),
            models: "gbt".into(),
            min_hr_readings: DEFAULT_MIN_HR_READINGS,
            hit_threshold: DEFAULT_HIT_THRESHOLD,
            collinearity_cutoff: 0.7,
            alpha: 0.05,
            smote: true,
            smote_k: 5,
            tuning_budget: 0,
            iterations: 10,
            permutations: 0,
            seed: 42,
            utc_offset_secs: 0,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

pub fn parse_phase_set(text: &str) -> Result<PhaseSet> {
    if text.trim().is_empty() {
        return Err(usage("phase selection is empty"));
    }
    let set: PhaseSet = text
        .parse()
        .map_err(|e| usage(format!("bad phase selection '{text}': {e}")))?;
    if set.is_empty() {
        return Err(usage("phase selection is empty"));
    }
    Ok(set)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if !(-1.0..=1.0).contains(&self.hit_threshold) {
            return Err(usage("hit_threshold must lie in [-1, 1]"));
        }
        if !(self.collinearity_cutoff > 0.0 && self.collinearity_cutoff <= 1.0) {
            return Err(usage("collinearity_cutoff must lie in (0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(usage("alpha must lie in (0, 1)"));
        }
        if self.smote && self.smote_k == 0 {
            return Err(usage("smote_k must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(usage("iterations must be at least 1"));
        }
        self.model_specs()?;
        self.phase_sets()?;
        self.match_phase_set()?;
        Ok(())
    }

    /// The configured phase combinations.
    pub fn phase_sets(&self) -> Result<Vec<PhaseSet>> {
        if self.phases.trim() == "all" {
            return Ok(PhaseSet::training_combinations());
        }
        Ok(vec![parse_phase_set(&self.phases)?])
    }

    pub fn match_phase_set(&self) -> Result<PhaseSet> {
        parse_phase_set(&self.match_phases)
    }

    /// Preset names paired with their specs.
    pub fn model_specs(&self) -> Result<Vec<(String, ModelSpec)>> {
        let names: Vec<&str> = self.models.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        if names.is_empty() {
            return Err(usage("no model selected"));
        }
        names
            .into_iter()
            .map(|n| {
                ModelSpec::preset(n, self.seed).map(|s| (n.to_string(), s)).map_err(|_| {
                    usage(format!(
                        "unknown model '{n}' (expected one of {})",
                        ModelSpec::PRESETS.join(", ")
                    ))
                })
            })
            .collect()
    }

    pub fn load_phase_config(&self) -> Result<PhaseConfig> {
        let path = match &self.phase_config {
            Some(p) => p.clone(),
            None => {
                let default = self.data_root.join("phases.toml");
                if !default.is_file() {
                    return Ok(PhaseConfig::season_2022_23());
                }
                default
            }
        };
        Ok(PhaseConfig::load(&path)?)
    }

    /// Short SHA-256 of the resolved configuration.
    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

pub fn config_hash<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("config serializes");
    hex::encode(Sha256::digest(&json))[..16].to_string()
}
