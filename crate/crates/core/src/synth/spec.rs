use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::schema;
use crate::ingest::PhaseConfig;
use crate::labels::{Position, DEFAULT_HIT_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mean: f64,
    pub sd: f64,
}

impl Gaussian {
    pub const fn new(mean: f64, sd: f64) -> Self {
        Gaussian { mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassConditional {
    pub good: Gaussian,
    pub poor: Gaussian,
}

impl ClassConditional {
    pub const fn new(good: Gaussian, poor: Gaussian) -> Self {
        ClassConditional { good, poor }
    }

    pub fn for_class(&self, class: u8) -> Gaussian {
        if class == 1 {
            self.poor
        } else {
            self.good
        }
    }
}

/// Generator knobs that tie survey answers and SpO2 to performance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    /// Added to the mean stress score of poor-class subjects.
    pub stress_class: f64,
    /// Match-day perceived performance shift per standardized hit residual.
    pub performance_hit: f64,
    /// Match-day SpO2 spread is scaled by `exp(-spo2_hit * z)` for hit residual `z`.
    pub spo2_hit: f64,
}

impl Couplings {
    pub const NONE: Couplings = Couplings {
        stress_class: 0.0,
        performance_hit: 0.0,
        spo2_hit: 0.0,
    };
}

impl Default for Couplings {
    fn default() -> Self {
        Couplings {
            stress_class: 1.0,
            performance_hit: 1.0,
            spo2_hit: 0.3,
        }
    }
}

/// Features whose class-conditional distributions the generator controls.
pub const PLANTED: [&str; 10] = [
    schema::HRV,
    schema::BREATHING_RATE,
    schema::TOTAL_SEDENTARY_TIME,
    schema::VO2MAX,
    schema::HR_MIN,
    schema::HR_SKEWNESS,
    schema::SLEEP_EFFICIENCY,
    schema::SEDENTARY_BREAK_TOTAL,
    schema::SEDENTARY_BREAK_STD,
    schema::SPO2_SKEWNESS,
];

fn g(mean: f64, sd: f64) -> Gaussian {
    Gaussian::new(mean, sd)
}

/// Class-conditional daily parameters. Sedentary time and break counts are
/// halved and quartered so that they fit into one 1440-minute day with
/// 30-minute bouts.
pub fn default_features() -> BTreeMap<String, ClassConditional> {
    let entries = [
        (schema::HRV, g(49.326, 19.131), g(87.000, 29.455)),
        (schema::BREATHING_RATE, g(13.985, 1.365), g(16.717, 2.102)),
        (schema::TOTAL_SEDENTARY_TIME, g(1016.555, 203.863), g(1175.911, 197.862)),
        (schema::VO2MAX, g(48.182, 2.056), g(48.878, 0.693)),
        (schema::HR_MIN, g(46.536, 4.621), g(45.208, 3.419)),
        (schema::HR_SKEWNESS, g(0.939, 0.494), g(0.690, 0.486)),
        (schema::SLEEP_EFFICIENCY, g(82.624, 20.682), g(92.471, 4.509)),
        (schema::SEDENTARY_BREAK_TOTAL, g(23.755, 6.456), g(26.087, 5.266)),
        (schema::SEDENTARY_BREAK_STD, g(0.384, 0.088), g(0.351, 0.086)),
        (schema::SPO2_SKEWNESS, g(-1.327, 1.126), g(-1.631, 1.086)),
    ];
    entries
        .into_iter()
        .map(|(name, good, poor)| (name.to_string(), ClassConditional::new(good, poor)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortSpec {
    pub subjects: usize,
    /// Good and poor proportions.
    pub class_proportions: [f64; 2],
    pub phase_config: PhaseConfig,
    /// Leading days generated from each phase, by phase order.
    pub days_per_phase: Vec<usize>,
    /// Keyed by feature name; see [`PLANTED`].
    pub features: BTreeMap<String, ClassConditional>,
    pub rhr: Gaussian,
    pub hit_mean: [f64; 2],
    pub hit_sd: f64,
    /// Label threshold the realized season averages are kept consistent with.
    pub hit_threshold: f64,
    /// Per-day probability of a team match.
    pub match_rate: f64,
    /// Daily hit-percentage trend of middle hitters.
    pub middle_slope: f64,
    /// Assigned to subjects cyclically.
    pub positions: Vec<Position>,
    pub couplings: Couplings,
    pub phi_hr: f64,
    pub phi_spo2: f64,
    pub hr_interval_secs: u32,
    pub utc_offset_secs: i32,
    pub seed: u64,
}

impl Default for CohortSpec {
    fn default() -> Self {
        CohortSpec {
            subjects: 14,
            class_proportions: [11.0 / 14.0, 3.0 / 14.0],
            phase_config: PhaseConfig::season_2022_23(),
            days_per_phase: vec![14, 46, 10, 14],
            features: default_features(),
            rhr: g(55.0, 4.0),
            hit_mean: [0.30, 0.10],
            hit_sd: 0.08,
            hit_threshold: DEFAULT_HIT_THRESHOLD,
            match_rate: 0.3,
            middle_slope: 0.004,
            positions: vec![
                Position::Outside,
                Position::Middle,
                Position::Setter,
                Position::Outside,
                Position::Middle,
                Position::Other,
                Position::Libero,
            ],
            couplings: Couplings::default(),
            phi_hr: 0.9,
            phi_spo2: 0.95,
            hr_interval_secs: 9,
            utc_offset_secs: 0,
            seed: 0,
        }
    }
}

impl CohortSpec {
    /// No planted feature effect: poor-class parameters equal the good ones
    /// and every coupling is zero. Hit averages still separate the classes.
    pub fn null() -> Self {
        let mut spec = CohortSpec::default();
        for p in spec.features.values_mut() {
            p.poor = p.good;
        }
        spec.couplings = Couplings::NONE;
        spec.middle_slope = 0.0;
        spec
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Parameters for `feature`, falling back to the defaults.
    pub fn feature(&self, feature: &str) -> ClassConditional {
        self.features
            .get(feature)
            .copied()
            .or_else(|| default_features().get(feature).copied())
            .expect("planted feature")
    }

    pub fn poor_count(&self) -> usize {
        (self.subjects as f64 * self.class_proportions[1]).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidCohort(msg));
        if self.subjects == 0 {
            return bad("at least one subject is required".into());
        }
        let [a, b] = self.class_proportions;
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || (a + b - 1.0).abs() > 1e-9 {
            return bad(format!("class proportions {a} and {b} must lie in [0, 1] and sum to 1"));
        }
        PhaseConfig::new(self.phase_config.phases().to_vec())
            .map_err(|e| Error::InvalidCohort(e.to_string()))?;
        let phases = self.phase_config.phases();
        if self.days_per_phase.len() > phases.len() {
            return bad(format!(
                "{} day counts given for {} phases",
                self.days_per_phase.len(),
                phases.len()
            ));
        }
        for (days, phase) in self.days_per_phase.iter().zip(phases) {
            if *days as i64 > phase.days() {
                return bad(format!("phase {} has only {} days, {days} requested", phase.id, phase.days()));
            }
        }
        if self.days_per_phase.iter().sum::<usize>() == 0 {
            return bad("no days to generate".into());
        }
        for name in self.features.keys() {
            if !PLANTED.contains(&name.as_str()) {
                return bad(format!("feature '{name}' cannot be planted"));
            }
        }
        let mut gaussians: Vec<(String, Gaussian)> = vec![("rhr".into(), self.rhr)];
        for (name, p) in &self.features {
            gaussians.push((format!("{name} (good)"), p.good));
            gaussians.push((format!("{name} (poor)"), p.poor));
        }
        for (name, gauss) in gaussians {
            if !gauss.mean.is_finite() || !gauss.sd.is_finite() || gauss.sd < 0.0 {
                return bad(format!("{name} needs a finite mean and a non-negative SD"));
            }
        }
        if !(self.hit_sd >= 0.0 && self.hit_sd.is_finite()) {
            return bad("hit SD must be non-negative".into());
        }
        if self.hit_mean.iter().chain([&self.hit_threshold]).any(|m| !(-1.0..=1.0).contains(m)) {
            return bad("hit means and threshold must lie in [-1, 1]".into());
        }
        if !(0.0..=1.0).contains(&self.match_rate) {
            return bad("match rate must lie in [0, 1]".into());
        }
        if !self.middle_slope.is_finite() {
            return bad("middle slope must be finite".into());
        }
        if self.positions.is_empty() {
            return bad("at least one position is required".into());
        }
        for (name, phi) in [("phi_hr", self.phi_hr), ("phi_spo2", self.phi_spo2)] {
            if !(0.0..1.0).contains(&phi) {
                return bad(format!("{name} must lie in [0, 1)"));
            }
        }
        if self.hr_interval_secs == 0 || 86_400 % self.hr_interval_secs != 0 {
            return bad("heart-rate interval must divide a day".into());
        }
        let c = self.couplings;
        if ![c.stress_class, c.performance_hit, c.spo2_hit].iter().all(|v| v.is_finite()) {
            return bad("couplings must be finite".into());
        }
        Ok(())
    }
}
