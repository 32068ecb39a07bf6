use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type PhaseId = u8;

/// A half-open date range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub id: PhaseId,
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Phase {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date < self.end
    }

    pub fn days(&self) -> i64 {
        (self.end - self.start).num_days()
    }
}

/// Ordered, non-overlapping season phases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseConfig {
    phases: Vec<Phase>,
}

#[derive(Deserialize)]
struct RangeText {
    start: String,
    end: String,
}

#[derive(Deserialize)]
struct PhaseFile {
    phase1: Option<RangeText>,
    phase2: Option<RangeText>,
    phase3: Option<RangeText>,
    phase4: Option<RangeText>,
}

fn ymd(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
}

impl PhaseConfig {
    pub fn new(mut phases: Vec<Phase>) -> Result<Self> {
        phases.sort_by_key(|p| p.start);
        let mut ids = BTreeSet::new();
        for p in &phases {
            if !(1..=4).contains(&p.id) {
                return Err(Error::PhaseConfig(format!("phase id {} not in 1..=4", p.id)));
            }
            if !ids.insert(p.id) {
                return Err(Error::PhaseConfig(format!("phase {} defined twice", p.id)));
            }
            if p.end <= p.start {
                return Err(Error::PhaseConfig(format!("phase {} ends before it starts", p.id)));
            }
        }
        for pair in phases.windows(2) {
            if pair[1].start < pair[0].end {
                return Err(Error::PhaseConfig(format!(
                    "phases {} and {} overlap",
                    pair[0].id, pair[1].id
                )));
            }
            if pair[1].id < pair[0].id {
                return Err(Error::PhaseConfig(format!(
                    "phase {} is dated before phase {}",
                    pair[1].id, pair[0].id
                )));
            }
        }
        Ok(PhaseConfig { phases })
    }

    /// The 2022-23 season calendar: fall practice, semester end and winter
    /// break, January practice block, competition season. Shared boundary
    /// dates belong to the later phase.
    pub fn season_2022_23() -> Self {
        PhaseConfig::new(vec![
            Phase { id: 1, start: ymd(2022, 10, 23), end: ymd(2022, 11, 18) },
            Phase { id: 2, start: ymd(2022, 11, 18), end: ymd(2023, 1, 3) },
            Phase { id: 3, start: ymd(2023, 1, 3), end: ymd(2023, 1, 13) },
            Phase { id: 4, start: ymd(2023, 1, 13), end: ymd(2023, 4, 29) },
        ])
        .expect("built-in calendar is valid")
    }

    /// Parses
    ///
    /// ```toml
    /// [phase1]
    /// start = "2022-10-23"
    /// end = "2022-11-18"   # exclusive
    /// ```
    ///
    /// for any subset of `phase1`..`phase4`.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: PhaseFile =
            toml::from_str(text).map_err(|e| Error::PhaseConfig(e.to_string()))?;
        let mut phases = Vec::new();
        for (id, range) in [(1, file.phase1), (2, file.phase2), (3, file.phase3), (4, file.phase4)] {
            if let Some(r) = range {
                let parse = |s: &str| {
                    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
                        .map_err(|e| Error::PhaseConfig(format!("phase{id}: bad date '{s}': {e}")))
                };
                phases.push(Phase {
                    id,
                    start: parse(&r.start)?,
                    end: parse(&r.end)?,
                });
            }
        }
        if phases.is_empty() {
            return Err(Error::PhaseConfig("no phases defined".into()));
        }
        PhaseConfig::new(phases)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        let mut out = String::new();
        for p in &self.phases {
            out.push_str(&format!(
                "[phase{}]\nstart = \"{}\"\nend = \"{}\"\n\n",
                p.id, p.start, p.end
            ));
        }
        out
    }

    pub fn phases(&self) -> &[Phase] {
        &self.phases
    }

    pub fn phase(&self, id: PhaseId) -> Option<&Phase> {
        self.phases.iter().find(|p| p.id == id)
    }

    pub fn assign(&self, date: NaiveDate) -> Option<PhaseId> {
        self.phases.iter().find(|p| p.contains(date)).map(|p| p.id)
    }
}

pub fn assign_phase(date: NaiveDate, config: &PhaseConfig) -> Option<PhaseId> {
    config.assign(date)
}

/// A non-empty selection of phases, written `"2,3"` and displayed `"2+3"`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PhaseSet(BTreeSet<PhaseId>);

impl PhaseSet {
    pub fn new(ids: impl IntoIterator<Item = PhaseId>) -> Self {
        PhaseSet(ids.into_iter().collect())
    }

    pub fn contains(&self, id: PhaseId) -> bool {
        self.0.contains(&id)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = PhaseId> + '_ {
        self.0.iter().copied()
    }

    /// The seven pre-season combinations of phases 1-3.
    pub fn training_combinations() -> Vec<PhaseSet> {
        [
            &[1][..],
            &[2],
            &[3],
            &[1, 2],
            &[1, 3],
            &[2, 3],
            &[1, 2, 3],
        ]
        .iter()
        .map(|ids| PhaseSet::new(ids.iter().copied()))
        .collect()
    }

    pub fn is_training_combination(&self) -> bool {
        !self.0.is_empty() && self.0.iter().all(|id| (1..=3).contains(id))
    }

    /// `"Phase 2+3"`.
    pub fn label(&self) -> String {
        format!("Phase {self}")
    }
}

impl fmt::Display for PhaseSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u8::to_string).collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for PhaseSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for part in s.split([',', '+']) {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let id: PhaseId = part
                .parse()
                .map_err(|_| Error::PhaseConfig(format!("bad phase id '{part}'")))?;
            if !(1..=4).contains(&id) {
                return Err(Error::PhaseConfig(format!("phase id {id} not in 1..=4")));
            }
            ids.insert(id);
        }
        if ids.is_empty() {
            return Err(Error::PhaseConfig("empty phase selection".into()));
        }
        Ok(PhaseSet(ids))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn season_calendar_examples() {
        let cfg = PhaseConfig::season_2022_23();
        assert_eq!(assign_phase(ymd(2022, 11, 1), &cfg), Some(1));
        assert_eq!(assign_phase(ymd(2023, 1, 5), &cfg), Some(3));
        assert_eq!(assign_phase(ymd(2022, 10, 1), &cfg), None);
        assert_eq!(assign_phase(ymd(2022, 11, 18), &cfg), Some(2));
        assert_eq!(assign_phase(ymd(2023, 4, 28), &cfg), Some(4));
        assert_eq!(assign_phase(ymd(2023, 4, 29), &cfg), None);
        let days: Vec<i64> = cfg.phases().iter().map(Phase::days).collect();
        assert_eq!(days, vec![26, 46, 10, 106]);
    }

    #[test]
    fn rejects_overlap_and_reversal() {
        let overlap = PhaseConfig::new(vec![
            Phase { id: 1, start: ymd(2022, 1, 1), end: ymd(2022, 2, 1) },
            Phase { id: 2, start: ymd(2022, 1, 15), end: ymd(2022, 3, 1) },
        ]);
        assert!(overlap.is_err());
        let reversed = PhaseConfig::new(vec![
            Phase { id: 2, start: ymd(2022, 1, 1), end: ymd(2022, 2, 1) },
            Phase { id: 1, start: ymd(2022, 2, 1), end: ymd(2022, 3, 1) },
        ]);
        assert!(reversed.is_err());
        let gapped = PhaseConfig::new(vec![
            Phase { id: 1, start: ymd(2022, 1, 1), end: ymd(2022, 2, 1) },
            Phase { id: 2, start: ymd(2022, 2, 10), end: ymd(2022, 3, 1) },
        ]);
        assert_eq!(gapped.unwrap().assign(ymd(2022, 2, 5)), None);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = PhaseConfig::season_2022_23();
        let parsed = PhaseConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(parsed, cfg);
        assert!(PhaseConfig::from_toml_str("").is_err());
        assert!(PhaseConfig::from_toml_str("[phase1]\nstart = \"x\"\nend = \"2022-01-01\"").is_err());
    }

    #[test]
    fn phase_set_parsing() {
        let set: PhaseSet = "2,3".parse().unwrap();
        assert_eq!(set.to_string(), "2+3");
        assert_eq!(set.label(), "Phase 2+3");
        assert!(set.is_training_combination());
        assert!("".parse::<PhaseSet>().is_err());
        assert!("5".parse::<PhaseSet>().is_err());
        assert!(!"4".parse::<PhaseSet>().unwrap().is_training_combination());
        assert_eq!(PhaseSet::training_combinations().len(), 7);
    }

    proptest::proptest! {
        #[test]
        fn assignment_total_and_unique(offset in 0i64..400) {
            let cfg = PhaseConfig::season_2022_23();
            let date = ymd(2022, 10, 1) + chrono::Duration::days(offset);
            let hits = cfg.phases().iter().filter(|p| p.contains(date)).count();
            proptest::prop_assert!(hits <= 1);
            proptest::prop_assert_eq!(cfg.assign(date).is_some(), hits == 1);
        }
    }
}
