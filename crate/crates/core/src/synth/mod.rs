//! Synthetic cohorts with planted class effects, written in the ingest layout.

mod spec;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::schema;
use crate::ingest::{
    write_dataset, DailyKind, DailyScalar, DayClock, EmaItem, EmaResponse, Metric, Sample, SleepEvent, SleepSegment,
    SleepStage, SubjectData, SubjectDataset,
};
use crate::labels::{binarize, season_average, BoxScore, MatchWeighting, Position};
use crate::rng;

pub use spec::{default_features, ClassConditional, CohortSpec, Couplings, Gaussian, PLANTED};

pub const TRUTH_FILE: &str = "truth.json";
pub const PHASES_FILE: &str = "phases.toml";

const HR_SCALE: f64 = 10.0;
const SPO2_CENTER: f64 = 96.0;
const SPO2_SCALE: f64 = 0.8;
const MAX_SKEW: f64 = 2.7;
const MATCH_REDRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectTruth {
    /// 0 good, 1 poor.
    pub class: u8,
    pub position: Position,
    pub matches: usize,
    pub season_hit_avg: Option<f64>,
}

/// Ground truth of a generated cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub class_counts: [usize; 2],
    pub subjects: BTreeMap<String, SubjectTruth>,
    pub match_dates: Vec<NaiveDate>,
    pub couplings: Couplings,
    pub middle_slope: f64,
    pub spec: CohortSpec,
}

impl Truth {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn subject_id(index: usize) -> String {
    format!("S{:02}", index + 1)
}

/// Dates generated for `spec`, in order.
pub fn cohort_dates(spec: &CohortSpec) -> Vec<NaiveDate> {
    spec.phase_config
        .phases()
        .iter()
        .zip(&spec.days_per_phase)
        .flat_map(|(phase, &days)| (0..days).map(move |d| phase.start + Duration::days(d as i64)))
        .collect()
}

fn draw(rng: &mut ChaCha8Rng, g: Gaussian) -> f64 {
    if g.sd == 0.0 {
        return g.mean;
    }
    Normal::new(g.mean, g.sd).expect("validated SD").sample(rng)
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn round_to(x: f64, decimals: i32) -> f64 {
    let f = 10f64.powi(decimals);
    (x * f).round() / f
}

/// Skewness of `z + a(z² − 1)` for standard normal `z`.
fn transform_skew(a: f64) -> f64 {
    (6.0 * a + 8.0 * a.powi(3)) / (1.0 + 2.0 * a * a).powf(1.5)
}

/// Coefficient `a` whose transform has skewness `target`.
pub fn skew_coefficient(target: f64) -> f64 {
    let target = target.clamp(-MAX_SKEW, MAX_SKEW);
    let (mut lo, mut hi) = (-50.0, 50.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if transform_skew(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Unit-variance AR(1) series pushed through the skewing transform.
pub fn skewed_ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64, skew: f64) -> Vec<f64> {
    let a = skew_coefficient(skew);
    let norm = (1.0 + 2.0 * a * a).sqrt();
    let innovation = (1.0 - phi * phi).sqrt();
    let mut z = std_normal(rng);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i > 0 {
            z = phi * z + innovation * std_normal(rng);
        }
        out.push((z + a * (z * z - 1.0)) / norm);
    }
    out
}

/// Splits `total` into `parts` non-negative integers summing to `total`.
fn split(rng: &mut ChaCha8Rng, total: usize, parts: usize) -> Vec<usize> {
    if parts == 0 {
        return Vec::new();
    }
    let mut cuts: Vec<usize> = (0..parts - 1).map(|_| rng.random_range(0..=total)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(total - prev);
    out
}

fn active_steps(rng: &mut ChaCha8Rng, level: u8) -> f64 {
    f64::from(if level == 2 {
        rng.random_range(68..=140u32)
    } else {
        rng.random_range(34..=67u32)
    })
}

/// Minute steps with `sedentary` level-0 minutes, about `bouts` zero-step
/// bouts of at least 30 minutes and break levels whose spread is near
/// `break_std`.
pub fn step_minutes(rng: &mut ChaCha8Rng, sedentary: usize, bouts: usize, break_std: f64) -> Vec<f64> {
    const DAY: usize = 1440;
    let sedentary = sedentary.min(DAY);
    let active = DAY - sedentary;
    let bouts = bouts.min(sedentary / 30).min(active);
    let mut steps = Vec::with_capacity(DAY);
    if bouts == 0 {
        for _ in 0..active {
            let level = rng.random_range(1..=2u8);
            steps.push(active_steps(rng, level));
        }
        for _ in 0..sedentary {
            steps.push(f64::from(rng.random_range(1..=33u32)));
        }
        return steps;
    }
    let s = break_std.clamp(0.0, 0.5);
    let q = (1.0 - (1.0 - 4.0 * s * s).max(0.0).sqrt()) / 2.0;
    let high = ((q * bouts as f64).round() as usize).min(bouts);
    let mut break_levels: Vec<u8> = (0..bouts).map(|i| if i < high { 2 } else { 1 }).collect();
    break_levels.shuffle(rng);

    let bout_extra = split(rng, sedentary - 30 * bouts, bouts);
    // runs after each bout hold at least the break minute
    let mut runs = split(rng, active - bouts, bouts + 1);
    for r in runs.iter_mut().skip(1) {
        *r += 1;
    }
    for _ in 0..runs[0] {
        let level = rng.random_range(1..=2u8);
        steps.push(active_steps(rng, level));
    }
    for b in 0..bouts {
        steps.extend(std::iter::repeat_n(0.0, 30 + bout_extra[b]));
        steps.push(active_steps(rng, break_levels[b]));
        for _ in 1..runs[b + 1] {
            let level = rng.random_range(1..=2u8);
            steps.push(active_steps(rng, level));
        }
    }
    debug_assert_eq!(steps.len(), DAY);
    steps
}

/// A night ending on the morning of `date` with the given efficiency.
fn sleep_event(rng: &mut ChaCha8Rng, clock: &DayClock, date: NaiveDate, efficiency: f64) -> SleepEvent {
    let in_bed = (460.0 + 40.0 * std_normal(rng)).clamp(240.0, 720.0).round() as i64;
    let wake = ((in_bed as f64) * (1.0 - efficiency.clamp(5.0, 100.0) / 100.0)).round() as i64;
    let asleep = in_bed - wake;
    let end = clock.day_start(date) + 7 * 3600 + 60 * rng.random_range(-30..=30i64);
    let start = end - 60 * in_bed;

    let mut blocks: Vec<(SleepStage, i64)> = Vec::new();
    let cycle = [SleepStage::Light, SleepStage::Deep, SleepStage::Light, SleepStage::Rem];
    let mut left = asleep;
    let mut k = 0;
    while left > 0 {
        let len = rng.random_range(10..=40i64).min(left);
        blocks.push((cycle[k % cycle.len()], len));
        left -= len;
        k += 1;
    }
    let wake_parts = if wake == 0 { 0 } else { (1 + wake / 10).min(blocks.len() as i64 + 1) as usize };
    let wake_lengths: Vec<i64> = if wake_parts == 0 {
        Vec::new()
    } else {
        let mut parts: Vec<i64> = split(rng, (wake as usize) - wake_parts, wake_parts)
            .into_iter()
            .map(|p| p as i64 + 1)
            .collect();
        parts.shuffle(rng);
        parts
    };
    // wake piece i goes after block slot[i] (0 means before the first block)
    let mut slots: Vec<usize> = (0..=blocks.len()).collect();
    slots.shuffle(rng);
    let mut slots: Vec<usize> = slots.into_iter().take(wake_parts).collect();
    slots.sort_unstable();

    let mut ordered: Vec<(SleepStage, i64)> = Vec::new();
    let mut w = 0;
    for slot in 0..=blocks.len() {
        while w < slots.len() && slots[w] == slot {
            ordered.push((SleepStage::Wake, wake_lengths[w]));
            w += 1;
        }
        if slot < blocks.len() {
            ordered.push(blocks[slot]);
        }
    }
    let mut segments = Vec::with_capacity(ordered.len());
    let mut t = start;
    for (stage, minutes) in ordered {
        segments.push(SleepSegment {
            stage,
            start: t,
            end: t + 60 * minutes,
        });
        t += 60 * minutes;
    }
    debug_assert_eq!(t, end);
    SleepEvent { start, end, segments }
}

fn ema_score(rng: &mut ChaCha8Rng, mean: f64) -> u8 {
    (mean + 1.2 * std_normal(rng)).round().clamp(1.0, 7.0) as u8
}

/// Truncated to `[-1, 1]` by redrawing.
fn draw_hit(rng: &mut ChaCha8Rng, mean: f64, sd: f64) -> (f64, f64) {
    for _ in 0..1000 {
        let z = std_normal(rng);
        let h = mean + sd * z;
        if (-1.0..=1.0).contains(&h) {
            return (h, z);
        }
    }
    (mean.clamp(-1.0, 1.0), 0.0)
}

fn box_score(rng: &mut ChaCha8Rng, date: NaiveDate, hit: f64, position: Position) -> BoxScore {
    let attempts = rng.random_range(5..=30u32);
    let a = attempts as i64;
    let net = (hit * attempts as f64).round() as i64;
    let lo = (-net).max(0);
    let hi = (a - net) / 2;
    let errors = lo + rng.random_range(0..=(hi - lo).min(4));
    let kills = net + errors;
    let service_aces = rng.random_range(0..=3u32);
    let block_solos = rng.random_range(0..=2u32);
    BoxScore {
        date,
        kills: kills as u32,
        errors: errors as u32,
        attempts,
        points: kills as u32 + service_aces + block_solos,
        digs: rng.random_range(0..=15),
        assists: rng.random_range(0..=if position == Position::Setter { 40 } else { 3 }),
        service_aces,
        service_errors: rng.random_range(0..=3),
        reception_errors: rng.random_range(0..=2),
        block_solos,
        block_errors: rng.random_range(0..=1),
        ball_handling_errors: rng.random_range(0..=1),
        total_attempts: attempts + rng.random_range(0..=10),
        position,
    }
}

/// Box scores and standardized hit residuals for every match day. The whole
/// sequence is redrawn until its season average falls on the planted class's
/// side of the label threshold.
fn draw_matches(
    spec: &CohortSpec,
    plan: &SubjectPlan,
    matches: &BTreeMap<NaiveDate, f64>,
) -> BTreeMap<NaiveDate, (BoxScore, f64)> {
    let mut rng = rng::derived(plan.seed, 1);
    let mean = spec.hit_mean[usize::from(plan.class)];
    let mut drawn = BTreeMap::new();
    for _ in 0..MATCH_REDRAWS {
        drawn.clear();
        for (&date, &centered_day) in matches {
            let trend = if plan.position == Position::Middle { spec.middle_slope * centered_day } else { 0.0 };
            let (hit, z) = draw_hit(&mut rng, mean + trend, spec.hit_sd);
            drawn.insert(date, (box_score(&mut rng, date, hit, plan.position), z));
        }
        let scores: Vec<BoxScore> = drawn.values().map(|(b, _)| b.clone()).collect();
        let consistent = season_average(&scores, MatchWeighting::PerMatch)
            .is_none_or(|avg| binarize(avg, spec.hit_threshold).code() == plan.class);
        if consistent {
            break;
        }
    }
    drawn
}

struct SubjectPlan {
    class: u8,
    position: Position,
    seed: u64,
}

fn generate_subject(
    spec: &CohortSpec,
    plan: &SubjectPlan,
    dates: &[NaiveDate],
    matches: &BTreeMap<NaiveDate, f64>,
    clock: &DayClock,
) -> SubjectData {
    let mut rng = rng::seeded(plan.seed);
    let class = plan.class;
    let drawn = draw_matches(spec, plan, matches);
    let param = |name: &str| spec.feature(name).for_class(class);
    let mut data = SubjectData::default();
    let mut hr = Vec::new();
    let mut spo2 = Vec::new();
    let mut steps = Vec::new();
    let mut distance = Vec::new();
    let mut calories = Vec::new();

    for &date in dates {
        let t0 = clock.day_start(date);

        let mut hit_residual = None;
        if let Some((score, z)) = drawn.get(&date) {
            data.box_scores.push(score.clone());
            hit_residual = Some(*z);
        }

        for (kind, value) in [
            (DailyKind::HrvRmssdMs, draw(&mut rng, param(schema::HRV)).max(1.0)),
            (DailyKind::RhrBpm, draw(&mut rng, spec.rhr).clamp(30.0, 120.0)),
            (DailyKind::BreathingRateRpm, draw(&mut rng, param(schema::BREATHING_RATE)).max(1.0)),
            (DailyKind::Vo2max, draw(&mut rng, param(schema::VO2MAX)).max(1.0)),
        ] {
            data.daily.push(DailyScalar {
                date,
                kind,
                value: round_to(value, 3),
            });
        }

        let hr_min = draw(&mut rng, param(schema::HR_MIN)).clamp(30.0, 120.0);
        let skew = draw(&mut rng, param(schema::HR_SKEWNESS));
        let shape = skewed_ar1(&mut rng, 1440, spec.phi_hr, skew);
        let lowest = shape.iter().copied().fold(f64::INFINITY, f64::min);
        let hr_minutes: Vec<f64> = shape
            .iter()
            .map(|y| round_to((hr_min + HR_SCALE * (y - lowest)).min(250.0), 2))
            .collect();
        let interval = i64::from(spec.hr_interval_secs);
        for k in 0..86_400 / interval {
            let offset = k * interval;
            hr.push(Sample {
                timestamp: t0 + offset,
                value: hr_minutes[(offset / 60) as usize],
            });
        }

        let spread = SPO2_SCALE * (-spec.couplings.spo2_hit * hit_residual.unwrap_or(0.0)).exp();
        let skew = draw(&mut rng, param(schema::SPO2_SKEWNESS));
        let shape = skewed_ar1(&mut rng, 1440, spec.phi_spo2, skew);
        for (m, y) in shape.iter().enumerate() {
            spo2.push(Sample {
                timestamp: t0 + 60 * m as i64,
                value: round_to((SPO2_CENTER + spread * y).clamp(50.0, 100.0), 2),
            });
        }

        let sedentary = draw(&mut rng, param(schema::TOTAL_SEDENTARY_TIME)).round().clamp(0.0, 1440.0) as usize;
        let bouts = draw(&mut rng, param(schema::SEDENTARY_BREAK_TOTAL)).round().max(0.0) as usize;
        let break_std = draw(&mut rng, param(schema::SEDENTARY_BREAK_STD));
        for (m, s) in step_minutes(&mut rng, sedentary, bouts, break_std).into_iter().enumerate() {
            let timestamp = t0 + 60 * m as i64;
            steps.push(Sample { timestamp, value: s });
            distance.push(Sample {
                timestamp,
                value: round_to(s * 0.00075, 5),
            });
            calories.push(Sample {
                timestamp,
                value: round_to(1.1 + 0.045 * s, 3),
            });
        }

        let efficiency = draw(&mut rng, param(schema::SLEEP_EFFICIENCY));
        data.sleep.push(sleep_event(&mut rng, clock, date, efficiency));

        let survey_time = t0 + 20 * 3600;
        for item in EmaItem::ALL {
            let mean = match item {
                EmaItem::Stress => 3.5 + spec.couplings.stress_class * f64::from(class),
                EmaItem::Performance => 4.0 + spec.couplings.performance_hit * hit_residual.unwrap_or(0.0),
                _ => 4.0,
            };
            data.ema.push(EmaResponse {
                timestamp: survey_time,
                item,
                score: ema_score(&mut rng, mean),
            });
        }
    }
    for (metric, samples) in [
        (Metric::HeartRate, hr),
        (Metric::Spo2, spo2),
        (Metric::Steps, steps),
        (Metric::Distance, distance),
        (Metric::Calories, calories),
    ] {
        data.streams.insert(metric, samples);
    }
    data
}

/// Builds the cohort in memory. Subjects are generated in parallel from
/// per-subject seeds; the result depends only on `spec`.
pub fn synthesize(spec: &CohortSpec) -> Result<(SubjectDataset, Truth)> {
    spec.validate()?;
    let clock = DayClock::new(spec.utc_offset_secs);
    let dates = cohort_dates(spec);

    let mut schedule_rng = rng::derived(spec.seed, u64::MAX);
    let match_dates: Vec<NaiveDate> = dates
        .iter()
        .copied()
        .filter(|_| schedule_rng.random::<f64>() < spec.match_rate)
        .collect();
    let season_start = spec.phase_config.phases()[0].start;
    let offsets: Vec<f64> = match_dates.iter().map(|d| (*d - season_start).num_days() as f64).collect();
    let center = if offsets.is_empty() { 0.0 } else { offsets.iter().sum::<f64>() / offsets.len() as f64 };
    let matches: BTreeMap<NaiveDate, f64> = match_dates.iter().copied().zip(offsets.iter().map(|o| o - center)).collect();

    let mut order: Vec<usize> = (0..spec.subjects).collect();
    order.shuffle(&mut rng::derived(spec.seed, u64::MAX - 1));
    let mut classes = vec![0u8; spec.subjects];
    for &i in order.iter().take(spec.poor_count()) {
        classes[i] = 1;
    }
    let plans: Vec<SubjectPlan> = (0..spec.subjects)
        .map(|i| SubjectPlan {
            class: classes[i],
            position: spec.positions[i % spec.positions.len()],
            seed: rng::derive_seed(spec.seed, i as u64),
        })
        .collect();

    let generated: Vec<SubjectData> = plans
        .par_iter()
        .map(|plan| generate_subject(spec, plan, &dates, &matches, &clock))
        .collect();

    let mut dataset = SubjectDataset::new(clock);
    let mut subjects = BTreeMap::new();
    let mut class_counts = [0usize; 2];
    for (i, (plan, data)) in plans.iter().zip(generated).enumerate() {
        let id = subject_id(i);
        class_counts[usize::from(plan.class)] += 1;
        subjects.insert(
            id.clone(),
            SubjectTruth {
                class: plan.class,
                position: plan.position,
                matches: data.box_scores.len(),
                season_hit_avg: season_average(&data.box_scores, MatchWeighting::PerMatch),
            },
        );
        dataset.subjects.insert(id, data);
    }
    let truth = Truth {
        seed: spec.seed,
        class_counts,
        subjects,
        match_dates,
        couplings: spec.couplings,
        middle_slope: spec.middle_slope,
        spec: spec.clone(),
    };
    Ok((dataset, truth))
}

/// Writes the dataset, `phases.toml` and `truth.json` under `root`.
pub fn write_cohort(dataset: &SubjectDataset, truth: &Truth, root: &Path) -> Result<()> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    write_dataset(dataset, root)?;
    let phases = root.join(PHASES_FILE);
    fs::write(&phases, truth.spec.phase_config.to_toml_string()).map_err(|e| Error::io(&phases, e))?;
    let path = root.join(TRUTH_FILE);
    let mut text = serde_json::to_string_pretty(truth)?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(())
}

pub fn generate_cohort(spec: &CohortSpec, root: &Path) -> Result<Truth> {
    let (dataset, truth) = synthesize(spec)?;
    write_cohort(&dataset, &truth, root)?;
    Ok(truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{sedentary_bouts, FeatureConfig};
    use crate::ingest::PhaseConfig;
    use crate::signal::MinuteSeries;

    fn small() -> CohortSpec {
        CohortSpec {
            subjects: 4,
            class_proportions: [0.5, 0.5],
            days_per_phase: vec![0, 3],
            hr_interval_secs: 60,
            ..CohortSpec::default()
        }
    }

    #[test]
    fn zero_subjects_is_rejected() {
        let spec = CohortSpec { subjects: 0, ..small() };
        assert!(matches!(synthesize(&spec), Err(Error::InvalidCohort(_))));
        let spec = CohortSpec { class_proportions: [0.5, 0.6], ..small() };
        assert!(spec.validate().is_err());
        let spec = CohortSpec { days_per_phase: vec![0, 0, 11], ..small() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn skew_transform_inverts() {
        for s in [-2.0, -0.5, 0.0, 0.7, 1.9] {
            assert!((transform_skew(skew_coefficient(s)) - s).abs() < 1e-9);
        }
    }

    #[test]
    fn step_layout_hits_targets() {
        let mut rng = rng::seeded(1);
        let cfg = FeatureConfig::default();
        let steps = step_minutes(&mut rng, 1000, 24, 0.4);
        assert_eq!(steps.len(), 1440);
        assert_eq!(steps.iter().filter(|&&s| cfg.activity_level(s) == 0).count(), 1000);
        let series = MinuteSeries::new(steps, vec![false; 1440]);
        let bouts = sedentary_bouts(&series, &cfg);
        assert_eq!(bouts.len(), 24);
        assert!(bouts.iter().all(|b| b.break_level.is_some()));
        let none = step_minutes(&mut rng, 20, 5, 0.4);
        assert_eq!(none.iter().filter(|&&s| s < 34.0).count(), 20);
    }

    #[test]
    fn sleep_event_tiles_and_matches_efficiency() {
        let mut rng = rng::seeded(2);
        let clock = DayClock::default();
        let date = NaiveDate::from_ymd_opt(2022, 12, 1).unwrap();
        for eff in [100.0, 90.0, 50.0, 10.0] {
            let ev = sleep_event(&mut rng, &clock, date, eff);
            ev.validate().unwrap();
            assert_eq!(clock.sleep_date(&ev), date);
            let got = 100.0 * (1.0 - ev.stage_secs(SleepStage::Wake) as f64 / ev.duration_secs() as f64);
            assert!((got - eff).abs() < 0.5, "{got} vs {eff}");
        }
    }

    #[test]
    fn box_scores_are_valid() {
        let mut rng = rng::seeded(3);
        let date = NaiveDate::from_ymd_opt(2023, 2, 1).unwrap();
        for i in 0..500 {
            let h = -1.0 + 2.0 * i as f64 / 499.0;
            let b = box_score(&mut rng, date, h, Position::Outside);
            b.validate().unwrap();
            assert!(b.kills + b.errors <= b.attempts);
            assert!((5..=30).contains(&b.attempts));
            assert!((b.hit_percentage().unwrap() - h).abs() <= 0.5 / f64::from(b.attempts) + 1e-12);
        }
    }

    #[test]
    fn classes_follow_proportions() {
        let (ds, truth) = synthesize(&small().with_seed(4)).unwrap();
        assert_eq!(truth.class_counts, [2, 2]);
        assert_eq!(ds.subjects.len(), 4);
        let phase2 = PhaseConfig::season_2022_23().phase(2).unwrap().start;
        for data in ds.subjects.values() {
            assert_eq!(data.daily.first().unwrap().date, phase2);
            assert_eq!(data.samples(Metric::HeartRate).len(), 3 * 1440);
        }
    }

    #[test]
    fn same_seed_same_cohort() {
        let a = synthesize(&small().with_seed(5)).unwrap();
        let b = synthesize(&small().with_seed(5)).unwrap();
        let c = synthesize(&small().with_seed(6)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }
}
