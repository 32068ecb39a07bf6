use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::NaiveDate;
use serde::Serialize;

use courtside::eval::{bootstrap_loso, EvalReport, Metrics, PipelineConfig, TuningConfig};
use courtside::features::{build_matrix, FeatureConfig, FeatureMatrix};
use courtside::ingest::{hr_compliance_filter, load_dataset, ComplianceReport, DayClock, LoadOptions, PhaseConfig, PhaseSet, SubjectDataset};
use courtside::labels::{label_matrix, season_labels, write_labels_csv, LabelConfig, LabeledMatrix, Position, SeasonLabel};
use courtside::select::{select_features, write_selection_csv, SelectConfig, SelectionReport};
use courtside::stats::{
    daily_hits_vs_ema, daily_hits_vs_features, dummy_term, ema_vs_season, format_p, interaction_term, ols_trend,
    sort_by_abs_rho, trend_observations, CorrelationEntry, PValueMode, SlopeEstimate, TrendObservation, TrendResult,
};
use courtside::synth::{self, CohortSpec};

use crate::config::{config_hash, RunConfig};
use crate::output::OutputDir;
use crate::{SynthArgs, UsageError};

struct Cohort {
    dataset: SubjectDataset,
    compliance: ComplianceReport,
    phase_config: PhaseConfig,
}

fn load(cfg: &RunConfig) -> Result<Cohort> {
    let options = LoadOptions {
        clock: DayClock::new(cfg.utc_offset_secs),
        ..LoadOptions::default()
    };
    let raw = load_dataset(&cfg.data_root, &options)?;
    if raw.subjects.is_empty() {
        return Err(courtside::Error::Parse(format!("no subjects found under {}", cfg.data_root.display())).into());
    }
    for d in &raw.diagnostics {
        eprintln!("warning: {d}");
    }
    let (dataset, compliance) = hr_compliance_filter(&raw, cfg.min_hr_readings);
    Ok(Cohort {
        dataset,
        compliance,
        phase_config: cfg.load_phase_config()?,
    })
}

fn label_config(cfg: &RunConfig) -> LabelConfig {
    LabelConfig {
        threshold: cfg.hit_threshold,
        ..LabelConfig::default()
    }
}

fn labels(cfg: &RunConfig, cohort: &Cohort) -> Result<BTreeMap<String, SeasonLabel>> {
    let labels = season_labels(&cohort.dataset, &label_config(cfg));
    if labels.is_empty() {
        return Err(courtside::Error::NoRows).context("no subject has a valid match");
    }
    Ok(labels)
}

fn select_config(cfg: &RunConfig) -> SelectConfig {
    SelectConfig {
        cutoff: cfg.collinearity_cutoff,
        alpha: cfg.alpha,
    }
}

fn pipeline_config(cfg: &RunConfig) -> PipelineConfig {
    PipelineConfig {
        select: select_config(cfg),
        smote_k: cfg.smote.then_some(cfg.smote_k),
        tuning: (cfg.tuning_budget > 0).then(|| TuningConfig {
            budget: cfg.tuning_budget,
            space: None,
        }),
    }
}

fn p_mode(cfg: &RunConfig) -> PValueMode {
    if cfg.permutations > 0 {
        PValueMode::Permutation {
            permutations: cfg.permutations,
            seed: cfg.seed,
        }
    } else {
        PValueMode::TApprox
    }
}

fn labeled(cohort: &Cohort, labels: &BTreeMap<String, SeasonLabel>, phases: &PhaseSet) -> LabeledMatrix {
    let matrix = build_matrix(&cohort.dataset, &cohort.phase_config, phases, &FeatureConfig::default());
    let (data, report) = label_matrix(&matrix, labels);
    for (subject, rows) in report.dropped {
        eprintln!("warning: {subject} has no label; {rows} rows dropped");
    }
    data
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_rows<W: Write>(out: W, header: &[&str], rows: Vec<Vec<String>>) -> courtside::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn finish(out: OutputDir, command: &str, cfg: &RunConfig) -> Result<()> {
    let root = out.root().display().to_string();
    let hash = out.hash().to_string();
    let files = out.finish(command, cfg.seed, cfg)?;
    eprintln!("{command}: wrote {} files to {root} (config {hash})", files.len());
    Ok(())
}

pub fn ingest(cfg: &RunConfig) -> Result<()> {
    let cohort = load(cfg)?;
    let mut out = OutputDir::create(&cfg.output_dir, &cfg.hash())?;
    write_ingest(&mut out, &cohort)?;
    finish(out, "ingest", cfg)
}

fn write_ingest(out: &mut OutputDir, cohort: &Cohort) -> Result<()> {
    let rows = cohort
        .compliance
        .subjects
        .iter()
        .map(|(id, c)| {
            let data = cohort.dataset.subject(id);
            vec![
                id.clone(),
                c.original_days.to_string(),
                c.retained_days.to_string(),
                c.excluded.len().to_string(),
                data.map_or(0, |d| d.box_scores.len()).to_string(),
                data.map_or(0, |d| d.ema.len()).to_string(),
            ]
        })
        .collect();
    out.csv("ingest_summary.csv", |w| {
        csv_rows(w, &["subject", "original_days", "retained_days", "excluded_days", "matches", "ema_responses"], rows)
    })?;
    let diags = cohort
        .dataset
        .diagnostics
        .iter()
        .map(|d| vec![d.file.display().to_string(), d.line.to_string(), d.message.clone()])
        .collect();
    out.csv("diagnostics.csv", |w| csv_rows(w, &["file", "line", "message"], diags))
}

pub fn featurize(cfg: &RunConfig) -> Result<()> {
    let cohort = load(cfg)?;
    let sets = cfg.phase_sets()?;
    let mut out = OutputDir::create(&cfg.output_dir, &cfg.hash())?;
    for set in &sets {
        let matrix = build_matrix(&cohort.dataset, &cohort.phase_config, set, &FeatureConfig::default());
        let name = if sets.len() == 1 { "features.csv".to_string() } else { format!("features_phase{}.csv", set.ids().map(|i| i.to_string()).collect::<String>()) };
        out.csv(&name, |w| matrix.write_csv(w))?;
    }
    finish(out, "featurize", cfg)
}

pub fn label(cfg: &RunConfig) -> Result<()> {
    let cohort = load(cfg)?;
    let labels = labels(cfg, &cohort)?;
    let mut out = OutputDir::create(&cfg.output_dir, &cfg.hash())?;
    write_labels(&mut out, &labels)?;
    finish(out, "label", cfg)
}

fn write_labels(out: &mut OutputDir, labels: &BTreeMap<String, SeasonLabel>) -> Result<()> {
    out.csv("labels.csv", |w| write_labels_csv(labels, w))?;
    let poor = labels.values().filter(|l| l.class.code() == 1).count();
    println!("labels: {} good, {poor} poor", labels.len() - poor);
    Ok(())
}

pub fn select(cfg: &RunConfig) -> Result<()> {
    let cohort = load(cfg)?;
    let labels = labels(cfg, &cohort)?;
    let mut out = OutputDir::create(&cfg.output_dir, &cfg.hash())?;
    write_select(cfg, &mut out, &cohort, &labels)?;
    finish(out, "select", cfg)
}

fn write_select(cfg: &RunConfig, out: &mut OutputDir, cohort: &Cohort, labels: &BTreeMap<String, SeasonLabel>) -> Result<()> {
    let mut reports: Vec<(PhaseSet, SelectionReport)> = Vec::new();
    for set in cfg.phase_sets()? {
        let data = labeled(cohort, labels, &set);
        let rows: Vec<usize> = (0..data.len()).collect();
        reports.push((set, select_features(&data, &rows, &select_config(cfg))?));
    }
    let single = reports.len() == 1;
    for (set, report) in &reports {
        let suffix = if single { String::new() } else { format!("_phase{}", set.ids().map(|i| i.to_string()).collect::<String>()) };
        out.csv(&format!("selection{suffix}.csv"), |w| write_selection_csv(report, w))?;
        let pairs = report
            .collinearity
            .dropped
            .iter()
            .map(|p| vec![p.kept.clone(), p.dropped.clone(), p.r.to_string()])
            .collect();
        out.csv(&format!("collinearity{suffix}.csv"), |w| csv_rows(w, &["kept", "dropped", "r"], pairs))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct EvaluationRecord<'a> {
    model: &'a str,
    phases: String,
    report: &'a EvalReport,
}

pub fn evaluate(cfg: &RunConfig) -> Result<()> {
    let cohort = load(cfg)?;
    let labels = labels(cfg, &cohort)?;
    let mut out = OutputDir::create(&cfg.output_dir, &cfg.hash())?;
    write_evaluate(cfg, &mut out, &cohort, &labels)?;
    finish(out, "evaluate", cfg)
}

fn write_evaluate(cfg: &RunConfig, out: &mut OutputDir, cohort: &Cohort, labels: &BTreeMap<String, SeasonLabel>) -> Result<()> {
    let specs = cfg.model_specs()?;
    let pipeline = pipeline_config(cfg);
    let mut results: Vec<(String, PhaseSet, EvalReport)> = Vec::new();
    for set in cfg.phase_sets()? {
        let data = labeled(cohort, labels, &set);
        for (name, spec) in &specs {
            let report = bootstrap_loso(&data, spec, &pipeline, cfg.seed, cfg.iterations)
                .with_context(|| format!("evaluating {name} on phase {set}"))?;
            for subject in report.skipped_subjects() {
                eprintln!("warning: {name} phase {set}: fold {subject} skipped");
            }
            results.push((name.clone(), set.clone(), report));
        }
    }

    let mut summary = Vec::new();
    let mut iterations = Vec::new();
    let mut predictions = Vec::new();
    for (model, set, report) in &results {
        let mut row = vec![model.clone(), set.to_string(), report.iterations.len().to_string()];
        row.extend(report.summary().into_iter().map(|s| s.formatted));
        row.push(report.skipped_subjects().join(" "));
        summary.push(row);
        for it in &report.iterations {
            let mut row = vec![model.clone(), set.to_string(), it.iteration.to_string(), it.seed.to_string(), it.n_predictions.to_string()];
            row.extend(it.metrics.values().iter().map(f64::to_string));
            iterations.push(row);
        }
        for p in &report.predictions {
            predictions.push(vec![
                model.clone(),
                set.to_string(),
                p.subject.clone(),
                p.date.to_string(),
                p.score.to_string(),
                p.predicted.to_string(),
                p.truth.to_string(),
            ]);
        }
    }
    let mut header = vec!["model", "phases", "iterations"];
    header.extend(Metrics::NAMES);
    header.push("skipped_subjects");
    out.csv("metrics_summary.csv", |w| csv_rows(w, &header, summary))?;
    let mut header = vec!["model", "phases", "iteration", "seed", "n"];
    header.extend(Metrics::NAMES);
    out.csv("metrics_iterations.csv", |w| csv_rows(w, &header, iterations))?;
    out.csv("predictions.csv", |w| {
        csv_rows(w, &["model", "phases", "subject", "date", "score", "predicted", "truth"], predictions)
    })?;
    let records: Vec<EvaluationRecord> = results
        .iter()
        .map(|(model, set, report)| EvaluationRecord {
            model,
            phases: set.to_string(),
            report,
        })
        .collect();
    out.json("evaluation.json", "evaluations", &records)?;
    for (model, set, report) in &results {
        println!(
            "{model} phase {set}: {}",
            report
                .summary()
                .iter()
                .map(|s| format!("{} {}", s.metric, s.formatted))
                .collect::<Vec<_>>()
                .join(", ")
        );
    }
    Ok(())
}

fn correlation_rows(set: &PhaseSet, mut entries: Vec<CorrelationEntry>, alpha: f64) -> Vec<Vec<String>> {
    sort_by_abs_rho(&mut entries);
    entries
        .into_iter()
        .map(|e| {
            vec![
                set.to_string(),
                e.variable.clone(),
                e.p.map(format_p).unwrap_or_default(),
                opt(e.rho),
                opt(e.p),
                e.n.to_string(),
                e.is_significant(alpha).to_string(),
            ]
        })
        .collect()
}

const CORRELATION_HEADER: [&str; 7] = ["phases", "variable", "p_display", "rho", "p", "n", "significant"];

fn slope_rows(slopes: &[SlopeEstimate]) -> Vec<Vec<String>> {
    slopes
        .iter()
        .map(|s| vec![s.label.clone(), s.slope.to_string(), opt(s.std_error), opt(s.p), s.n.to_string()])
        .collect()
}

fn all_phases(config: &PhaseConfig) -> PhaseSet {
    PhaseSet::new(config.phases().iter().map(|p| p.id))
}

fn season_start(config: &PhaseConfig) -> NaiveDate {
    config.phases()[0].start
}

pub fn stats(cfg: &RunConfig) -> Result<()> {
    let cohort = load(cfg)?;
    let labels = labels(cfg, &cohort)?;
    let mut out = OutputDir::create(&cfg.output_dir, &cfg.hash())?;
    write_stats(cfg, &mut out, &cohort, &labels)?;
    finish(out, "stats", cfg)
}

fn write_stats(
    cfg: &RunConfig,
    out: &mut OutputDir,
    cohort: &Cohort,
    labels: &BTreeMap<String, SeasonLabel>,
) -> Result<Option<(Vec<TrendObservation>, TrendResult)>> {
    let mode = p_mode(cfg);
    let mut season_rows = Vec::new();
    for set in cfg.phase_sets()? {
        let entries = ema_vs_season(&cohort.dataset, labels, &cohort.phase_config, &set, mode);
        season_rows.extend(correlation_rows(&set, entries, cfg.alpha));
    }
    out.csv("ema_vs_season.csv", |w| csv_rows(w, &CORRELATION_HEADER, season_rows))?;

    let match_set = cfg.match_phase_set()?;
    let ema = daily_hits_vs_ema(&cohort.dataset, &cohort.phase_config, &match_set, mode);
    let rows = correlation_rows(&match_set, ema, cfg.alpha);
    out.csv("daily_hits_vs_ema.csv", |w| csv_rows(w, &CORRELATION_HEADER, rows))?;
    let matrix: FeatureMatrix = build_matrix(&cohort.dataset, &cohort.phase_config, &match_set, &FeatureConfig::default());
    let features = daily_hits_vs_features(&cohort.dataset, &matrix, &cohort.phase_config, &match_set, mode);
    let rows = correlation_rows(&match_set, features, cfg.alpha);
    out.csv("daily_hits_vs_features.csv", |w| csv_rows(w, &CORRELATION_HEADER, rows))?;

    let obs = trend_observations(&cohort.dataset, &cohort.phase_config, &all_phases(&cohort.phase_config));
    let Some(trend) = ols_trend(&obs, season_start(&cohort.phase_config)) else {
        eprintln!("warning: no match observations; trend skipped");
        return Ok(None);
    };
    for term in &trend.dropped_terms {
        eprintln!("warning: trend term {term} dropped (rank deficient)");
    }
    let rows = trend
        .coefficients
        .iter()
        .map(|c| vec![c.name.clone(), c.estimate.to_string(), c.std_error.to_string(), opt(c.p)])
        .collect();
    out.csv("trend_coefficients.csv", |w| csv_rows(w, &["term", "estimate", "std_error", "p"], rows))?;
    let header = ["label", "slope", "std_error", "p", "n"];
    let rows = slope_rows(&trend.position_slopes);
    out.csv("position_slopes.csv", |w| csv_rows(w, &header, rows))?;
    let rows = slope_rows(&trend.player_slopes);
    out.csv("player_slopes.csv", |w| csv_rows(w, &header, rows))?;
    out.json("trend.json", "trend", &trend)?;
    Ok(Some((obs, trend)))
}

/// Fitted hit percentage of `position` on `day` from the trend model.
fn fitted(trend: &TrendResult, position: Position, day: f64) -> f64 {
    let coef = |name: &str| trend.coefficient(name).map_or(0.0, |c| c.estimate);
    let mut v = coef("intercept") + coef("day") * day;
    if position != trend.reference {
        v += coef(&dummy_term(position)) + coef(&interaction_term(position)) * day;
    }
    v
}

fn write_plot_series(out: &mut OutputDir, obs: &[TrendObservation], trend: &TrendResult) -> Result<()> {
    let day = |d: NaiveDate| (d - trend.season_start).num_days();
    let rows = obs
        .iter()
        .map(|o| vec![o.subject_id.clone(), o.date.to_string(), o.position.to_string(), day(o.date).to_string(), o.hit.to_string()])
        .collect();
    out.csv("hit_trend.csv", |w| csv_rows(w, &["subject", "date", "position", "day", "hit"], rows))?;

    let mut span: BTreeMap<Position, (i64, i64)> = BTreeMap::new();
    for o in obs {
        let d = day(o.date);
        let e = span.entry(o.position).or_insert((d, d));
        e.0 = e.0.min(d);
        e.1 = e.1.max(d);
    }
    let mut rows = Vec::new();
    for (position, (lo, hi)) in span {
        for d in lo..=hi {
            rows.push(vec![position.to_string(), d.to_string(), fitted(trend, position, d as f64).to_string()]);
        }
    }
    out.csv("trend_fit.csv", |w| csv_rows(w, &["position", "day", "fitted"], rows))
}

pub fn report(cfg: &RunConfig) -> Result<()> {
    let cohort = load(cfg)?;
    let labels = labels(cfg, &cohort)?;
    let mut out = OutputDir::create(&cfg.output_dir, &cfg.hash())?;
    write_ingest(&mut out, &cohort)?;
    write_labels(&mut out, &labels)?;
    write_select(cfg, &mut out, &cohort, &labels)?;
    write_evaluate(cfg, &mut out, &cohort, &labels)?;
    if let Some((obs, trend)) = write_stats(cfg, &mut out, &cohort, &labels)? {
        write_plot_series(&mut out, &obs, &trend)?;
    }
    finish(out, "report", cfg)
}

fn parse_days(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| UsageError(format!("bad day count '{s}' in --days")).into())
        })
        .collect()
}

pub fn synth(cfg: &RunConfig, args: &SynthArgs, out_given: bool) -> Result<()> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            toml::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?
        }
        None if args.null => CohortSpec::null(),
        None => CohortSpec::default(),
    };
    if args.null && args.spec.is_some() {
        return Err(UsageError("--null cannot be combined with --spec".into()).into());
    }
    if let Some(n) = args.subjects {
        spec.subjects = n;
    }
    if let Some(days) = &args.days {
        spec.days_per_phase = parse_days(days)?;
    }
    if let Some(s) = args.hr_interval {
        spec.hr_interval_secs = s;
    }
    spec.seed = cfg.seed;
    spec.utc_offset_secs = cfg.utc_offset_secs;
    spec.validate()?;

    let root: &Path = if out_given { &cfg.output_dir } else { &cfg.data_root };
    let mut out = OutputDir::create(root, &config_hash(&spec))?;
    let truth = synth::generate_cohort(&spec, root)?;
    out.json("synth.json", "class_counts", &truth.class_counts)?;
    println!(
        "synth: {} subjects ({} good, {} poor) under {}",
        spec.subjects,
        truth.class_counts[0],
        truth.class_counts[1],
        root.display()
    );
    let hash = out.hash().to_string();
    out.finish("synth", spec.seed, &spec)?;
    eprintln!("synth: config {hash}");
    Ok(())
}
