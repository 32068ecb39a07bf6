//! `courtside`: ingest wearable cohorts, build features and labels, evaluate
//! classifiers and produce correlation and trend reports.

mod commands;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::RunConfig;

/// A problem with the invocation or configuration rather than the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(name = "courtside", version, about = "Season-performance prediction from wearable cohorts")]
struct Cli {
    #[command(flatten)]
    overrides: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Flags that override the run configuration file.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cohort data root.
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Phase calendar file.
    #[arg(long = "phase-config", global = true)]
    phase_config: Option<PathBuf>,
    /// Comma-joined phase ids such as "2,3", or "all".
    #[arg(long, global = true)]
    phases: Option<String>,
    /// Phases whose match days feed the daily-hit tables.
    #[arg(long = "match-phases", global = true)]
    match_phases: Option<String>,
    /// Comma-joined model presets (gbt, xgb, lgbm, rf, gnb, svm).
    #[arg(long, global = true)]
    model: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Bootstrap iterations.
    #[arg(long, global = true)]
    iterations: Option<usize>,
    #[arg(long, global = true, conflicts_with = "no_smote")]
    smote: bool,
    #[arg(long = "no-smote", global = true)]
    no_smote: bool,
    #[arg(long = "smote-k", global = true)]
    smote_k: Option<usize>,
    /// Random-search trials per fold; 0 disables tuning.
    #[arg(long = "tuning-budget", global = true)]
    tuning_budget: Option<usize>,
    #[arg(long = "hit-threshold", global = true, allow_negative_numbers = true)]
    hit_threshold: Option<f64>,
    #[arg(long = "collinearity-cutoff", global = true)]
    collinearity_cutoff: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Minimum heart-rate readings for a compliant day.
    #[arg(long = "min-hr-readings", global = true)]
    min_hr_readings: Option<usize>,
    /// Spearman permutation count; 0 uses the t approximation.
    #[arg(long, global = true)]
    permutations: Option<usize>,
    #[arg(long = "utc-offset-secs", global = true, allow_negative_numbers = true)]
    utc_offset_secs: Option<i32>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate a cohort and apply the compliance filter.
    Ingest,
    /// Write the per-day feature matrix.
    Featurize,
    /// Compute season hit averages and good/poor labels.
    Label,
    /// Collinearity pruning and F-test feature report.
    Select,
    /// Bootstrapped leave-one-subject-out evaluation.
    Evaluate,
    /// Correlation tables and hit-percentage trends.
    Stats,
    /// Generate a synthetic cohort.
    Synth(SynthArgs),
    /// Labels, selection, evaluation, statistics and plot-ready series.
    Report,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// TOML cohort specification; flags below override it.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    subjects: Option<usize>,
    /// Days generated per phase, comma-joined.
    #[arg(long)]
    days: Option<String>,
    /// No planted feature effects or couplings.
    #[arg(long)]
    null: bool,
    /// Seconds between heart-rate samples.
    #[arg(long = "hr-interval")]
    hr_interval: Option<u32>,
}

impl Overrides {
    fn apply(&self, cfg: &mut RunConfig) {
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    cfg.$field = v.clone();
                }
            )*};
        }
        set!(
            phases,
            match_phases,
            seed,
            iterations,
            smote_k,
            tuning_budget,
            hit_threshold,
            collinearity_cutoff,
            alpha,
            min_hr_readings,
            permutations,
            utc_offset_secs
        );
        if let Some(d) = &self.data {
            cfg.data_root = d.clone();
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        if let Some(p) = &self.phase_config {
            cfg.phase_config = Some(p.clone());
        }
        if let Some(m) = &self.model {
            cfg.models = m.clone();
        }
        if self.smote {
            cfg.smote = true;
        }
        if self.no_smote {
            cfg.smote = false;
        }
    }
}

fn resolve(overrides: &Overrides) -> anyhow::Result<RunConfig> {
    let mut cfg = match &overrides.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut cfg);
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = resolve(&cli.overrides)?;
    match cli.command {
        Command::Ingest => commands::ingest(&cfg),
        Command::Featurize => commands::featurize(&cfg),
        Command::Label => commands::label(&cfg),
        Command::Select => commands::select(&cfg),
        Command::Evaluate => commands::evaluate(&cfg),
        Command::Stats => commands::stats(&cfg),
        Command::Synth(args) => commands::synth(&cfg, &args, cli.overrides.out.is_some()),
        Command::Report => commands::report(&cfg),
    }
}

/// 1 usage, 2 data validation, 3 internal.
fn exit_code(err: &anyhow::Error) -> u8 {
    use courtside::Error as E;
    if err.downcast_ref::<UsageError>().is_some() {
        return 1;
    }
    match err.downcast_ref::<E>() {
        Some(E::InvalidSpec(_) | E::InvalidCohort(_) | E::PhaseConfig(_) | E::SchemaVersion { .. }) => 1,
        Some(_) => 2,
        None => 3,
    }
}

/// The context chain, skipping the I/O source a core error already shows.
fn render(err: &anyhow::Error) -> String {
    let mut parts = Vec::new();
    for cause in err.chain() {
        parts.push(cause.to_string());
        if cause.downcast_ref::<courtside::Error>().is_some() {
            break;
        }
    }
    parts.join(": ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {}", render(&e));
            ExitCode::from(exit_code(&e))
        }
        Err(_) => ExitCode::from(3),
    }
}
