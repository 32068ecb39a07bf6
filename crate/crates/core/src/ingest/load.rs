//! File-based loading and writing of the on-disk cohort layout:
//!
//! ```text
//! streams/<subject>/<metric>.csv   timestamp,value
//! daily/<subject>.csv              date,kind,value
//! sleep/<subject>.jsonl            {"start","end","segments":[{"stage","start","end"}]}
//! ema/<subject>.csv                timestamp,item,score
//! boxscores/<subject>.csv          date,kills,errors,attempts,...,position
//! ```
//!
//! Timestamps are RFC-3339. Malformed or out-of-range rows are dropped and
//! reported as [`Diagnostic`]s; a missing file only means missing data.

use std::collections::{BTreeSet, HashSet};
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, SecondsFormat, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::types::*;
use crate::error::{Error, Result};
use crate::labels::{BoxScore, Position};

pub const SCHEMA_VERSION: u32 = 1;

pub const STREAM_HEADER: [&str; 2] = ["timestamp", "value"];
pub const DAILY_HEADER: [&str; 3] = ["date", "kind", "value"];
pub const EMA_HEADER: [&str; 3] = ["timestamp", "item", "score"];
pub const BOX_SCORE_HEADER: [&str; 15] = [
    "date",
    "kills",
    "errors",
    "attempts",
    "points",
    "digs",
    "assists",
    "service_aces",
    "service_errors",
    "reception_errors",
    "block_solos",
    "block_errors",
    "ball_handling_errors",
    "total_attempts",
    "position",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadOptions {
    pub schema_version: u32,
    pub clock: DayClock,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            schema_version: SCHEMA_VERSION,
            clock: DayClock::default(),
        }
    }
}

pub fn parse_timestamp(s: &str) -> std::result::Result<i64, String> {
    DateTime::parse_from_rfc3339(s.trim())
        .map(|t| t.timestamp())
        .map_err(|e| format!("bad timestamp '{s}': {e}"))
}

pub fn format_timestamp(ts: i64) -> String {
    DateTime::<Utc>::from_timestamp(ts, 0)
        .expect("timestamp in chrono range")
        .to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| format!("bad date '{s}': {e}"))
}

fn parse_f64(s: &str, what: &str) -> std::result::Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("bad {what} '{s}'"))
}

/// Load every subject found under `root`.
pub fn load_dataset(root: &Path, options: &LoadOptions) -> Result<SubjectDataset> {
    if options.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaVersion {
            found: options.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "data root is not a directory"),
        ));
    }
    let ids = discover_subjects(root)?;
    let loaded: Vec<(String, SubjectData, Vec<Diagnostic>)> = ids
        .into_par_iter()
        .map(|id| {
            let (data, diags) = load_subject(root, &id);
            (id, data, diags)
        })
        .collect();

    let mut dataset = SubjectDataset::new(options.clock);
    for (id, data, diags) in loaded {
        dataset.diagnostics.extend(diags);
        dataset.subjects.insert(id, data);
    }
    Ok(dataset)
}

fn discover_subjects(root: &Path) -> Result<Vec<String>> {
    let mut ids = BTreeSet::new();
    let streams = root.join("streams");
    if streams.is_dir() {
        for entry in read_dir_sorted(&streams)? {
            if entry.is_dir() {
                if let Some(name) = entry.file_name().and_then(|n| n.to_str()) {
                    ids.insert(name.to_string());
                }
            }
        }
    }
    for (dir, ext) in [("daily", "csv"), ("sleep", "jsonl"), ("ema", "csv"), ("boxscores", "csv")] {
        let dir = root.join(dir);
        if !dir.is_dir() {
            continue;
        }
        for entry in read_dir_sorted(&dir)? {
            if entry.extension().and_then(|e| e.to_str()) == Some(ext) {
                if let Some(stem) = entry.file_stem().and_then(|n| n.to_str()) {
                    ids.insert(stem.to_string());
                }
            }
        }
    }
    Ok(ids.into_iter().collect())
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .collect();
    entries.sort();
    Ok(entries)
}

struct Diags {
    file: PathBuf,
    out: Vec<Diagnostic>,
}

impl Diags {
    fn new(file: &Path) -> Self {
        Diags {
            file: file.to_path_buf(),
            out: Vec::new(),
        }
    }

    fn push(&mut self, line: u64, message: impl Into<String>) {
        self.out.push(Diagnostic {
            file: self.file.clone(),
            line,
            message: message.into(),
        });
    }
}

fn load_subject(root: &Path, id: &str) -> (SubjectData, Vec<Diagnostic>) {
    let mut data = SubjectData::default();
    let mut diagnostics = Vec::new();

    let stream_dir = root.join("streams").join(id);
    if stream_dir.is_dir() {
        let files = read_dir_sorted(&stream_dir).unwrap_or_default();
        for path in files {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            if path.extension().and_then(|e| e.to_str()) != Some("csv") {
                continue;
            }
            match stem.parse::<Metric>() {
                Ok(metric) => {
                    let (samples, diags) = read_stream(&path, metric);
                    diagnostics.extend(diags);
                    data.streams.insert(metric, samples);
                }
                Err(_) => diagnostics.push(Diagnostic {
                    file: path.clone(),
                    line: 0,
                    message: format!("unknown metric file '{stem}.csv'"),
                }),
            }
        }
    }

    let daily = root.join("daily").join(format!("{id}.csv"));
    if daily.is_file() {
        let (rows, diags) = read_daily(&daily);
        data.daily = rows;
        diagnostics.extend(diags);
    }
    let sleep = root.join("sleep").join(format!("{id}.jsonl"));
    if sleep.is_file() {
        let (rows, diags) = read_sleep(&sleep);
        data.sleep = rows;
        diagnostics.extend(diags);
    }
    let ema = root.join("ema").join(format!("{id}.csv"));
    if ema.is_file() {
        let (rows, diags) = read_ema(&ema);
        data.ema = rows;
        diagnostics.extend(diags);
    }
    let box_scores = root.join("boxscores").join(format!("{id}.csv"));
    if box_scores.is_file() {
        let (rows, diags) = read_box_scores(&box_scores);
        data.box_scores = rows;
        diagnostics.extend(diags);
    }
    (data, diagnostics)
}

/// Opens a CSV file and checks its header; returns `None` (with a
/// diagnostic) when the file cannot be used at all.
fn open_csv(path: &Path, header: &[&str], diags: &mut Diags) -> Option<csv::Reader<File>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) => {
            diags.push(0, format!("cannot open: {e}"));
            return None;
        }
    };
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(file);
    match reader.headers() {
        Ok(h) if h.iter().map(str::trim).eq(header.iter().copied()) => Some(reader),
        Ok(h) => {
            diags.push(1, format!("unexpected header {:?}, expected {:?}", h, header));
            None
        }
        Err(e) => {
            diags.push(1, format!("unreadable header: {e}"));
            None
        }
    }
}

fn for_each_record(
    mut reader: csv::Reader<File>,
    width: usize,
    diags: &mut Diags,
    mut f: impl FnMut(&csv::StringRecord, u64, &mut Diags),
) {
    for record in reader.records() {
        match record {
            Ok(rec) => {
                let line = rec.position().map(|p| p.line()).unwrap_or(0);
                if rec.len() != width {
                    diags.push(line, format!("expected {width} fields, found {}", rec.len()));
                    continue;
                }
                f(&rec, line, diags);
            }
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                diags.push(line, format!("malformed row: {e}"));
            }
        }
    }
}

pub(crate) fn read_stream(path: &Path, metric: Metric) -> (Vec<Sample>, Vec<Diagnostic>) {
    let mut diags = Diags::new(path);
    let mut samples: Vec<Sample> = Vec::new();
    if let Some(reader) = open_csv(path, &STREAM_HEADER, &mut diags) {
        for_each_record(reader, 2, &mut diags, |rec, line, diags| {
            let parsed = parse_timestamp(&rec[0]).and_then(|ts| Ok((ts, parse_f64(&rec[1], "value")?)));
            let (timestamp, value) = match parsed {
                Ok(v) => v,
                Err(msg) => return diags.push(line, msg),
            };
            if !metric.accepts(value) {
                return diags.push(line, metric.range_message(value));
            }
            if let Some(last) = samples.last() {
                if timestamp <= last.timestamp {
                    return diags.push(line, "timestamp not strictly increasing");
                }
            }
            samples.push(Sample { timestamp, value });
        });
    }
    (samples, diags.out)
}

fn read_daily(path: &Path) -> (Vec<DailyScalar>, Vec<Diagnostic>) {
    let mut diags = Diags::new(path);
    let mut rows: Vec<DailyScalar> = Vec::new();
    let mut seen = HashSet::new();
    if let Some(reader) = open_csv(path, &DAILY_HEADER, &mut diags) {
        for_each_record(reader, 3, &mut diags, |rec, line, diags| {
            let parsed = parse_date(&rec[0]).and_then(|date| {
                let kind = rec[1].trim().parse::<DailyKind>().map_err(|e| e.to_string())?;
                Ok((date, kind, parse_f64(&rec[2], "value")?))
            });
            let (date, kind, value) = match parsed {
                Ok(v) => v,
                Err(msg) => return diags.push(line, msg),
            };
            if !(value.is_finite() && value > 0.0) {
                return diags.push(line, format!("{} must be finite and positive", kind.as_str()));
            }
            if !seen.insert((date, kind)) {
                return diags.push(line, format!("duplicate {} for {date}", kind.as_str()));
            }
            rows.push(DailyScalar { date, kind, value });
        });
    }
    rows.sort_by(|a, b| (a.date, a.kind).cmp(&(b.date, b.kind)));
    (rows, diags.out)
}

#[derive(Serialize, Deserialize)]
struct SegmentRecord {
    stage: SleepStage,
    start: String,
    end: String,
}

#[derive(Serialize, Deserialize)]
struct SleepRecord {
    start: String,
    end: String,
    segments: Vec<SegmentRecord>,
}

fn parse_sleep_line(line: &str) -> std::result::Result<SleepEvent, String> {
    let record: SleepRecord = serde_json::from_str(line).map_err(|e| format!("bad JSON: {e}"))?;
    let segments = record
        .segments
        .iter()
        .map(|s| {
            Ok(SleepSegment {
                stage: s.stage,
                start: parse_timestamp(&s.start)?,
                end: parse_timestamp(&s.end)?,
            })
        })
        .collect::<std::result::Result<Vec<_>, String>>()?;
    let event = SleepEvent {
        start: parse_timestamp(&record.start)?,
        end: parse_timestamp(&record.end)?,
        segments,
    };
    event.validate()?;
    Ok(event)
}

fn read_sleep(path: &Path) -> (Vec<SleepEvent>, Vec<Diagnostic>) {
    let mut diags = Diags::new(path);
    let mut events = Vec::new();
    match File::open(path) {
        Ok(file) => {
            for (i, line) in BufReader::new(file).lines().enumerate() {
                let lineno = i as u64 + 1;
                let line = match line {
                    Ok(l) => l,
                    Err(e) => {
                        diags.push(lineno, format!("unreadable line: {e}"));
                        continue;
                    }
                };
                if line.trim().is_empty() {
                    continue;
                }
                match parse_sleep_line(&line) {
                    Ok(ev) => events.push(ev),
                    Err(msg) => diags.push(lineno, msg),
                }
            }
        }
        Err(e) => diags.push(0, format!("cannot open: {e}")),
    }
    events.sort_by_key(|e: &SleepEvent| e.start);
    (events, diags.out)
}

fn read_ema(path: &Path) -> (Vec<EmaResponse>, Vec<Diagnostic>) {
    let mut diags = Diags::new(path);
    let mut rows = Vec::new();
    if let Some(reader) = open_csv(path, &EMA_HEADER, &mut diags) {
        for_each_record(reader, 3, &mut diags, |rec, line, diags| {
            let parsed = parse_timestamp(&rec[0]).and_then(|ts| {
                let item = rec[1].trim().parse::<EmaItem>().map_err(|e| e.to_string())?;
                let score = rec[2]
                    .trim()
                    .parse::<u8>()
                    .map_err(|_| format!("bad score '{}'", &rec[2]))?;
                Ok((ts, item, score))
            });
            match parsed {
                Ok((timestamp, item, score)) if (1..=7).contains(&score) => {
                    rows.push(EmaResponse {
                        timestamp,
                        item,
                        score,
                    })
                }
                Ok((_, _, score)) => diags.push(line, format!("score {score} outside [1, 7]")),
                Err(msg) => diags.push(line, msg),
            }
        });
    }
    rows.sort_by_key(|r: &EmaResponse| (r.timestamp, r.item));
    (rows, diags.out)
}

fn read_box_scores(path: &Path) -> (Vec<BoxScore>, Vec<Diagnostic>) {
    let mut diags = Diags::new(path);
    let mut rows = Vec::new();
    if let Some(reader) = open_csv(path, &BOX_SCORE_HEADER, &mut diags) {
        for_each_record(reader, BOX_SCORE_HEADER.len(), &mut diags, |rec, line, diags| {
            match parse_box_score(rec) {
                Ok(score) => match score.validate() {
                    Ok(()) => rows.push(score),
                    Err(msg) => diags.push(line, msg),
                },
                Err(msg) => diags.push(line, msg),
            }
        });
    }
    rows.sort_by_key(|s: &BoxScore| s.date);
    (rows, diags.out)
}

fn parse_box_score(rec: &csv::StringRecord) -> std::result::Result<BoxScore, String> {
    let n = |i: usize| -> std::result::Result<u32, String> {
        rec[i]
            .trim()
            .parse::<u32>()
            .map_err(|_| format!("bad {} '{}'", BOX_SCORE_HEADER[i], &rec[i]))
    };
    Ok(BoxScore {
        date: parse_date(&rec[0])?,
        kills: n(1)?,
        errors: n(2)?,
        attempts: n(3)?,
        points: n(4)?,
        digs: n(5)?,
        assists: n(6)?,
        service_aces: n(7)?,
        service_errors: n(8)?,
        reception_errors: n(9)?,
        block_solos: n(10)?,
        block_errors: n(11)?,
        ball_handling_errors: n(12)?,
        total_attempts: n(13)?,
        position: rec[14].parse::<Position>().map_err(|e| e.to_string())?,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

/// Write a dataset in the layout [`load_dataset`] reads. Empty streams and
/// tables are not written.
pub fn write_dataset(dataset: &SubjectDataset, root: &Path) -> Result<()> {
    for (id, data) in &dataset.subjects {
        for (metric, samples) in &data.streams {
            let path = root.join("streams").join(id).join(format!("{metric}.csv"));
            let mut w = csv_writer(&path)?;
            w.write_record(STREAM_HEADER)?;
            for s in samples {
                w.write_record([format_timestamp(s.timestamp), s.value.to_string()])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        if !data.daily.is_empty() {
            let path = root.join("daily").join(format!("{id}.csv"));
            let mut w = csv_writer(&path)?;
            w.write_record(DAILY_HEADER)?;
            for d in &data.daily {
                w.write_record([
                    d.date.format("%Y-%m-%d").to_string(),
                    d.kind.as_str().to_string(),
                    d.value.to_string(),
                ])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        if !data.sleep.is_empty() {
            let path = root.join("sleep").join(format!("{id}.jsonl"));
            let mut w = create(&path)?;
            for ev in &data.sleep {
                let record = SleepRecord {
                    start: format_timestamp(ev.start),
                    end: format_timestamp(ev.end),
                    segments: ev
                        .segments
                        .iter()
                        .map(|s| SegmentRecord {
                            stage: s.stage,
                            start: format_timestamp(s.start),
                            end: format_timestamp(s.end),
                        })
                        .collect(),
                };
                serde_json::to_writer(&mut w, &record)?;
                w.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        if !data.ema.is_empty() {
            let path = root.join("ema").join(format!("{id}.csv"));
            let mut w = csv_writer(&path)?;
            w.write_record(EMA_HEADER)?;
            for r in &data.ema {
                w.write_record([
                    format_timestamp(r.timestamp),
                    r.item.as_str().to_string(),
                    r.score.to_string(),
                ])?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        if !data.box_scores.is_empty() {
            let path = root.join("boxscores").join(format!("{id}.csv"));
            let mut w = csv_writer(&path)?;
            w.write_record(BOX_SCORE_HEADER)?;
            for b in &data.box_scores {
                let mut rec = vec![b.date.format("%Y-%m-%d").to_string()];
                rec.extend(
                    [
                        b.kills,
                        b.errors,
                        b.attempts,
                        b.points,
                        b.digs,
                        b.assists,
                        b.service_aces,
                        b.service_errors,
                        b.reception_errors,
                        b.block_solos,
                        b.block_errors,
                        b.ball_handling_errors,
                        b.total_attempts,
                    ]
                    .iter()
                    .map(u32::to_string),
                );
                rec.push(b.position.as_str().to_string());
                w.write_record(&rec)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(path: &Path, text: &str) {
        fs::create_dir_all(path.parent().unwrap()).unwrap();
        fs::write(path, text).unwrap();
    }

    #[test]
    fn empty_directory_has_no_subjects() {
        let dir = tempfile::tempdir().unwrap();
        let ds = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
        assert!(ds.subjects.is_empty());
        assert!(ds.diagnostics.is_empty());
    }

    #[test]
    fn missing_root_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_dataset(&dir.path().join("nope"), &LoadOptions::default()).is_err());
    }

    #[test]
    fn wrong_schema_version_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let opts = LoadOptions {
            schema_version: 7,
            ..Default::default()
        };
        assert!(matches!(
            load_dataset(dir.path(), &opts),
            Err(Error::SchemaVersion { found: 7, .. })
        ));
    }

    #[test]
    fn three_heart_rate_rows() {
        let dir = tempfile::tempdir().unwrap();
        write(
            &dir.path().join("streams/p01/heart_rate.csv"),
            "timestamp,value\n2022-11-01T00:00:00Z,60\n2022-11-01T00:00:08Z,61.5\n2022-11-01T00:00:16Z,62\n",
        );
        let ds = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
        let hr = ds.subjects["p01"].samples(Metric::HeartRate);
        assert_eq!(hr.len(), 3);
        assert_eq!(hr[1].value, 61.5);
        assert!(ds.diagnostics.is_empty());
    }

    #[test]
    fn out_of_range_spo2_row_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("streams/p01/spo2.csv");
        write(
            &path,
            "timestamp,value\n2022-11-01T01:00:00Z,96\n2022-11-01T01:01:00Z,120\n2022-11-01T01:02:00Z,97\n",
        );
        let ds = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.subjects["p01"].samples(Metric::Spo2).len(), 2);
        assert_eq!(ds.diagnostics.len(), 1);
        assert_eq!(ds.diagnostics[0].file, path);
        assert_eq!(ds.diagnostics[0].line, 3);
    }

    #[test]
    fn malformed_rows_are_reported_with_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        write(
            &dir.path().join("daily/p02.csv"),
            "date,kind,value\n2022-11-01,hrv_rmssd_ms,55\n2022-11-01,hrv_rmssd_ms,56\nnot-a-date,rhr_bpm,50\n2022-11-02,bogus,1\n2022-11-02,rhr_bpm,-3\n",
        );
        write(
            &dir.path().join("ema/p02.csv"),
            "timestamp,item,score\n2022-11-01T09:00:00Z,stress,4\n2022-11-01T21:00:00Z,stress,9\n",
        );
        write(
            &dir.path().join("sleep/p02.jsonl"),
            concat!(
                r#"{"start":"2022-11-01T00:00:00Z","end":"2022-11-01T01:00:00Z","segments":[{"stage":"light","start":"2022-11-01T00:00:00Z","end":"2022-11-01T01:00:00Z"}]}"#,
                "\n",
                r#"{"start":"2022-11-02T00:00:00Z","end":"2022-11-02T01:00:00Z","segments":[{"stage":"light","start":"2022-11-02T00:00:00Z","end":"2022-11-02T00:30:00Z"}]}"#,
                "\n"
            ),
        );
        let ds = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
        let s = &ds.subjects["p02"];
        assert_eq!(s.daily.len(), 1);
        assert_eq!(s.ema.len(), 1);
        assert_eq!(s.sleep.len(), 1);
        let lines: Vec<u64> = ds.diagnostics.iter().map(|d| d.line).collect();
        assert_eq!(lines, vec![3, 4, 5, 6, 2, 3]);
    }

    #[test]
    fn unknown_header_skips_file() {
        let dir = tempfile::tempdir().unwrap();
        write(&dir.path().join("streams/p01/steps.csv"), "time,steps\n2022-11-01T00:00:00Z,3\n");
        let ds = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
        assert!(ds.subjects["p01"].samples(Metric::Steps).is_empty());
        assert_eq!(ds.diagnostics.len(), 1);
    }

    #[test]
    fn box_scores_validate_kills() {
        let dir = tempfile::tempdir().unwrap();
        let header = BOX_SCORE_HEADER.join(",");
        write(
            &dir.path().join("boxscores/p03.csv"),
            &format!(
                "{header}\n2023-02-01,10,2,20,12,3,0,1,1,0,0,0,0,20,middle\n2023-02-03,30,2,20,12,3,0,1,1,0,0,0,0,20,middle\n"
            ),
        );
        let ds = load_dataset(dir.path(), &LoadOptions::default()).unwrap();
        assert_eq!(ds.subjects["p03"].box_scores.len(), 1);
        assert_eq!(ds.subjects["p03"].box_scores[0].position, Position::Middle);
        assert_eq!(ds.diagnostics.len(), 1);
    }
}
