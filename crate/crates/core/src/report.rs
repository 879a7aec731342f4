//! CSV serialization of trajectories and predictions.
//!
//! Every file starts with `#`-prefixed metadata lines (`key=value`), followed
//! by a header row and data rows. Schema version 1 column orders:
//!
//! | kind         | columns                                                        |
//! |--------------|----------------------------------------------------------------|
//! | `trials`     | `trial,t,metric_name,value`                                    |
//! | `aggregate`  | `t,metric_name,median,p25,p75`                                 |
//! | `prediction` | `t,gamma,beta,tau,metric_name,predicted_value,mc_stderr`       |
//! | `tune`       | `lambda,best_t,min_predicted_l1`                               |
//! | `sweep`      | `axis,value,lambda,t,metric_name,predicted_value,mc_stderr,median,p25,p75` |
//!
//! Floats use Rust's shortest round-trip formatting, so files are
//! byte-identical across runs with identical inputs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::config::MetricSpec;
use crate::error::{Error, Result};
use crate::simulate::{RecordMeta, Summary, TrajectoryRecord};
use crate::state_evolution::PredictedTrajectory;
use crate::TOOL_VERSION;

pub const SCHEMA_VERSION: u32 = 1;

/// Ordered `key=value` metadata carried in the comment header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileMeta(pub BTreeMap<String, String>);

impl FileMeta {
    pub fn new(kind: &str) -> Self {
        let mut m = BTreeMap::new();
        m.insert("kind".to_string(), kind.to_string());
        m.insert("schema".to_string(), SCHEMA_VERSION.to_string());
        m.insert("tool".to_string(), TOOL_VERSION.to_string());
        FileMeta(m)
    }

    pub fn with_record(mut self, meta: &RecordMeta) -> Self {
        self.set("config_hash", &meta.config_hash);
        self.set("seed", meta.seed);
        self.set("psi", &meta.psi);
        for (label, flag) in &meta.guarantees {
            self.set(&format!("guarantee.{label}"), flag.as_str());
        }
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn kind(&self) -> Option<&str> {
        self.get("kind")
    }

    pub fn config_hash(&self) -> Option<&str> {
        self.get("config_hash")
    }

    fn write_to(&self, out: &mut Vec<u8>) {
        for (k, v) in &self.0 {
            writeln!(out, "# {k}={v}").expect("write to Vec");
        }
    }
}

/// Write `bytes` to `path` via a temporary file in the same directory and a rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Assemble a CSV document: metadata, header, rows.
pub fn csv_document(meta: &FileMeta, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    meta.write_to(&mut out);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.into_error()))
}

pub fn trials_csv(records: &[TrajectoryRecord]) -> Result<Vec<u8>> {
    let first = records
        .first()
        .ok_or_else(|| Error::RecordMismatch("no trial records".into()))?;
    let mut meta = FileMeta::new("trials").with_record(&first.meta);
    meta.set("trials", records.len());
    let mut rows = Vec::new();
    for r in records {
        let trial = r.trial.unwrap_or(0);
        for (t, row) in r.points.iter().enumerate() {
            for (m, s) in r.metrics.iter().zip(row) {
                rows.push(vec![
                    trial.to_string(),
                    (t + 1).to_string(),
                    m.name().to_string(),
                    s.median.to_string(),
                ]);
            }
        }
    }
    csv_document(&meta, &["trial", "t", "metric_name", "value"], &rows)
}

pub fn aggregate_csv(record: &TrajectoryRecord) -> Result<Vec<u8>> {
    let mut meta = FileMeta::new("aggregate").with_record(&record.meta);
    meta.set("trials", record.trials);
    let mut rows = Vec::new();
    for (t, row) in record.points.iter().enumerate() {
        for (m, s) in record.metrics.iter().zip(row) {
            rows.push(vec![
                (t + 1).to_string(),
                m.name().to_string(),
                s.median.to_string(),
                s.p25.to_string(),
                s.p75.to_string(),
            ]);
        }
    }
    csv_document(&meta, &["t", "metric_name", "median", "p25", "p75"], &rows)
}

pub fn prediction_csv(pred: &PredictedTrajectory) -> Result<Vec<u8>> {
    let mut meta = FileMeta::new("prediction").with_record(&pred.meta);
    meta.set("particles", pred.particles);
    let mut rows = Vec::new();
    for step in &pred.steps {
        for p in &step.predictions {
            rows.push(vec![
                step.t.to_string(),
                step.saddle.gamma.to_string(),
                step.saddle.beta.to_string(),
                step.saddle.tau.to_string(),
                p.metric.name().to_string(),
                p.value.to_string(),
                p.mc_stderr.to_string(),
            ]);
        }
    }
    csv_document(
        &meta,
        &["t", "gamma", "beta", "tau", "metric_name", "predicted_value", "mc_stderr"],
        &rows,
    )
}

/// Per `(t, metric)` values read back from an aggregate, trials or prediction CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFile {
    pub meta: FileMeta,
    /// Summary at each `(t, metric)`; predictions are point summaries.
    pub points: BTreeMap<(usize, MetricSpec), Summary>,
    /// Monte Carlo standard errors, for prediction files.
    pub stderr: BTreeMap<(usize, MetricSpec), f64>,
}

fn parse_meta(text: &str) -> FileMeta {
    let mut meta = FileMeta::default();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some((k, v)) = line.trim_start_matches('#').trim().split_once('=') {
            meta.set(k.trim(), v.trim());
        }
    }
    meta
}

fn field<'a>(rec: &'a csv::StringRecord, headers: &csv::StringRecord, name: &str, what: &str) -> Result<&'a str> {
    let idx = headers.iter().position(|h| h == name).ok_or_else(|| Error::Format {
        what: what.to_string(),
        message: format!("missing column `{name}`"),
    })?;
    rec.get(idx).ok_or_else(|| Error::Format {
        what: what.to_string(),
        message: format!("short row, no `{name}`"),
    })
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.trim().parse().map_err(|_| Error::Format {
        what: what.to_string(),
        message: format!("`{s}` is not a number"),
    })
}

/// Read any of the per-iteration CSV kinds.
pub fn read_series(path: &Path) -> Result<SeriesFile> {
    let text = std::fs::read_to_string(path)?;
    parse_series(&text, &path.display().to_string())
}

pub fn parse_series(text: &str, what: &str) -> Result<SeriesFile> {
    let meta = parse_meta(text);
    let kind = meta.kind().unwrap_or("").to_string();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let mut points = BTreeMap::new();
    let mut stderr = BTreeMap::new();
    let mut trial_values: BTreeMap<(usize, MetricSpec), Vec<f64>> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec?;
        let t: usize = number(field(&rec, &headers, "t", what)?, what)?;
        let name = field(&rec, &headers, "metric_name", what)?;
        let metric = MetricSpec::from_name(name).ok_or_else(|| Error::Format {
            what: what.to_string(),
            message: format!("unknown metric `{name}`"),
        })?;
        match kind.as_str() {
            "aggregate" => {
                let s = Summary {
                    median: number(field(&rec, &headers, "median", what)?, what)?,
                    p25: number(field(&rec, &headers, "p25", what)?, what)?,
                    p75: number(field(&rec, &headers, "p75", what)?, what)?,
                };
                points.insert((t, metric), s);
            }
            "prediction" => {
                let v: f64 = number(field(&rec, &headers, "predicted_value", what)?, what)?;
                points.insert((t, metric), Summary::point(v));
                stderr.insert((t, metric), number(field(&rec, &headers, "mc_stderr", what)?, what)?);
            }
            "trials" => {
                let v: f64 = number(field(&rec, &headers, "value", what)?, what)?;
                trial_values.entry((t, metric)).or_default().push(v);
            }
            other => {
                return Err(Error::Format {
                    what: what.to_string(),
                    message: format!("unsupported file kind `{other}`"),
                })
            }
        }
    }
    for (k, values) in trial_values {
        points.insert(k, crate::simulate::summarize(&values));
    }
    Ok(SeriesFile { meta, points, stderr })
}
