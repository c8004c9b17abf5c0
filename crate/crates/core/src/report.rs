//! Leaderboard-style metric report and its JSON/CSV renderings.
//!
//! JSON layout: one object per task mapping metric names to values, plus a
//! reserved `meta` object holding the tool version, input digests and
//! warnings. Keys are sorted; non-integral values keep 6 significant
//! digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const META_KEY: &str = "meta";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricReport {
    pub version: Option<String>,
    /// Input name to SHA-256 content digest.
    pub inputs: BTreeMap<String, String>,
    pub metrics: BTreeMap<String, BTreeMap<String, f64>>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl MetricReport {
    /// An empty report stamped with the crate version.
    pub fn new() -> Self {
        MetricReport {
            version: Some(env!("CARGO_PKG_VERSION").to_string()),
            ..Default::default()
        }
    }

    pub fn insert(&mut self, task: &str, metric: &str, value: f64) -> Result<()> {
        let slot = self.metrics.entry(task.to_string()).or_default();
        if slot.insert(metric.to_string(), value).is_some() {
            return Err(Error::DuplicateMetric {
                task: task.into(),
                metric: metric.into(),
            });
        }
        Ok(())
    }

    pub fn get(&self, task: &str, metric: &str) -> Option<f64> {
        self.metrics.get(task)?.get(metric).copied()
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn is_empty(&self) -> bool {
        self.metrics.is_empty()
            && self.inputs.is_empty()
            && self.warnings.is_empty()
            && self.version.is_none()
    }

    /// Adds `other` into `self`; duplicated metrics are an error.
    pub fn absorb(&mut self, other: MetricReport) -> Result<()> {
        for (task, metrics) in other.metrics {
            for (metric, value) in metrics {
                self.insert(&task, &metric, value)?;
            }
        }
        if self.version.is_none() {
            self.version = other.version;
        }
        self.inputs.extend(other.inputs);
        self.warnings.extend(other.warnings);
        Ok(())
    }

    pub fn emit(&self, format: Format, percent: bool) -> String {
        match format {
            Format::Json => self.to_json(percent),
            Format::Csv => self.to_csv(percent),
        }
    }

    fn presented(&self, percent: bool) -> impl Iterator<Item = (&str, &str, f64)> {
        self.metrics.iter().flat_map(move |(task, m)| {
            m.iter().map(move |(metric, &v)| {
                let v = if percent && is_fraction(task, metric) {
                    v * 100.0
                } else {
                    v
                };
                (task.as_str(), metric.as_str(), round_significant(v))
            })
        })
    }

    pub fn to_json(&self, percent: bool) -> String {
        let mut root = Map::new();
        for (task, metric, v) in self.presented(percent) {
            let entry = root
                .entry(task)
                .or_insert_with(|| Value::Object(Map::new()));
            if let Value::Object(m) = entry {
                m.insert(metric.to_string(), number(v));
            }
        }
        let mut meta = Map::new();
        if let Some(v) = &self.version {
            meta.insert("version".into(), Value::String(v.clone()));
        }
        if !self.inputs.is_empty() {
            let inputs = self
                .inputs
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect();
            meta.insert("inputs".into(), Value::Object(inputs));
        }
        if !self.warnings.is_empty() {
            meta.insert(
                "warnings".into(),
                self.warnings.iter().cloned().map(Value::String).collect(),
            );
        }
        if !meta.is_empty() {
            root.insert(META_KEY.into(), Value::Object(meta));
        }
        if root.is_empty() {
            return "{}\n".into();
        }
        let mut s =
            serde_json::to_string_pretty(&Value::Object(root)).expect("json values serialize");
        s.push('\n');
        s
    }

    pub fn to_csv(&self, percent: bool) -> String {
        let mut out = String::from("task,metric,value\n");
        for (task, metric, v) in self.presented(percent) {
            let _ = writeln!(out, "{task},{metric},{v}");
        }
        out
    }

    /// Parses the JSON rendering back into a report.
    pub fn from_json(text: &str) -> Result<Self> {
        let root: Map<String, Value> = serde_json::from_str(text)?;
        let mut report = MetricReport::default();
        let bad = |what: &str| Error::Json(serde::de::Error::custom(format!("unexpected {what}")));
        for (task, body) in root {
            let Value::Object(body) = body else {
                return Err(bad("task body"));
            };
            if task == META_KEY {
                for (k, v) in body {
                    match (k.as_str(), v) {
                        ("version", Value::String(s)) => report.version = Some(s),
                        ("inputs", Value::Object(m)) => {
                            for (name, d) in m {
                                let Value::String(d) = d else {
                                    return Err(bad("digest"));
                                };
                                report.inputs.insert(name, d);
                            }
                        }
                        ("warnings", Value::Array(ws)) => {
                            for w in ws {
                                let Value::String(w) = w else {
                                    return Err(bad("warning"));
                                };
                                report.warnings.push(w);
                            }
                        }
                        _ => return Err(bad("meta field")),
                    }
                }
                continue;
            }
            for (metric, v) in body {
                let value = match v {
                    Value::Number(n) => n.as_f64().ok_or_else(|| bad("number"))?,
                    Value::Null => f64::NAN,
                    _ => return Err(bad("metric value")),
                };
                report.insert(&task, &metric, value)?;
            }
        }
        Ok(report)
    }

    /// Aligned two-column table for terminals.
    pub fn summary_table(&self, percent: bool) -> String {
        let rows: Vec<(String, f64)> = self
            .presented(percent)
            .map(|(t, m, v)| (format!("{t}.{m}"), v))
            .collect();
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (name, v) in rows {
            let _ = writeln!(out, "{name:<width$}  {v}");
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

/// Merges reports in order.
pub fn merge(reports: impl IntoIterator<Item = MetricReport>) -> Result<MetricReport> {
    let mut out = MetricReport::default();
    for r in reports {
        out.absorb(r)?;
    }
    Ok(out)
}

/// Whether `--percent` rescales this metric.
pub fn is_fraction(task: &str, metric: &str) -> bool {
    matches!(task, "abx" | "tde" | "lexical" | "syntactic") && !metric.starts_with("n_")
}

/// Non-integral values rounded to 6 significant digits.
pub fn round_significant(v: f64) -> f64 {
    if !v.is_finite() || v.fract() == 0.0 {
        return v;
    }
    format!("{v:.5e}").parse().unwrap_or(v)
}

fn number(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        Value::from(v as i64)
    } else {
        serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
    }
}

/// SHA-256 of a file, or of the sorted (relative path, file digest) list of
/// a directory tree.
pub fn digest_path(path: &Path) -> Result<String> {
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if path.is_dir() {
        let mut files = Vec::new();
        collect_files(path, path, &mut files).map_err(io)?;
        files.sort();
        let mut h = Sha256::new();
        for rel in files {
            let d = digest_path(&path.join(&rel))?;
            h.update(rel.as_bytes());
            h.update([0]);
            h.update(d.as_bytes());
            h.update(*b"\n");
        }
        Ok(hex::encode(h.finalize()))
    } else {
        let bytes = std::fs::read(path).map_err(io)?;
        Ok(hex::encode(Sha256::digest(&bytes)))
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            let rel = path.strip_prefix(root).unwrap_or(&path);
            out.push(rel.to_string_lossy().replace('\\', "/"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abx(metric: &str, v: f64) -> MetricReport {
        let mut r = MetricReport::default();
        r.insert("abx", metric, v).unwrap();
        r
    }

    #[test]
    fn merge_rows() {
        let m = merge([abx("within", 0.1), abx("across", 0.2)]).unwrap();
        assert_eq!(m.get("abx", "within"), Some(0.1));
        assert_eq!(m.get("abx", "across"), Some(0.2));
        assert!(matches!(
            merge([abx("within", 0.1), abx("within", 0.3)]),
            Err(Error::DuplicateMetric { .. })
        ));
        let x = abx("within", 0.1);
        assert_eq!(merge([MetricReport::default(), x.clone()]).unwrap(), x);
    }

    #[test]
    fn json_values() {
        let r = abx("within", 0.0328);
        assert_eq!(
            r.to_json(false),
            "{\n  \"abx\": {\n    \"within\": 0.0328\n  }\n}\n"
        );
        assert!(r.to_json(true).contains("\"within\": 3.28"));
        assert_eq!(r.to_json(false), r.to_json(false));
        assert_eq!(
            abx("within", 1.0 / 3.0).to_json(false),
            "{\n  \"abx\": {\n    \"within\": 0.333333\n  }\n}\n"
        );
    }

    #[test]
    fn empty_report() {
        assert_eq!(MetricReport::default().to_json(false), "{}\n");
        assert_eq!(MetricReport::default().to_csv(false), "task,metric,value\n");
    }

    #[test]
    fn csv_rows() {
        let mut r = abx("within", 0.05);
        r.insert("bitrate", "bits_per_second", 69.21234).unwrap();
        assert_eq!(
            r.to_csv(true),
            "task,metric,value\nabx,within,5\nbitrate,bits_per_second,69.2123\n"
        );
    }

    #[test]
    fn json_round_trip() {
        let mut r = MetricReport::new();
        r.insert("abx", "within", 0.125).unwrap();
        r.insert("tde", "n_pairs", 42.0).unwrap();
        r.inputs.insert("corpus".into(), "abc".into());
        r.warn("careful");
        assert_eq!(MetricReport::from_json(&r.to_json(false)).unwrap(), r);
    }

    #[test]
    fn significant_digits() {
        assert_eq!(round_significant(0.0328), 0.0328);
        assert_eq!(round_significant(12.3456789), 12.3457);
        assert_eq!(round_significant(7.0), 7.0);
        assert_eq!(round_significant(1e-9 / 3.0), 3.33333e-10);
    }
}
