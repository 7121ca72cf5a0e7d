//! Edge stream files, vertex weight side files, run configuration and JSON
//! reports.
//!
//! A stream file is UTF-8 text with one event per line:
//!
//! ```text
//! src <TAB> dst [<TAB> weight [<TAB> timestamp [<TAB> label]]]
//! ```
//!
//! `weight` defaults to 1, `timestamp` (integer microseconds) to the 1-based
//! line number, and `label` (`0` or `1`, 1 marking fraud) to 0. Blank lines
//! and lines starting with `#` are skipped.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouping::FlushPolicy;
use crate::model::{FdParams, Metric};
use crate::stream::{ReplayMode, StreamEvent, UpdateStream};

pub const REPORT_SCHEMA: &str = "spade-report/1";

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_stream(path: &Path) -> Result<UpdateStream> {
    parse_stream_str(&read(path)?)
}

pub fn parse_stream_str(text: &str) -> Result<UpdateStream> {
    let mut events = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.strip_suffix('\r').unwrap_or(raw);
        if content.trim().is_empty() || content.starts_with('#') {
            continue;
        }
        events.push(parse_line(content, line)?);
    }
    Ok(UpdateStream::new(events))
}

fn parse_line(content: &str, line: usize) -> Result<StreamEvent> {
    let malformed = |reason: String| Error::MalformedLine { line, reason };
    let fields: Vec<&str> = content.split('\t').collect();
    if fields.len() < 2 || fields.len() > 5 {
        return Err(malformed(format!("expected 2 to 5 tab-separated fields, found {}", fields.len())));
    }
    let (src, dst) = (fields[0], fields[1]);
    if src.is_empty() || dst.is_empty() {
        return Err(malformed("empty vertex label".into()));
    }
    let weight = match fields.get(2) {
        Some(s) => {
            let w: f64 = s
                .trim()
                .parse()
                .map_err(|_| malformed(format!("bad weight `{s}`")))?;
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::NonPositiveWeightAt { line, weight: w });
            }
            w
        }
        None => 1.0,
    };
    let timestamp = match fields.get(3) {
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| malformed(format!("bad timestamp `{s}`")))?,
        None => line as i64,
    };
    let fraud = match fields.get(4).map(|s| s.trim()) {
        None | Some("0") => false,
        Some("1") => true,
        Some(s) => return Err(malformed(format!("bad label `{s}`"))),
    };
    Ok(StreamEvent {
        src: src.to_string(),
        dst: dst.to_string(),
        weight,
        timestamp,
        fraud,
    })
}

fn check_label(label: &str) -> Result<()> {
    if label.is_empty() || label.contains(['\t', '\n', '\r']) || label.starts_with('#') {
        return Err(Error::InvalidConfig(format!(
            "label {label:?} cannot be written to a stream file"
        )));
    }
    Ok(())
}

/// Writes every field explicitly, so parsing the text back yields the same
/// events.
pub fn serialize_stream(stream: &UpdateStream) -> Result<String> {
    let mut out = String::new();
    for e in &stream.events {
        check_label(&e.src)?;
        check_label(&e.dst)?;
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            e.src,
            e.dst,
            e.weight,
            e.timestamp,
            u8::from(e.fraud)
        )
        .expect("writing to a String");
    }
    Ok(out)
}

pub fn write_stream(stream: &UpdateStream, path: &Path) -> Result<()> {
    write(path, &serialize_stream(stream)?)
}

/// Side file of `label <TAB> a` lines giving vertex priors.
pub fn parse_vertex_weights(path: &Path) -> Result<HashMap<String, f64>> {
    parse_vertex_weights_str(&read(path)?)
}

pub fn parse_vertex_weights_str(text: &str) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.strip_suffix('\r').unwrap_or(raw);
        if content.trim().is_empty() || content.starts_with('#') {
            continue;
        }
        let malformed = |reason: String| Error::MalformedLine { line, reason };
        let (label, a) = content
            .split_once('\t')
            .ok_or_else(|| malformed("expected `label<TAB>weight`".into()))?;
        let a: f64 = a
            .trim()
            .parse()
            .map_err(|_| malformed(format!("bad vertex weight `{a}`")))?;
        if !(a >= 0.0) || !a.is_finite() {
            return Err(malformed(format!("vertex weight must be finite and >= 0, got {a}")));
        }
        out.insert(label.to_string(), a);
    }
    Ok(out)
}

/// Settings shared by the replay-style commands.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub metric: String,
    pub fd_c: f64,
    pub init_fraction: f64,
    pub mode: String,
    pub batch_size: usize,
    pub flush: FlushPolicy,
    pub seed: u64,
    pub report: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            metric: "dg".into(),
            fd_c: FdParams::default().c,
            init_fraction: 0.9,
            mode: "inc".into(),
            batch_size: 1000,
            flush: FlushPolicy::default(),
            seed: 0,
            report: None,
        }
    }
}

impl RunConfig {
    pub fn metric(&self) -> Result<Metric> {
        match self.metric.to_ascii_lowercase().as_str() {
            "fd" => Metric::fd(self.fd_c),
            other => other.parse(),
        }
    }

    pub fn replay_mode(&self) -> Result<ReplayMode> {
        match self.mode.to_ascii_lowercase().as_str() {
            "static" => Ok(ReplayMode::Static(self.batch_size)),
            "inc" => Ok(ReplayMode::Inc),
            "batch" => Ok(ReplayMode::Batch(self.batch_size)),
            "group" => Ok(ReplayMode::Group),
            other => Err(Error::InvalidConfig(format!("unknown mode `{other}`"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.metric()?;
        self.replay_mode()?;
        if !(0.0..=1.0).contains(&self.init_fraction) {
            return Err(Error::InvalidConfig(format!(
                "init fraction must lie in [0, 1], got {}",
                self.init_fraction
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if self.flush.max_size == Some(0) {
            return Err(Error::InvalidConfig("flush max size must be at least 1".into()));
        }
        if self.flush.max_age.is_some_and(|a| a < 0) {
            return Err(Error::InvalidConfig("flush max age must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    schema: String,
    kind: String,
    #[serde(flatten)]
    body: T,
}

/// Pretty-printed, schema-tagged JSON. Field order follows the struct
/// declaration, so equal reports render to equal bytes.
pub fn report_json<T: Serialize>(kind: &str, report: &T) -> String {
    let env = Envelope {
        schema: REPORT_SCHEMA.to_string(),
        kind: kind.to_string(),
        body: report,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("report is serializable");
    s.push('\n');
    s
}

pub fn write_report<T: Serialize>(kind: &str, report: &T, path: &Path) -> Result<()> {
    write(path, &report_json(kind, report))
}

/// Reads a report back, checking the schema tag. Returns the kind and body.
pub fn read_report<T: DeserializeOwned>(path: &Path) -> Result<(String, T)> {
    let text = read(path)?;
    let env: Envelope<T> = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    if env.schema != REPORT_SCHEMA {
        return Err(Error::InvalidConfig(format!(
            "{}: unsupported report schema `{}`",
            path.display(),
            env.schema
        )));
    }
    Ok((env.kind, env.body))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_line() {
        let s = parse_stream_str("a\tb\t2.5\t100\t1\n").unwrap();
        assert_eq!(
            s.events,
            vec![StreamEvent {
                src: "a".into(),
                dst: "b".into(),
                weight: 2.5,
                timestamp: 100,
                fraud: true,
            }]
        );
    }

    #[test]
    fn defaults_and_comments() {
        let s = parse_stream_str("# header\n\na\tb\n").unwrap();
        assert_eq!(s.events.len(), 1);
        let e = &s.events[0];
        assert_eq!((e.weight, e.timestamp, e.fraud), (1.0, 3, false));
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert!(matches!(
            parse_stream_str("a\tb\n a\tb\t-1"),
            Err(Error::NonPositiveWeightAt { line: 2, weight }) if weight == -1.0
        ));
        assert!(matches!(
            parse_stream_str("x\ty\nlonely\n"),
            Err(Error::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(
            parse_stream_str("a\tb\t1\tnoon"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            parse_stream_str("a\tb\t1\t3\t2"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn round_trip() {
        let text = "u1\tm1\t0.1\t5\t1\nu2\tm1\t3\t5\t0\nu3\tm2\t12345.678\t-7\t0\n";
        let s = parse_stream_str(text).unwrap();
        let back = parse_stream_str(&serialize_stream(&s).unwrap()).unwrap();
        assert_eq!(back, s);
        assert_eq!(serialize_stream(&s).unwrap(), text);
    }

    #[test]
    fn unwritable_label() {
        let mut s = parse_stream_str("a\tb").unwrap();
        s.events[0].src = "#a".into();
        assert!(serialize_stream(&s).is_err());
    }

    #[test]
    fn vertex_weight_side_file() {
        let w = parse_vertex_weights_str("# priors\nalice\t0.5\nbob\t2\n").unwrap();
        assert_eq!(w["alice"], 0.5);
        assert_eq!(w["bob"], 2.0);
        assert!(parse_vertex_weights_str("carol\t-1\n").is_err());
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = RunConfig {
            init_fraction: 1.5,
            ..RunConfig::default()
        };
        assert!(bad.validate().is_err());
        let fd = RunConfig {
            metric: "fd".into(),
            fd_c: 0.9,
            ..RunConfig::default()
        };
        assert!(fd.validate().is_err());
        let mode = RunConfig {
            mode: "turbo".into(),
            ..RunConfig::default()
        };
        assert!(mode.validate().is_err());
    }

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Tiny {
        community: Vec<String>,
        density: f64,
    }

    #[test]
    fn report_envelope() {
        let r = Tiny {
            community: vec![],
            density: 0.0,
        };
        let json = report_json("detect", &r);
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["schema"], REPORT_SCHEMA);
        assert_eq!(v["community"], serde_json::json!([]));
        assert_eq!(v["density"], 0.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.json");
        write_report("detect", &r, &path).unwrap();
        let (kind, back): (String, Tiny) = read_report(&path).unwrap();
        assert_eq!((kind.as_str(), back), ("detect", r));
    }
}
