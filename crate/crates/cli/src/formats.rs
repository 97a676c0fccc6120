//! On-disk formats: "#" metadata headers, device JSON, event-stream and
//! distribution CSV, numeric tables and JSON reports.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use interference::linalg::{beam_splitter, fourier_unitary, haar_random_unitary};
use interference::sampling::{EventStream, Source};
use interference::{Arrangement, ComplexMatrix};
use sha2::{Digest, Sha256};

use crate::Failure;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Metadata written as "# key: value" lines ahead of every output.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Header {
    pub entries: Vec<(String, String)>,
}

impl Header {
    pub fn new(command: &str, seed: Option<u64>, inputs: &[String]) -> Self {
        let mut h = Sha256::new();
        for s in inputs {
            h.update(s.as_bytes());
            h.update([0u8]);
        }
        let digest = hex::encode(&h.finalize()[..8]);
        let mut header = Header::default();
        header.push("interference", VERSION);
        header.push("command", command);
        header.push("seed", seed.map_or_else(|| "none".to_string(), |s| s.to_string()));
        header.push("inputs", digest);
        header
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn stamp(&mut self) {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        self.push("timestamp", secs);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Collects "# key: value" lines; other comment lines are ignored.
    pub fn parse(text: &str) -> Self {
        let mut header = Header::default();
        for line in text.lines().filter_map(|l| l.strip_prefix('#')) {
            if let Some((k, v)) = line.split_once(':') {
                header.push(k.trim(), v.trim());
            }
        }
        header
    }
}

impl fmt::Display for Header {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "# {k}: {v}")?;
        }
        Ok(())
    }
}

/// `fourier:n`, `bs:R`, `haar:n:seed` or a path to a matrix JSON file.
#[derive(Debug, Clone, PartialEq)]
pub enum DeviceSpec {
    Fourier(usize),
    BeamSplitter(f64),
    Haar(usize, u64),
    File(PathBuf),
}

impl FromStr for DeviceSpec {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = |what: &str| format!("device '{s}': {what}");
        if let Some(n) = s.strip_prefix("fourier:") {
            return n.parse().map(DeviceSpec::Fourier).map_err(|_| bad("expected fourier:<modes>"));
        }
        if let Some(r) = s.strip_prefix("bs:") {
            return r.parse().map(DeviceSpec::BeamSplitter).map_err(|_| bad("expected bs:<reflectivity>"));
        }
        if let Some(rest) = s.strip_prefix("haar:") {
            let (n, seed) = rest.split_once(':').ok_or_else(|| bad("expected haar:<modes>:<seed>"))?;
            let n = n.parse().map_err(|_| bad("mode count is not an integer"))?;
            let seed = seed.parse().map_err(|_| bad("seed is not an integer"))?;
            return Ok(DeviceSpec::Haar(n, seed));
        }
        if s.is_empty() {
            return Err("empty device".into());
        }
        Ok(DeviceSpec::File(PathBuf::from(s)))
    }
}

impl DeviceSpec {
    pub fn load(&self) -> Result<ComplexMatrix, Failure> {
        Ok(match self {
            DeviceSpec::Fourier(n) => fourier_unitary(*n)?,
            DeviceSpec::BeamSplitter(r) => beam_splitter(*r)?,
            DeviceSpec::Haar(n, seed) => haar_random_unitary(*n, *seed)?,
            DeviceSpec::File(p) => parse_json(&read_text(p)?, p.display())?,
        })
    }
}

pub fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))
}

/// Blanks "#" lines so JSON positions still match the file's line numbers.
fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| if l.trim_start().starts_with('#') { "" } else { l })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn parse_json<T: serde::de::DeserializeOwned>(text: &str, origin: impl fmt::Display) -> Result<T, Failure> {
    serde_json::from_str(&strip_comments(text)).map_err(|e| Failure::Domain(format!("{origin}: {e}")))
}

pub fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialisable");
    s.push('\n');
    s
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes())
}

fn csv_error(origin: &str, e: csv::Error) -> Failure {
    Failure::Domain(format!("{origin}: {e}"))
}

fn line_of(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn write_csv_row(out: &mut String, fields: &[String]) {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(fields).expect("in-memory write");
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8"));
}

/// One event per row, one column per mode.
pub fn write_stream(header: &Header, stream: &EventStream) -> String {
    let mut out = header.to_string();
    let n = stream.modes();
    out.push_str(&(1..=n).map(|j| format!("m{j}")).collect::<Vec<_>>().join(","));
    out.push('\n');
    for e in &stream.events {
        out.push_str(&e.to_string());
        out.push('\n');
    }
    out
}

pub fn stream_header_entries(stream: &EventStream) -> Vec<(&'static str, String)> {
    vec![
        ("source", stream.source.to_string()),
        ("input", stream.input.to_string()),
        ("device", if stream.device_digest.is_empty() { "none".into() } else { stream.device_digest.clone() }),
    ]
}

pub fn read_stream(text: &str, origin: &str) -> Result<EventStream, Failure> {
    let header = Header::parse(text);
    let meta = |key: &str| {
        header
            .get(key)
            .ok_or_else(|| Failure::Domain(format!("{origin}: header has no '{key}' line")))
    };
    let source: Source = meta("source")?.parse().map_err(|e| Failure::Domain(format!("{origin}: header 'source': {e}")))?;
    let seed: u64 = meta("seed")?
        .parse()
        .map_err(|_| Failure::Domain(format!("{origin}: header 'seed' is not an integer")))?;
    let input: Arrangement = meta("input")?
        .parse()
        .map_err(|e| Failure::Domain(format!("{origin}: header 'input': {e}")))?;
    let device = meta("device")?;
    let mut reader = csv_reader(text);
    let columns = reader.headers().map_err(|e| csv_error(origin, e))?.len();
    if columns != input.modes() {
        return Err(Failure::Domain(format!(
            "{origin}: {columns} columns for a {}-mode input",
            input.modes()
        )));
    }
    let mut events = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(origin, e))?;
        let line = line_of(&record);
        let q = record
            .iter()
            .enumerate()
            .map(|(i, f)| {
                f.parse::<usize>().map_err(|_| {
                    Failure::Domain(format!("{origin}: line {line}, field m{}: '{f}' is not an occupation count", i + 1))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        events.push(Arrangement::new(q)?);
    }
    Ok(EventStream {
        source,
        seed,
        input,
        device_digest: if device == "none" { String::new() } else { device.to_string() },
        events,
    })
}

pub fn write_distribution(header: &Header, rows: &[(Arrangement, f64)]) -> String {
    let mut out = header.to_string();
    out.push_str("arrangement,probability\n");
    for (s, p) in rows {
        write_csv_row(&mut out, &[s.to_string(), p.to_string()]);
    }
    out
}

pub fn read_distribution(text: &str, origin: &str) -> Result<Vec<(Arrangement, f64)>, Failure> {
    let mut reader = csv_reader(text);
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(origin, e))?;
        let line = line_of(&record);
        if record.len() != 2 {
            return Err(Failure::Domain(format!("{origin}: line {line}: expected 2 fields, found {}", record.len())));
        }
        let s: Arrangement = record[0]
            .parse()
            .map_err(|e| Failure::Domain(format!("{origin}: line {line}, field arrangement: {e}")))?;
        let p: f64 = record[1].parse().map_err(|_| {
            Failure::Domain(format!("{origin}: line {line}, field probability: '{}' is not a number", &record[1]))
        })?;
        rows.push((s, p));
    }
    Ok(rows)
}

/// Numeric table with named columns (scans, benchmarks).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn render(&self, header: &Header) -> String {
        let mut out = header.to_string();
        write_csv_row(&mut out, &self.columns);
        for row in &self.rows {
            write_csv_row(&mut out, &row.iter().map(f64::to_string).collect::<Vec<_>>());
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_table(text: &str, origin: &str) -> Result<Table, Failure> {
    let mut reader = csv_reader(text);
    let columns: Vec<String> = reader.headers().map_err(|e| csv_error(origin, e))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(origin, e))?;
        let line = line_of(&record);
        let row = record
            .iter()
            .zip(&columns)
            .map(|(f, c)| {
                f.parse::<f64>()
                    .map_err(|_| Failure::Domain(format!("{origin}: line {line}, field {c}: '{f}' is not a number")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(Table { columns, rows })
}
