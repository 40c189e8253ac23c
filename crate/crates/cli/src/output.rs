//! Rendering of command results as CSV or JSON lines, and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

pub type Row = Map<String, Value>;

/// Builds a row from `key => value` pairs, keeping their order.
#[macro_export]
macro_rules! row {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut r = $crate::output::Row::new();
        $( r.insert($k.to_string(), serde_json::to_value($v).expect("serializable")); )*
        r
    }};
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// The command asserts nothing.
    None,
    Pass,
    Fail,
}

impl Verdict {
    pub fn of(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Everything a command produced. In JSON mode every record is written in
/// order; in CSV mode the records of kind `table` form the CSV, the kinds in
/// `bulk` are left out and the rest go to stderr as JSON lines.
#[derive(Debug)]
pub struct Report {
    pub table: &'static str,
    pub bulk: &'static [&'static str],
    pub records: Vec<(&'static str, Row)>,
    pub verdict: Verdict,
}

impl Report {
    pub fn new(table: &'static str) -> Self {
        Report { table, bulk: &[], records: Vec::new(), verdict: Verdict::None }
    }

    pub fn push(&mut self, kind: &'static str, row: Row) {
        self.records.push((kind, row));
    }

    pub fn render(&self, format: Format) -> Result<(Vec<u8>, Vec<u8>), CliError> {
        let mut side = Vec::new();
        let main = match format {
            Format::Json => {
                let mut out = Vec::new();
                for (kind, row) in &self.records {
                    writeln!(out, "{}", json_line(kind, row)).expect("in-memory write");
                }
                out
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let mut header: Option<Vec<&String>> = None;
                for (kind, row) in &self.records {
                    if self.bulk.contains(kind) {
                        continue;
                    }
                    if *kind != self.table {
                        writeln!(side, "{}", json_line(kind, row)).expect("in-memory write");
                        continue;
                    }
                    let keys = header.get_or_insert_with(|| {
                        let keys: Vec<&String> = row.keys().collect();
                        w.write_record(keys.iter().map(|k| k.as_str())).expect("in-memory write");
                        keys
                    });
                    let cells: Vec<String> = keys.iter().map(|k| cell(row.get(*k))).collect();
                    w.write_record(&cells).expect("in-memory write");
                }
                w.into_inner().map_err(|e| CliError::Io { context: "csv output".into(), source: e.into_error() })?
            }
        };
        Ok((main, side))
    }
}

fn json_line(kind: &str, row: &Row) -> String {
    let mut r = Row::new();
    r.insert("schema_version".into(), SCHEMA_VERSION.into());
    r.insert("record".into(), kind.into());
    r.extend(row.iter().map(|(k, v)| (k.clone(), v.clone())));
    Value::Object(r).to_string()
}

fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

/// Enough to rerun a command and reproduce its output byte for byte.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub command: String,
    pub params: Value,
    /// The seed of the random draws; 0 for commands that draw nothing.
    pub seed: u64,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: String, params: Value, seed: u64) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            command,
            params,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| CliError::Io { context: format!("reading {}", path.display()), source })?;
        let m: RunManifest = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{} is not a run manifest: {e}", path.display())))?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(CliError::Validation(format!(
                "manifest schema version {} is not supported (expected {SCHEMA_VERSION})",
                m.schema_version
            )));
        }
        Ok(m)
    }
}

/// `<out>.manifest.json`.
pub fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { context: format!("writing {}", path.display()), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("row");
        r.push("row", crate::row! { "x" => "+0", "value" => [0.5, -1.0] });
        r.push("row", crate::row! { "x" => "-1", "value" => [2.0, 0.0] });
        r.push("verdict", crate::row! { "passed" => true });
        r.push("detail", crate::row! { "n" => 1 });
        r.bulk = &["detail"];
        r
    }

    #[test]
    fn csv_has_header_and_quotes_arrays() {
        let (main, side) = sample().render(Format::Csv).unwrap();
        assert_eq!(String::from_utf8(main).unwrap(), "x,value\n+0,\"[0.5,-1.0]\"\n-1,\"[2.0,0.0]\"\n");
        assert_eq!(String::from_utf8(side).unwrap(), "{\"schema_version\":1,\"record\":\"verdict\",\"passed\":true}\n");
    }

    #[test]
    fn json_lines_keep_every_record() {
        let (main, side) = sample().render(Format::Json).unwrap();
        let text = String::from_utf8(main).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("{\"schema_version\":1,\"record\":\"row\",\"x\":\"+0\",\"value\":[0.5,-1.0]}"));
        assert!(side.is_empty());
    }

    #[test]
    fn sidecar_appends_suffix() {
        assert_eq!(sidecar(Path::new("out/a.csv")), PathBuf::from("out/a.csv.manifest.json"));
    }
}
