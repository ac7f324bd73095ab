use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use toml::{Table, Value};

use crate::config::ExperimentConfig;
use crate::Failure;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Flat key-value report; the resolved config is appended as a `[config]` table.
#[derive(Debug, Default)]
pub struct Report {
    table: Table,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Report::default();
        r.str("artifact", "sde-contract");
        r.str("version", VERSION);
        r.str("command", command);
        r
    }

    pub fn str(&mut self, key: &str, v: &str) {
        self.table.insert(key.into(), Value::String(v.into()));
    }

    pub fn num(&mut self, key: &str, v: f64) {
        self.table.insert(key.into(), float(v));
    }

    pub fn int(&mut self, key: &str, v: usize) {
        self.table.insert(key.into(), Value::Integer(v as i64));
    }

    pub fn bool(&mut self, key: &str, v: bool) {
        self.table.insert(key.into(), Value::Boolean(v));
    }

    pub fn nums(&mut self, key: &str, v: &[f64]) {
        self.table.insert(key.into(), Value::Array(v.iter().map(|x| float(*x)).collect()));
    }

    /// `key_rows`, `key_cols` and the row-major entries under `key`.
    pub fn matrix(&mut self, key: &str, m: &DMatrix<f64>) {
        self.int(&format!("{key}_rows"), m.nrows());
        self.int(&format!("{key}_cols"), m.ncols());
        let flat: Vec<f64> = (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect();
        self.nums(key, &flat);
    }

    pub fn render(&self, cfg: &ExperimentConfig) -> String {
        let mut t = self.table.clone();
        let resolved: Table = toml::from_str(&cfg.to_toml()).expect("config re-parses");
        t.insert("config".into(), Value::Table(resolved));
        toml::to_string(&t).expect("report serializes")
    }
}

/// Non-finite values are written as strings, which TOML floats cannot hold portably.
fn float(v: f64) -> Value {
    if v.is_finite() {
        Value::Float(v)
    } else {
        Value::String(format!("{v}"))
    }
}

/// CSV with a `#` preamble carrying the version and the resolved config.
pub struct Series {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Series {
    pub fn new(header: &[&str]) -> Self {
        Series { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_columns(header: Vec<String>) -> Self {
        Series { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, cfg: &ExperimentConfig) -> Result<String, Failure> {
        let mut out = format!("# sde-contract {VERSION}\n");
        for line in cfg.to_toml().lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let body = w.into_inner().map_err(|e| Failure::Io(e.to_string()))?;
        out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
        Ok(out)
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt(v: f64) -> String {
    format!("{v:?}")
}

fn io(e: impl std::fmt::Display) -> Failure {
    Failure::Io(e.to_string())
}

/// Writes `name` under `dir` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, content: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(io)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(content.as_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, &target).map_err(io)?;
    Ok(target)
}

/// Parses a report written by [`Report::render`].
pub fn read_report(text: &str) -> Result<Table, toml::de::Error> {
    toml::from_str(text)
}

/// Strips the `#` preamble of a series file and returns the embedded config text.
pub fn embedded_config(series: &str) -> String {
    series
        .lines()
        .skip(1)
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.strip_prefix("# ").unwrap_or(l.trim_start_matches('#')))
        .collect::<Vec<_>>()
        .join("\n")
}
