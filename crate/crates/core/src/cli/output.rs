//! Tabular and JSON outputs, each carrying the resolved configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use super::config::RunConfig;
use crate::error::{Error, Result};

/// A flat table; cells are preformatted so output is byte-stable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Column index by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn values(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.column(name)?;
        Some(self.rows.iter().map(|r| r[k].parse().unwrap_or(f64::NAN)).collect())
    }
}

/// Shortest round-trip representation, so written values parse back exactly.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// One command's result: a table for CSV and a document for JSON.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub table: Table,
    pub result: Value,
    /// Seeds used beyond those in the config (e.g. derived per-N seeds).
    pub seeds: Value,
}

impl Report {
    pub fn new<T: Serialize>(command: &'static str, table: Table, result: &T, seeds: Value) -> Result<Self> {
        Ok(Self { command, table, result: serde_json::to_value(result)?, seeds })
    }

    fn header(&self, cfg: &RunConfig) -> Value {
        json!({
            "tool": "ionsim",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config": cfg.to_json(),
            "seeds": self.seeds,
        })
    }

    pub fn write_csv<W: Write>(&self, cfg: &RunConfig, mut w: W) -> Result<()> {
        writeln!(w, "# {}", serde_json::to_string(&self.header(cfg))?)?;
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.table.columns)?;
        for row in &self.table.rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, cfg: &RunConfig, w: W) -> Result<()> {
        let mut doc = self.header(cfg);
        doc["result"] = self.result.clone();
        serde_json::to_writer_pretty(w, &doc)?;
        Ok(())
    }

    /// Writes `<dir>/<command>.csv` and `.json` as enabled; returns the paths.
    pub fn write_files(&self, cfg: &RunConfig) -> Result<Vec<PathBuf>> {
        let dir = &cfg.output.dir;
        fs::create_dir_all(dir)
            .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
        let mut written = Vec::new();
        if cfg.output.csv {
            let path = dir.join(format!("{}.csv", self.command));
            self.write_csv(cfg, create(&path)?)?;
            written.push(path);
        }
        if cfg.output.json {
            let path = dir.join(format!("{}.json", self.command));
            let mut f = create(&path)?;
            self.write_json(cfg, &mut f)?;
            writeln!(f)?;
            written.push(path);
        }
        Ok(written)
    }
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

/// Reads the JSON header line of a CSV written by [`Report::write_csv`].
pub fn read_csv_header(text: &str) -> Option<Value> {
    let line = text.lines().next()?.strip_prefix("# ")?;
    serde_json::from_str(line).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_carries_config_header() {
        let cfg = RunConfig::default();
        let mut t = Table::new(["a", "b"]);
        t.push(vec![num(0.1), num(2.0)]);
        let r = Report::new("demo", t, &json!({"x": 1}), json!({"base_seed": 7})).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&cfg, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = read_csv_header(&text).unwrap();
        assert_eq!(header["config"], cfg.to_json());
        assert_eq!(header["seeds"]["base_seed"], 7);
        assert!(text.lines().nth(1) == Some("a,b"));
        assert!(text.lines().nth(2) == Some("0.1,2.0"));
    }

    #[test]
    fn json_embeds_result() {
        let cfg = RunConfig::default();
        let r = Report::new("demo", Table::default(), &json!({"x": 1}), Value::Null).unwrap();
        let mut buf = Vec::new();
        r.write_json(&cfg, &mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["result"]["x"], 1);
        assert_eq!(v["command"], "demo");
    }

    #[test]
    fn num_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 12345.678] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
