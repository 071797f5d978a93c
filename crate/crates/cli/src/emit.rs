//! Deterministic CSV and JSON output. Floats use the shortest representation
//! that parses back to the same value.

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;

use crate::error::CliError;

/// One CSV file: fixed header, rows of preformatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        // Writing into memory cannot fail.
        w.write_record(&self.header).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row).expect("in-memory csv");
        }
        w.into_inner().expect("in-memory csv")
    }
}

/// Formats a float cell.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Calendar label `YYYY-MM` of month `t` counted from `start`.
pub fn month_label(start: (i32, u32), t: usize) -> String {
    let idx = i64::from(start.0) * 12 + i64::from(start.1) - 1 + t as i64;
    format!("{:04}-{:02}", idx.div_euclid(12), idx.rem_euclid(12) + 1)
}

/// Files produced by one command, plus the summary document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub tables: BTreeMap<&'static str, Table>,
    pub summary: BTreeMap<String, Value>,
}

impl Report {
    pub fn table(&mut self, name: &'static str, table: Table) {
        self.tables.insert(name, table);
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.into(), value.into());
    }

    pub fn summary_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.summary).expect("json of a string map");
        s.push('\n');
        s
    }

    /// Writes every table as `<name>` and the summary as `summary.json`.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for (name, table) in &self.tables {
            let path = dir.join(name);
            std::fs::write(&path, table.to_bytes()).map_err(|e| CliError::io(&path, e))?;
        }
        let path = dir.join("summary.json");
        std::fs::write(&path, self.summary_json()).map_err(|e| CliError::io(&path, e))
    }
}

/// JSON number, or null when not finite.
pub fn json_num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 690189.7912345678, -2.5e17] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn calendar_labels() {
        assert_eq!(month_label((2024, 9), 0), "2024-09");
        assert_eq!(month_label((2024, 9), 4), "2025-01");
        assert_eq!(month_label((2024, 9), 42), "2028-03");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![num(1.5), "x,y".into()]);
        assert_eq!(
            String::from_utf8(t.to_bytes()).unwrap(),
            "a,b\n1.5,\"x,y\"\n"
        );
    }

    #[test]
    fn summary_keys_are_sorted() {
        let mut r = Report::default();
        r.set("zeta", 1);
        r.set("alpha", json_num(f64::NAN));
        assert_eq!(
            r.summary_json(),
            "{\n  \"alpha\": null,\n  \"zeta\": 1\n}\n"
        );
    }
}
