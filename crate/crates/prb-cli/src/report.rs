//! Uniform result emission: one table per command, as CSV (default) or JSON,
//! always prefixed with the full parameter set for reproducibility.

use std::io::{self, Write};

use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
pub struct Report {
    pub command: &'static str,
    /// Fully resolved parameters, in presentation order.
    pub params: Vec<(&'static str, String)>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

impl Report {
    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        let params: Vec<String> = self
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        writeln!(
            out,
            "# prb {} {} {}",
            env!("CARGO_PKG_VERSION"),
            self.command,
            params.join(" ")
        )?;
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(cell).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    fn write_json(&self, out: &mut dyn Write) -> io::Result<()> {
        let mut params = Map::new();
        for (k, v) in &self.params {
            params.insert((*k).into(), Value::String(v.clone()));
        }
        let doc = json!({
            "artifact": { "name": "prb", "version": env!("CARGO_PKG_VERSION") },
            "command": self.command,
            "params": params,
            "columns": self.header,
            "rows": self.rows,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&doc)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        Report {
            command: "zeta",
            params: vec![("mmax", "3".into())],
            header: vec!["M", "zeta"],
            rows: vec![vec![json!(4), json!(0.45)], vec![json!(8), Value::Null]],
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write(Format::Csv, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# prb "));
        assert!(lines[0].contains("zeta mmax=3"));
        assert_eq!(lines[1], "M,zeta");
        assert_eq!(lines[2], "4,0.45");
        assert_eq!(lines[3], "8,"); // missing value stays empty
    }

    #[test]
    fn json_layout() {
        let mut buf = Vec::new();
        sample().write(Format::Json, &mut buf).unwrap();
        let doc: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(doc["command"], "zeta");
        assert_eq!(doc["params"]["mmax"], "3");
        assert_eq!(doc["rows"][0][0], 4);
    }
}
