//! Deterministic report serialization.
//!
//! Reports are written by hand so the byte stream is fully under our
//! control: keys appear in insertion order and every float is rendered with
//! 17 significant digits, which makes repeated runs byte-comparable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// 17-significant-digit rendering used for every float in JSON and CSV.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "\"nan\"".to_string()
    } else if x > 0.0 {
        "\"inf\"".to_string()
    } else {
        "\"-inf\"".to_string()
    }
}

fn escape_json(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn to_json(&self) -> String {
        match self {
            Cell::Num(x) => fmt_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => format!("\"{}\"", escape_json(s)),
        }
    }

    fn to_csv(&self) -> String {
        match self {
            Cell::Num(x) => fmt_float(*x).trim_matches('"').to_string(),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

}

/// Column-labeled sweep table, one row per sweep point.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::to_csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

/// One asserted inequality or identity with its verdict.
#[derive(Debug, Clone)]
pub struct CheckRecord {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// "at-least", "at-most", "equals" or "boolean".
    pub kind: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckRecord {
    pub fn at_least(name: &str, lhs: f64, rhs: f64, slack: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            kind: "at-least".to_string(),
            passed: lhs >= rhs - slack,
            detail: String::new(),
        }
    }

    pub fn at_most(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            kind: "at-most".to_string(),
            passed: lhs <= rhs,
            detail: String::new(),
        }
    }

    pub fn equals(name: &str, lhs: f64, rhs: f64, slack: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            kind: "equals".to_string(),
            passed: (lhs - rhs).abs() <= slack,
            detail: String::new(),
        }
    }

    pub fn boolean(name: &str, passed: bool) -> Self {
        Self {
            name: name.to_string(),
            lhs: if passed { 1.0 } else { 0.0 },
            rhs: 1.0,
            kind: "boolean".to_string(),
            passed,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: &str) -> Self {
        self.detail = detail.to_string();
        self
    }

    fn to_json(&self) -> String {
        format!(
            "{{\"name\":\"{}\",\"kind\":\"{}\",\"lhs\":{},\"rhs\":{},\"passed\":{},\"detail\":\"{}\"}}",
            escape_json(&self.name),
            escape_json(&self.kind),
            fmt_float(self.lhs),
            fmt_float(self.rhs),
            self.passed,
            escape_json(&self.detail)
        )
    }
}

/// Complete result of one scenario run.
#[derive(Debug, Clone)]
pub struct ScenarioReport {
    pub scenario: String,
    pub seed: u64,
    /// Resolved configuration, sorted by key.
    pub config: Vec<(String, String)>,
    pub checks: Vec<CheckRecord>,
    pub table: Table,
}

impl ScenarioReport {
    pub fn new(scenario: &str, seed: u64, config: Vec<(String, String)>, table: Table) -> Self {
        Self { scenario: scenario.to_string(), seed, config, checks: Vec::new(), table }
    }

    pub fn push_check(&mut self, check: CheckRecord) {
        self.checks.push(check);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"scenario\": \"{}\",", escape_json(&self.scenario));
        let _ = writeln!(out, "  \"seed\": {},", self.seed);
        out.push_str("  \"config\": {");
        let cfg: Vec<String> = self
            .config
            .iter()
            .map(|(k, v)| format!("\"{}\": \"{}\"", escape_json(k), escape_json(v)))
            .collect();
        out.push_str(&cfg.join(", "));
        out.push_str("},\n");
        let _ = writeln!(out, "  \"passed\": {},", self.passed());
        out.push_str("  \"failures\": [");
        let fails: Vec<String> =
            self.failures().iter().map(|c| format!("\"{}\"", escape_json(&c.name))).collect();
        out.push_str(&fails.join(", "));
        out.push_str("],\n");
        out.push_str("  \"checks\": [\n");
        let checks: Vec<String> = self.checks.iter().map(|c| format!("    {}", c.to_json())).collect();
        out.push_str(&checks.join(",\n"));
        out.push_str("\n  ],\n");
        out.push_str("  \"table\": {\n    \"columns\": [");
        let cols: Vec<String> =
            self.table.columns.iter().map(|c| format!("\"{}\"", escape_json(c))).collect();
        out.push_str(&cols.join(", "));
        out.push_str("],\n    \"rows\": [\n");
        let rows: Vec<String> = self
            .table
            .rows
            .iter()
            .map(|row| {
                let cells: Vec<String> = row.iter().map(Cell::to_json).collect();
                format!("      [{}]", cells.join(", "))
            })
            .collect();
        out.push_str(&rows.join(",\n"));
        out.push_str("\n    ]\n  }\n}\n");
        out
    }

    pub fn write_files(&self, out_dir: &Path) -> Result<()> {
        fs::create_dir_all(out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;
        let json_path = out_dir.join(format!("{}.json", self.scenario));
        fs::write(&json_path, self.to_json())
            .with_context(|| format!("writing {}", json_path.display()))?;
        let csv_path = out_dir.join(format!("{}.csv", self.scenario));
        fs::write(&csv_path, self.table.to_csv())
            .with_context(|| format!("writing {}", csv_path.display()))?;
        Ok(())
    }
}

/// Rebuilds the plot CSV from a written JSON report (the `plot` verb).
pub fn plot_csv_from_json(json_text: &str) -> Result<String> {
    let value: serde_json::Value =
        serde_json::from_str(json_text).context("parsing scenario report JSON")?;
    let scenario = value["scenario"].as_str().context("report lacks a scenario name")?;
    let columns: Vec<String> = value["table"]["columns"]
        .as_array()
        .context("report lacks table columns")?
        .iter()
        .map(|c| c.as_str().unwrap_or_default().to_string())
        .collect();
    let rows = value["table"]["rows"].as_array().context("report lacks table rows")?;

    let mut out = String::from("scenario,parameter,quantity,value\n");
    for row in rows {
        let row = row.as_array().context("table row is not an array")?;
        if row.is_empty() {
            continue;
        }
        let parameter = match &row[0] {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        };
        for (col, cell) in columns.iter().zip(row).skip(1) {
            let value = match cell {
                serde_json::Value::Number(n) => {
                    fmt_float(n.as_f64().unwrap_or(f64::NAN)).trim_matches('"').to_string()
                }
                serde_json::Value::Bool(b) => if *b { "1".into() } else { "0".into() },
                _ => continue,
            };
            let _ = writeln!(out, "{scenario},{parameter},{col},{value}");
        }
    }
    Ok(out)
}
