use serde_json::{json, Map, Value as Json};

use crate::config::{Experiment, Format};
use crate::{TOOL_NAME, TOOL_VERSION};

/// Significant digits for every floating-point value written out.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Count(u64),
    Text(String),
    Flag(bool),
    Reals(Vec<f64>),
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Real(x)
    }
}

impl From<u64> for Value {
    fn from(x: u64) -> Self {
        Value::Count(x)
    }
}

impl From<u32> for Value {
    fn from(x: u32) -> Self {
        Value::Count(x as u64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<String> for Value {
    fn from(s: String) -> Self {
        Value::Text(s)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Flag(b)
    }
}

impl From<Vec<f64>> for Value {
    fn from(v: Vec<f64>) -> Self {
        Value::Reals(v)
    }
}

impl Value {
    fn to_text(&self) -> String {
        match self {
            Value::Real(x) => format_sig(*x),
            Value::Count(n) => n.to_string(),
            Value::Text(s) => s.clone(),
            Value::Flag(b) => b.to_string(),
            Value::Reals(v) => v.iter().map(|x| format_sig(*x)).collect::<Vec<_>>().join(";"),
        }
    }

    fn to_json(&self) -> Json {
        match self {
            Value::Real(x) => json_real(*x),
            Value::Count(n) => json!(n),
            Value::Text(s) => json!(s),
            Value::Flag(b) => json!(b),
            Value::Reals(v) => Json::Array(v.iter().map(|x| json_real(*x)).collect()),
        }
    }
}

fn json_real(x: f64) -> Json {
    // round-trip through the 12-digit text so CSV and JSON agree
    let rounded: f64 = format_sig(x).parse().unwrap_or(x);
    serde_json::Number::from_f64(rounded)
        .map(Json::Number)
        .unwrap_or(Json::Null)
}

/// Cell of the data table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Real(f64),
    Count(u64),
}

impl Cell {
    fn to_text(self) -> String {
        match self {
            Cell::Real(x) => format_sig(x),
            Cell::Count(n) => n.to_string(),
        }
    }

    fn to_json(self) -> Json {
        match self {
            Cell::Real(x) => json_real(x),
            Cell::Count(n) => json!(n),
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Real(x) => x,
            Cell::Count(n) => n as f64,
        }
    }
}

/// Output of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub experiment: Experiment,
    pub seed: u64,
    pub parameters: Vec<(String, Value)>,
    pub results: Vec<(String, Value)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        Report {
            experiment,
            seed,
            parameters: Vec::new(),
            results: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl Into<Value>) {
        self.parameters.push((key.to_string(), value.into()));
    }

    pub fn result(&mut self, key: &str, value: impl Into<Value>) {
        self.results.push((key.to_string(), value.into()));
    }

    pub fn result_value(&self, key: &str) -> Option<&Value> {
        self.results.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx].as_f64()).collect())
    }

    pub fn render(&self, format: Format, timestamp: &str) -> String {
        match format {
            Format::Csv => self.render_csv(timestamp),
            Format::Json => self.render_json(timestamp),
        }
    }

    /// Metadata as `# key: value` comment lines, then a header row and
    /// comma-separated data rows.
    /// The timestamp is the last comment line.
    pub fn render_csv(&self, timestamp: &str) -> String {
        let mut out = String::new();
        out.push_str(&format!("# tool: {TOOL_NAME} {TOOL_VERSION}\n"));
        out.push_str(&format!("# experiment: {}\n", self.experiment.name()));
        out.push_str(&format!("# seed: {}\n", self.seed));
        for (k, v) in &self.parameters {
            out.push_str(&format!("# param.{k}: {}\n", v.to_text()));
        }
        for (k, v) in &self.results {
            out.push_str(&format!("# result.{k}: {}\n", v.to_text()));
        }
        out.push_str(&format!("# timestamp: {timestamp}\n"));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.to_text()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// One pretty-printed JSON document. The timestamp is the first member,
    /// on its own line, so dropping that line leaves valid JSON.
    pub fn render_json(&self, timestamp: &str) -> String {
        let mut params = Map::new();
        for (k, v) in &self.parameters {
            params.insert(k.clone(), v.to_json());
        }
        let mut results = Map::new();
        for (k, v) in &self.results {
            results.insert(k.clone(), v.to_json());
        }
        let rows: Vec<Json> = self
            .rows
            .iter()
            .map(|r| Json::Array(r.iter().map(|c| c.to_json()).collect()))
            .collect();
        let doc = json!({
            "timestamp": timestamp,
            "tool": TOOL_NAME,
            "version": TOOL_VERSION,
            "experiment": self.experiment.name(),
            "seed": self.seed,
            "parameters": params,
            "results": results,
            "columns": self.columns,
            "rows": rows,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        text
    }
}

/// Removes the timestamp line from rendered output.
pub fn strip_timestamp(text: &str) -> String {
    text.split_inclusive('\n')
        .filter(|l| {
            let t = l.trim_start();
            !(t.starts_with("# timestamp:") || t.starts_with("\"timestamp\":"))
        })
        .collect()
}

/// Formats `x` with 12 significant digits in the style of C's `%.12g`.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let p = SIGNIFICANT_DIGITS;
    let sci = format!("{:.*e}", p - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
