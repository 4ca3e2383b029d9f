//! Tabular output as CSV (with a trailing status comment) or JSON.

use serde_json::{json, Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub partial: bool,
    /// Extra top-level fields for JSON output.
    pub extra: Map<String, Value>,
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(a) => a.iter().map(cell).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn status(&self) -> &'static str {
        if self.partial {
            "partial"
        } else {
            "ok"
        }
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        match format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                let io = |e: csv::Error| CliError::Io(std::io::Error::other(e));
                w.write_record(&self.header).map_err(io)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(cell)).map_err(io)?;
                }
                let mut out = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?)
                    .expect("csv output is utf-8");
                out.push_str(&format!("# status: {}\n", self.status()));
                Ok(out)
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| Value::Object(self.header.iter().cloned().zip(r.iter().cloned()).collect()))
                    .collect();
                let mut obj = self.extra.clone();
                obj.insert("rows".into(), Value::Array(rows));
                obj.insert("status".into(), json!(self.status()));
                Ok(serde_json::to_string_pretty(&Value::Object(obj))? + "\n")
            }
        }
    }
}

/// Finite floats as numbers, anything else as null.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(e.to_string())
    }
}
