use std::io::Write;

use serde_json::{json, Value};

use crate::config::{Format, RunConfig};

/// One table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl Cell {
    pub fn opt(v: Option<f64>) -> Cell {
        v.map(Cell::Float).unwrap_or(Cell::Empty)
    }

    pub fn count(v: Option<usize>) -> Cell {
        v.map(|n| Cell::Int(n as i64)).unwrap_or(Cell::Empty)
    }

    fn csv(&self) -> String {
        match self {
            Cell::Float(v) => format_float(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Shortest round-trip decimal, switching to exponent form for very small or large magnitudes.
pub fn format_float(v: f64) -> String {
    if v == 0.0 || !v.is_finite() || (1e-4..1e9).contains(&v.abs()) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Outcome of one row of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowStatus {
    Ok,
    /// A value was produced but its convergence checks failed.
    Unconverged,
    Failed,
}

impl RowStatus {
    pub fn label(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::Unconverged => "unconverged",
            RowStatus::Failed => "failed",
        }
    }
}

/// A table with a metadata header, written as CSV or JSON.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub config_hash: String,
    pub tolerances: Vec<(String, String)>,
    pub modes: String,
    /// Additional header entries such as fitted exponents.
    pub notes: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub statuses: Vec<RowStatus>,
    /// Failures that produced no row.
    pub errors: Vec<String>,
}

impl Artifact {
    pub fn new(config: &RunConfig, name: &str, columns: &[&str]) -> Self {
        let t = &config.tolerances;
        let tolerances = [
            ("root", t.root),
            ("contour_r0", t.contour_r0),
            ("target_r", t.target_r),
            ("winding_quality", t.winding_quality),
            ("rtol", t.rtol),
            ("atol", t.atol),
            ("adaptive_tol", config.modes.adaptive_tol),
        ]
        .iter()
        .map(|(k, v)| (k.to_string(), format_float(*v)))
        .collect();
        let modes = match config.modes.n_modes {
            Some(n) => format!("fixed {n}"),
            None => format!("adaptive from {}", config.modes.n_start),
        };
        Self {
            name: name.to_string(),
            config_hash: config.hash(),
            tolerances,
            modes,
            notes: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            statuses: Vec::new(),
            errors: Vec::new(),
        }
    }

    pub fn push(&mut self, status: RowStatus, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width mismatch in artifact {}", self.name);
        self.rows.push(row);
        self.statuses.push(status);
    }

    pub fn note(&mut self, key: &str, value: impl Into<String>) {
        self.notes.push((key.to_string(), value.into()));
    }

    /// Records a failure that produced no row.
    pub fn fail(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    pub fn failures(&self) -> usize {
        self.statuses.iter().filter(|s| **s != RowStatus::Ok).count() + self.errors.len()
    }

    pub fn summary(&self) -> String {
        match (self.failures(), self.errors.is_empty()) {
            (0, _) => "converged".to_string(),
            (k, true) => format!("partial ({k} of {} rows not converged)", self.rows.len()),
            (_, false) => format!("failed: {}", self.errors.join("; ")),
        }
    }

    /// Process exit status: 0 when every row converged, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failures() == 0 {
            0
        } else {
            2
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# artifact: {}\n", self.name));
        out.push_str(&format!("# config_sha256: {}\n", self.config_hash));
        let tol: Vec<String> = self.tolerances.iter().map(|(k, v)| format!("{k}={v}")).collect();
        out.push_str(&format!("# tolerances: {}\n", tol.join(" ")));
        out.push_str(&format!("# modes: {}\n", self.modes));
        out.push_str(&format!("# status: {}\n", self.summary()));
        for (k, v) in &self.notes {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).expect("in-memory write");
        }
        let body = w.into_inner().expect("in-memory write");
        out.push_str(&String::from_utf8(body).expect("utf-8 cells"));
        out
    }

    pub fn to_json(&self) -> String {
        let header: serde_json::Map<String, Value> = [
            ("artifact".to_string(), json!(self.name)),
            ("config_sha256".to_string(), json!(self.config_hash)),
            (
                "tolerances".to_string(),
                Value::Object(self.tolerances.iter().map(|(k, v)| (k.clone(), json!(v))).collect()),
            ),
            ("modes".to_string(), json!(self.modes)),
            ("status".to_string(), json!(self.summary())),
            ("notes".to_string(), Value::Object(self.notes.iter().map(|(k, v)| (k.clone(), json!(v))).collect())),
        ]
        .into_iter()
        .collect();
        let rows: Vec<Value> = self.rows.iter().map(|r| Value::Array(r.iter().map(Cell::json).collect())).collect();
        let doc = json!({ "header": header, "columns": self.columns, "rows": rows });
        let mut s = serde_json::to_string_pretty(&doc).expect("json serializes");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }

    /// Writes to `path`, or to standard output when `path` is `None`.
    pub fn write(&self, format: Format, path: Option<&std::path::Path>) -> std::io::Result<()> {
        let text = self.render(format);
        match path {
            Some(p) => std::fs::write(p, text),
            None => std::io::stdout().lock().write_all(text.as_bytes()),
        }
    }
}
