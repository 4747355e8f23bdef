use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

/// One numeric result.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub quantity: String,
    pub value: f64,
    pub stderr: Option<f64>,
    /// True for closed-form or exact-expectation values.
    pub exact: bool,
    #[serde(rename = "M")]
    pub settings: Option<u64>,
    #[serde(rename = "K")]
    pub shots: Option<u64>,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub detail: Map<String, Value>,
}

impl Row {
    pub fn exact(quantity: impl Into<String>, value: f64) -> Self {
        Self { quantity: quantity.into(), value, stderr: None, exact: true, settings: None, shots: None, seed: None, detail: Map::new() }
    }

    pub fn estimate(quantity: impl Into<String>, value: f64, stderr: f64, settings: Option<u64>, shots: Option<u64>, seed: Option<u64>) -> Self {
        Self { quantity: quantity.into(), value, stderr: Some(stderr), exact: false, settings, shots, seed, detail: Map::new() }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.detail.insert(key.to_string(), serde_json::to_value(value).expect("serialisable detail"));
        self
    }
}

/// Output of one command: the resolved configuration echoed back, the rows,
/// and the wall time (the only field that varies between identical runs).
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub config: Map<String, Value>,
    pub rows: Vec<Row>,
    /// Overall pass/fail for `reproduce`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    pub seconds: f64,
}

impl Report {
    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)
    }

    /// Flat table; the configuration goes into `#`-prefixed header lines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# command: {}", self.command)?;
        for (k, v) in &self.config {
            writeln!(w, "# {k}: {v}")?;
        }
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(["quantity", "value", "stderr", "exact", "M", "K", "seed", "detail"])?;
        let opt = |x: Option<u64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            cw.write_record([
                r.quantity.clone(),
                r.value.to_string(),
                r.stderr.map(|s| s.to_string()).unwrap_or_default(),
                r.exact.to_string(),
                opt(r.settings),
                opt(r.shots),
                opt(r.seed),
                if r.detail.is_empty() { String::new() } else { Value::Object(r.detail.clone()).to_string() },
            ])?;
        }
        cw.flush()
    }
}
