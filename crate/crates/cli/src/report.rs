//! Pipeline reports and plot tables.
//!
//! A report is a JSON document preceded by one `#` line carrying the
//! generation time; everything after that line is deterministic.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    /// `value <= tolerance`; NaN fails.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.to_string(), value, tolerance, pass: value <= tolerance }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.to_string(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub scenario: String,
    pub pipeline: String,
    pub status: Status,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub details: serde_json::Value,
    pub tables: Vec<String>,
    #[serde(skip)]
    pub table_data: Vec<Table>,
}

impl PipelineReport {
    pub fn new(scenario: &str, pipeline: &str) -> Self {
        PipelineReport {
            scenario: scenario.to_string(),
            pipeline: pipeline.to_string(),
            status: Status::Pass,
            checks: Vec::new(),
            error: None,
            details: serde_json::Value::Object(Default::default()),
            tables: Vec::new(),
            table_data: Vec::new(),
        }
    }

    pub fn check(&mut self, c: Check) {
        if !c.pass {
            self.status = Status::Fail;
        }
        self.checks.push(c);
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or(serde_json::Value::Null);
        if let serde_json::Value::Object(m) = &mut self.details {
            m.insert(key.to_string(), v);
        }
    }

    pub fn fail(&mut self, message: impl Into<String>) {
        self.status = Status::Fail;
        self.error = Some(message.into());
    }

    pub fn skip(&mut self, reason: impl Into<String>) {
        self.status = Status::Skipped;
        self.detail("skipped", reason.into());
    }

    pub fn table(&mut self, t: Table) {
        self.tables.push(format!("{}.{}.{}.csv", self.scenario, self.pipeline, t.name));
        self.table_data.push(t);
    }

    /// One line for the terminal.
    pub fn summary(&self) -> String {
        let worst = self.checks.iter().map(|c| format!("{}={:.3e} (tol {:.1e})", c.name, c.value, c.tolerance));
        let mut parts: Vec<String> = worst.collect();
        if let Some(e) = &self.error {
            parts.push(e.clone());
        }
        if let Some(serde_json::Value::String(r)) = self.details.get("skipped") {
            parts.push(r.clone());
        }
        format!("{:<26} {} {}", self.pipeline, self.status.label(), parts.join(", "))
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let path = dir.join(format!("{}.{}.report", self.scenario, self.pipeline));
        let mut f = BufWriter::new(File::create(&path)?);
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        writeln!(f, "# evosemi report generated at unix time {secs}")?;
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        f.flush()?;
        written.push(path);
        for (t, name) in self.table_data.iter().zip(&self.tables) {
            let path = dir.join(name);
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(&t.header)?;
            for row in &t.rows {
                w.write_record(row.iter().map(|v| format!("{v:e}")))?;
            }
            w.flush()?;
            written.push(path);
        }
        Ok(written)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_check_fails_report() {
        let mut r = PipelineReport::new("s", "p");
        r.check(Check::at_most("a", 1e-9, 1e-8));
        assert_eq!(r.status, Status::Pass);
        r.check(Check::at_most("b", f64::NAN, 1.0));
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn writes_report_and_tables() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = PipelineReport::new("s", "p");
        let mut t = Table::new("cloud", &["d", "L"]);
        t.push(vec![1.0, -0.5]);
        r.table(t);
        let files = r.write(dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let text = std::fs::read_to_string(&files[0]).unwrap();
        assert!(text.starts_with("# evosemi report"));
        let body: serde_json::Value = serde_json::from_str(text.split_once('\n').unwrap().1).unwrap();
        assert_eq!(body["tables"][0], "s.p.cloud.csv");
        let csv = std::fs::read_to_string(&files[1]).unwrap();
        assert_eq!(csv, "d,L\n1e0,-5e-1\n");
    }
}
