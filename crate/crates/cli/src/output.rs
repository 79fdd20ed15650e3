//! Artifact writing and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Write `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(CliError::io)?;
        f.write_all(bytes).map_err(CliError::io)?;
        f.sync_all().map_err(CliError::io)?;
    }
    fs::rename(&tmp, path).map_err(CliError::io)
}

/// Shortest round-trip scientific notation.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub workers: Option<usize>,
    pub started: String,
    pub finished: String,
    pub passed: bool,
    pub checks: Vec<CheckRecord>,
    pub files: Vec<String>,
}

/// Output directory, emitted files and check outcomes of one run.
pub struct RunContext {
    out_dir: PathBuf,
    files: Vec<String>,
    checks: Vec<CheckRecord>,
    pub svg: bool,
}

impl RunContext {
    pub fn new(out_dir: &Path, svg: bool) -> CliResult<Self> {
        fs::create_dir_all(out_dir).map_err(|e| CliError::Failure(format!("cannot create {}: {e}", out_dir.display())))?;
        Ok(Self { out_dir: out_dir.to_path_buf(), files: Vec::new(), checks: Vec::new(), svg })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn record(&mut self, name: &str) {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        write_atomic(&self.path(name), bytes)?;
        self.record(name);
        Ok(())
    }

    /// RFC 4180 CSV with a header row.
    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> CliResult<()>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Failure(format!("csv: {e}"));
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(&row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Failure(format!("csv: {e}")))?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Failure(format!("json: {e}")))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_svg(&mut self, name: &str, svg: String) -> CliResult<()> {
        if self.svg {
            self.write_bytes(name, svg.as_bytes())?;
        }
        Ok(())
    }

    pub fn check(&mut self, suite: &str, name: &str, passed: bool, value: Option<f64>, tolerance: Option<f64>, detail: impl Into<String>) {
        self.checks.push(CheckRecord { suite: suite.into(), name: name.into(), passed, value, tolerance, detail: detail.into() });
    }

    /// `value ≤ tolerance`, with NaN failing.
    pub fn check_le(&mut self, suite: &str, name: &str, value: f64, tolerance: f64, detail: impl Into<String>) -> bool {
        let passed = value <= tolerance;
        self.check(suite, name, passed, Some(value), Some(tolerance), detail);
        passed
    }

    pub fn checks(&self) -> &[CheckRecord] {
        &self.checks
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Check table as CSV.
    pub fn write_checks_csv(&mut self, name: &str) -> CliResult<()> {
        let rows: Vec<Vec<String>> = self
            .checks
            .iter()
            .map(|c| vec![c.suite.clone(), c.name.clone(), opt(c.value), opt(c.tolerance), c.passed.to_string(), c.detail.clone()])
            .collect();
        self.write_csv(name, &["suite", "check", "value", "tolerance", "passed", "detail"], rows)
    }

    /// JUnit-style XML with one test case per check.
    pub fn write_junit(&mut self, name: &str, suite_name: &str) -> CliResult<()> {
        let failures = self.checks.iter().filter(|c| !c.passed).count();
        let mut xml = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
        xml.push_str(&format!(
            "<testsuites name=\"{}\" tests=\"{}\" failures=\"{failures}\">\n",
            escape(suite_name),
            self.checks.len()
        ));
        let mut suites: Vec<&str> = Vec::new();
        for c in &self.checks {
            if !suites.contains(&c.suite.as_str()) {
                suites.push(&c.suite);
            }
        }
        for s in suites {
            let cases: Vec<&CheckRecord> = self.checks.iter().filter(|c| c.suite == s).collect();
            let fails = cases.iter().filter(|c| !c.passed).count();
            xml.push_str(&format!("  <testsuite name=\"{}\" tests=\"{}\" failures=\"{fails}\">\n", escape(s), cases.len()));
            for c in cases {
                xml.push_str(&format!("    <testcase classname=\"{}\" name=\"{}\"", escape(s), escape(&c.name)));
                if c.passed {
                    xml.push_str("/>\n");
                } else {
                    let msg = format!("value {} tolerance {} {}", opt(c.value), opt(c.tolerance), c.detail);
                    xml.push_str(&format!(">\n      <failure message=\"{}\"/>\n    </testcase>\n", escape(&msg)));
                }
            }
            xml.push_str("  </testsuite>\n");
        }
        xml.push_str("</testsuites>\n");
        self.write_bytes(name, xml.as_bytes())
    }

    /// Write `manifest.json` last, listing every file emitted before it.
    pub fn finish(mut self, mut manifest: RunManifest) -> CliResult<RunManifest> {
        manifest.finished = chrono::Utc::now().to_rfc3339();
        manifest.passed = self.all_passed();
        manifest.checks = self.checks.clone();
        self.record("manifest.json");
        manifest.files = self.files.clone();
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Failure(format!("json: {e}")))?;
        bytes.push(b'\n');
        write_atomic(&self.path("manifest.json"), &bytes)?;
        Ok(manifest)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
