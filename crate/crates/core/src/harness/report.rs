//! Flat-file reports: a CSV of data rows plus a JSON sidecar with everything else.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: serde_json::Value,
    /// False only when a built-in check of the experiment failed.
    pub passed: bool,
    pub wall_clock_secs: f64,
    pub version: String,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    config: ExperimentConfig,
    columns: Vec<String>,
    row_count: usize,
    summary: serde_json::Value,
    passed: bool,
    wall_clock_secs: f64,
    version: String,
}

/// The sidecar of `out.csv` is `out.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

impl ExperimentReport {
    /// The CSV text alone: header plus data rows, with no timing information.
    pub fn csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.columns)?;
        for row in &self.rows {
            csv.write_record(row)?;
        }
        csv.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

pub fn write_report(report: &ExperimentReport, path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e == "json") {
        return Err(Error::Config(format!("{}: the CSV path must not end in .json (the sidecar uses it)", path.display())));
    }
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    report.write_csv(BufWriter::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    let side = sidecar_path(path);
    let sidecar = Sidecar {
        config: report.config.clone(),
        columns: report.columns.clone(),
        row_count: report.rows.len(),
        summary: report.summary.clone(),
        passed: report.passed,
        wall_clock_secs: report.wall_clock_secs,
        version: report.version.clone(),
    };
    let file = File::create(&side).map_err(|e| Error::io(&side, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &sidecar)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<ExperimentReport> {
    let side = sidecar_path(path);
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: Sidecar = serde_json::from_str(&text)?;
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::Reader::from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(String::from).collect();
    if header != sidecar.columns {
        return Err(Error::Config(format!("{}: CSV header does not match its sidecar", path.display())));
    }
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
    if rows.len() != sidecar.row_count {
        return Err(Error::Config(format!("{}: {} rows, sidecar expects {}", path.display(), rows.len(), sidecar.row_count)));
    }
    Ok(ExperimentReport {
        config: sidecar.config,
        columns: sidecar.columns,
        rows,
        summary: sidecar.summary,
        passed: sidecar.passed,
        wall_clock_secs: sidecar.wall_clock_secs,
        version: sidecar.version,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ExperimentKind;

    fn report(rows: Vec<Vec<String>>) -> ExperimentReport {
        ExperimentReport {
            config: ExperimentConfig::default_for(ExperimentKind::Stochopt),
            columns: vec!["a".into(), "b".into()],
            rows,
            summary: serde_json::json!({"x": 0.1}),
            passed: true,
            wall_clock_secs: 1.25,
            version: "0.1.0".into(),
        }
    }

    #[test]
    fn header_only_for_empty_results() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        write_report(&report(vec![]), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n");
        assert_eq!(read_report(&path).unwrap(), report(vec![]));
    }

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/r.csv");
        let r = report(vec![vec!["1".into(), "x,y".into()], vec!["2".into(), "0.30000000000000004".into()]]);
        write_report(&r, &path).unwrap();
        assert!(sidecar_path(&path).exists());
        assert_eq!(read_report(&path).unwrap(), r);
    }

    #[test]
    fn io_errors_carry_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.csv");
        let err = read_report(&missing).unwrap_err();
        assert!(err.to_string().contains("nope.json"), "{err}");
        assert!(write_report(&report(vec![]), &dir.path().join("r.json")).is_err());
    }
}
