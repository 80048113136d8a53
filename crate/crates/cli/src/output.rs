//! CSV and JSON artefacts.
//!
//! Floats are written in Rust's shortest round-trip scientific form (`{:e}`,
//! e.g. `9.048374180359595e-1`), non-finite values as `inf`, `-inf`, `NaN`.
//! Reading a field back with any IEEE-754 parser gives the same bits.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use jumpdiff::mccheck::CheckReport;
use serde::Serialize;

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

/// A CSV file written with a fixed header.
pub struct Table {
    w: csv::Writer<fs::File>,
}

impl Table {
    pub fn create(path: &Path, header: &[&str]) -> io::Result<Self> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
        w.write_record(header)?;
        Ok(Self { w })
    }

    pub fn row<I, S>(&mut self, fields: I) -> io::Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<()> {
        self.w.flush()
    }
}

pub const REPORT_HEADER: [&str; 10] = [
    "name",
    "estimate",
    "se",
    "target",
    "provenance",
    "z",
    "epsilon",
    "pass",
    "n",
    "seed",
];

pub fn write_report_csv(path: &Path, reports: &[CheckReport]) -> io::Result<()> {
    let mut t = Table::create(path, &REPORT_HEADER)?;
    for r in reports {
        t.row([
            r.name.clone(),
            fmt_f64(r.estimate),
            fmt_f64(r.se),
            fmt_f64(r.target),
            r.provenance.as_str().to_string(),
            fmt_f64(r.z),
            fmt_f64(r.epsilon),
            r.pass.to_string(),
            r.n.to_string(),
            r.seed.to_string(),
        ])?;
    }
    t.finish()
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    failed: usize,
    checks: &'a [CheckReport],
}

pub fn write_report_json(path: &Path, reports: &[CheckReport]) -> io::Result<()> {
    let doc = ReportDoc {
        failed: reports.iter().filter(|r| !r.pass).count(),
        checks: reports,
    };
    write_json(path, &doc)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    fs::write(path, text)
}

#[derive(Serialize)]
struct CheckTiming<'a> {
    name: &'a str,
    runtime_ms: f64,
}

#[derive(Serialize)]
struct Timing<'a> {
    command: &'a str,
    started_unix_ms: u128,
    total_ms: f64,
    threads: usize,
    checks: Vec<CheckTiming<'a>>,
}

/// Everything that varies between otherwise identical runs.
pub fn write_timing(
    dir: &Path,
    command: &str,
    started_unix_ms: u128,
    total_ms: f64,
    threads: usize,
    reports: &[CheckReport],
) -> io::Result<()> {
    let doc = Timing {
        command,
        started_unix_ms,
        total_ms,
        threads,
        checks: reports
            .iter()
            .map(|r| CheckTiming {
                name: &r.name,
                runtime_ms: r.runtime_ms,
            })
            .collect(),
    };
    write_json(&dir.join("timing.json"), &doc)
}

pub fn prepare_dir(dir: &Path) -> io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}
