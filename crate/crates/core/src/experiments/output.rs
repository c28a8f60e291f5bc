use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{Contract, Fit, SweepKind, SweepResult};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    JsonLines,
}

/// What [`super::run`] produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub result: SweepResult,
    pub data: PathBuf,
    pub summary: PathBuf,
    /// Gnuplot data files, one per fitted curve.
    pub curves: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn paths(&self) -> Vec<&Path> {
        let mut v = vec![self.data.as_path(), self.summary.as_path()];
        v.extend(self.curves.iter().map(PathBuf::as_path));
        v
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    id: &'a str,
    sweep: SweepKind,
    seed: u64,
    passed: bool,
    contracts: &'a [Contract],
    fits: &'a [Fit],
}

pub const CSV_HEADER: [&str; 7] = ["sweep", "n", "trial", "seed", "metric", "value", "stderr"];

/// Rows as CSV with the fixed column order of [`CSV_HEADER`].
pub fn rows_csv(result: &SweepResult) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in &result.rows {
        w.write_record([
            r.sweep.to_string(),
            r.n.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.metric.clone(),
            r.value.to_string(),
            r.stderr.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))
}

pub fn rows_json_lines(result: &SweepResult) -> Vec<u8> {
    let mut out = Vec::new();
    for r in &result.rows {
        serde_json::to_writer(&mut out, r).expect("rows serialize");
        out.push(b'\n');
    }
    out
}

pub fn summary_json(result: &SweepResult) -> String {
    let s = Summary {
        id: &result.id,
        sweep: result.kind,
        seed: result.seed,
        passed: result.passed(),
        contracts: &result.contracts,
        fits: &result.fits,
    };
    serde_json::to_string_pretty(&s).expect("summary serializes") + "\n"
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::File::create(path)
        .and_then(|mut f| f.write_all(bytes))
        .map_err(|e| Error::io(path, e))
}

pub(super) fn write_all(result: SweepResult, dir: &Path, format: OutputFormat, gnuplot: bool) -> Result<RunOutcome> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let id = &result.id;
    let (data, bytes) = match format {
        OutputFormat::Csv => (dir.join(format!("{id}.csv")), rows_csv(&result)?),
        OutputFormat::JsonLines => (dir.join(format!("{id}.jsonl")), rows_json_lines(&result)),
    };
    write(&data, &bytes)?;
    let summary = dir.join(format!("{id}.summary.json"));
    write(&summary, summary_json(&result).as_bytes())?;
    let mut curves = Vec::new();
    if gnuplot {
        for fit in &result.fits {
            let path = dir.join(format!("{id}.{}.dat", fit.name));
            let mut text = format!("# {}\t{}\n", fit.x, fit.y);
            for (x, y) in &fit.points {
                text += &format!("{x}\t{y}\n");
            }
            write(&path, text.as_bytes())?;
            curves.push(path);
        }
    }
    Ok(RunOutcome {
        result,
        data,
        summary,
        curves,
    })
}
