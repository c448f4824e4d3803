//! CSV and manifest files. Floats are written with Rust's shortest
//! round-trip formatting, so parsing a file back gives the exact values.

use std::fs;
use std::path::Path;

use serde_json::json;

use crate::aggregate::{aggregate, AggregateRow};
use crate::config::ExperimentConfig;
use crate::runner::{RunRecord, RunRow};
use crate::{HarnessError, Result};

pub const RUNS_FILE: &str = "runs.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

const AGGREGATE_HEADER: [&str; 6] = ["t", "mean_simple", "se_simple", "mean_cum", "se_cum", "n_runs"];
const RUN_TAIL: [&str; 6] = ["y", "inst_regret", "batch_min_regret", "simple_regret", "cum_regret", "bbcr"];

fn run_header(dim: usize) -> Vec<String> {
    let mut h: Vec<String> = ["run_id", "t", "b", "index"].iter().map(|s| s.to_string()).collect();
    h.extend((0..dim).map(|k| format!("x{k}")));
    h.extend(RUN_TAIL.iter().map(|s| s.to_string()));
    h
}

pub fn write_runs_csv<W: std::io::Write>(writer: W, runs: &[RunRecord], dim: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(run_header(dim))?;
    for run in runs {
        for row in &run.rows {
            let mut rec = vec![
                run.run_id.to_string(),
                row.t.to_string(),
                row.b.to_string(),
                row.index.to_string(),
            ];
            rec.extend(row.x.iter().map(f64::to_string));
            rec.extend(
                [row.y, row.inst_regret, row.batch_min_regret, row.simple_regret, row.cum_regret, row.bbcr]
                    .iter()
                    .map(f64::to_string),
            );
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv<W: std::io::Write>(writer: W, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.mean_simple.to_string(),
            r.se_simple.to_string(),
            r.mean_cum.to_string(),
            r.se_cum.to_string(),
            r.n_runs.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, k: usize) -> Result<T> {
    rec.get(k)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| HarnessError::Config(format!("bad CSV field {k} in {rec:?}")))
}

/// Parses a run CSV back into `(run_id, row)` pairs in file order.
pub fn read_runs_csv<R: std::io::Read>(reader: R) -> Result<Vec<(usize, RunRow)>> {
    let mut r = csv::Reader::from_reader(reader);
    let width = r.headers()?.len();
    if width < 4 + RUN_TAIL.len() {
        return Err(HarnessError::Config("run CSV has too few columns".into()));
    }
    let dim = width - 4 - RUN_TAIL.len();
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let tail = 4 + dim;
        out.push((
            field(&rec, 0)?,
            RunRow {
                t: field(&rec, 1)?,
                b: field(&rec, 2)?,
                index: field(&rec, 3)?,
                x: (0..dim).map(|k| field(&rec, 4 + k)).collect::<Result<_>>()?,
                y: field(&rec, tail)?,
                inst_regret: field(&rec, tail + 1)?,
                batch_min_regret: field(&rec, tail + 2)?,
                simple_regret: field(&rec, tail + 3)?,
                cum_regret: field(&rec, tail + 4)?,
                bbcr: field(&rec, tail + 5)?,
            },
        ));
    }
    Ok(out)
}

pub fn read_aggregate_csv<R: std::io::Read>(reader: R) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(AGGREGATE_HEADER) {
        return Err(HarnessError::Config("unexpected aggregate CSV header".into()));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(AggregateRow {
                t: field(&rec, 0)?,
                mean_simple: field(&rec, 1)?,
                se_simple: field(&rec, 2)?,
                mean_cum: field(&rec, 3)?,
                se_cum: field(&rec, 4)?,
                n_runs: field(&rec, 5)?,
            })
        })
        .collect()
}

fn manifest(config: &ExperimentConfig, runs: &[RunRecord]) -> serde_json::Value {
    let failures: Vec<_> = runs
        .iter()
        .filter_map(|r| {
            r.failure.as_ref().map(|f| {
                json!({ "run_id": r.run_id, "round": f.round, "message": f.message })
            })
        })
        .collect();
    json!({
        "label": config.label(),
        "kernel": config.model.kernel.convention(),
        "replications": runs.len(),
        "failed_runs": failures.len(),
        "failures": failures,
        "seeds": runs.iter().map(|r| r.seed).collect::<Vec<_>>(),
        "config": config,
    })
}

/// Writes the run log, the aggregate and the manifest into `dir`.
pub fn write_outputs(dir: &Path, config: &ExperimentConfig, runs: &[RunRecord]) -> Result<Vec<AggregateRow>> {
    fs::create_dir_all(dir)?;
    let dim = config.objective.dim;
    write_runs_csv(fs::File::create(dir.join(RUNS_FILE))?, runs, dim)?;
    let agg = aggregate(runs);
    write_aggregate_csv(fs::File::create(dir.join(AGGREGATE_FILE))?, &agg)?;
    let text = serde_json::to_string_pretty(&manifest(config, runs))?;
    fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(agg)
}

/// Reads the label stored in a manifest, if present.
pub fn read_label(dir: &Path) -> Option<String> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE)).ok()?;
    let v: serde_json::Value = serde_json::from_str(&text).ok()?;
    v.get("label")?.as_str().map(str::to_string)
}
