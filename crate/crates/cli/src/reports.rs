use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use hyperprove::eval::EvalReport;
use serde::Serialize;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map_or_else(String::new, T::to_string)
}

/// `rows.csv` and `summary.json` under `dir`.
pub fn write_eval(dir: &Path, report: &EvalReport) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("rows.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record([
        "theorem_id",
        "strategy",
        "status",
        "proof",
        "proof_length",
        "nodes_expanded",
        "tactic_executions",
        "wall_ms",
    ])?;
    for r in &report.rows {
        w.write_record([
            r.theorem_id.clone(),
            r.strategy.to_string(),
            r.status.to_string(),
            opt(&r.proof),
            opt(&r.proof_length),
            r.nodes_expanded.to_string(),
            r.tactic_executions.to_string(),
            opt(&r.wall_ms),
        ])?;
    }
    w.flush()?;
    write_json(&dir.join("summary.json"), report)
}

#[derive(Debug, Serialize)]
pub struct SweepRow {
    pub setting: String,
    pub strategy: String,
    pub theorems: usize,
    pub proved: usize,
    pub proved_pct: f64,
    pub mean_proof_length: Option<f64>,
    pub mean_nodes_expanded: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct SweepSummary {
    pub sweep: String,
    pub settings: Vec<SweepRow>,
    /// Theorems proved under at least one setting.
    pub union_proved: usize,
}

pub fn write_sweep(dir: &Path, summary: &SweepSummary) -> Result<()> {
    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    for row in &summary.settings {
        w.serialize(row)?;
    }
    w.flush()?;
    write_json(&dir.join("summary.json"), summary)
}
