//! Per-(algorithm, objective) statistics over a set of runs.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use oeo_core::TRACE_HEADER;

use crate::experiment::{read_manifest, ManifestEntry};
use crate::CliError;

pub const SUMMARY_HEADER: &str = "algorithm,objective,runs,cost_mean,cost_std,best_cost,mean_wall_seconds";

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub objective: String,
    pub runs: usize,
    pub cost_mean: f64,
    /// Population standard deviation.
    pub cost_std: f64,
    pub best_cost: f64,
    pub mean_wall_seconds: f64,
}

// Sorting first makes the floating-point sums independent of run order.
fn mean_sorted(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum::<f64>() / values.len() as f64
}

/// What a summary needs from one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSummary {
    pub algorithm: String,
    pub objective: String,
    pub seed: u64,
    pub final_cost: f64,
    pub wall_seconds: f64,
}

impl From<&ManifestEntry> for TraceSummary {
    fn from(e: &ManifestEntry) -> Self {
        Self {
            algorithm: e.spec.algorithm.clone(),
            objective: e.spec.objective_label.clone(),
            seed: e.spec.seed,
            final_cost: e.final_cost,
            wall_seconds: e.wall_seconds,
        }
    }
}

pub fn summarize(entries: &[ManifestEntry]) -> Vec<SummaryRow> {
    summarize_traces(&entries.iter().map(TraceSummary::from).collect::<Vec<_>>())
}

/// Groups runs by algorithm and objective. Rows come out sorted by key, and
/// the result does not depend on the order of `runs`.
pub fn summarize_traces(runs: &[TraceSummary]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String), Vec<&TraceSummary>> = BTreeMap::new();
    for e in runs {
        groups
            .entry((e.algorithm.clone(), e.objective.clone()))
            .or_default()
            .push(e);
    }
    groups
        .into_iter()
        .map(|((algorithm, objective), members)| {
            let mut costs: Vec<f64> = members.iter().map(|e| e.final_cost).collect();
            let mut walls: Vec<f64> = members.iter().map(|e| e.wall_seconds).collect();
            let mean = mean_sorted(&mut costs);
            let mut sq: Vec<f64> = costs.iter().map(|c| (c - mean).powi(2)).collect();
            SummaryRow {
                algorithm,
                objective,
                runs: costs.len(),
                cost_mean: mean,
                cost_std: mean_sorted(&mut sq).sqrt(),
                best_cost: costs[0],
                mean_wall_seconds: mean_sorted(&mut walls),
            }
        })
        .collect()
}

pub fn render_summary(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.algorithm, r.objective, r.runs, r.cost_mean, r.cost_std, r.best_cost, r.mean_wall_seconds
        );
    }
    s
}

pub(crate) fn write_summary(dir: &Path, rows: &[SummaryRow]) -> Result<(), CliError> {
    let path = dir.join("summary.csv");
    let tmp = dir.join(format!(".summary.csv.tmp{}", std::process::id()));
    fs::write(&tmp, render_summary(rows))?;
    fs::rename(tmp, path)?;
    Ok(())
}

/// Final best cost of one trace CSV, after checking its header and that
/// `best_cost` never increases.
pub fn final_cost_of_trace(text: &str) -> Result<f64, String> {
    let mut lines = text.lines();
    if lines.next() != Some(TRACE_HEADER) {
        return Err("missing or wrong header".into());
    }
    let mut last: Option<f64> = None;
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(format!("row {} has {} columns", i + 1, cols.len()));
        }
        let cost: f64 = cols[2]
            .parse()
            .map_err(|_| format!("row {}: bad best_cost {:?}", i + 1, cols[2]))?;
        if !cost.is_finite() || last.is_some_and(|l| cost > l) {
            return Err(format!(
                "row {}: best_cost {cost} breaks the non-increasing trace",
                i + 1
            ));
        }
        last = Some(cost);
    }
    last.ok_or_else(|| "no rows".into())
}

/// Splits `{algorithm}__{objective}__seed{seed}.csv`.
fn parse_trace_name(name: &str) -> Option<(String, String, u64)> {
    let stem = name.strip_suffix(".csv")?;
    let mut parts = stem.split("__");
    let (alg, obj, seed) = (parts.next()?, parts.next()?, parts.next()?);
    if parts.next().is_some() {
        return None;
    }
    Some((
        alg.to_string(),
        obj.to_string(),
        seed.strip_prefix("seed")?.parse().ok()?,
    ))
}

/// Summarizes every trace CSV in `dir` and rewrites `summary.csv`. Wall
/// times come from `manifest.jsonl` when one is present, else count as 0.
pub fn summarize_dir(dir: &Path) -> Result<Vec<SummaryRow>, CliError> {
    let manifest = dir.join("manifest.jsonl");
    let walls: HashMap<String, f64> = if manifest.exists() {
        read_manifest(&manifest)?
            .into_iter()
            .map(|e| (e.trace_file, e.wall_seconds))
            .collect()
    } else {
        HashMap::new()
    };
    let mut entries = Vec::new();
    let listing = fs::read_dir(dir).map_err(|e| CliError::Config(format!("reading {}: {e}", dir.display())))?;
    for item in listing {
        let path = item?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if name == "summary.csv" || !name.ends_with(".csv") {
            continue;
        }
        let (algorithm, objective, seed) =
            parse_trace_name(name).ok_or_else(|| CliError::Config(format!("{name}: not a trace file name")))?;
        let final_cost =
            final_cost_of_trace(&fs::read_to_string(&path)?).map_err(|e| CliError::Config(format!("{name}: {e}")))?;
        entries.push(TraceSummary {
            algorithm,
            objective,
            seed,
            final_cost,
            wall_seconds: walls.get(name).copied().unwrap_or(0.0),
        });
    }
    if entries.is_empty() {
        return Err(CliError::Config(format!("{} holds no trace files", dir.display())));
    }
    let rows = summarize_traces(&entries);
    write_summary(dir, &rows)?;
    Ok(rows)
}
