use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use oeo_core::baselines::{bat_run, pso_run, random_search};
use oeo_core::wgtcsp::{oeo_gd_run, ProfileObjective};
use oeo_core::{run_oeo, Objective, RunResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{AlgorithmSettings, BuiltObjective, Experiment, RunSpec};
use crate::summary::{summarize, write_summary};
use crate::CliError;

/// One line of `manifest.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub spec: RunSpec,
    pub trace_file: String,
    pub final_cost: f64,
    pub evaluations: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub result: RunResult,
    pub wall_seconds: f64,
}

fn dispatch<O: Objective + ?Sized>(spec: &RunSpec, objective: &O) -> Result<RunResult, CliError> {
    let budget = spec.max_evaluations;
    Ok(match &spec.settings {
        AlgorithmSettings::Oeo(c) => run_oeo(c, objective, spec.seed)?,
        AlgorithmSettings::Pso(c) => pso_run(c, objective, spec.seed)?,
        AlgorithmSettings::Bat(c) => bat_run(c, objective, spec.seed)?,
        AlgorithmSettings::RandomSearch => random_search(objective, budget, spec.seed)?,
        AlgorithmSettings::Hybrid(_) => unreachable!("handled by the caller"),
    })
}

/// Runs a single spec and times it.
pub fn execute_run(spec: &RunSpec) -> Result<RunOutput, CliError> {
    let built = spec.objective.build()?;
    let start = Instant::now();
    let mut result = match (&spec.settings, &built) {
        (AlgorithmSettings::Hybrid(cfg), BuiltObjective::Trials(data, _)) => oeo_gd_run(cfg, data, spec.seed)?.run,
        (AlgorithmSettings::Hybrid(_), _) => {
            return Err(CliError::Config(format!("{} needs a wgtcsp objective", spec.algorithm)))
        }
        (_, BuiltObjective::Landscape(l)) => dispatch(spec, l)?,
        (_, BuiltObjective::Trials(data, class)) => {
            dispatch(spec, &ProfileObjective::new(data, *class, spec.gev_iterations))?
        }
    };
    let wall_seconds = start.elapsed().as_secs_f64();
    result.algorithm = spec.algorithm.clone();
    Ok(RunOutput { result, wall_seconds })
}

/// Writes `contents` to a temp file next to `path` and renames it over,
/// so readers never see a partial file.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn run_specs(specs: &[RunSpec], out_dir: &Path) -> Result<Vec<ManifestEntry>, CliError> {
    fs::create_dir_all(out_dir)?;
    let entries: Result<Vec<_>, CliError> = specs
        .par_iter()
        .map(|spec| {
            let out = execute_run(spec)?;
            let trace_file = spec.trace_file_name();
            write_atomic(&out_dir.join(&trace_file), out.result.trace_csv().as_bytes())?;
            Ok(ManifestEntry {
                spec: spec.clone(),
                trace_file,
                final_cost: out.result.final_cost(),
                evaluations: out.result.evaluations,
                wall_seconds: out.wall_seconds,
            })
        })
        .collect();
    let entries = entries?;

    let mut manifest = String::new();
    for e in &entries {
        let line = serde_json::to_string(e).map_err(|e| CliError::Runtime(e.to_string()))?;
        manifest.push_str(&line);
        manifest.push('\n');
    }
    write_atomic(&out_dir.join("manifest.jsonl"), manifest.as_bytes())?;
    write_summary(out_dir, &summarize(&entries))?;
    Ok(entries)
}

/// Runs every spec of the experiment into `out_dir` (or the experiment's
/// own output directory).
pub fn run_experiment(exp: &Experiment, out_dir: Option<&Path>) -> Result<(PathBuf, Vec<ManifestEntry>), CliError> {
    let dir = out_dir.map_or_else(|| exp.output_dir.clone(), Path::to_path_buf);
    let entries = run_specs(&exp.runs, &dir)?;
    Ok((dir, entries))
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| CliError::Config(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Re-runs every spec recorded in a manifest into `out_dir`.
pub fn replay_manifest(manifest: &Path, out_dir: &Path) -> Result<Vec<ManifestEntry>, CliError> {
    let specs: Vec<RunSpec> = read_manifest(manifest)?.into_iter().map(|e| e.spec).collect();
    if specs.is_empty() {
        return Err(CliError::Config(format!("{} lists no runs", manifest.display())));
    }
    run_specs(&specs, out_dir)
}
