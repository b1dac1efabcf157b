//! Experiment configuration: a TOML file naming algorithms, an objective,
//! seeds and a budget, with optional per-algorithm override tables merged
//! over the built-in presets.

use std::fs;
use std::path::{Path, PathBuf};

use oeo_core::baselines::{BatConfig, PsoConfig};
use oeo_core::benchmarks::{BenchmarkKind, LandscapeSpec};
use oeo_core::wgtcsp::{HybridConfig, Proposer, SyntheticTrials, TargetClass, TrialSet};
use oeo_core::OeoConfig;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const ALGORITHMS: [&str; 10] = [
    "OEO",
    "M-OEO",
    "PSO",
    "Bat",
    "RandomSearch",
    "GD",
    "GD-restarts",
    "OEO-GD",
    "M-OEO-GD",
    "GPSO",
];

/// The file as written by a user.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub algorithm: Option<String>,
    #[serde(default)]
    pub algorithms: Vec<String>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub seed_count: Option<u64>,
    pub max_evaluations: usize,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub objective: ObjectiveSpec,
    #[serde(default)]
    pub oeo: Option<toml::Table>,
    #[serde(default)]
    pub m_oeo: Option<toml::Table>,
    #[serde(default)]
    pub pso: Option<toml::Table>,
    #[serde(default)]
    pub bat: Option<toml::Table>,
    #[serde(default)]
    pub hybrid: Option<toml::Table>,
}

/// An objective as named in a config or a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveSpec {
    Sphere {
        dims: usize,
    },
    Rastrigin {
        dims: usize,
    },
    Ackley {
        dims: usize,
    },
    Griewank {
        dims: usize,
    },
    Penalty {
        dims: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weight: Option<f64>,
    },
    /// A generated Gaussian-peak landscape.
    Gaussian {
        dims: usize,
        dense: usize,
        sparse: usize,
        seed: u64,
    },
    /// A landscape stored in a TOML file, or inline.
    Landscape {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        spec: Option<Box<LandscapeSpec>>,
    },
    /// Weighted-CSP weights, over a synthetic or stored trial set.
    Wgtcsp {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        synthetic: Option<SyntheticTrials>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
        #[serde(default)]
        target_class: TargetClass,
    },
}

/// An objective ready to evaluate.
#[derive(Debug, Clone)]
pub enum BuiltObjective {
    Landscape(LandscapeSpec),
    Trials(TrialSet, TargetClass),
}

impl ObjectiveSpec {
    /// Rewrites relative paths against `base` and inlines landscape files,
    /// so the spec no longer depends on the working directory.
    pub fn resolve(self, base: &Path) -> Result<Self, CliError> {
        Ok(match self {
            Self::Landscape {
                path: Some(p),
                spec: None,
            } => {
                let p = base.join(p);
                let text =
                    fs::read_to_string(&p).map_err(|e| CliError::Config(format!("reading {}: {e}", p.display())))?;
                let spec: LandscapeSpec =
                    toml::from_str(&text).map_err(|e| CliError::Config(format!("parsing {}: {e}", p.display())))?;
                Self::Landscape {
                    path: None,
                    spec: Some(Box::new(spec)),
                }
            }
            Self::Landscape {
                path: Some(_),
                spec: Some(_),
            }
            | Self::Landscape { path: None, spec: None } => {
                return Err(CliError::Config(
                    "a landscape objective needs exactly one of path or spec".into(),
                ))
            }
            Self::Wgtcsp {
                path: Some(p),
                synthetic: None,
                target_class,
            } => Self::Wgtcsp {
                path: Some(base.join(p)),
                synthetic: None,
                target_class,
            },
            Self::Wgtcsp {
                path: Some(_),
                synthetic: Some(_),
                ..
            } => {
                return Err(CliError::Config(
                    "a wgtcsp objective takes path or synthetic, not both".into(),
                ))
            }
            other => other,
        })
    }

    pub fn build(&self) -> Result<BuiltObjective, CliError> {
        let std_spec = |kind: BenchmarkKind, dims: usize| {
            LandscapeSpec::standard(kind, dims).map_err(|e| CliError::Config(e.to_string()))
        };
        let spec = match self {
            Self::Sphere { dims } => std_spec(BenchmarkKind::Sphere, *dims)?,
            Self::Rastrigin { dims } => std_spec(BenchmarkKind::Rastrigin, *dims)?,
            Self::Ackley { dims } => std_spec(BenchmarkKind::Ackley, *dims)?,
            Self::Griewank { dims } => std_spec(BenchmarkKind::Griewank, *dims)?,
            Self::Penalty { dims, weight } => {
                let mut s = std_spec(BenchmarkKind::Penalty, *dims)?;
                if let Some(w) = weight {
                    if !(*w >= 0.0 && w.is_finite()) {
                        return Err(CliError::Config(format!("penalty weight {w} must be finite and >= 0")));
                    }
                    s.penalty_weight = Some(*w);
                }
                s
            }
            Self::Gaussian {
                dims,
                dense,
                sparse,
                seed,
            } => LandscapeSpec::gaussian(*dims, *dense, *sparse, *seed).map_err(|e| CliError::Config(e.to_string()))?,
            Self::Landscape { spec: Some(s), .. } => (**s).clone(),
            Self::Landscape { spec: None, .. } => {
                return Err(CliError::Config("landscape path was not resolved".into()))
            }
            Self::Wgtcsp {
                synthetic,
                path,
                target_class,
            } => {
                let set = match (synthetic, path) {
                    (_, Some(p)) => {
                        let text = fs::read_to_string(p)
                            .map_err(|e| CliError::Config(format!("reading {}: {e}", p.display())))?;
                        TrialSet::from_text(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
                    }
                    (Some(recipe), None) => TrialSet::synthetic(recipe).map_err(|e| CliError::Config(e.to_string()))?,
                    (None, None) => {
                        TrialSet::synthetic(&SyntheticTrials::default()).map_err(|e| CliError::Config(e.to_string()))?
                    }
                };
                return Ok(BuiltObjective::Trials(set, *target_class));
            }
        };
        Ok(BuiltObjective::Landscape(spec))
    }

    /// Short name used in file names and summaries.
    pub fn label(&self) -> String {
        match self {
            Self::Sphere { dims } => format!("sphere{dims}d"),
            Self::Rastrigin { dims } => format!("rastrigin{dims}d"),
            Self::Ackley { dims } => format!("ackley{dims}d"),
            Self::Griewank { dims } => format!("griewank{dims}d"),
            Self::Penalty { dims, .. } => format!("penalty{dims}d"),
            Self::Gaussian {
                dims,
                dense,
                sparse,
                seed,
            } => format!("gaussian{dims}d_{dense}x{sparse}_s{seed}"),
            Self::Landscape { spec, .. } => spec.as_ref().map_or_else(|| "landscape".into(), |s| s.label()),
            Self::Wgtcsp { synthetic, path, .. } => match (synthetic, path) {
                (_, Some(p)) => format!("wgtcsp_{}", p.file_stem().and_then(|s| s.to_str()).unwrap_or("file")),
                (Some(r), None) => format!("wgtcsp{}x{}_s{}", r.trials, r.channels, r.seed),
                (None, None) => "wgtcsp".into(),
            },
        }
    }
}

/// Fully resolved settings of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AlgorithmSettings {
    Oeo(OeoConfig),
    Pso(PsoConfig),
    Bat(BatConfig),
    RandomSearch,
    Hybrid(Box<HybridConfig>),
}

/// Everything needed to reproduce one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub algorithm: String,
    pub objective: ObjectiveSpec,
    pub objective_label: String,
    pub seed: u64,
    pub max_evaluations: usize,
    pub settings: AlgorithmSettings,
    /// Filter iterations when an optimizer runs on weighted-CSP weights.
    pub gev_iterations: usize,
}

impl RunSpec {
    pub fn trace_file_name(&self) -> String {
        format!("{}__{}__seed{}.csv", self.algorithm, self.objective_label, self.seed)
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub output_dir: PathBuf,
    pub runs: Vec<RunSpec>,
}

fn merged<T: Serialize + DeserializeOwned>(
    preset: T,
    overrides: Option<&toml::Table>,
    what: &str,
) -> Result<T, CliError> {
    let Some(overrides) = overrides else {
        return Ok(preset);
    };
    let mut base = toml::Table::try_from(&preset).map_err(|e| CliError::Config(format!("{what}: {e}")))?;
    merge_tables(&mut base, overrides);
    toml::Value::Table(base)
        .try_into()
        .map_err(|e| CliError::Config(format!("[{what}]: {e}")))
}

fn merge_tables(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge_tables(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}

impl ExperimentFile {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Validates and expands into one [`RunSpec`] per algorithm and seed.
    /// `base` anchors relative paths; `default_name` names the experiment
    /// when the file does not.
    pub fn expand(self, base: &Path, default_name: &str) -> Result<Experiment, CliError> {
        let mut algorithms = self.algorithms.clone();
        if let Some(a) = &self.algorithm {
            algorithms.insert(0, a.clone());
        }
        if algorithms.is_empty() {
            return Err(CliError::Config("no algorithm given".into()));
        }
        for a in &algorithms {
            if !ALGORITHMS.contains(&a.as_str()) {
                return Err(CliError::Config(format!(
                    "unknown algorithm {a:?}; known: {}",
                    ALGORITHMS.join(", ")
                )));
            }
        }
        let seeds: Vec<u64> = match (&self.seeds, self.seed_count) {
            (Some(s), None) => s.clone(),
            (None, Some(n)) => (0..n).collect(),
            _ => return Err(CliError::Config("give exactly one of seeds or seed_count".into())),
        };
        if seeds.is_empty() {
            return Err(CliError::Config("at least one seed is required".into()));
        }
        if self.max_evaluations == 0 {
            return Err(CliError::Config("max_evaluations must be positive".into()));
        }
        let objective = self.objective.clone().resolve(base)?;
        let built = objective.build()?;
        let label = objective.label();
        let budget = self.max_evaluations;

        // The proposer follows from the algorithm name; its own settings come
        // from the [oeo], [m_oeo] and [pso] tables.
        if self.hybrid.as_ref().is_some_and(|t| t.contains_key("proposer")) {
            return Err(CliError::Config(
                "[hybrid] cannot set proposer; pick an algorithm instead".into(),
            ));
        }
        let hybrid_preset = HybridConfig {
            proposer: Proposer::None,
            ..HybridConfig::default()
        };
        let hybrid_base: HybridConfig = merged(hybrid_preset, self.hybrid.as_ref(), "hybrid")?;
        let oeo = OeoConfig {
            max_evaluations: budget,
            ..merged(OeoConfig::oeo(budget), self.oeo.as_ref(), "oeo")?
        };
        let m_oeo = OeoConfig {
            max_evaluations: budget,
            ..merged(OeoConfig::m_oeo(budget), self.m_oeo.as_ref(), "m_oeo")?
        };
        let pso = PsoConfig {
            max_evaluations: budget,
            ..merged(PsoConfig::default(), self.pso.as_ref(), "pso")?
        };
        let bat = BatConfig {
            max_evaluations: budget,
            ..merged(BatConfig::default(), self.bat.as_ref(), "bat")?
        };
        let hybrid = |proposer: Proposer| -> Result<AlgorithmSettings, CliError> {
            let target_class = match &built {
                BuiltObjective::Trials(_, c) => *c,
                BuiltObjective::Landscape(_) => hybrid_base.target_class,
            };
            let cfg = HybridConfig {
                proposer,
                target_class,
                max_evaluations: budget,
                ..hybrid_base.clone()
            };
            cfg.validate().map_err(|e| CliError::Config(format!("[hybrid]: {e}")))?;
            Ok(AlgorithmSettings::Hybrid(Box::new(cfg)))
        };

        let mut runs = Vec::with_capacity(algorithms.len() * seeds.len());
        for alg in &algorithms {
            let settings = match alg.as_str() {
                "OEO" => AlgorithmSettings::Oeo(oeo.clone()),
                "M-OEO" => AlgorithmSettings::Oeo(m_oeo.clone()),
                "PSO" => AlgorithmSettings::Pso(pso.clone()),
                "Bat" => AlgorithmSettings::Bat(bat.clone()),
                "RandomSearch" => AlgorithmSettings::RandomSearch,
                "GD" => hybrid(Proposer::None)?,
                "GD-restarts" => hybrid(Proposer::RandomRestart)?,
                "OEO-GD" => hybrid(Proposer::Oeo(oeo.clone()))?,
                "M-OEO-GD" => hybrid(Proposer::Oeo(m_oeo.clone()))?,
                "GPSO" => hybrid(Proposer::Pso(PsoConfig {
                    reinit_period: Some(hybrid_base.reinit_period),
                    ..pso.clone()
                }))?,
                _ => unreachable!("checked above"),
            };
            match &settings {
                AlgorithmSettings::Oeo(c) => c.validate().map_err(|e| CliError::Config(format!("{alg}: {e}")))?,
                AlgorithmSettings::Pso(c) => c.validate().map_err(|e| CliError::Config(format!("{alg}: {e}")))?,
                AlgorithmSettings::Bat(c) => c.validate().map_err(|e| CliError::Config(format!("{alg}: {e}")))?,
                AlgorithmSettings::Hybrid(_) if !matches!(built, BuiltObjective::Trials(..)) => {
                    return Err(CliError::Config(format!("{alg} needs a wgtcsp objective")))
                }
                _ => {}
            }
            for &seed in &seeds {
                runs.push(RunSpec {
                    algorithm: alg.clone(),
                    objective: objective.clone(),
                    objective_label: label.clone(),
                    seed,
                    max_evaluations: budget,
                    settings: settings.clone(),
                    gev_iterations: hybrid_base.gev_iterations,
                });
            }
        }
        let name = self.name.unwrap_or_else(|| default_name.to_string());
        let output_dir = match self.output_dir {
            Some(d) => base.join(d),
            None => base.join("runs").join(&name),
        };
        Ok(Experiment { name, output_dir, runs })
    }
}

/// Loads and expands a config file; relative paths resolve against the
/// file's directory.
pub fn load_experiment(path: &Path) -> Result<Experiment, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    let file = ExperimentFile::parse(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
    file.expand(base, stem)
}
