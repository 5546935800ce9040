//! Experiment files.
//!
//! An experiment is a TOML document. Top-level keys set output options, an
//! optional `[defaults]` table overrides training settings for every run, and
//! each `[run.<name>]` table declares one problem with its modes and seeds:
//!
//! ```toml
//! out = "results"
//! plots = true
//! jobs = 1
//! seeds = [0, 1, 2]
//!
//! [defaults]
//! epochs = 1000
//!
//! [defaults.mcmc]
//! steps = 10000
//!
//! [run.zdt3]
//! problem = "zdt3"
//! modes = ["ddps", "fixed"]
//! gamma = 0.4
//! ```
//!
//! Keys other than `problem`, `modes`, `seeds`, `d` and `fixed_alpha` inside a
//! run table are training overrides and must name a training setting. Unknown
//! keys are rejected.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::str::FromStr;

use ddps::problems::{ProblemKind, ProblemSpec};
use ddps::trainer::{SamplingMode, TrainConfig};
use toml::{Table, Value};

use crate::CliError;

/// Preference sampling mode as written in experiment files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ModeName {
    Ddps,
    Fixed,
}

impl ModeName {
    pub fn as_str(self) -> &'static str {
        match self {
            ModeName::Ddps => "ddps",
            ModeName::Fixed => "fixed",
        }
    }
}

impl FromStr for ModeName {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ddps" | "ddps_mcmc" | "ddps-mcmc" => Ok(ModeName::Ddps),
            "fixed" | "fixed_dirichlet" | "fixed-dirichlet" => Ok(ModeName::Fixed),
            other => Err(CliError::Config(format!("unknown mode '{other}'"))),
        }
    }
}

/// One `[run.<name>]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub name: String,
    pub problem: ProblemSpec,
    pub modes: Vec<ModeName>,
    pub seeds: Vec<u64>,
    /// Concentrations of the fixed-mode Dirichlet; all ones when absent.
    pub fixed_alpha: Option<Vec<f64>>,
    /// Defaults merged with this section's overrides. Mode and seed are set per run.
    pub config: TrainConfig,
}

/// A single training run to execute.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub id: String,
    pub entry: String,
    pub problem: ProblemSpec,
    pub config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub out: PathBuf,
    pub plots: bool,
    pub jobs: usize,
    pub entries: Vec<RunEntry>,
}

const TOP_KEYS: [&str; 6] = ["out", "plots", "jobs", "seeds", "defaults", "run"];
const ENTRY_KEYS: [&str; 5] = ["problem", "modes", "seeds", "d", "fixed_alpha"];

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// Overlays `patch` onto `base`, refusing keys `base` does not have.
fn merge(base: &mut Table, patch: &Table, path: &str) -> Result<(), CliError> {
    for (k, v) in patch {
        let here = if path.is_empty() {
            k.clone()
        } else {
            format!("{path}.{k}")
        };
        if k == "mode" || k == "seed" {
            return Err(cfg_err(format!(
                "'{here}' is set per run; use 'modes' and 'seeds' instead"
            )));
        }
        match (base.get_mut(k), v) {
            (None, _) => return Err(cfg_err(format!("unknown setting '{here}'"))),
            (Some(Value::Table(b)), Value::Table(p)) => merge(b, p, &here)?,
            (Some(slot), _) => *slot = v.clone(),
        }
    }
    Ok(())
}

fn as_seeds(v: &Value, at: &str) -> Result<Vec<u64>, CliError> {
    let arr = v
        .as_array()
        .ok_or_else(|| cfg_err(format!("'{at}' must be an array of integers")))?;
    arr.iter()
        .map(|s| {
            s.as_integer()
                .and_then(|i| u64::try_from(i).ok())
                .ok_or_else(|| cfg_err(format!("'{at}' entries must be nonnegative integers")))
        })
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let doc: Table = text
            .parse()
            .map_err(|e: toml::de::Error| cfg_err(format!("not a valid experiment file: {e}")))?;
        for k in doc.keys() {
            if !TOP_KEYS.contains(&k.as_str()) {
                return Err(cfg_err(format!("unknown top-level key '{k}'")));
            }
        }
        let out = match doc.get("out") {
            None => PathBuf::from("results"),
            Some(Value::String(s)) => PathBuf::from(s),
            Some(_) => return Err(cfg_err("'out' must be a string")),
        };
        let plots = match doc.get("plots") {
            None => false,
            Some(Value::Boolean(b)) => *b,
            Some(_) => return Err(cfg_err("'plots' must be true or false")),
        };
        let jobs = match doc.get("jobs") {
            None => 1,
            Some(Value::Integer(j)) if *j >= 1 => *j as usize,
            Some(_) => return Err(cfg_err("'jobs' must be a positive integer")),
        };
        let default_seeds = match doc.get("seeds") {
            None => vec![0],
            Some(v) => as_seeds(v, "seeds")?,
        };

        let mut base = match Value::try_from(TrainConfig::default()) {
            Ok(Value::Table(t)) => t,
            _ => unreachable!("training settings serialize to a table"),
        };
        if let Some(d) = doc.get("defaults") {
            let d = d
                .as_table()
                .ok_or_else(|| cfg_err("'defaults' must be a table"))?;
            merge(&mut base, d, "defaults")?;
        }

        let runs = match doc.get("run") {
            Some(Value::Table(t)) if !t.is_empty() => t,
            _ => return Err(cfg_err("at least one [run.<name>] section is required")),
        };
        let mut entries = Vec::new();
        for (name, section) in runs {
            let section = section
                .as_table()
                .ok_or_else(|| cfg_err(format!("run.{name} must be a table")))?;
            entries.push(Self::entry(name, section, &base, &default_seeds)?);
        }
        let cfg = Self {
            out,
            plots,
            jobs,
            entries,
        };
        cfg.plan()?;
        Ok(cfg)
    }

    fn entry(
        name: &str,
        section: &Table,
        base: &Table,
        default_seeds: &[u64],
    ) -> Result<RunEntry, CliError> {
        let at = |k: &str| format!("run.{name}.{k}");
        let kind: ProblemKind = section
            .get("problem")
            .and_then(Value::as_str)
            .ok_or_else(|| cfg_err(format!("{} is required", at("problem"))))?
            .parse()
            .map_err(|e: ddps::Error| cfg_err(format!("{}: {e}", at("problem"))))?;
        let problem = match section.get("d") {
            None => ProblemSpec::new(kind),
            Some(Value::Integer(d)) if *d > 0 => ProblemSpec::with_dim(kind, *d as usize)
                .map_err(|e| cfg_err(format!("{}: {e}", at("d"))))?,
            Some(_) => return Err(cfg_err(format!("{} must be a positive integer", at("d")))),
        };
        let modes = match section.get("modes") {
            None => vec![ModeName::Ddps],
            Some(Value::Array(a)) if !a.is_empty() => a
                .iter()
                .map(|m| {
                    m.as_str()
                        .ok_or_else(|| cfg_err(format!("{} must hold strings", at("modes"))))?
                        .parse()
                })
                .collect::<Result<Vec<_>, _>>()?,
            Some(_) => {
                return Err(cfg_err(format!(
                    "{} must be a non-empty array",
                    at("modes")
                )))
            }
        };
        let seeds = match section.get("seeds") {
            None => default_seeds.to_vec(),
            Some(v) => as_seeds(v, &at("seeds"))?,
        };
        if seeds.is_empty() {
            return Err(cfg_err(format!("{} is empty", at("seeds"))));
        }
        let fixed_alpha = match section.get("fixed_alpha") {
            None => None,
            Some(Value::Array(a)) => Some(
                a.iter()
                    .map(|v| {
                        v.as_float()
                            .or_else(|| v.as_integer().map(|i| i as f64))
                            .ok_or_else(|| {
                                cfg_err(format!("{} must hold numbers", at("fixed_alpha")))
                            })
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
            Some(_) => return Err(cfg_err(format!("{} must be an array", at("fixed_alpha")))),
        };

        let overrides: Table = section
            .iter()
            .filter(|(k, _)| !ENTRY_KEYS.contains(&k.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let mut merged = base.clone();
        merge(&mut merged, &overrides, &format!("run.{name}"))?;
        let config: TrainConfig = Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| cfg_err(format!("run.{name}: {e}")))?;

        let entry = RunEntry {
            name: name.to_string(),
            problem,
            modes,
            seeds,
            fixed_alpha,
            config,
        };
        for plan in entry.plans() {
            plan.config
                .validate(&plan.problem)
                .map_err(|e| cfg_err(format!("run.{name}: {e}")))?;
        }
        Ok(entry)
    }

    /// Replaces the seed list of every entry.
    pub fn set_seeds(&mut self, seeds: &[u64]) {
        for e in &mut self.entries {
            e.seeds = seeds.to_vec();
        }
    }

    /// Every (entry, mode, seed) combination, with unique identifiers.
    pub fn plan(&self) -> Result<Vec<RunPlan>, CliError> {
        let plans: Vec<RunPlan> = self.entries.iter().flat_map(RunEntry::plans).collect();
        if plans.is_empty() {
            return Err(cfg_err("experiment has no runs"));
        }
        let mut seen = BTreeSet::new();
        for p in &plans {
            if !seen.insert(p.id.clone()) {
                return Err(cfg_err(format!("duplicate run identifier '{}'", p.id)));
            }
        }
        Ok(plans)
    }
}

impl RunEntry {
    pub fn plans(&self) -> Vec<RunPlan> {
        let mut out = Vec::new();
        for &mode in &self.modes {
            for &seed in &self.seeds {
                let mode_cfg = match mode {
                    ModeName::Ddps => SamplingMode::DdpsMcmc,
                    ModeName::Fixed => SamplingMode::FixedDirichlet(
                        self.fixed_alpha
                            .clone()
                            .unwrap_or_else(|| vec![1.0; self.problem.m()]),
                    ),
                };
                out.push(RunPlan {
                    id: format!("{}-{}-s{}", self.name, mode.as_str(), seed),
                    entry: self.name.clone(),
                    problem: self.problem,
                    config: TrainConfig {
                        seed,
                        mode: mode_cfg,
                        ..self.config.clone()
                    },
                });
            }
        }
        out
    }
}
