//! JSON experiment configuration.

use std::path::Path;

use fairvote_core::{BeliefDistribution, CouncilSpec, Quota, State, VotingModel};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Everything a config file may set. Command-line flags take precedence.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub trials: Option<u64>,
    pub out: Option<String>,
    pub format: Option<String>,
    pub states: Option<Vec<StateConfig>>,
    pub quota: Option<f64>,
    pub model: Option<ModelConfig>,
    pub family: Option<FamilyConfig>,
    pub belief: Option<BeliefConfig>,
    #[serde(rename = "N")]
    pub n: Option<u64>,
    #[serde(rename = "J")]
    pub j: Option<f64>,
    pub grid: Option<GridConfig>,
    pub epsilon: Option<f64>,
    pub weights: Option<Vec<f64>>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config file {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    pub name: String,
    pub population: u64,
    pub model: ModelConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "type", content = "params", rename_all = "snake_case")]
pub enum ModelConfig {
    Independent,
    CommonBelief {
        belief: BeliefConfig,
    },
    MeanField {
        #[serde(rename = "J", alias = "coupling")]
        j: f64,
    },
}

impl ModelConfig {
    pub fn build(&self) -> Result<VotingModel, CliError> {
        Ok(match self {
            Self::Independent => VotingModel::Independent,
            Self::CommonBelief { belief } => VotingModel::common_belief(belief.build()?)?,
            Self::MeanField { j } => VotingModel::mean_field(*j)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BeliefConfig {
    Uniform {
        a: f64,
    },
    Atoms {
        atoms: Vec<(f64, f64)>,
    },
    PointMassZero,
    Grid {
        nodes: Vec<f64>,
        densities: Vec<f64>,
    },
}

impl BeliefConfig {
    pub fn build(&self) -> Result<BeliefDistribution, CliError> {
        Ok(match self {
            Self::Uniform { a } => BeliefDistribution::uniform(*a)?,
            Self::Atoms { atoms } => BeliefDistribution::atoms(atoms.clone())?,
            Self::PointMassZero => BeliefDistribution::point_mass_zero(),
            Self::Grid { nodes, densities } => {
                BeliefDistribution::gridded(nodes.clone(), densities.clone())?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilyConfig {
    Straffin { c: f64, beta: f64 },
    Fixed { belief: BeliefConfig },
}

/// Either `"lo:hi:xSTEP"` or an explicit list of populations.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(untagged)]
pub enum GridConfig {
    Spec(String),
    List(Vec<u64>),
}

impl GridConfig {
    pub fn resolve(&self) -> Result<Vec<u64>, CliError> {
        match self {
            Self::Spec(s) => parse_grid(s),
            Self::List(v) if v.is_empty() => Err(CliError::Usage("grid list is empty".into())),
            Self::List(v) => Ok(v.clone()),
        }
    }
}

/// Parses `lo:hi:xSTEP` (geometric) or `lo:hi:+STEP` (arithmetic).
pub fn parse_grid(spec: &str) -> Result<Vec<u64>, CliError> {
    let bad = || {
        CliError::Usage(format!(
            "grid must look like lo:hi:xSTEP or lo:hi:+STEP with positive integers, received {spec:?}"
        ))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo, hi, step] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
    let step = step.trim();
    if let Some(f) = step.strip_prefix('x') {
        let f: u64 = f.parse().map_err(|_| bad())?;
        Ok(fairvote_core::geometric_grid(lo, hi, f)?)
    } else if let Some(d) = step.strip_prefix('+') {
        let d: u64 = d.parse().map_err(|_| bad())?;
        if lo == 0 || d == 0 || hi < lo {
            return Err(bad());
        }
        Ok((lo..=hi).step_by(d as usize).collect())
    } else {
        Err(bad())
    }
}

/// Builds a council from config states and an optional quota.
pub fn build_council(states: &[StateConfig], quota: Option<f64>) -> Result<CouncilSpec, CliError> {
    let states = states
        .iter()
        .map(|s| Ok(State::new(s.name.clone(), s.population, s.model.build()?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(CouncilSpec::new(states, build_quota(quota)?)?)
}

pub fn build_quota(quota: Option<f64>) -> Result<Quota, CliError> {
    Ok(match quota {
        None => Quota::SimpleMajority,
        Some(q) => Quota::qualified(q)?,
    })
}
