//! Run configuration: preset defaults, overridden by a config file,
//! overridden by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use silly_rules::{
    preset, EngineConfig, Grid, ObservationScope, PayoffConvention, PolicyKind, SolverOptions, Spec, TypeAssignment,
};

/// Declarative mirror of a sweep: every field optional so layers can be merged.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub densities: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub costs: Option<Grid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub punisher_share: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prior_beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub group_size: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub groups: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_timesteps: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verbosity: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff_convention: Option<PayoffConvention>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observation: Option<ObservationScope>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub type_assignment: Option<TypeAssignment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_cap: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict: Option<bool>,
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    /// Fields set in `over` replace those in `self`.
    pub fn merged(mut self, over: &RunConfig) -> RunConfig {
        merge_fields!(
            self,
            over,
            preset,
            densities,
            costs,
            gamma,
            reward,
            punisher_share,
            prior_alpha,
            prior_beta,
            group_size,
            groups,
            max_timesteps,
            seed,
            workers,
            output_dir,
            verbosity,
            payoff_convention,
            observation,
            type_assignment,
            policy,
            tolerance,
            horizon_cap,
            strict
        );
        self
    }

    pub fn preset_name(&self) -> &str {
        self.preset.as_deref().unwrap_or("baseline")
    }

    /// Builds the sweep spec: preset defaults overlaid with this config.
    pub fn to_spec(&self) -> Result<Spec> {
        let mut spec = preset(self.preset_name())?;
        let p = &mut spec.base_params;
        if let Some(v) = self.gamma {
            p.discount = v;
        }
        if let Some(v) = self.reward {
            p.reward = v;
        }
        if let Some(v) = self.punisher_share {
            p.punisher_share = v;
        }
        if let Some(v) = self.prior_alpha {
            p.prior_alpha = v;
        }
        if let Some(v) = self.prior_beta {
            p.prior_beta = v;
        }
        if let Some(v) = self.group_size {
            p.group_size = v;
        }
        if let Some(v) = self.payoff_convention {
            p.payoff_convention = v;
        }
        if let Some(g) = &self.densities {
            spec.density_grid = g.resolve().context("densities")?;
        }
        if let Some(g) = &self.costs {
            spec.cost_grid = g.resolve().context("costs")?;
        }
        if let Some(v) = self.groups {
            spec.replications = v;
        }
        if let Some(v) = self.max_timesteps {
            spec.max_timesteps = v;
        }
        if let Some(v) = self.seed {
            spec.master_seed = v;
        }
        spec.engine = EngineConfig {
            observation: self.observation.unwrap_or_default(),
            assignment: self.type_assignment.unwrap_or_default(),
        };
        spec.policy = self.policy.unwrap_or_default();
        let defaults = SolverOptions::<f64>::default();
        spec.solver = SolverOptions {
            tolerance: self.tolerance.unwrap_or(defaults.tolerance),
            horizon_cap: self.horizon_cap.unwrap_or(defaults.horizon_cap),
            strict: self.strict.unwrap_or(defaults.strict),
            ..defaults
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Fully explicit form of `spec`, suitable for re-running it.
    pub fn resolved(&self, spec: &Spec) -> RunConfig {
        let p = &spec.base_params;
        RunConfig {
            preset: Some(self.preset_name().to_string()),
            densities: Some(Grid::Values { values: spec.density_grid.clone() }),
            costs: Some(Grid::Values { values: spec.cost_grid.clone() }),
            gamma: Some(p.discount),
            reward: Some(p.reward),
            punisher_share: Some(p.punisher_share),
            prior_alpha: Some(p.prior_alpha),
            prior_beta: Some(p.prior_beta),
            group_size: Some(p.group_size),
            groups: Some(spec.replications),
            max_timesteps: Some(spec.max_timesteps),
            seed: Some(spec.master_seed),
            workers: self.workers,
            output_dir: self.output_dir.clone(),
            verbosity: self.verbosity,
            payoff_convention: Some(p.payoff_convention),
            observation: Some(spec.engine.observation),
            type_assignment: Some(spec.engine.assignment),
            policy: Some(spec.policy),
            tolerance: Some(spec.solver.tolerance),
            horizon_cap: Some(spec.solver.horizon_cap),
            strict: Some(spec.solver.strict),
        }
    }
}

/// Written next to every sweep's CSV; accepted back as a config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub config: RunConfig,
    pub software_version: String,
    pub seed_derivation: String,
    pub cells: usize,
    pub started_unix_seconds: u64,
    pub elapsed_seconds: f64,
}

pub const SEED_DERIVATION: &str =
    "ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(splitmix64(seed) ^ cell_index) ^ group_index)), cells density-major";

/// Reads a TOML or JSON config, or a manifest written by `sweep`.
pub fn load(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => {
            let v: toml::Value = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            serde_json::to_value(v)?
        }
        Some("json") => serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?,
        _ => bail!("{}: config must be .toml or .json", path.display()),
    };
    let is_manifest = value.get("config").is_some();
    if is_manifest {
        let m: Manifest =
            serde_json::from_value(value).with_context(|| format!("invalid manifest {}", path.display()))?;
        Ok(m.config)
    } else {
        serde_json::from_value(value).with_context(|| format!("invalid config {}", path.display()))
    }
}
