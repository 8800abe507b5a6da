//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use airoas_core::{AirConfig, BoundInitializer, PlannerConfig, SirConfig, TemperingSchedule};
use airoas_domains::{LaserTagParams, LightDarkParams, RockSampleParams, TagParams};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Target inefficiency values tried by `tune`.
pub const DEFAULT_TARGET_GRID: [f64; 5] = [2.0, 3.0, 5.0, 10.0, 20.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    Airoas,
    NoAir,
}

impl Solver {
    pub fn as_str(self) -> &'static str {
        match self {
            Solver::Airoas => "airoas",
            Solver::NoAir => "no_air",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainConfig {
    LightDark(LightDarkParams),
    Tag(TagParams),
    LaserTag(LaserTagParams),
    RockSample(RockSampleParams),
}

impl DomainConfig {
    pub fn name(&self) -> String {
        match self {
            DomainConfig::LightDark(p) => format!("lightdark(step={})", p.step_size),
            DomainConfig::Tag(_) => "tag".into(),
            DomainConfig::LaserTag(_) => "lasertag".into(),
            DomainConfig::RockSample(p) => format!("rocksample({},{})", p.size, p.rocks),
        }
    }

    /// Rejects parameters the domain constructors would refuse.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Invalid(m.into()));
        match self {
            DomainConfig::LightDark(p) => {
                if !(p.step_size > 0.0) || !(p.noise_floor > 0.0) {
                    return bad("light-dark step size and noise floor must be positive");
                }
                if !(p.obs_bin_width > 0.0) {
                    return bad("observation bin width must be positive");
                }
            }
            DomainConfig::Tag(_) => {}
            DomainConfig::LaserTag(p) => {
                if p.width <= 0 || p.height <= 0 || p.obstacles * 2 >= (p.width * p.height) as usize {
                    return bad("laser tag map needs positive size and fewer obstacles than half its cells");
                }
            }
            DomainConfig::RockSample(p) => {
                if p.size <= 0 || p.rocks > 64 || p.rocks > (p.size * p.size) as usize {
                    return bad("rock sample needs a positive size and at most min(64, size²) rocks");
                }
                if let Some(pos) = &p.rock_positions {
                    if pos.len() != p.rocks {
                        return bad("rock_positions must list one cell per rock");
                    }
                    if !pos.iter().all(|&(x, y)| (0..p.size).contains(&x) && (0..p.size).contains(&y)) {
                        return bad("rock position outside the map");
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerSection {
    #[serde(default = "default_particles")]
    pub particles: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    /// Seconds per decision.
    #[serde(default = "default_time_budget")]
    pub time_budget: f64,
    #[serde(default)]
    pub max_trials: Option<usize>,
    #[serde(default = "default_xi")]
    pub xi: f64,
    #[serde(default = "default_tempering_steps")]
    pub tempering_steps: usize,
    pub target_inefficiency: f64,
    #[serde(default = "default_sigma_scale")]
    pub mutation_sigma_scale: f64,
    #[serde(default = "default_sweeps")]
    pub mutation_sweeps: usize,
    #[serde(default = "default_grid")]
    pub target_grid: Vec<f64>,
    pub bounds: BoundInitializer,
}

fn default_particles() -> usize {
    1000
}
fn default_max_depth() -> usize {
    100
}
fn default_time_budget() -> f64 {
    5.0
}
fn default_xi() -> f64 {
    0.95
}
fn default_tempering_steps() -> usize {
    100
}
fn default_sigma_scale() -> f64 {
    0.5
}
fn default_sweeps() -> usize {
    1
}
fn default_grid() -> Vec<f64> {
    DEFAULT_TARGET_GRID.to_vec()
}

/// How the executed belief is carried between decisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BeliefUpdate {
    #[default]
    Sir,
    /// One annealing pass on the propagated particles.
    Air,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefSection {
    #[serde(default)]
    pub update: BeliefUpdate,
    #[serde(default = "default_ess_fraction")]
    pub ess_threshold_fraction: f64,
}

fn default_ess_fraction() -> f64 {
    0.5
}

impl Default for BeliefSection {
    fn default() -> Self {
        BeliefSection {
            update: BeliefUpdate::Sir,
            ess_threshold_fraction: default_ess_fraction(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default = "default_solver")]
    pub solver: Solver,
    pub episodes: usize,
    pub max_steps: usize,
    pub master_seed: u64,
    /// Worker threads; 0 means one per available core.
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub domain: DomainConfig,
    pub planner: PlannerSection,
    #[serde(default)]
    pub belief: BeliefSection,
}

fn default_solver() -> Solver {
    Solver::Airoas
}
fn default_workers() -> usize {
    1
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let cfg: ExperimentConfig = toml::from_str(&text).map_err(|e| HarnessError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config {
            path: PathBuf::new(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(HarnessError::Invalid("episodes must be at least 1".into()));
        }
        SirConfig {
            ess_threshold_fraction: self.belief.ess_threshold_fraction,
        }
        .validate()?;
        self.domain.validate()?;
        self.planner_config()?.validate()?;
        Ok(())
    }

    pub fn planner_config(&self) -> Result<PlannerConfig> {
        let p = &self.planner;
        Ok(PlannerConfig {
            max_depth: p.max_depth,
            time_budget: p.time_budget,
            max_trials: p.max_trials,
            xi: p.xi,
            particles: p.particles,
            air: AirConfig {
                schedule: TemperingSchedule::sigmoid(p.tempering_steps)?,
                target_inefficiency: p.target_inefficiency,
                mutation_sigma_scale: p.mutation_sigma_scale,
                mutation_sweeps: p.mutation_sweeps,
            },
            bounds: p.bounds.clone(),
        })
    }

    pub fn sir_config(&self) -> SirConfig {
        SirConfig {
            ess_threshold_fraction: self.belief.ess_threshold_fraction,
        }
    }
}
